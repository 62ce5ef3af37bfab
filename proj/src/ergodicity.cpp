#include "ehcap/ergodicity.hpp"

#include <algorithm>
#include <cstdint>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include "ehcap/prob.hpp"

namespace ehcap {

namespace {

// Bit matrix with one dynamic-width bitset row per state.
struct BitMatrix {
    int n = 0;
    int words = 0;
    std::vector<std::uint64_t> bits; // n * words

    explicit BitMatrix(int n_)
        : n(n_), words((n_ + 63) / 64),
          bits(static_cast<std::size_t>(n_) * ((n_ + 63) / 64), 0) {}

    std::uint64_t *row(int i) { return bits.data() + static_cast<std::size_t>(i) * words; }
    const std::uint64_t *row(int i) const {
        return bits.data() + static_cast<std::size_t>(i) * words;
    }
    void set(int i, int j) { row(i)[j / 64] |= (1ULL << (j % 64)); }
    bool get(int i, int j) const { return (row(i)[j / 64] >> (j % 64)) & 1ULL; }

    bool has_positive_column() const {
        for (int w = 0; w < words; ++w) {
            std::uint64_t acc = ~0ULL;
            for (int i = 0; i < n; ++i) acc &= row(i)[w];
            // Mask out bits beyond n in the last word.
            if (w == words - 1 && n % 64 != 0) acc &= (1ULL << (n % 64)) - 1;
            if (acc) return true;
        }
        return false;
    }

    std::string key() const {
        return std::string(reinterpret_cast<const char *>(bits.data()),
                           bits.size() * sizeof(std::uint64_t));
    }
};

// Boolean matrix product M * S (supports of a left product times one step).
BitMatrix bool_product(const BitMatrix &m, const BitMatrix &step) {
    BitMatrix out(m.n);
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j)
            if (m.get(i, j))
                for (int w = 0; w < out.words; ++w)
                    out.row(i)[w] |= step.row(j)[w];
    return out;
}

std::vector<BitMatrix> marginal_supports(const SurrogateFsc &fsc) {
    std::vector<BitMatrix> supports;
    supports.reserve(static_cast<std::size_t>(fsc.num_inputs));
    for (int v = 0; v < fsc.num_inputs; ++v) {
        BitMatrix s(fsc.num_states);
        for (int z = 0; z < fsc.num_states; ++z)
            for (const auto &t : fsc.slice(v, z))
                if (t.p > 0.0) s.set(z, t.z2);
        supports.push_back(std::move(s));
    }
    return supports;
}

// Histories reachable with positive probability under the input process.
std::vector<int> reachable_histories(const MarkovInputProcess &input) {
    if (input.order == 0) return {0};
    int H = input.num_histories();
    std::vector<char> seen(static_cast<std::size_t>(H), 0);
    std::queue<int> q;
    for (int h = 0; h < H; ++h)
        if (input.initial[static_cast<std::size_t>(h)] > 0.0) {
            seen[static_cast<std::size_t>(h)] = 1;
            q.push(h);
        }
    while (!q.empty()) {
        int h = q.front();
        q.pop();
        for (int v = 0; v < input.num_symbols; ++v) {
            if (input.kernel[static_cast<std::size_t>(h)][static_cast<std::size_t>(v)] <=
                0.0)
                continue;
            int h2 = input.push(h, v);
            if (!seen[static_cast<std::size_t>(h2)]) {
                seen[static_cast<std::size_t>(h2)] = 1;
                q.push(h2);
            }
        }
    }
    std::vector<int> out;
    for (int h = 0; h < H; ++h)
        if (seen[static_cast<std::size_t>(h)]) out.push_back(h);
    return out;
}

bool pairwise_intersecting(const BitMatrix &reach) {
    for (int i = 0; i < reach.n; ++i)
        for (int j = i + 1; j < reach.n; ++j) {
            bool meet = false;
            for (int w = 0; w < reach.words && !meet; ++w)
                if (reach.row(i)[w] & reach.row(j)[w]) meet = true;
            if (!meet) return false;
        }
    return true;
}

// Searches for an input word, of positive probability under `input`, whose
// reach sets from every pair of start states intersect.
std::optional<int> merging_word_length(const SurrogateFsc &fsc,
                                       const MarkovInputProcess &input,
                                       int depth_cap) {
    auto supports = marginal_supports(fsc);
    struct Node {
        int hist;
        BitMatrix reach;
    };
    BitMatrix identity(fsc.num_states);
    for (int z = 0; z < fsc.num_states; ++z) identity.set(z, z);

    std::vector<Node> frontier;
    std::unordered_set<std::string> visited;
    for (int h : reachable_histories(input)) {
        Node n{h, identity};
        std::string k = std::to_string(h) + "|" + n.reach.key();
        if (visited.insert(k).second) frontier.push_back(std::move(n));
    }

    for (int depth = 1; depth <= depth_cap && !frontier.empty(); ++depth) {
        std::vector<Node> next;
        for (const auto &node : frontier) {
            int cond = (input.order == 0) ? 0 : node.hist;
            for (int v = 0; v < input.num_symbols; ++v) {
                if (input.kernel[static_cast<std::size_t>(cond)]
                                [static_cast<std::size_t>(v)] <= 0.0)
                    continue;
                Node n{input.push(node.hist, v),
                       bool_product(node.reach, supports[static_cast<std::size_t>(v)])};
                if (pairwise_intersecting(n.reach)) return depth;
                std::string k = std::to_string(n.hist) + "|" + n.reach.key();
                if (visited.insert(k).second) next.push_back(std::move(n));
            }
        }
        frontier.swap(next);
    }
    return std::nullopt;
}

} // namespace

double dobrushin_delta(const std::vector<std::vector<double>> &P) {
    check_stochastic(P, "matrix");
    double best = 0.0;
    for (std::size_t s = 0; s < P.size(); ++s)
        for (std::size_t t = s + 1; t < P.size(); ++t) {
            double d = 0.0;
            for (std::size_t k = 0; k < P[s].size(); ++k) {
                double diff = P[t][k] - P[s][k];
                if (diff > 0.0) d += diff;
            }
            best = std::max(best, d);
        }
    return best;
}

bool is_scrambling(const std::vector<std::vector<double>> &P) {
    check_stochastic(P, "matrix");
    for (std::size_t s = 0; s < P.size(); ++s)
        for (std::size_t t = s + 1; t < P.size(); ++t) {
            bool overlap = false;
            for (std::size_t k = 0; k < P[s].size(); ++k)
                if (P[s][k] > 0.0 && P[t][k] > 0.0) {
                    overlap = true;
                    break;
                }
            if (!overlap) return false;
        }
    return true;
}

bool has_positive_column(const std::vector<std::vector<double>> &P) {
    check_stochastic(P, "matrix");
    if (P.empty()) return false;
    for (std::size_t k = 0; k < P[0].size(); ++k) {
        bool all = true;
        for (std::size_t i = 0; i < P.size(); ++i)
            if (P[i][k] <= 0.0) {
                all = false;
                break;
            }
        if (all) return true;
    }
    return false;
}

std::string to_string(ErgodicityVerdict v) {
    switch (v) {
    case ErgodicityVerdict::CertifiedAmsErgodic: return "certified-ams-ergodic";
    case ErgodicityVerdict::CertifiedIndecomposable: return "certified-indecomposable";
    case ErgodicityVerdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

ErgodicityReport check_indecomposable(const SurrogateFsc &fsc, int depth_cap) {
    ErgodicityReport rep;
    rep.condition = "word-search";
    auto supports = marginal_supports(fsc);

    // Once a product of state-transition supports gains a positive column it
    // keeps one, so only the "bad" (column-free) support profiles need to be
    // explored.  Certification holds iff the bad graph reachable from the
    // identity profile is acyclic; the certificate length is the longest bad
    // path plus one.
    BitMatrix identity(fsc.num_states);
    for (int z = 0; z < fsc.num_states; ++z) identity.set(z, z);
    if (identity.has_positive_column()) { // single-state channel
        rep.verdict = ErgodicityVerdict::CertifiedIndecomposable;
        rep.word_length = 1;
        rep.witness = "single-state channel: every word merges immediately";
        return rep;
    }

    std::unordered_map<std::string, int> ids;
    std::vector<BitMatrix> nodes;
    std::vector<std::vector<int>> children;
    std::vector<int> depth_of;
    ids.emplace(identity.key(), 0);
    nodes.push_back(identity);
    children.emplace_back();
    depth_of.push_back(0);

    bool truncated = false;
    for (std::size_t cur = 0; cur < nodes.size(); ++cur) {
        if (depth_of[cur] >= depth_cap) {
            // An unexpanded bad node at the cap: cannot decide.
            truncated = true;
            continue;
        }
        for (int v = 0; v < fsc.num_inputs; ++v) {
            BitMatrix prod =
                bool_product(nodes[cur], supports[static_cast<std::size_t>(v)]);
            if (prod.has_positive_column()) continue;
            auto [it, fresh] = ids.emplace(prod.key(), static_cast<int>(nodes.size()));
            if (fresh) {
                nodes.push_back(std::move(prod));
                children.emplace_back();
                depth_of.push_back(depth_of[cur] + 1);
            }
            children[cur].push_back(it->second);
        }
        if (nodes.size() > 4000000) {
            truncated = true;
            break;
        }
    }
    if (truncated) {
        rep.verdict = ErgodicityVerdict::Inconclusive;
        rep.witness = "no certificate within the configured search depth";
        return rep;
    }

    // Iterative three-color DFS: cycle detection plus longest-path on the DAG.
    int n = static_cast<int>(nodes.size());
    std::vector<int> color(static_cast<std::size_t>(n), 0);   // 0 new, 1 open, 2 done
    std::vector<int> longest(static_cast<std::size_t>(n), 0); // longest bad path below
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    color[0] = 1;
    while (!stack.empty()) {
        auto &[u, ci] = stack.back();
        if (ci < children[static_cast<std::size_t>(u)].size()) {
            int w = children[static_cast<std::size_t>(u)][ci++];
            if (color[static_cast<std::size_t>(w)] == 1) {
                rep.verdict = ErgodicityVerdict::Inconclusive;
                rep.decomposability_witness = true;
                rep.witness =
                    "a cycle of non-merging support profiles exists; arbitrarily "
                    "long words never force a positive column";
                return rep;
            }
            if (color[static_cast<std::size_t>(w)] == 0) {
                color[static_cast<std::size_t>(w)] = 1;
                stack.emplace_back(w, 0);
            }
        } else {
            color[static_cast<std::size_t>(u)] = 2;
            int best = 0;
            for (int w : children[static_cast<std::size_t>(u)])
                best = std::max(best, 1 + longest[static_cast<std::size_t>(w)]);
            longest[static_cast<std::size_t>(u)] = best;
            stack.pop_back();
        }
    }

    rep.verdict = ErgodicityVerdict::CertifiedIndecomposable;
    rep.word_length = longest[0] + 1;
    rep.witness = "every input word of length " + std::to_string(longest[0] + 1) +
                  " forces a positive column in the state-transition product";
    return rep;
}

ErgodicityReport check_sufficient_conditions(const SystemModel &model,
                                             const SurrogateFsc &fsc,
                                             const MarkovInputProcess *input,
                                             int depth_cap) {
    ErgodicityReport rep;

    // (a) A packet level available after every harvest history that either
    // refills the battery outright or out-pays the costliest input.
    if (model.rule == EnergyRule::Additive || model.rule == EnergyRule::StoreFirst) {
        for (int a = 0; a < model.harvest.num_symbols(); ++a) {
            bool always = true;
            for (int h = 0; h < model.harvest.num_histories() && always; ++h)
                if (model.harvest.row(h)[static_cast<std::size_t>(a)] <= 0.0)
                    always = false;
            if (!always) continue;
            int alpha = model.harvest.alphabet[static_cast<std::size_t>(a)];
            if (model.rule == EnergyRule::StoreFirst && alpha >= model.battery_cap) {
                rep.verdict = ErgodicityVerdict::CertifiedIndecomposable;
                rep.condition = "always-available-packet-fills-battery";
                rep.witness = "packet " + std::to_string(alpha) +
                              " has positive probability after every history and "
                              "covers the battery capacity";
                return rep;
            }
            if (alpha > model.max_cost()) {
                rep.verdict = ErgodicityVerdict::CertifiedIndecomposable;
                rep.condition = "always-available-packet-exceeds-max-cost";
                rep.witness = "packet " + std::to_string(alpha) +
                              " has positive probability after every history and "
                              "exceeds the largest input cost";
                return rep;
            }
        }
    }

    // (b) Closed-form tests for memoryless harvests with state memory one.
    if (model.harvest.iid() && model.harvest.full_support() &&
        fsc.policies.memory_states == 1 && fsc.policies.memory_packets == 0 &&
        fsc.num_states == model.num_states() &&
        (model.rule == EnergyRule::Additive || model.rule == EnergyRule::StoreFirst)) {
        const auto &eh = model.harvest.alphabet;
        bool interval = true;
        for (std::size_t i = 1; i < eh.size(); ++i)
            if (eh[i] != eh[i - 1] + 1) interval = false;
        int spread = eh.back() - eh.front();
        bool covers = model.rule == EnergyRule::Additive
                          ? spread >= model.battery_cap
                          : eh.back() >= model.battery_cap;
        if (interval && covers) {
            rep.verdict = ErgodicityVerdict::CertifiedIndecomposable;
            rep.condition = "iid-interval-covers-battery";
            rep.witness = "packet support is a contiguous integer interval wide "
                          "enough to force any battery level";
            return rep;
        }
        if (eh.back() > model.max_cost()) {
            rep.verdict = ErgodicityVerdict::CertifiedIndecomposable;
            rep.condition = "iid-max-packet-exceeds-max-cost";
            rep.witness = "largest packet exceeds the largest input cost, so the "
                          "battery refills under any policy";
            return rep;
        }
    }

    // (c) A positive-probability merging word under the supplied input process.
    if (input != nullptr) {
        auto len = merging_word_length(fsc, *input, depth_cap);
        if (len) {
            rep.verdict = ErgodicityVerdict::CertifiedAmsErgodic;
            rep.condition = "positive-probability-merging-word";
            rep.word_length = *len;
            rep.witness = "an input word of length " + std::to_string(*len) +
                          " with positive probability drives every pair of states "
                          "to a common successor";
            return rep;
        }
    }

    rep.verdict = ErgodicityVerdict::Inconclusive;
    rep.condition = "none";
    rep.witness = "no sufficient condition matched";
    return rep;
}

SupportCheck irreducible_on_support(const std::vector<std::vector<double>> &P,
                                    const std::vector<double> &initial) {
    check_stochastic(P, "chain");
    int n = static_cast<int>(P.size());
    if (static_cast<int>(initial.size()) != n)
        throw IncompatibleDimensions("initial length != chain size");
    check_distribution(initial, "chain initial");

    // Iterative Tarjan over the positive-entry digraph.
    std::vector<int> index(static_cast<std::size_t>(n), -1),
        low(static_cast<std::size_t>(n), 0), comp(static_cast<std::size_t>(n), -1);
    std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
    std::vector<int> stack;
    int next_index = 0, num_comps = 0;

    struct Frame {
        int v;
        int child;
    };
    for (int root = 0; root < n; ++root) {
        if (index[static_cast<std::size_t>(root)] != -1) continue;
        std::vector<Frame> call;
        call.push_back({root, 0});
        index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] =
            next_index++;
        stack.push_back(root);
        on_stack[static_cast<std::size_t>(root)] = 1;
        while (!call.empty()) {
            Frame &f = call.back();
            if (f.child < n) {
                int w = f.child++;
                if (P[static_cast<std::size_t>(f.v)][static_cast<std::size_t>(w)] <= 0.0)
                    continue;
                if (index[static_cast<std::size_t>(w)] == -1) {
                    index[static_cast<std::size_t>(w)] =
                        low[static_cast<std::size_t>(w)] = next_index++;
                    stack.push_back(w);
                    on_stack[static_cast<std::size_t>(w)] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[static_cast<std::size_t>(w)]) {
                    low[static_cast<std::size_t>(f.v)] =
                        std::min(low[static_cast<std::size_t>(f.v)],
                                 index[static_cast<std::size_t>(w)]);
                }
            } else {
                if (low[static_cast<std::size_t>(f.v)] ==
                    index[static_cast<std::size_t>(f.v)]) {
                    while (true) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[static_cast<std::size_t>(w)] = 0;
                        comp[static_cast<std::size_t>(w)] = num_comps;
                        if (w == f.v) break;
                    }
                    ++num_comps;
                }
                int v = f.v;
                call.pop_back();
                if (!call.empty())
                    low[static_cast<std::size_t>(call.back().v)] =
                        std::min(low[static_cast<std::size_t>(call.back().v)],
                                 low[static_cast<std::size_t>(v)]);
            }
        }
    }

    // A component is recurrent iff no positive edge leaves it.
    std::vector<char> recurrent(static_cast<std::size_t>(num_comps), 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (P[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > 0.0 &&
                comp[static_cast<std::size_t>(i)] != comp[static_cast<std::size_t>(j)])
                recurrent[static_cast<std::size_t>(comp[static_cast<std::size_t>(i)])] = 0;

    // States reachable from the initial support.
    std::vector<char> reach(static_cast<std::size_t>(n), 0);
    std::queue<int> q;
    for (int i = 0; i < n; ++i)
        if (initial[static_cast<std::size_t>(i)] > 0.0) {
            reach[static_cast<std::size_t>(i)] = 1;
            q.push(i);
        }
    while (!q.empty()) {
        int i = q.front();
        q.pop();
        for (int j = 0; j < n; ++j)
            if (P[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > 0.0 &&
                !reach[static_cast<std::size_t>(j)]) {
                reach[static_cast<std::size_t>(j)] = 1;
                q.push(j);
            }
    }

    // The long-run occupation support is the union of reachable recurrent
    // classes (transient states carry zero mean occupation).
    std::vector<char> hit(static_cast<std::size_t>(num_comps), 0);
    for (int i = 0; i < n; ++i)
        if (reach[static_cast<std::size_t>(i)] &&
            recurrent[static_cast<std::size_t>(comp[static_cast<std::size_t>(i)])])
            hit[static_cast<std::size_t>(comp[static_cast<std::size_t>(i)])] = 1;

    SupportCheck out;
    for (int c = 0; c < num_comps; ++c)
        if (hit[static_cast<std::size_t>(c)]) ++out.num_recurrent_classes;
    for (int i = 0; i < n; ++i)
        if (hit[static_cast<std::size_t>(comp[static_cast<std::size_t>(i)])])
            out.support.push_back(i);
    out.irreducible = out.num_recurrent_classes == 1;

    // Sanity: the support must be closed.
    for (int i : out.support)
        for (int j = 0; j < n; ++j)
            if (P[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > 0.0 &&
                !hit[static_cast<std::size_t>(comp[static_cast<std::size_t>(j)])])
                throw NonConvergence("long-run support not closed");
    return out;
}

SupportCheck irreducible_on_support(const SurrogateFsc &fsc,
                                    const MarkovInputProcess &input) {
    JointChain jc = joint_chain(fsc, input);
    return irreducible_on_support(jc.transition, jc.initial);
}

} // namespace ehcap
