#include "ehcap/inforate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_map>

#include "ehcap/prob.hpp"

namespace ehcap {

namespace {

// Level-aware view of a Markov input: during the first k steps the symbol
// probabilities are successive conditionals of the initial joint history
// distribution; afterwards the kernel rows apply.  Contexts before step n
// (1-based) are prefixes of length n-1 (capped at k).
struct PrefixedInput {
    const MarkovInputProcess &in;
    std::vector<std::vector<double>> marg; // marg[j]: joint mass of length-j prefixes

    explicit PrefixedInput(const MarkovInputProcess &input) : in(input) {
        marg.resize(static_cast<std::size_t>(in.order) + 1);
        marg[static_cast<std::size_t>(in.order)] =
            in.order == 0 ? std::vector<double>{1.0} : in.initial;
        for (int j = in.order; j > 0; --j) {
            auto &up = marg[static_cast<std::size_t>(j)];
            auto &down = marg[static_cast<std::size_t>(j - 1)];
            down.assign(up.size() / static_cast<std::size_t>(in.num_symbols), 0.0);
            for (std::size_t i = 0; i < up.size(); ++i)
                down[i / static_cast<std::size_t>(in.num_symbols)] += up[i];
        }
    }

    int context_count(int n) const { // contexts available before step n
        int len = std::min(n - 1, in.order);
        int c = 1;
        for (int i = 0; i < len; ++i) c *= in.num_symbols;
        return c;
    }

    double prob(int n, int ctx, int v) const {
        if (n > in.order) return in.kernel[static_cast<std::size_t>(ctx)]
                                          [static_cast<std::size_t>(v)];
        double denom = marg[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(ctx)];
        if (denom <= 0.0) return 0.0;
        return marg[static_cast<std::size_t>(n)]
                   [static_cast<std::size_t>(ctx) * in.num_symbols + v] /
               denom;
    }

    int next(int n, int ctx, int v) const {
        if (n > in.order) return in.push(ctx, v);
        return ctx * in.num_symbols + v;
    }
};

} // namespace

SimulatedPath simulate_path(const SurrogateFsc &fsc, const MarkovInputProcess &input,
                            std::int64_t length, std::uint64_t seed) {
    input.validate();
    if (input.num_symbols != fsc.num_inputs)
        throw IncompatibleDimensions("input process alphabet != |V|");
    if (length < 1) throw ConfigError("path length must be >= 1");

    Rng rng(seed);
    SimulatedPath path;
    path.inputs.resize(static_cast<std::size_t>(length));
    path.outputs.resize(static_cast<std::size_t>(length));
    path.states.resize(static_cast<std::size_t>(length) + 1);

    // Canonical draw order: z1, then the initial input history (joint), then
    // per step the input symbol (when past the history) and the (y,z') pair.
    path.states[0] = rng.sample(fsc.initial_state);
    int hist = 0;
    if (input.order >= 1) hist = rng.sample(input.initial);

    std::vector<int> first(static_cast<std::size_t>(std::max(input.order, 0)));
    {
        int h = hist;
        for (int i = input.order - 1; i >= 0; --i) {
            first[static_cast<std::size_t>(i)] = h % input.num_symbols;
            h /= input.num_symbols;
        }
    }

    for (std::int64_t n = 0; n < length; ++n) {
        int v;
        if (n < input.order) {
            v = first[static_cast<std::size_t>(n)];
        } else {
            v = rng.sample(input.kernel[static_cast<std::size_t>(hist)]);
            hist = input.push(hist, v);
        }
        path.inputs[static_cast<std::size_t>(n)] = v;

        const auto &slice = fsc.slice(v, path.states[static_cast<std::size_t>(n)]);
        double u = rng.uniform(), acc = 0.0;
        const SurrogateFsc::Trans *chosen = nullptr;
        for (const auto &t : slice) {
            acc += t.p;
            if (u < acc) {
                chosen = &t;
                break;
            }
        }
        if (chosen == nullptr) {
            for (auto it = slice.rbegin(); it != slice.rend(); ++it)
                if (it->p > 0.0) {
                    chosen = &*it;
                    break;
                }
        }
        path.outputs[static_cast<std::size_t>(n)] = chosen->y;
        path.states[static_cast<std::size_t>(n) + 1] = chosen->z2;
    }
    return path;
}

SampleEntropySteps sample_entropy_steps(const SurrogateFsc &fsc,
                                        const MarkovInputProcess &input,
                                        const SimulatedPath &path) {
    const std::int64_t N = static_cast<std::int64_t>(path.inputs.size());
    const int Z = fsc.num_states;
    PrefixedInput pin(input);

    SampleEntropySteps steps;
    steps.input_bits.resize(static_cast<std::size_t>(N));
    steps.output_bits.resize(static_cast<std::size_t>(N));
    steps.joint_bits.resize(static_cast<std::size_t>(N));

    // Input sample entropy: conditionals of the chain along the realized path.
    {
        int ctx = 0;
        for (std::int64_t n = 1; n <= N; ++n) {
            int v = path.inputs[static_cast<std::size_t>(n - 1)];
            double p = pin.prob(static_cast<int>(std::min<std::int64_t>(
                                    n, static_cast<std::int64_t>(input.order) + 1)),
                                ctx, v);
            // For n beyond the warmup the first argument only needs to say
            // "past the history"; clamp keeps contexts in range.
            steps.input_bits[static_cast<std::size_t>(n - 1)] = -std::log2(p);
            ctx = pin.next(static_cast<int>(std::min<std::int64_t>(
                               n, static_cast<std::int64_t>(input.order) + 1)),
                           ctx, v);
        }
    }

    // Output sample entropy: forward pass over (input context, state).
    {
        std::vector<double> alpha(fsc.initial_state); // over ctx x Z, ctx count = 1
        int ctx_count = 1;
        for (std::int64_t n = 1; n <= N; ++n) {
            int level = static_cast<int>(
                std::min<std::int64_t>(n, static_cast<std::int64_t>(input.order) + 1));
            int next_count = pin.context_count(level + 1); // clamps internally
            int y = path.outputs[static_cast<std::size_t>(n - 1)];
            std::vector<double> next(static_cast<std::size_t>(next_count) * Z, 0.0);
            for (int c = 0; c < ctx_count; ++c)
                for (int z = 0; z < Z; ++z) {
                    double w = alpha[static_cast<std::size_t>(c) * Z + z];
                    if (w <= 0.0) continue;
                    for (int v = 0; v < fsc.num_inputs; ++v) {
                        double pv = pin.prob(level, c, v);
                        if (pv <= 0.0) continue;
                        int c2 = pin.next(level, c, v);
                        for (const auto &t : fsc.slice(v, z))
                            if (t.y == y)
                                next[static_cast<std::size_t>(c2) * Z + t.z2] +=
                                    w * pv * t.p;
                    }
                }
            double tot = 0.0;
            for (double w : next) tot += w;
            steps.output_bits[static_cast<std::size_t>(n - 1)] = -std::log2(tot);
            for (double &w : next) w /= tot;
            alpha.swap(next);
            ctx_count = next_count;
        }
    }

    // Joint sample entropy: input term plus the conditional output term from a
    // state-posterior pass given the realized inputs.
    {
        std::vector<double> gamma(fsc.initial_state);
        for (std::int64_t n = 1; n <= N; ++n) {
            int v = path.inputs[static_cast<std::size_t>(n - 1)];
            int y = path.outputs[static_cast<std::size_t>(n - 1)];
            std::vector<double> next(static_cast<std::size_t>(Z), 0.0);
            for (int z = 0; z < Z; ++z) {
                double w = gamma[static_cast<std::size_t>(z)];
                if (w <= 0.0) continue;
                for (const auto &t : fsc.slice(v, z))
                    if (t.y == y) next[static_cast<std::size_t>(t.z2)] += w * t.p;
            }
            double tot = 0.0;
            for (double w : next) tot += w;
            steps.joint_bits[static_cast<std::size_t>(n - 1)] =
                steps.input_bits[static_cast<std::size_t>(n - 1)] - std::log2(tot);
            for (double &w : next) w /= tot;
            gamma.swap(next);
        }
    }

    return steps;
}

RateEstimate estimate_info_rate(const SurrogateFsc &fsc, const MarkovInputProcess &input,
                                const RateOptions &opts) {
    if (!opts.certified && !opts.force)
        throw NoErgodicityCertificate(
            "no ergodicity certificate for this channel/input pair; the "
            "sample-entropy estimator has no convergence guarantee (override to "
            "proceed anyway)");
    if (opts.blocks < 2) throw ConfigError("need at least 2 bootstrap blocks");
    if (opts.length < opts.blocks) throw ConfigError("path shorter than block count");

    SimulatedPath path = simulate_path(fsc, input, opts.length, opts.seed);
    SampleEntropySteps steps = sample_entropy_steps(fsc, input, path);

    const std::int64_t bs = opts.length / opts.blocks;
    const std::int64_t used = bs * opts.blocks;

    RateEstimate est;
    est.length = opts.length;
    est.blocks = opts.blocks;
    est.seed = opts.seed;

    std::vector<double> block_rates(static_cast<std::size_t>(opts.blocks), 0.0);
    double hin = 0.0, hout = 0.0, hjoint = 0.0;
    for (std::int64_t n = 0; n < used; ++n) {
        double in_b = steps.input_bits[static_cast<std::size_t>(n)];
        double out_b = steps.output_bits[static_cast<std::size_t>(n)];
        double joint_b = steps.joint_bits[static_cast<std::size_t>(n)];
        hin += in_b;
        hout += out_b;
        hjoint += joint_b;
        block_rates[static_cast<std::size_t>(n / bs)] += in_b + out_b - joint_b;
    }
    for (double &r : block_rates) r /= static_cast<double>(bs);

    est.input_entropy_bits = hin / static_cast<double>(used);
    est.output_entropy_bits = hout / static_cast<double>(used);
    est.joint_entropy_bits = hjoint / static_cast<double>(used);
    est.rate_bits =
        est.input_entropy_bits + est.output_entropy_bits - est.joint_entropy_bits;
    est.stderr_bits = mean_stderr(block_rates).stderr_of_mean;
    return est;
}

double exact_block_mi(const SurrogateFsc &fsc, const MarkovInputProcess &input,
                      int block_length, const ExactMiOptions &opts) {
    input.validate();
    if (input.num_symbols != fsc.num_inputs)
        throw IncompatibleDimensions("input process alphabet != |V|");
    if (block_length < 1) throw ConfigError("block length must be >= 1");

    const int N = block_length;
    const int Z = fsc.num_states;
    const int Y = fsc.num_outputs;
    PrefixedInput pin(input);

    // Guard the output-sequence enumeration.
    double leaves = std::pow(static_cast<double>(Y), N);
    if (leaves > static_cast<double>(opts.node_budget))
        throw BudgetExceeded("output tree of " + std::to_string(leaves) +
                             " leaves exceeds the node budget");

    // H(Y^N): depth-first over output words, forward vector over (ctx, z).
    double h_y = 0.0;
    {
        struct Frame {
            int level; // completed steps
            int ctx_count;
            std::vector<double> alpha; // unnormalized p(y^level, ctx, z)
            int y = 0;
        };
        std::vector<Frame> stack;
        stack.push_back({0, 1, fsc.initial_state, 0});
        while (!stack.empty()) {
            Frame &f = stack.back();
            if (f.level == N) {
                double tot = 0.0;
                for (double w : f.alpha) tot += w;
                if (tot > 0.0) h_y -= tot * std::log2(tot);
                stack.pop_back();
                continue;
            }
            if (f.y == Y) {
                stack.pop_back();
                continue;
            }
            int y = f.y++;
            int level = std::min(f.level + 1, input.order + 1);
            int next_count = pin.context_count(f.level + 2); // clamps internally
            Frame g;
            g.level = f.level + 1;
            g.ctx_count = next_count;
            g.alpha.assign(static_cast<std::size_t>(next_count) * Z, 0.0);
            bool mass = false;
            for (int c = 0; c < f.ctx_count; ++c)
                for (int z = 0; z < Z; ++z) {
                    double w = f.alpha[static_cast<std::size_t>(c) * Z + z];
                    if (w <= 0.0) continue;
                    for (int v = 0; v < fsc.num_inputs; ++v) {
                        double pv = pin.prob(level, c, v);
                        if (pv <= 0.0) continue;
                        int c2 = pin.next(level, c, v);
                        for (const auto &t : fsc.slice(v, z))
                            if (t.y == y) {
                                g.alpha[static_cast<std::size_t>(c2) * Z + t.z2] +=
                                    w * pv * t.p;
                                mass = true;
                            }
                    }
                }
            if (mass) stack.push_back(std::move(g));
        }
    }

    // H(Y^N | V^N): merged forward dynamic program.  Nodes carry the input
    // context and the quantized state posterior; branches with equal nodes are
    // merged, summing their probability mass W and mass-weighted accumulated
    // log-loss L.  Merging is exact because the future depends on the past
    // only through (context, posterior).
    double h_y_given_v = 0.0;
    {
        struct Acc {
            double w = 0.0;
            double l = 0.0;
        };
        auto key_of = [&](int ctx, const std::vector<double> &d) {
            std::string k(sizeof(int) + d.size() * sizeof(std::int64_t), '\0');
            std::memcpy(k.data(), &ctx, sizeof(int));
            for (std::size_t i = 0; i < d.size(); ++i) {
                auto q = static_cast<std::int64_t>(std::llround(d[i] / opts.key_quantum));
                std::memcpy(k.data() + sizeof(int) + i * sizeof(std::int64_t), &q,
                            sizeof(std::int64_t));
            }
            return k;
        };

        struct Node {
            int ctx;
            std::vector<double> d;
            Acc acc;
        };
        std::unordered_map<std::string, std::size_t> index;
        std::vector<Node> level_nodes;
        level_nodes.push_back({0, fsc.initial_state, {1.0, 0.0}});

        for (int n = 1; n <= N; ++n) {
            int level = std::min(n, input.order + 1);
            std::unordered_map<std::string, std::size_t> next_index;
            std::vector<Node> next_nodes;
            for (const auto &node : level_nodes) {
                for (int v = 0; v < fsc.num_inputs; ++v) {
                    double pv = pin.prob(level, node.ctx, v);
                    if (pv <= 0.0) continue;
                    int c2 = pin.next(level, node.ctx, v);
                    for (int y = 0; y < Y; ++y) {
                        std::vector<double> a(static_cast<std::size_t>(Z), 0.0);
                        double py = 0.0;
                        for (int z = 0; z < Z; ++z) {
                            double w = node.d[static_cast<std::size_t>(z)];
                            if (w <= 0.0) continue;
                            for (const auto &t : fsc.slice(v, z))
                                if (t.y == y) {
                                    a[static_cast<std::size_t>(t.z2)] += w * t.p;
                                    py += w * t.p;
                                }
                        }
                        if (py <= 0.0) continue;
                        for (double &w : a) w /= py;
                        double scale = pv * py;
                        double add_l =
                            scale * (node.acc.l + node.acc.w * (-std::log2(py)));
                        double add_w = scale * node.acc.w;
                        std::string k = key_of(c2, a);
                        auto it = next_index.find(k);
                        if (it == next_index.end()) {
                            next_index.emplace(std::move(k), next_nodes.size());
                            next_nodes.push_back({c2, std::move(a), {add_w, add_l}});
                        } else {
                            next_nodes[it->second].acc.w += add_w;
                            next_nodes[it->second].acc.l += add_l;
                        }
                    }
                }
                if (next_nodes.size() > opts.node_budget)
                    throw BudgetExceeded("merged posterior DP exceeded its node budget");
            }
            level_nodes.swap(next_nodes);
        }
        for (const auto &node : level_nodes) h_y_given_v += node.acc.l;
    }

    return (h_y - h_y_given_v) / static_cast<double>(N);
}

} // namespace ehcap
