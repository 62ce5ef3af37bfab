#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "ehcap/errors.hpp"
#include "ehcap/optimize.hpp"
#include "ehcap/prob.hpp"

namespace ehcap {

namespace {

constexpr std::uint64_t kMaxHarvestWords = 1ULL << 22; // harvest-word table cap
constexpr std::uint64_t kMaxJointCells = 1ULL << 24;   // (output word, harvest word) cells
constexpr std::uint64_t kMaxChildEntries = 1ULL << 26; // history transition table cap

// One level of reachable conditioning histories (x^{n-1}, e^n).  Histories
// form a forest: each level-(n+1) history has a unique (x, e') extension from
// its level-n parent, so construction needs no dedup and the trajectory walk
// can carry dense indices instead of hashing keys.
struct Level {
    std::vector<std::uint64_t> hx;   // input-prefix index, oldest first
    std::vector<std::uint64_t> he;   // harvest-prefix index, oldest first
    std::vector<int> sval;           // available energy entering the step
    std::vector<int> hrow;           // harvest history row after e^n
    std::vector<std::int32_t> child; // (hid*X + x)*E + e' -> next hid or -1
    std::vector<double> P;           // hid*X + x, zero on infeasible inputs
    std::vector<double> lnP;         // ln of positive entries, 0 elsewhere
    int count = 0;
};

struct Eba {
    const SystemModel &model;
    const DirInfoOptions &opts;
    int N, X, Y, E;
    std::uint64_t YN = 1;

    std::vector<double> lnW;            // x*Y + y for positive entries
    std::vector<Level> levels;          // index n-1
    std::vector<std::int32_t> root;     // e1 -> level-1 hid or -1
    std::vector<std::int32_t> denseE;   // full harvest word -> kept index or -1
    std::vector<double> lnPeWord;       // per kept word
    double keptMass = 0.0;

    // scratch
    std::vector<double> nu, nuLn;
    std::vector<std::vector<double>> lnPt;
    std::vector<std::vector<double>> num, den;
    double j1 = 0.0;
    std::uint64_t leaves = 0;
    bool counting = false;
    int target = -1; // -1: output-marginal pass

    Eba(const SystemModel &m, int block_length, const DirInfoOptions &o)
        : model(m), opts(o), N(block_length), X(m.num_inputs()), Y(m.num_outputs()),
          E(m.harvest.num_symbols()) {}

    int push_harvest(int hh, int e) const {
        const int r = model.harvest.order;
        if (r == 0) return 0;
        const int drop = model.harvest.num_histories() / E;
        return (hh % drop) * E + e;
    }

    void build_harvest_words() {
        long double words = 1.0L;
        for (int n = 0; n < N; ++n) words *= E;
        if (words > static_cast<long double>(kMaxHarvestWords))
            throw BudgetExceeded("harvest word table would need " + std::to_string((double)words) +
                                 " entries (cap " + std::to_string(kMaxHarvestWords) + ")");
        const std::uint64_t total = static_cast<std::uint64_t>(words);
        std::vector<double> prob(total, 0.0);
        const int hh0 =
            model.harvest.order == 0 ? 0 : model.harvest.history_index(model.harvest.prehistory);
        // iterative DFS over packet words, oldest symbol most significant
        struct Node {
            int n, hh, e;
            std::uint64_t idx;
            double p;
        };
        std::vector<Node> stack;
        stack.push_back({0, hh0, 0, 0, 1.0});
        while (!stack.empty()) {
            Node nd = stack.back();
            stack.pop_back();
            if (nd.n == N) {
                prob[nd.idx] = nd.p;
                continue;
            }
            const std::vector<double> &row = model.harvest.row(nd.hh);
            for (int e = 0; e < E; ++e) {
                if (row[e] <= 0.0) continue;
                stack.push_back({nd.n + 1, push_harvest(nd.hh, e), e, nd.idx * E + e,
                                 nd.p * row[e]});
            }
        }
        std::vector<std::uint64_t> order;
        order.reserve(total);
        for (std::uint64_t w = 0; w < total; ++w)
            if (prob[w] > 0.0) order.push_back(w);
        if (opts.harvest_mass_drop > 0.0) {
            std::sort(order.begin(), order.end(), [&](std::uint64_t a, std::uint64_t b) {
                if (prob[a] != prob[b]) return prob[a] > prob[b];
                return a < b;
            });
            double cum = 0.0;
            std::size_t take = 0;
            while (take < order.size() && cum < 1.0 - opts.harvest_mass_drop)
                cum += prob[order[take++]];
            order.resize(take);
            std::sort(order.begin(), order.end());
        }
        denseE.assign(total, -1);
        lnPeWord.resize(order.size());
        keptMass = 0.0;
        for (std::size_t i = 0; i < order.size(); ++i) {
            denseE[order[i]] = static_cast<std::int32_t>(i);
            lnPeWord[i] = std::log(prob[order[i]]);
            keptMass += prob[order[i]];
        }
        if (order.empty()) throw ConfigError("harvest process has no positive-probability word");

        long double yn = 1.0L;
        for (int n = 0; n < N; ++n) yn *= Y;
        if (yn * order.size() > static_cast<long double>(kMaxJointCells))
            throw BudgetExceeded("output/harvest posterior table would need " +
                                 std::to_string((double)(yn * order.size())) + " cells (cap " +
                                 std::to_string(kMaxJointCells) + ")");
        YN = static_cast<std::uint64_t>(yn);
    }

    bool alive_prefix(std::uint64_t he, int n) const {
        // a harvest prefix survives iff some kept word extends it
        std::uint64_t lo = he, hi = he + 1;
        for (int j = n; j < N; ++j) {
            lo *= E;
            hi *= E;
        }
        for (std::uint64_t w = lo; w < hi; ++w)
            if (denseE[w] >= 0) return true;
        return false;
    }

    void build_levels() {
        long double keys = 1.0L;
        for (int n = 0; n + 1 < N; ++n) keys *= X;
        for (int n = 0; n < N; ++n) keys *= E;
        if (keys > std::ldexp(1.0L, 62))
            throw BudgetExceeded("history key space exceeds 2^62");

        std::vector<std::vector<int>> feas;
        for (int s : model.energy_states) feas.push_back(model.feasible_inputs(s));
        auto feasible = [&](int s) -> const std::vector<int> & {
            return feas[static_cast<std::size_t>(model.state_index(s))];
        };

        levels.assign(N, Level{});
        const int hh0 =
            model.harvest.order == 0 ? 0 : model.harvest.history_index(model.harvest.prehistory);
        const std::vector<double> &row0 = model.harvest.row(hh0);
        root.assign(E, -1);
        Level &first = levels[0];
        for (int e = 0; e < E; ++e) {
            if (row0[e] <= 0.0 || !alive_prefix(e, 1)) continue;
            root[e] = first.count++;
            first.hx.push_back(0);
            first.he.push_back(static_cast<std::uint64_t>(e));
            first.sval.push_back(model.available_energy(model.battery_cap,
                                                        model.harvest.alphabet[e]));
            first.hrow.push_back(push_harvest(hh0, e));
        }
        std::uint64_t child_entries = 0;
        for (int n = 1; n <= N; ++n) {
            Level &cur = levels[n - 1];
            cur.P.assign(static_cast<std::size_t>(cur.count) * X, 0.0);
            cur.lnP.assign(cur.P.size(), 0.0);
            for (int h = 0; h < cur.count; ++h) {
                const std::vector<int> &fx = feasible(cur.sval[h]);
                for (int x : fx) cur.P[static_cast<std::size_t>(h) * X + x] = 1.0 / fx.size();
            }
            refresh_lnP(n);
            if (n == N) break;
            child_entries += static_cast<std::uint64_t>(cur.count) * X * E;
            if (child_entries > kMaxChildEntries)
                throw BudgetExceeded("conditioning history table exceeds its cap");
            cur.child.assign(static_cast<std::size_t>(cur.count) * X * E, -1);
            Level &nxt = levels[n];
            for (int h = 0; h < cur.count; ++h) {
                const std::vector<double> &row = model.harvest.row(cur.hrow[h]);
                for (int x : feasible(cur.sval[h])) {
                    const int b2 = model.next_battery(x, cur.sval[h]);
                    for (int e = 0; e < E; ++e) {
                        const std::uint64_t he2 = cur.he[h] * E + e;
                        if (row[e] <= 0.0 || !alive_prefix(he2, n + 1)) continue;
                        cur.child[(static_cast<std::size_t>(h) * X + x) * E + e] =
                            nxt.count++;
                        nxt.hx.push_back(cur.hx[h] * X + x);
                        nxt.he.push_back(he2);
                        nxt.sval.push_back(
                            model.available_energy(b2, model.harvest.alphabet[e]));
                        nxt.hrow.push_back(push_harvest(cur.hrow[h], e));
                    }
                }
            }
        }
    }

    void refresh_lnP(int n) {
        Level &lv = levels[n - 1];
        for (std::size_t i = 0; i < lv.P.size(); ++i)
            lv.lnP[i] = lv.P[i] > 0.0 ? std::log(lv.P[i]) : 0.0;
    }

    // Depth-first walk over every positive-probability trajectory.  Partial
    // sums of log-weights ride along so each leaf costs O(1).
    void walk(int n, int hid, std::uint64_t he, std::uint64_t yidx, double mu, double sPt,
              double sW, double sP, int hidT, int xT, double pnVal, double lnPn) {
        const Level &lv = levels[n - 1];
        const std::size_t base = static_cast<std::size_t>(hid) * X;
        for (int x = 0; x < X; ++x) {
            const double p = lv.P[base + x];
            if (p <= 0.0) continue;
            const double sP2 = sP + lv.lnP[base + x];
            const double sPt2 = sPt + (target >= 0 ? lnPt[n - 1][base + x] : 0.0);
            int hT = hidT, xTT = xT;
            double pv = pnVal, lp = lnPn;
            if (n == target) {
                hT = hid;
                xTT = x;
                pv = p;
                lp = lv.lnP[base + x];
            }
            for (int y = 0; y < Y; ++y) {
                const double w = model.dmc[x][y];
                if (w <= 0.0) continue;
                const double mu2 = mu * p * w;
                const double sW2 = sW + lnW[static_cast<std::size_t>(x) * Y + y];
                const std::uint64_t yidx2 = yidx * Y + y;
                if (n == N) {
                    const std::int32_t dense = denseE[he];
                    const std::uint64_t cell = static_cast<std::uint64_t>(dense) * YN + yidx2;
                    if (target < 0) {
                        nu[cell] += mu2;
                        j1 += mu2 * sW2;
                        if (counting && ++leaves > opts.trajectory_budget)
                            throw BudgetExceeded(
                                "trajectory enumeration exceeds the budget of " +
                                std::to_string(opts.trajectory_budget) + " leaves");
                    } else {
                        const double g =
                            sPt2 + sW2 - (sP2 - lp) - nuLn[cell] + lnPeWord[dense];
                        const double m = mu2 / pv;
                        num[target - 1][static_cast<std::size_t>(hT) * X + xTT] += m * g;
                        den[target - 1][static_cast<std::size_t>(hT) * X + xTT] += m;
                    }
                    continue;
                }
                const std::size_t cbase = (base + x) * E;
                const std::vector<double> &row = model.harvest.row(lv.hrow[hid]);
                for (int e = 0; e < E; ++e) {
                    const std::int32_t ci = lv.child[cbase + e];
                    if (ci < 0) continue;
                    walk(n + 1, ci, he * E + e, yidx2, mu2 * row[e], sPt2, sW2, sP2, hT, xTT,
                         pv, lp);
                }
            }
        }
    }

    void start_walk() {
        const int hh0 =
            model.harvest.order == 0 ? 0 : model.harvest.history_index(model.harvest.prehistory);
        const std::vector<double> &row0 = model.harvest.row(hh0);
        for (int e = 0; e < E; ++e) {
            if (root[e] < 0) continue;
            walk(1, root[e], static_cast<std::uint64_t>(e), 0, row0[e], 0.0, 0.0, 0.0, -1, -1,
                 1.0, 0.0);
        }
    }

    // Output-marginal pass: nu(y^N, e^N) plus the channel-term expectation;
    // returns the directed-information objective in nats.
    double objective_pass() {
        std::fill(nu.begin(), nu.end(), 0.0);
        j1 = 0.0;
        target = -1;
        start_walk();
        counting = false;
        double j2 = 0.0;
        const std::size_t kept = lnPeWord.size();
        for (std::size_t d = 0; d < kept; ++d) {
            const std::uint64_t off = d * YN;
            for (std::uint64_t yy = 0; yy < YN; ++yy) {
                const double m = nu[off + yy];
                if (m > 0.0) j2 += m * (std::log(m) - lnPeWord[d]);
            }
        }
        return j1 - j2;
    }

    void snapshot() {
        lnPt.resize(N);
        for (int n = 1; n <= N; ++n) lnPt[n - 1] = levels[n - 1].lnP;
        nuLn.assign(nu.size(), 0.0);
        for (std::size_t i = 0; i < nu.size(); ++i)
            if (nu[i] > 0.0) nuLn[i] = std::log(nu[i]);
    }

    void sweep() {
        snapshot();
        for (int n = N; n >= 1; --n) {
            Level &lv = levels[n - 1];
            num[n - 1].assign(lv.P.size(), 0.0);
            den[n - 1].assign(lv.P.size(), 0.0);
            target = n;
            start_walk();
            // coordinate maximization: new conditional ~ exp of the
            // posterior-average reward, over inputs seen with positive mass
            for (int h = 0; h < lv.count; ++h) {
                const std::size_t base = static_cast<std::size_t>(h) * X;
                int nfeas = 0, nseen = 0;
                double cmax = -std::numeric_limits<double>::infinity();
                for (int x = 0; x < X; ++x) {
                    if (lv.P[base + x] > 0.0) ++nfeas;
                    if (den[n - 1][base + x] > 0.0) {
                        ++nseen;
                        cmax = std::max(cmax, num[n - 1][base + x] / den[n - 1][base + x]);
                    }
                }
                if (nseen < 2 || nseen < nfeas) continue;
                double tot = 0.0;
                for (int x = 0; x < X; ++x) {
                    double v = 0.0;
                    if (den[n - 1][base + x] > 0.0)
                        v = std::exp(num[n - 1][base + x] / den[n - 1][base + x] - cmax);
                    lv.P[base + x] = v;
                    tot += v;
                }
                for (int x = 0; x < X; ++x) lv.P[base + x] /= tot;
            }
            refresh_lnP(n);
        }
        target = -1;
    }

    DirInfoResult run() {
        if (N < 1) throw ConfigError("block length must be >= 1");
        lnW.assign(static_cast<std::size_t>(X) * Y, 0.0);
        for (int x = 0; x < X; ++x)
            for (int y = 0; y < Y; ++y)
                if (model.dmc[x][y] > 0.0)
                    lnW[static_cast<std::size_t>(x) * Y + y] = std::log(model.dmc[x][y]);
        build_harvest_words();
        build_levels();
        nu.assign(lnPeWord.size() * YN, 0.0);
        num.resize(N);
        den.resize(N);

        counting = true;
        double J = objective_pass();
        const double tol_nats = opts.tol_bits * N * kLn2;
        DirInfoResult out;
        bool converged = false;
        for (int it = 1; it <= opts.max_sweeps; ++it) {
            sweep();
            const double J2 = objective_pass();
            out.objective_trace_bits.push_back(J2 / (N * kLn2));
            out.sweeps = it;
            if (std::abs(J2 - J) <= tol_nats) {
                J = J2;
                converged = true;
                break;
            }
            J = J2;
        }
        if (!converged)
            throw NonConvergence("directed-information objective still moving after " +
                                 std::to_string(opts.max_sweeps) + " sweeps");
        out.bits_per_use = J / (N * kLn2);
        out.truncation_bits =
            (1.0 - keptMass) * std::log2(static_cast<double>(std::min(X, Y)));
        if (out.truncation_bits < 0.0) out.truncation_bits = 0.0;
        out.conditioning.block_length = N;
        out.conditioning.levels.resize(N);
        std::vector<long double> epow(N + 1, 1.0L);
        for (int n = 1; n <= N; ++n) epow[n] = epow[n - 1] * E;
        for (int n = 1; n <= N; ++n) {
            const Level &lv = levels[n - 1];
            auto &m = out.conditioning.levels[n - 1];
            for (int h = 0; h < lv.count; ++h) {
                const std::uint64_t key =
                    lv.hx[h] * static_cast<std::uint64_t>(epow[n]) + lv.he[h];
                std::vector<double> row(X);
                for (int x = 0; x < X; ++x) row[x] = lv.P[static_cast<std::size_t>(h) * X + x];
                m.emplace(key, std::move(row));
            }
        }
        return out;
    }
};

} // namespace

DirInfoResult extended_ba_directed_info(const SystemModel &model, int block_length,
                                        const DirInfoOptions &opts) {
    Eba e(model, block_length, opts);
    return e.run();
}

} // namespace ehcap
