#include "ehcap/bounds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>

#include "ehcap/ergodicity.hpp"
#include "ehcap/errors.hpp"
#include "ehcap/inforate.hpp"
#include "ehcap/prob.hpp"

namespace ehcap {

double DpTable::bits_per_use(int n) const {
    if (n < 1 || n >= static_cast<int>(values_nats.size()))
        throw ConfigError("dynamic-program stage out of range");
    const double best = *std::max_element(values_nats[n].begin(), values_nats[n].end());
    return best / (n * kLn2);
}

namespace {

constexpr std::uint64_t kMaxTableCells = 1ULL << 26;

// Composite-output rows K[x][(y, s')] and continuation kernels Q[x][s'] of a
// state channel, restricted to the feasible inputs of each state.
struct PerState {
    std::vector<std::vector<double>> K;
    std::vector<std::vector<double>> Q;
};

std::vector<PerState> per_state_tables(const StateChannel &chan) {
    std::vector<PerState> out(chan.num_states);
    for (int s = 0; s < chan.num_states; ++s) {
        const auto &fx = chan.feasible[s];
        out[s].K.assign(fx.size(), std::vector<double>(
                                       static_cast<std::size_t>(chan.num_outputs) *
                                           chan.num_states,
                                       0.0));
        out[s].Q.assign(fx.size(), std::vector<double>(chan.num_states, 0.0));
        for (std::size_t i = 0; i < fx.size(); ++i) {
            for (int y = 0; y < chan.num_outputs; ++y)
                for (int t = 0; t < chan.num_states; ++t) {
                    const double v = chan.kernel[fx[i]][s][y][t];
                    out[s].K[i][static_cast<std::size_t>(y) * chan.num_states + t] = v;
                    out[s].Q[i][t] += v;
                }
        }
    }
    return out;
}

} // namespace

DpTable ub_sc1_dp(const StateChannel &chan, int block_length, const DpOptions &opts) {
    chan.validate();
    if (block_length < 1) throw ConfigError("block length must be >= 1");
    const int nS = chan.num_states;
    std::vector<PerState> tab = per_state_tables(chan);
    DpTable t;
    t.values_nats.assign(block_length + 1, std::vector<double>(nS, 0.0));
    if (opts.keep_arg_dists) t.arg_dists.assign(block_length + 1, {});
    std::vector<std::vector<double>> warm(nS);
    for (int n = 1; n <= block_length; ++n) {
        std::vector<std::vector<double>> stage_dists;
        for (int s = 0; s < nS; ++s) {
            const std::size_t nx = tab[s].K.size();
            std::vector<double> lin(nx, 0.0);
            for (std::size_t i = 0; i < nx; ++i)
                for (int w = 0; w < nS; ++w)
                    lin[i] += tab[s].Q[i][w] * t.values_nats[n - 1][w];
            ConcaveStepResult r = inner_concave_step(
                tab[s].K, lin, opts.inner_tol_nats, opts.inner_max_iter,
                warm[s].empty() ? nullptr : &warm[s]);
            t.values_nats[n][s] = r.value_nats;
            warm[s] = r.input_dist;
            if (opts.keep_arg_dists) stage_dists.push_back(std::move(r.input_dist));
        }
        if (opts.keep_arg_dists) t.arg_dists[n] = std::move(stage_dists);
    }
    return t;
}

DpTable ub_lnx(const StateChannel &chan, int block_length) {
    chan.validate();
    if (block_length < 1) throw ConfigError("block length must be >= 1");
    const int nS = chan.num_states;
    std::vector<PerState> tab = per_state_tables(chan);
    DpTable t;
    t.values_nats.assign(block_length + 1, std::vector<double>(nS, 0.0));
    for (int n = 1; n <= block_length; ++n) {
        for (int s = 0; s < nS; ++s) {
            std::vector<double> a(tab[s].Q.size(), 0.0);
            for (std::size_t i = 0; i < a.size(); ++i)
                for (int w = 0; w < nS; ++w)
                    a[i] += tab[s].Q[i][w] * t.values_nats[n - 1][w];
            t.values_nats[n][s] = log_sum_exp(a);
        }
    }
    return t;
}

EhDpResult ub_sc2_ln(const SystemModel &model, int block_length, const DpOptions &opts) {
    if (block_length < 1) throw ConfigError("block length must be >= 1");
    const int E = model.harvest.num_symbols();
    const int nS = model.num_states();
    const int nH = model.harvest.num_histories();
    const int nZ = nH * nS;
    const int Y = model.num_outputs();
    const std::size_t cols =
        static_cast<std::size_t>(Y) * E * nZ; // composite output (y, e', z')
    // per overall state: composite rows over feasible inputs + continuation
    std::vector<std::vector<std::vector<double>>> K(nZ), Q(nZ);
    auto push_hist = [&](int hh, int e) {
        return model.harvest.order == 0 ? 0 : (hh % (nH / E)) * E + e;
    };
    std::uint64_t cells = 0;
    for (int hh = 0; hh < nH; ++hh) {
        const std::vector<double> &row = model.harvest.row(hh);
        for (int si = 0; si < nS; ++si) {
            const int z = hh * nS + si;
            const int s = model.energy_states[si];
            const std::vector<int> fx = model.feasible_inputs(s);
            cells += fx.size() * cols;
            if (cells > kMaxTableCells)
                throw BudgetExceeded("overall-state composite table exceeds its cap");
            K[z].assign(fx.size(), std::vector<double>(cols, 0.0));
            Q[z].assign(fx.size(), std::vector<double>(nZ, 0.0));
            for (std::size_t i = 0; i < fx.size(); ++i) {
                for (int e2 = 0; e2 < E; ++e2) {
                    if (row[e2] <= 0.0) continue;
                    const int s2 = model.next_state(fx[i], s, model.harvest.alphabet[e2]);
                    const int z2 = push_hist(hh, e2) * nS + model.state_index(s2);
                    for (int y = 0; y < Y; ++y) {
                        const double v = model.dmc[fx[i]][y] * row[e2];
                        if (v <= 0.0) continue;
                        K[z][i][(static_cast<std::size_t>(y) * E + e2) * nZ + z2] += v;
                        Q[z][i][z2] += v;
                    }
                }
            }
        }
    }
    EhDpResult out;
    out.table.values_nats.assign(block_length + 1, std::vector<double>(nZ, 0.0));
    if (opts.keep_arg_dists) out.table.arg_dists.assign(block_length + 1, {});
    std::vector<std::vector<double>> warm(nZ);
    for (int n = 1; n <= block_length; ++n) {
        std::vector<std::vector<double>> stage_dists;
        for (int z = 0; z < nZ; ++z) {
            std::vector<double> lin(K[z].size(), 0.0);
            for (std::size_t i = 0; i < lin.size(); ++i)
                for (int w = 0; w < nZ; ++w)
                    lin[i] += Q[z][i][w] * out.table.values_nats[n - 1][w];
            ConcaveStepResult r = inner_concave_step(
                K[z], lin, opts.inner_tol_nats, opts.inner_max_iter,
                warm[z].empty() ? nullptr : &warm[z]);
            out.table.values_nats[n][z] = r.value_nats;
            warm[z] = r.input_dist;
            if (opts.keep_arg_dists) stage_dists.push_back(std::move(r.input_dist));
        }
        if (opts.keep_arg_dists) out.table.arg_dists[n] = std::move(stage_dists);
    }
    // value: best over harvest prehistories of the full-battery initial mixture
    const std::vector<double> &cN = out.table.values_nats[block_length];
    double best = -std::numeric_limits<double>::infinity();
    for (int hh = 0; hh < nH; ++hh) {
        const std::vector<double> &row = model.harvest.row(hh);
        std::vector<double> pi(nZ, 0.0);
        double v = 0.0;
        for (int e1 = 0; e1 < E; ++e1) {
            if (row[e1] <= 0.0) continue;
            const int s1 = model.available_energy(model.battery_cap,
                                                  model.harvest.alphabet[e1]);
            const int z1 = push_hist(hh, e1) * nS + model.state_index(s1);
            pi[z1] += row[e1];
            v += row[e1] * cN[z1];
        }
        if (v > best) {
            best = v;
            out.initial = std::move(pi);
        }
    }
    out.bits_per_use = best / (block_length * kLn2);
    return out;
}

double ub_fscx_block(const StateChannel &chan, int block_length,
                     const BlockBoundOptions &opts) {
    chan.validate();
    if (block_length < 1) throw ConfigError("block length must be >= 1");
    const int nS = chan.num_states, Y = chan.num_outputs;
    // single-step strategies: one feasible input per state
    long double u_count = 1.0L;
    for (int s = 0; s < nS; ++s) u_count *= chan.feasible[s].size();
    long double words = 1.0L;
    for (int n = 0; n < block_length; ++n) words *= u_count;
    if (words > static_cast<long double>(opts.alphabet_cap))
        throw BudgetExceeded("strategy word alphabet needs " + std::to_string((double)words) +
                             " entries (cap " + std::to_string(opts.alphabet_cap) + ")");
    long double colsl = 1.0L;
    for (int n = 0; n < block_length; ++n) colsl *= static_cast<long double>(Y) * nS;
    if (words * colsl > static_cast<long double>(kMaxTableCells))
        throw BudgetExceeded("equivalent block channel table exceeds its cap");
    const std::size_t nWords = static_cast<std::size_t>(words);
    const std::size_t cols = static_cast<std::size_t>(colsl);

    // enumerate the strategy maps (mixed radix over states)
    const int nU = static_cast<int>(u_count);
    std::vector<std::vector<int>> maps(nU, std::vector<int>(nS));
    {
        std::vector<std::size_t> digit(nS, 0);
        for (int u = 0; u < nU; ++u) {
            for (int s = 0; s < nS; ++s) maps[u][s] = chan.feasible[s][digit[s]];
            for (int s = nS - 1; s >= 0; --s) {
                if (++digit[s] < chan.feasible[s].size()) break;
                digit[s] = 0;
            }
        }
    }

    std::vector<double> rows(nWords * cols);
    std::vector<int> word(block_length, 0);
    double best = 0.0;
    for (int s1 = 0; s1 < nS; ++s1) {
        std::fill(rows.begin(), rows.end(), 0.0);
        std::fill(word.begin(), word.end(), 0);
        for (std::size_t wi = 0; wi < nWords; ++wi) {
            double *row = rows.data() + wi * cols;
            // accumulate p(y^N, s_2^{N+1} | word, s1) over state trajectories
            struct Frame {
                int n, s;
                std::size_t col;
                double p;
            };
            std::vector<Frame> stack{{0, s1, 0, 1.0}};
            while (!stack.empty()) {
                Frame f = stack.back();
                stack.pop_back();
                if (f.n == block_length) {
                    row[f.col] += f.p;
                    continue;
                }
                const int x = maps[word[f.n]][f.s];
                for (int y = 0; y < Y; ++y)
                    for (int t = 0; t < nS; ++t) {
                        const double v = chan.kernel[x][f.s][y][t];
                        if (v <= 0.0) continue;
                        stack.push_back({f.n + 1, t,
                                         (f.col * Y + y) * nS + t, f.p * v});
                    }
            }
            for (int n = block_length - 1; n >= 0; --n) {
                if (++word[n] < nU) break;
                word[n] = 0;
            }
        }
        const BaResult r = ba_dmc_capacity(rows, nWords, cols, opts.ba_tol_bits,
                                           opts.ba_max_iter);
        best = std::max(best, r.capacity_bits);
    }
    return best / block_length;
}

namespace {

// Enumerates causal harvest-word strategies (one feasible input per positive-
// probability harvest prefix, empty initial battery), accumulating either a
// count or the equivalent-channel rows.
struct LbEnum {
    const SystemModel &model;
    int N, Y;
    std::vector<int> supp;       // harvest symbol indices with positive mass
    std::vector<double> pe;      // their probabilities
    std::uint64_t cap;
    std::uint64_t count = 0;
    std::vector<double> *rows = nullptr; // flattened, appended per strategy
    std::vector<std::vector<int>> assign; // per level, x per support prefix

    LbEnum(const SystemModel &m, int block_length, std::uint64_t cap_)
        : model(m), N(block_length), Y(m.num_outputs()), cap(cap_) {
        const std::vector<double> &row = m.harvest.row(0);
        for (int e = 0; e < m.harvest.num_symbols(); ++e)
            if (row[e] > 0.0) {
                supp.push_back(e);
                pe.push_back(row[e]);
            }
        assign.assign(N + 1, {});
    }

    void emit_row() {
        const std::size_t yn = rows->size();
        rows->resize(yn + ipow_y());
        emit_words(1, 0, 1.0, rows->data() + yn, 0);
    }

    std::size_t ipow_y() const {
        std::size_t v = 1;
        for (int n = 0; n < N; ++n) v *= static_cast<std::size_t>(Y);
        return v;
    }

    // walk harvest words; `pos` is the support-prefix index at level n
    void emit_words(int n, int pos, double prob, double *row, std::size_t col) {
        if (n > N) {
            row[col] += prob;
            return;
        }
        const int m = static_cast<int>(supp.size());
        for (int j = 0; j < m; ++j) {
            const int child = pos * m + j;
            const int x = assign[n][child];
            const double pw = prob * pe[j];
            for (int y = 0; y < Y; ++y) {
                const double v = pw * model.dmc[x][y];
                if (v <= 0.0) continue;
                emit_words(n + 1, child, v, row, col * Y + y);
            }
        }
    }

    // level recursion: pick inputs for every level-n node, then descend
    void level(int n, const std::vector<int> &batt) {
        if (n > N) {
            if (++count > cap)
                throw BudgetExceeded("strategy enumeration exceeds the cap of " +
                                     std::to_string(cap));
            if (rows != nullptr) emit_row();
            return;
        }
        const int m = static_cast<int>(supp.size());
        const int nodes = static_cast<int>(batt.size()) * m;
        std::vector<int> sval(nodes);
        std::vector<std::vector<int>> choices(nodes);
        for (int i = 0; i < nodes; ++i) {
            const int b = batt[i / m];
            sval[i] = model.available_energy(b, model.harvest.alphabet[supp[i % m]]);
            choices[i] = model.feasible_inputs(sval[i]);
        }
        assign[n].assign(nodes, 0);
        std::vector<int> digit(nodes, 0);
        std::vector<int> batt2(nodes);
        for (;;) {
            for (int i = 0; i < nodes; ++i) {
                assign[n][i] = choices[i][digit[i]];
                batt2[i] = model.next_battery(assign[n][i], sval[i]);
            }
            level(n + 1, batt2);
            int i = nodes - 1;
            for (; i >= 0; --i) {
                if (++digit[i] < static_cast<int>(choices[i].size())) break;
                digit[i] = 0;
            }
            if (i < 0) break;
        }
    }
};

} // namespace

LbResult lb_sc2_block(const SystemModel &model, int block_length,
                      const BlockBoundOptions &opts) {
    if (block_length < 1) throw ConfigError("block length must be >= 1");
    if (!model.harvest.iid())
        throw RequiresIidHarvest("block achievability needs an i.i.d. harvest");
    // count first (cheap, no rows) so a blown cap aborts before allocating
    {
        LbEnum counter(model, block_length, opts.alphabet_cap);
        counter.level(1, std::vector<int>{0});
    }
    LbEnum en(model, block_length, opts.alphabet_cap);
    std::vector<double> rows;
    en.rows = &rows;
    en.level(1, std::vector<int>{0});

    const std::size_t cols = en.ipow_y();
    const std::size_t n_rows = en.count;
    // deduplicate identical rows (deterministic: lexicographic order)
    std::vector<std::size_t> idx(n_rows);
    std::iota(idx.begin(), idx.end(), 0);
    auto cmp = [&](std::size_t a, std::size_t b) {
        const double *ra = rows.data() + a * cols, *rb = rows.data() + b * cols;
        for (std::size_t y = 0; y < cols; ++y) {
            if (ra[y] != rb[y]) return ra[y] < rb[y];
        }
        return false;
    };
    auto eq = [&](std::size_t a, std::size_t b) {
        const double *ra = rows.data() + a * cols, *rb = rows.data() + b * cols;
        for (std::size_t y = 0; y < cols; ++y)
            if (ra[y] != rb[y]) return false;
        return true;
    };
    std::sort(idx.begin(), idx.end(), cmp);
    std::vector<double> uniq;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i > 0 && eq(idx[i - 1], idx[i])) continue;
        uniq.insert(uniq.end(), rows.begin() + idx[i] * cols,
                    rows.begin() + (idx[i] + 1) * cols);
        ++kept;
    }
    rows.clear();
    rows.shrink_to_fit();

    const BaResult r = ba_dmc_capacity(uniq, kept, cols, opts.ba_tol_bits, opts.ba_max_iter);
    LbResult out;
    out.bits_per_use = r.capacity_bits / block_length;
    out.num_strategies = en.count;
    out.num_rows = kept;
    return out;
}

DirInfoResult ub_sc2_block(const SystemModel &model, int block_length,
                           const DirInfoOptions &opts) {
    const int r = model.harvest.order;
    if (r == 0) return extended_ba_directed_info(model, block_length, opts);
    const int E = model.harvest.num_symbols();
    std::vector<int> pre(r, 0);
    DirInfoResult best;
    bool have = false;
    for (;;) {
        SystemModel m = model;
        m.harvest.prehistory = pre;
        DirInfoResult cur = extended_ba_directed_info(m, block_length, opts);
        if (!have || cur.bits_per_use > best.bits_per_use) {
            best = std::move(cur);
            have = true;
        }
        int i = r - 1;
        for (; i >= 0; --i) {
            if (++pre[i] < E) break;
            pre[i] = 0;
        }
        if (i < 0) break;
    }
    return best;
}

// ---- Figure sweeps ----

namespace {

double parse_bsc_crossover(const ModelConfig &cfg) {
    if (!cfg.has("dmc")) return 0.0;
    std::istringstream ss(cfg.get("dmc"));
    std::string kind;
    double q = 0.0;
    if ((ss >> kind >> q) && kind == "bsc") return q;
    return 0.0;
}

double parse_bernoulli_rate(const ModelConfig &cfg) {
    if (!cfg.has("harvest")) return 0.0;
    std::istringstream ss(cfg.get("harvest"));
    std::string kind;
    double p = 0.0;
    if ((ss >> kind >> p) && kind == "bernoulli") return p;
    return 0.0;
}

// the closed form for the battery-free channel applies to the unit-cost
// binary model with a fair coin harvest
bool zero_battery_form_applies(const SystemModel &model) {
    if (model.num_inputs() != 2 || model.cost != std::vector<int>{0, 1}) return false;
    if (!model.harvest.iid() || model.harvest.num_symbols() != 2) return false;
    if (model.harvest.alphabet != std::vector<int>{0, 1}) return false;
    const std::vector<double> &row = model.harvest.row(0);
    return std::abs(row[0] - 0.5) < 1e-12 && std::abs(row[1] - 0.5) < 1e-12;
}

// Evaluate one grid point per task on a small pool; results are assembled in
// grid order so the output is independent of scheduling.
std::vector<SweepResult> map_grid(const std::vector<double> &grid, int threads,
                                  const std::function<SweepResult(double)> &fn) {
    const std::size_t n = grid.size();
    std::vector<SweepResult> res(n);
    const std::size_t workers =
        threads <= 1 ? 1 : std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) res[i] = fn(grid[i]);
        return res;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            res[i] = fn(grid[i]);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto &t : pool) t.join();
    return res;
}

SweepResult gather(std::vector<SweepResult> &&parts) {
    SweepResult all;
    for (SweepResult &p : parts) {
        for (CurvePoint &pt : p.points) all.points.push_back(std::move(pt));
        for (std::string &n : p.notes) all.notes.push_back(std::move(n));
    }
    return all;
}

MarkovInputProcess lift_order(const MarkovInputProcess &base, int order) {
    if (order == base.order) return base;
    const int V = base.num_symbols;
    MarkovInputProcess out;
    out.order = order;
    out.num_symbols = V;
    int nh = 1;
    for (int i = 0; i < order; ++i) nh *= V;
    int keep = 1;
    for (int i = 0; i < base.order; ++i) keep *= V;
    out.kernel.assign(nh, std::vector<double>(V, 0.0));
    for (int h = 0; h < nh; ++h) out.kernel[h] = base.kernel[h % keep];
    if (order >= 1) {
        // trailing symbols follow the base initial law; the padded leading
        // symbols are uniform, which only affects the transient
        out.initial.assign(nh, 0.0);
        for (int h = 0; h < nh; ++h) {
            const double w = base.order == 0 ? 1.0 : base.initial[h % keep];
            out.initial[h] = w / (nh / keep);
        }
    }
    return out;
}

} // namespace

SweepResult sweep_rates(const ModelConfig &base, const std::vector<double> &q_grid,
                        const SweepBudget &budget) {
    auto point = [&](double q) -> SweepResult {
        SweepResult out;
        ModelConfig cfg = base;
        set_bsc_crossover(cfg, q);
        const double p = parse_bernoulli_rate(cfg);
        SystemModel model;
        SurrogateFsc fsc;
        try {
            model = model_from_config(cfg);
            SurrogateOptions so;
            fsc = build_fsc_sc1(model, so);
        } catch (const std::exception &e) {
            out.notes.push_back("q=" + std::to_string(q) + ": " + e.what());
            return out;
        }
        out.points.push_back({"bsc-capacity", q, p, 1, bsc_capacity(q), 0.0, 0});
        if (zero_battery_form_applies(model))
            out.points.push_back({"zero-battery", q, p, 1, zero_battery_capacity(q), 0.0, 0});

        MarkovInputProcess iud = MarkovInputProcess::uniform(fsc.num_inputs, 0);
        const ErgodicityReport rep = check_sufficient_conditions(model, fsc, &iud);
        try {
            RateOptions ro;
            ro.length = budget.rate_length;
            ro.seed = budget.seed;
            ro.certified = rep.certified();
            const RateEstimate est = estimate_info_rate(fsc, iud, ro);
            out.points.push_back({"ir-iud", q, p, static_cast<int>(est.length),
                                  est.rate_bits, est.stderr_bits, budget.seed});
        } catch (const std::exception &e) {
            out.notes.push_back("q=" + std::to_string(q) + " ir-iud: " + e.what());
        }
        // ladder: seed each order with the best lower-order process
        MarkovInputProcess carry = iud;
        double carry_rate = -1.0;
        for (int k = 0; k <= budget.max_input_order; ++k) {
            try {
                GbaaOptions go;
                go.order = k;
                go.iterations = budget.gbaa_iterations;
                go.seed = budget.seed;
                go.rate_path_length = budget.rate_length;
                if (carry.order <= k && carry_rate >= 0.0) go.init = lift_order(carry, k);
                const GbaaResult r = gbaa_optimize(fsc, go);
                out.points.push_back({"ir-r" + std::to_string(k), q, p,
                                      static_cast<int>(budget.rate_length),
                                      r.best.rate_bits, r.best.stderr_bits, budget.seed});
                if (r.best.rate_bits > carry_rate) {
                    carry = r.best.input;
                    carry_rate = r.best.rate_bits;
                }
            } catch (const std::exception &e) {
                out.notes.push_back("q=" + std::to_string(q) + " ir-r" + std::to_string(k) +
                                    ": " + e.what());
            }
        }
        return out;
    };
    return gather(map_grid(q_grid, budget.threads, point));
}

SweepResult sweep_bounds(const ModelConfig &base, const std::vector<double> &p_grid,
                         const SweepBudget &budget, const std::vector<std::string> &kinds) {
    static const std::vector<std::string> kKnown = {"ub-sc1-dp", "ub-lnx", "ub-sc2-ln",
                                                    "ub-sc2",    "lb-sc2", "lb-r0",
                                                    "lb-r1",     "lb-r2"};
    std::vector<std::string> want = kinds;
    if (want.empty()) want = {"ub-sc1-dp", "ub-lnx", "ub-sc2-ln", "ub-sc2", "lb-sc2"};
    for (const std::string &k : want)
        if (std::find(kKnown.begin(), kKnown.end(), k) == kKnown.end())
            throw ConfigError("unknown curve kind: " + k);
    auto has = [&](const char *k) {
        return std::find(want.begin(), want.end(), k) != want.end();
    };
    int max_rate_order = -1;
    for (int k = 0; k <= 2; ++k)
        if (has(("lb-r" + std::to_string(k)).c_str())) max_rate_order = k;

    auto point = [&](double p) -> SweepResult {
        SweepResult out;
        ModelConfig cfg = base;
        set_bernoulli_harvest(cfg, p);
        const double q = parse_bsc_crossover(cfg);
        SystemModel model;
        try {
            model = model_from_config(cfg);
        } catch (const std::exception &e) {
            out.notes.push_back("p=" + std::to_string(p) + ": " + e.what());
            return out;
        }
        const DpOptions dpo;
        const double dp_tol_bits = dpo.inner_tol_nats / kLn2;
        if (has("ub-sc1-dp") || has("ub-lnx")) {
            try {
                const StateChannel chan = state_channel_from_model(model);
                if (has("ub-sc1-dp")) {
                    const DpTable dp = ub_sc1_dp(chan, budget.ub_dp_block, dpo);
                    out.points.push_back({"ub-sc1-dp", q, p, budget.ub_dp_block,
                                          dp.bits_per_use(budget.ub_dp_block), dp_tol_bits,
                                          0});
                }
                if (has("ub-lnx")) {
                    const DpTable ln = ub_lnx(chan, budget.ub_dp_block);
                    out.points.push_back({"ub-lnx", q, p, budget.ub_dp_block,
                                          ln.bits_per_use(budget.ub_dp_block), 0.0, 0});
                }
            } catch (const std::exception &e) {
                out.notes.push_back("p=" + std::to_string(p) + " ub-sc1-dp/ub-lnx: " +
                                    e.what());
            }
        }
        if (has("ub-sc2-ln")) {
            try {
                const EhDpResult sc2 = ub_sc2_ln(model, budget.ub_dp_block, dpo);
                out.points.push_back({"ub-sc2-ln", q, p, budget.ub_dp_block,
                                      sc2.bits_per_use, dp_tol_bits, 0});
            } catch (const std::exception &e) {
                out.notes.push_back("p=" + std::to_string(p) + " ub-sc2-ln: " + e.what());
            }
        }
        if (has("ub-sc2")) {
            try {
                DirInfoOptions dio;
                const DirInfoResult di = ub_sc2_block(model, budget.ub_dirinfo_block, dio);
                out.points.push_back({"ub-sc2", q, p, budget.ub_dirinfo_block,
                                      di.bits_per_use + di.truncation_bits,
                                      dio.tol_bits + di.truncation_bits, 0});
            } catch (const std::exception &e) {
                out.notes.push_back("p=" + std::to_string(p) + " ub-sc2: " + e.what());
            }
        }
        if (has("lb-sc2")) {
            try {
                BlockBoundOptions bbo;
                const LbResult lb = lb_sc2_block(model, budget.lb_block, bbo);
                out.points.push_back({"lb-sc2", q, p, budget.lb_block, lb.bits_per_use,
                                      bbo.ba_tol_bits, 0});
            } catch (const std::exception &e) {
                out.notes.push_back("p=" + std::to_string(p) + " lb-sc2: " + e.what());
            }
        }
        if (max_rate_order >= 0) {
            SurrogateFsc fsc;
            bool fsc_ok = true;
            try {
                SurrogateOptions so;
                so.memory_packets = 1;
                fsc = build_fsc_sc2(model, so);
            } catch (const std::exception &e) {
                out.notes.push_back("p=" + std::to_string(p) + " lb-r*: " + e.what());
                fsc_ok = false;
            }
            MarkovInputProcess carry = MarkovInputProcess::uniform(fsc_ok ? fsc.num_inputs : 1, 0);
            double carry_rate = -1.0;
            for (int k = 0; fsc_ok && k <= max_rate_order; ++k) {
                const std::string kind = "lb-r" + std::to_string(k);
                try {
                    GbaaOptions go;
                    go.order = k;
                    go.iterations = budget.gbaa_iterations;
                    go.seed = budget.seed;
                    go.rate_path_length = budget.rate_length;
                    if (carry.order <= k && carry_rate >= 0.0) go.init = lift_order(carry, k);
                    const GbaaResult r = gbaa_optimize(fsc, go);
                    if (has(kind.c_str()))
                        out.points.push_back({kind, q, p,
                                              static_cast<int>(budget.rate_length),
                                              r.best.rate_bits, r.best.stderr_bits,
                                              budget.seed});
                    if (r.best.rate_bits > carry_rate) {
                        carry = r.best.input;
                        carry_rate = r.best.rate_bits;
                    }
                } catch (const std::exception &e) {
                    out.notes.push_back("p=" + std::to_string(p) + " " + kind + ": " +
                                        e.what());
                }
            }
        }
        return out;
    };
    return gather(map_grid(p_grid, budget.threads, point));
}

std::string curves_to_csv(const SweepResult &sweep, const std::string &fingerprint) {
    auto fmt = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.12g", v);
        return std::string(buf);
    };
    std::string out = "kind,q,p,N,bits,tolerance,seed,fingerprint\n";
    for (const CurvePoint &pt : sweep.points) {
        out += pt.kind;
        out += ',';
        out += fmt(pt.q);
        out += ',';
        out += fmt(pt.p);
        out += ',';
        out += std::to_string(pt.block_length);
        out += ',';
        out += fmt(pt.bits);
        out += ',';
        out += fmt(pt.tolerance);
        out += ',';
        out += std::to_string(pt.seed);
        out += ',';
        out += fingerprint;
        out += '\n';
    }
    return out;
}

} // namespace ehcap
