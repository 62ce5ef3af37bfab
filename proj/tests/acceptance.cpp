// End-to-end acceptance checks for the ehcap library and CLI.  Each check
// prints one PASS/FAIL line; the process exits with the number of failures.
//
// Reference values that are not closed forms are reproduced here by
// independent oracles: a coordinate grid-ascent maximizer of the block
// directed information (check 3), a grid-search dynamic program (check 5),
// and a transitive-closure reachability analysis (check 9).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <sys/wait.h>

#include "ehcap/bounds.hpp"
#include "ehcap/config.hpp"
#include "ehcap/ergodicity.hpp"
#include "ehcap/errors.hpp"
#include "ehcap/fsc.hpp"
#include "ehcap/inforate.hpp"
#include "ehcap/model.hpp"
#include "ehcap/optimize.hpp"
#include "ehcap/prob.hpp"

namespace {

using namespace ehcap;

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fixture(const std::string &name) {
    return std::string(EHCAP_FIXTURE_DIR) + "/" + name;
}

struct CheckResult {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------------------
// Check 1: memoryless capacity solver against the closed form for a binary
// symmetric channel, with a wall-clock budget.
CheckResult check_memoryless_reference() {
    constexpr double kValueTol = 1e-5;
    constexpr double kTimeBudget = 1.0; // seconds
    const double q = 0.1;
    double t0 = now_seconds();
    BaResult ba = ba_dmc_capacity({{1 - q, q}, {q, 1 - q}});
    double dt = now_seconds() - t0;
    double expect = 0.531004; // 1 - H2(0.1), rounded
    bool ok = std::abs(ba.capacity_bits - expect) <= kValueTol && dt < kTimeBudget;
    char buf[160];
    std::snprintf(buf, sizeof buf, "capacity %.8f vs %.6f, %.3fs",
                  ba.capacity_bits, expect, dt);
    return {ok, buf};
}

// ---------------------------------------------------------------------------
// Check 2: zero-battery closed form at q = 0, and its reproduction by the
// block achievability program on the zero-capacity-battery variant.
CheckResult check_zero_battery() {
    constexpr double kClosedFormTol = 1e-6;
    constexpr double kBlockTol = 1e-6;
    double zb = zero_battery_capacity(0.0);
    bool ok1 = std::abs(zb - 0.321928) <= kClosedFormTol;

    ModelConfig cfg = ModelConfig::parse_file(fixture("fig3.cfg"));
    set_bsc_crossover(cfg, 0.0);
    cfg.set("battery_cap", "0");
    SystemModel model = model_from_config(cfg);
    BlockBoundOptions opts;
    opts.ba_tol_bits = 1e-8;
    LbResult lb = lb_sc2_block(model, 1, opts);
    bool ok2 = std::abs(lb.bits_per_use - zb) <= kBlockTol;

    char buf[160];
    std::snprintf(buf, sizeof buf, "closed form %.9f, one-step block %.9f",
                  zb, lb.bits_per_use);
    return {ok1 && ok2, buf};
}

// ---------------------------------------------------------------------------
// Check 3: long-horizon per-state relaxation value and the block
// directed-information program.  The block program at horizon 16 is expected
// to exhaust its default trajectory budget; the horizon-8 value is then
// validated against an independent coordinate grid-ascent maximizer of
// H(Y^N) - N*H2(q) over causal conditionings p(x_n | x^{n-1}, e^n) with the
// battery feasibility constraint (full initial battery, unit store-first
// battery, binary inputs).
struct GridAscentOracle {
    int N;
    double q, pe;
    std::unordered_map<unsigned, double> theta; // free coordinates only
    std::vector<double> M; // M[y * 2^N + x] = prod_n p(y_n | x_n)

    static unsigned key(int n, unsigned xp, unsigned ep) {
        return (xp << 20) | (ep << 8) | static_cast<unsigned>(n);
    }

    GridAscentOracle(int N_, double q_, double pe_) : N(N_), q(q_), pe(pe_) {
        struct Node {
            int n;
            unsigned xp, ep;
            int b;
        };
        std::vector<Node> stack{{0, 0, 0, 1}};
        while (!stack.empty()) {
            Node nd = stack.back();
            stack.pop_back();
            if (nd.n == N) continue;
            for (int e = 0; e < 2; ++e) {
                unsigned ep = (nd.ep << 1) | static_cast<unsigned>(e);
                int s = std::min(nd.b + e, 1);
                if (s == 1) theta.emplace(key(nd.n + 1, nd.xp, ep), 0.5);
                for (int x = 0; x <= s; ++x)
                    stack.push_back(
                        {nd.n + 1, (nd.xp << 1) | static_cast<unsigned>(x), ep, s - x});
            }
        }
        int W = 1 << N;
        M.assign(static_cast<std::size_t>(W) * W, 0.0);
        for (int y = 0; y < W; ++y)
            for (int x = 0; x < W; ++x) {
                double v = 1.0;
                for (int n = 0; n < N; ++n) {
                    int yb = (y >> n) & 1, xb = (x >> n) & 1;
                    v *= (yb == xb) ? 1 - q : q;
                }
                M[static_cast<std::size_t>(y) * W + x] = v;
            }
    }

    // Input-word weights with the chosen coordinate split out at 0 and 1.
    void weights(unsigned coord, std::vector<double> &w0,
                 std::vector<double> &w1) const {
        int W = 1 << N;
        w0.assign(W, 0.0);
        w1.assign(W, 0.0);
        struct Node {
            int n;
            unsigned xp, ep;
            int b;
            double w;
            int branch; // -1 none, else the coordinate's value on this path
        };
        std::vector<Node> stack{{0, 0, 0, 1, 1.0, -1}};
        while (!stack.empty()) {
            Node nd = stack.back();
            stack.pop_back();
            if (nd.n == N) {
                if (nd.branch != 1) w0[nd.xp] += nd.w;
                if (nd.branch != 0) w1[nd.xp] += nd.w;
                continue;
            }
            for (int e = 0; e < 2; ++e) {
                unsigned ep = (nd.ep << 1) | static_cast<unsigned>(e);
                double we = nd.w * (e ? pe : 1 - pe);
                int s = std::min(nd.b + e, 1);
                unsigned k = key(nd.n + 1, nd.xp, ep);
                if (s == 0) {
                    stack.push_back({nd.n + 1, nd.xp << 1, ep, 0, we, nd.branch});
                } else if (k == coord) {
                    stack.push_back({nd.n + 1, nd.xp << 1, ep, 1, we, 0});
                    stack.push_back({nd.n + 1, (nd.xp << 1) | 1u, ep, 0, we, 1});
                } else {
                    double t = theta.at(k);
                    if (1 - t > 0)
                        stack.push_back(
                            {nd.n + 1, nd.xp << 1, ep, 1, we * (1 - t), nd.branch});
                    if (t > 0)
                        stack.push_back(
                            {nd.n + 1, (nd.xp << 1) | 1u, ep, 0, we * t, nd.branch});
                }
            }
        }
    }

    double ascend(int max_sweeps, double tol_bits) {
        int W = 1 << N;
        std::vector<double> w0, w1, p0(W), p1(W);
        std::vector<unsigned> keys;
        keys.reserve(theta.size());
        for (const auto &kv : theta) keys.push_back(kv.first);
        std::sort(keys.begin(), keys.end());
        double last = -1.0;
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            double value = -1.0;
            for (unsigned k : keys) {
                weights(k, w0, w1);
                for (int y = 0; y < W; ++y) {
                    const double *row = &M[static_cast<std::size_t>(y) * W];
                    double a = 0, b = 0;
                    for (int x = 0; x < W; ++x) {
                        a += row[x] * w0[x];
                        b += row[x] * w1[x];
                    }
                    p0[y] = a;
                    p1[y] = b;
                }
                double best = -1.0, arg = theta[k];
                for (int g = 0; g <= 100; ++g) {
                    double t = g * 0.01, h = 0.0;
                    for (int y = 0; y < W; ++y) {
                        double p = (1 - t) * p0[y] + t * p1[y];
                        if (p > 0) h -= p * std::log2(p);
                    }
                    if (h > best) {
                        best = h;
                        arg = t;
                    }
                }
                theta[k] = arg;
                value = best;
            }
            if (last >= 0 && value - last < tol_bits) {
                last = value;
                break;
            }
            last = value;
        }
        return (last - N * binary_entropy(q)) / N; // bits per use
    }
};

CheckResult check_directed_info_block() {
    constexpr double kRelaxTol = 1e-3;
    constexpr double kRelaxTimeBudget = 10.0; // seconds
    constexpr double kOracleTol = 1e-2;
    constexpr double kBigBlockTol = 3e-3;

    ModelConfig cfg = ModelConfig::parse_file(fixture("fig45.cfg"));
    SystemModel model = model_from_config(cfg);

    double t0 = now_seconds();
    EhDpResult relax = ub_sc2_ln(model, 10000);
    double dt = now_seconds() - t0;
    bool ok_relax =
        std::abs(relax.bits_per_use - 0.0492) <= kRelaxTol && dt < kRelaxTimeBudget;

    std::string path;
    bool ok_block = false;
    try {
        DirInfoResult r16 = ub_sc2_block(model, 16, {});
        ok_block = std::abs(r16.bits_per_use - 0.1432) <= kBigBlockTol;
        char buf[96];
        std::snprintf(buf, sizeof buf, "horizon 16 ran: %.6f", r16.bits_per_use);
        path = buf;
    } catch (const BudgetExceeded &) {
        DirInfoResult r8 = ub_sc2_block(model, 8, {});
        double q = model.dmc[0][1];
        double pe = model.harvest.row(0)[1];
        GridAscentOracle oracle(8, q, pe);
        double reference = oracle.ascend(50, 1e-9);
        ok_block = std::abs(r8.bits_per_use - reference) <= kOracleTol;
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "horizon 16 over budget; horizon 8 %.6f vs ascent %.6f",
                      r8.bits_per_use, reference);
        path = buf;
    }

    char buf[224];
    std::snprintf(buf, sizeof buf, "relaxation %.6f in %.2fs; %s",
                  relax.bits_per_use, dt, path.c_str());
    return {ok_relax && ok_block, buf};
}

// ---------------------------------------------------------------------------
// Check 4: with a noiseless channel the three per-state programs coincide.
CheckResult check_noiseless_collapse() {
    constexpr double kCollapseTol = 1e-9;
    ModelConfig cfg = ModelConfig::parse_file(fixture("fig45.cfg"));
    set_bsc_crossover(cfg, 0.0);
    SystemModel model = model_from_config(cfg);
    StateChannel chan = state_channel_from_model(model);

    const std::vector<int> horizons{1, 10, 100, 10000};
    DpTable dp = ub_sc1_dp(chan, 10000);
    DpTable lnx = ub_lnx(chan, 10000);

    double worst = 0.0;
    for (int n : horizons) {
        double a = dp.bits_per_use(n);
        double b = lnx.bits_per_use(n);
        double c = ub_sc2_ln(model, n).bits_per_use;
        double spread = std::max({a, b, c}) - std::min({a, b, c});
        worst = std::max(worst, spread);
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max spread %.3g over horizons 1..10000", worst);
    return {worst <= kCollapseTol, buf};
}

// ---------------------------------------------------------------------------
// Check 5: the per-state program on a two-state, two-input channel against an
// exhaustive per-step grid recursion (step 0.01 on the input simplex).
CheckResult check_dp_vs_grid() {
    constexpr double kGridTol = 1e-3;
    StateChannel chan;
    chan.num_inputs = 2;
    chan.num_outputs = 2;
    chan.num_states = 2;
    chan.feasible = {{0, 1}, {0, 1}};
    const double Y[2][2][2] = {{{0.9, 0.1}, {0.7, 0.3}}, {{0.2, 0.8}, {0.4, 0.6}}};
    const double T[2][2][2] = {{{0.8, 0.2}, {0.3, 0.7}}, {{0.5, 0.5}, {0.9, 0.1}}};
    chan.kernel.assign(
        2, std::vector<std::vector<std::vector<double>>>(
               2, std::vector<std::vector<double>>(2, std::vector<double>(2, 0.0))));
    for (int x = 0; x < 2; ++x)
        for (int s = 0; s < 2; ++s)
            for (int y = 0; y < 2; ++y)
                for (int t = 0; t < 2; ++t)
                    chan.kernel[x][s][y][t] = Y[x][s][y] * T[x][s][t];
    chan.validate();

    DpTable dp = ub_sc1_dp(chan, 3);

    // Grid recursion mirroring the same composite-output value iteration.
    std::vector<double> prev(2, 0.0), cur(2, 0.0);
    std::vector<double> grid_bits;
    for (int n = 1; n <= 3; ++n) {
        for (int s = 0; s < 2; ++s) {
            double best = -1e100;
            for (int g = 0; g <= 100; ++g) {
                double p1 = g * 0.01;
                double p[2] = {1 - p1, p1};
                double mix[4], value = 0.0;
                for (int col = 0; col < 4; ++col)
                    mix[col] = p[0] * chan.kernel[0][s][col / 2][col % 2] +
                               p[1] * chan.kernel[1][s][col / 2][col % 2];
                for (int x = 0; x < 2; ++x) {
                    if (p[x] <= 0) continue;
                    double cont = 0.0;
                    for (int col = 0; col < 4; ++col) {
                        double k = chan.kernel[x][s][col / 2][col % 2];
                        if (k > 0) value += p[x] * k * std::log(k / mix[col]);
                        cont += k * prev[col % 2];
                    }
                    value += p[x] * cont;
                }
                best = std::max(best, value);
            }
            cur[s] = best;
        }
        prev = cur;
        grid_bits.push_back(std::max(prev[0], prev[1]) / (n * kLn2));
    }

    double worst = 0.0;
    bool dominated = true;
    for (int n = 1; n <= 3; ++n) {
        double diff = dp.bits_per_use(n) - grid_bits[n - 1];
        worst = std::max(worst, std::abs(diff));
        if (diff < -1e-9) dominated = false; // grid explores a feasible subset
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max |dp - grid| = %.3g over horizons 1..3",
                  worst);
    return {worst <= kGridTol && dominated, buf};
}

// ---------------------------------------------------------------------------
// Check 6: block bounds combine consistently across split horizons: upper
// bounds are subadditive, achievable rates superadditive.
CheckResult check_block_additivity() {
    constexpr double kSlack = 1e-6;
    ModelConfig cfg = ModelConfig::parse_file(fixture("fig45.cfg"));
    SystemModel model = model_from_config(cfg);

    DirInfoOptions tight;
    tight.tol_bits = 1e-9;
    std::vector<double> ub(5, 0.0), lb(5, 0.0);
    for (int n = 1; n <= 4; ++n) {
        ub[n] = ub_sc2_block(model, n, tight).bits_per_use;
        lb[n] = lb_sc2_block(model, n, {}).bits_per_use;
    }

    bool ok = true;
    double worst_ub = -1e100, worst_lb = -1e100;
    for (int N = 2; N <= 4; ++N)
        for (int n = 1; n < N; ++n) {
            int m = N - n;
            double ub_violation = N * ub[N] - (n * ub[n] + m * ub[m]);
            double lb_violation = (n * lb[n] + m * lb[m]) - N * lb[N];
            worst_ub = std::max(worst_ub, ub_violation);
            worst_lb = std::max(worst_lb, lb_violation);
            if (ub_violation > kSlack || lb_violation > kSlack) ok = false;
        }
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "worst split excess: upper %.3g, achievable %.3g", worst_ub,
                  worst_lb);
    return {ok, buf};
}

// ---------------------------------------------------------------------------
// Check 7: the simulation estimate agrees with the bracket formed by the last
// exact per-step increments, within three standard errors.
CheckResult check_estimate_vs_exact() {
    constexpr double kIncrementTol = 1e-6;  // frozen reference for the increment
    constexpr double kTimeBudget = 60.0;    // seconds
    double t0 = now_seconds();

    ModelConfig cfg = ModelConfig::parse_file(fixture("fig3.cfg"));
    set_bsc_crossover(cfg, 0.0);
    SystemModel model = model_from_config(cfg);
    SurrogateFsc fsc = build_fsc_sc1(model, {});
    MarkovInputProcess iud = MarkovInputProcess::uniform(fsc.num_inputs, 0);

    double v10 = exact_block_mi(fsc, iud, 10);
    double v11 = exact_block_mi(fsc, iud, 11);
    double v12 = exact_block_mi(fsc, iud, 12);
    double d11 = 11 * v11 - 10 * v10;
    double d12 = 12 * v12 - 11 * v11;
    double gap = std::abs(d12 - d11);
    bool ok_ref = std::abs(d12 - 0.36656854) <= kIncrementTol;

    RateOptions opts;
    opts.length = 1000000;
    opts.blocks = 20;
    opts.seed = 1;
    opts.certified = check_sufficient_conditions(model, fsc, &iud).certified();
    RateEstimate est = estimate_info_rate(fsc, iud, opts);

    double lo = d12 - gap - 3 * est.stderr_bits;
    double hi = d12 + gap + 3 * est.stderr_bits;
    double dt = now_seconds() - t0;
    bool ok = ok_ref && est.rate_bits >= lo && est.rate_bits <= hi &&
              dt < kTimeBudget;
    char buf[192];
    std::snprintf(buf, sizeof buf,
                  "estimate %.6f (se %.6f) vs bracket [%.6f, %.6f], %.1fs",
                  est.rate_bits, est.stderr_bits, lo, hi, dt);
    return {ok, buf};
}

// ---------------------------------------------------------------------------
// Check 8: the rate sweep keeps its orderings: i.u.d. rate below the
// optimized rates, optimized rates monotone in input order, and everything
// between the zero-battery rate and the memoryless capacity.
CheckResult check_rate_sweep_orderings() {
    ModelConfig cfg = ModelConfig::parse_file(fixture("fig3.cfg"));
    SweepBudget budget;
    budget.max_input_order = 2;
    budget.seed = 1;
    const std::vector<double> grid{0.0, 0.1, 0.2, 0.3, 0.5};
    SweepResult sweep = sweep_rates(cfg, grid, budget);

    std::map<double, std::map<std::string, CurvePoint>> by_q;
    for (const auto &pt : sweep.points) by_q[pt.q][pt.kind] = pt;

    const char *chain[] = {"ir-iud", "ir-r0", "ir-r1", "ir-r2"};
    bool ok = true;
    std::string bad;
    for (const auto &[q, kinds] : by_q) {
        for (int i = 0; i + 1 < 4; ++i) {
            const CurvePoint &a = kinds.at(chain[i]);
            const CurvePoint &b = kinds.at(chain[i + 1]);
            if (b.bits < a.bits - 2 * (a.tolerance + b.tolerance)) {
                ok = false;
                bad += " order@q=" + std::to_string(q);
            }
        }
        for (const char *k : chain) {
            const CurvePoint &p = kinds.at(k);
            if (p.bits < zero_battery_capacity(q) - 2 * p.tolerance) {
                ok = false;
                bad += " floor@q=" + std::to_string(q);
            }
            if (p.bits > bsc_capacity(q) + 1e-9) {
                ok = false;
                bad += " ceiling@q=" + std::to_string(q);
            }
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu points over 5 crossovers%s",
                  sweep.points.size(), ok ? "" : bad.c_str());
    return {ok, buf};
}

// ---------------------------------------------------------------------------
// Check 9: contraction coefficient submultiplicativity, certificates on the
// bundled models, and support reachability against a transitive closure.
std::vector<std::vector<double>> random_stochastic(Rng &rng, int n,
                                                   double zero_rate) {
    std::vector<std::vector<double>> P(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
        double total = 0.0;
        for (int j = 0; j < n; ++j) {
            if (rng.uniform() < zero_rate) continue;
            P[i][j] = rng.uniform();
            total += P[i][j];
        }
        if (total == 0.0) {
            P[i][static_cast<int>(rng.uniform() * n) % n] = 1.0;
            total = 1.0;
        }
        for (int j = 0; j < n; ++j) P[i][j] /= total;
    }
    return P;
}

std::vector<std::vector<double>> matmul(const std::vector<std::vector<double>> &A,
                                        const std::vector<std::vector<double>> &B) {
    int n = static_cast<int>(A.size());
    std::vector<std::vector<double>> C(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            if (A[i][k] > 0)
                for (int j = 0; j < n; ++j) C[i][j] += A[i][k] * B[k][j];
    return C;
}

struct SupportReference {
    bool irreducible = false;
    std::vector<int> support;
    int num_classes = 0;
};

SupportReference support_reference(const std::vector<std::vector<double>> &P,
                                   const std::vector<double> &initial) {
    int n = static_cast<int>(P.size());
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) {
        reach[i][i] = true;
        for (int j = 0; j < n; ++j)
            if (P[i][j] > 0) reach[i][j] = true;
    }
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            if (reach[i][k])
                for (int j = 0; j < n; ++j)
                    if (reach[k][j]) reach[i][j] = true;

    std::vector<int> class_of(n, -1);
    int num_classes_all = 0;
    for (int i = 0; i < n; ++i) {
        if (class_of[i] >= 0) continue;
        bool recurrent = true;
        for (int j = 0; j < n; ++j)
            if (reach[i][j] && !reach[j][i]) recurrent = false;
        if (!recurrent) continue;
        for (int j = 0; j < n; ++j)
            if (reach[i][j] && reach[j][i]) class_of[j] = num_classes_all;
        ++num_classes_all;
    }

    std::vector<bool> class_hit(num_classes_all, false);
    for (int i = 0; i < n; ++i) {
        if (initial[i] <= 0) continue;
        for (int j = 0; j < n; ++j)
            if (reach[i][j] && class_of[j] >= 0) class_hit[class_of[j]] = true;
    }
    SupportReference ref;
    for (int c = 0; c < num_classes_all; ++c)
        if (class_hit[c]) ++ref.num_classes;
    for (int j = 0; j < n; ++j)
        if (class_of[j] >= 0 && class_hit[class_of[j]]) ref.support.push_back(j);
    ref.irreducible = ref.num_classes == 1;
    return ref;
}

CheckResult check_ergodicity_toolkit() {
    constexpr double kSubmultSlack = 1e-12;
    Rng rng(7);
    int failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        int n = 2 + static_cast<int>(rng.uniform() * 5) % 5;
        auto P = random_stochastic(rng, n, 0.5);
        auto Q = random_stochastic(rng, n, 0.5);
        if (dobrushin_delta(matmul(P, Q)) >
            dobrushin_delta(P) * dobrushin_delta(Q) + kSubmultSlack)
            ++failures;
    }
    bool ok_delta = failures == 0;

    ModelConfig cfg = ModelConfig::parse_file(fixture("fig3.cfg"));
    SurrogateFsc fsc = build_fsc_sc1(model_from_config(cfg), {});
    ErgodicityReport good = check_indecomposable(fsc, 64);
    bool ok_good = good.verdict == ErgodicityVerdict::CertifiedIndecomposable;

    ModelConfig bad_cfg = ModelConfig::parse_text(
        "scenario = eh-sc1\n"
        "rule = additive\n"
        "battery_cap = 1\n"
        "input_alphabet = 0 1\n"
        "cost = 0 1\n"
        "dmc = bsc 0.1\n"
        "harvest_alphabet = 0 1\n"
        "harvest_order = 1\n"
        "harvest_row = 0 1\n"
        "harvest_row = 1 0\n"
        "harvest_prehistory = 0\n");
    SurrogateFsc bad_fsc = build_fsc_sc1(model_from_config(bad_cfg), {});
    ErgodicityReport bad = check_indecomposable(bad_fsc, 64);
    bool ok_bad = !bad.certified() && bad.decomposability_witness;

    Rng rng2(11);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        int n = 2 + static_cast<int>(rng2.uniform() * 11) % 11;
        auto P = random_stochastic(rng2, n, 0.75);
        std::vector<double> initial(n, 0.0);
        int support_size = 1 + static_cast<int>(rng2.uniform() * n) % n;
        for (int k = 0; k < support_size; ++k)
            initial[static_cast<int>(rng2.uniform() * n) % n] = 1.0;
        double total = 0.0;
        for (double v : initial) total += v;
        for (double &v : initial) v /= total;

        SupportCheck got = irreducible_on_support(P, initial);
        SupportReference want = support_reference(P, initial);
        if (got.irreducible != want.irreducible ||
            got.num_recurrent_classes != want.num_classes ||
            got.support != want.support)
            ++mismatches;
    }
    bool ok_support = mismatches == 0;

    char buf[192];
    std::snprintf(buf, sizeof buf,
                  "submult failures %d/1000; certificates %s/%s; support "
                  "mismatches %d/200",
                  failures, ok_good ? "ok" : "BAD", ok_bad ? "ok" : "BAD",
                  mismatches);
    return {ok_delta && ok_good && ok_bad && ok_support, buf};
}

// ---------------------------------------------------------------------------
// Check 10: a stochastic CLI command rerun with the same seed and thread
// count produces byte-identical output.
std::string run_cli(const std::string &args, int &exit_code) {
    std::string cmd = std::string(EHCAP_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE *pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        exit_code = -1;
        return {};
    }
    std::string out;
    char chunk[4096];
    std::size_t got;
    while ((got = fread(chunk, 1, sizeof chunk, pipe)) > 0) out.append(chunk, got);
    int status = pclose(pipe);
    exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

CheckResult check_cli_determinism() {
    std::string args = "rate " + fixture("fig3.cfg") +
                       " --input iud --length 200000 --blocks 10 --seed 7";
    int code1 = -1, code2 = -1;
    std::string a = run_cli(args, code1);
    std::string b = run_cli(args, code2);
    bool ok = code1 == 0 && code2 == 0 && !a.empty() && a == b;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu bytes, exit %d/%d, %s", a.size(), code1,
                  code2, a == b ? "identical" : "DIFFER");
    return {ok, buf};
}

} // namespace

int main() {
    setvbuf(stdout, nullptr, _IONBF, 0);
    struct Entry {
        const char *name;
        CheckResult (*fn)();
    };
    const Entry entries[] = {
        {"memoryless capacity reference", check_memoryless_reference},
        {"zero-battery closed form and block match", check_zero_battery},
        {"directed-information block program", check_directed_info_block},
        {"noiseless per-state collapse", check_noiseless_collapse},
        {"per-state program vs grid recursion", check_dp_vs_grid},
        {"block bound additivity across splits", check_block_additivity},
        {"simulation estimate vs exact bracket", check_estimate_vs_exact},
        {"rate sweep orderings", check_rate_sweep_orderings},
        {"ergodicity toolkit", check_ergodicity_toolkit},
        {"CLI determinism", check_cli_determinism},
    };
    int failures = 0;
    int index = 0;
    for (const Entry &entry : entries) {
        ++index;
        CheckResult result;
        try {
            result = entry.fn();
        } catch (const std::exception &e) {
            result.pass = false;
            result.detail = std::string("exception: ") + e.what();
        }
        if (!result.pass) ++failures;
        std::printf("%s  C%-2d %s (%s)\n", result.pass ? "PASS" : "FAIL", index,
                    entry.name, result.detail.c_str());
    }
    return failures;
}
