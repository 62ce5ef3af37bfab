#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ehcap/bounds.hpp"
#include "ehcap/config.hpp"
#include "ehcap/errors.hpp"
#include "ehcap/model.hpp"
#include "ehcap/optimize.hpp"
#include "ehcap/prob.hpp"

using namespace ehcap;

namespace {

ModelConfig fig45_cfg() {
    return ModelConfig::parse_file(std::string(EHCAP_FIXTURE_DIR) + "/fig45.cfg");
}

ModelConfig fig3_cfg() {
    return ModelConfig::parse_file(std::string(EHCAP_FIXTURE_DIR) + "/fig3.cfg");
}

} // namespace

TEST_CASE("zero-battery closed form equals the two-row channel capacity") {
    CHECK(zero_battery_capacity(0.0) == doctest::Approx(0.3219280948873624).epsilon(1e-12));
    CHECK(zero_battery_capacity(0.1) == doctest::Approx(0.1475894182010089).epsilon(1e-12));
    CHECK(zero_battery_capacity(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    for (double q : {0.0, 0.05, 0.1, 0.25, 0.4}) {
        BaResult ba = ba_dmc_capacity({{1.0 - q, q}, {0.5, 0.5}}, 1e-9);
        CHECK(zero_battery_capacity(q) == doctest::Approx(ba.capacity_bits).epsilon(2e-8));
    }
    // Monotone in the crossover on [0, 1/2].
    double prev = 1.0;
    for (double q = 0.0; q <= 0.5001; q += 0.05) {
        const double v = zero_battery_capacity(q);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
}

TEST_CASE("per-state recursions: reference values at depth ten thousand") {
    SystemModel m = model_from_config(fig45_cfg());
    StateChannel chan = state_channel_from_model(m);
    DpTable dp = ub_sc1_dp(chan, 10000);
    CHECK(dp.bits_per_use(10000) == doctest::Approx(0.048652).epsilon(2e-5));
    DpTable ln = ub_lnx(chan, 10000);
    CHECK(ln.bits_per_use(10000) == doctest::Approx(0.049466).epsilon(2e-5));
    EhDpResult sc2 = ub_sc2_ln(m, 10000);
    CHECK(sc2.bits_per_use == doctest::Approx(0.049158).epsilon(2e-5));

    // Table shape: row 0 is the zero terminal condition.
    REQUIRE(dp.values_nats.size() == 10001);
    for (double v : dp.values_nats[0]) CHECK(v == 0.0);
}

TEST_CASE("per-state recursion values are subadditive across splits") {
    ModelConfig cfg = fig45_cfg();
    set_bernoulli_harvest(cfg, 0.3);
    SystemModel m = model_from_config(cfg);
    StateChannel chan = state_channel_from_model(m);
    DpTable dp = ub_sc1_dp(chan, 64);
    for (int n : {1, 2, 5, 13, 32}) {
        for (int mm : {1, 3, 8, 32}) {
            if (n + mm > 64) continue;
            const double whole = (n + mm) * dp.bits_per_use(n + mm);
            const double parts = n * dp.bits_per_use(n) + mm * dp.bits_per_use(mm);
            CHECK(whole <= parts + 1e-9);
        }
    }
    for (int n = 2; n <= 64; ++n) CHECK(dp.bits_per_use(n) <= dp.bits_per_use(1) + 1e-12);
}

TEST_CASE("log-sum-exp relaxation dominates the exact maximization") {
    ModelConfig cfg = fig45_cfg();
    for (double p : {0.01, 0.3, 0.7}) {
        set_bernoulli_harvest(cfg, p);
        SystemModel m = model_from_config(cfg);
        StateChannel chan = state_channel_from_model(m);
        DpTable dp = ub_sc1_dp(chan, 50);
        DpTable ln = ub_lnx(chan, 50);
        for (int n : {1, 5, 20, 50})
            CHECK(ln.bits_per_use(n) >= dp.bits_per_use(n) - 1e-9);
    }
}

TEST_CASE("noiseless channel collapses all three recursions") {
    ModelConfig cfg = fig45_cfg();
    set_bsc_crossover(cfg, 0.0);
    set_bernoulli_harvest(cfg, 0.3);
    SystemModel m = model_from_config(cfg);
    StateChannel chan = state_channel_from_model(m);
    for (int N : {1, 10, 100}) {
        const double a = ub_sc1_dp(chan, N).bits_per_use(N);
        const double b = ub_lnx(chan, N).bits_per_use(N);
        const double c = ub_sc2_ln(m, N).bits_per_use;
        CHECK(std::max({a, b, c}) - std::min({a, b, c}) <= 1e-9);
    }
}

TEST_CASE("strategy-word upper bound matches the recursion at short blocks") {
    SystemModel m = model_from_config(fig45_cfg());
    StateChannel chan = state_channel_from_model(m);
    BlockBoundOptions tight;
    tight.ba_tol_bits = 1e-9;
    for (int N : {1, 2}) {
        const double words = ub_fscx_block(chan, N, tight);
        const double rec = ub_sc1_dp(chan, N).bits_per_use(N);
        CHECK(words == doctest::Approx(rec).epsilon(1e-7));
    }
}

TEST_CASE("achievable block bound: strategy enumeration and references") {
    SystemModel m = model_from_config(fig45_cfg());
    const std::uint64_t want_strategies[] = {2, 12, 576};
    const std::uint64_t want_rows[] = {2, 10, 448};
    const double want_bits[] = {0.000123889, 0.000299323, 0.000513376};
    for (int N : {1, 2, 3}) {
        LbResult lb = lb_sc2_block(m, N);
        CHECK(lb.num_strategies == want_strategies[N - 1]);
        CHECK(lb.num_rows == want_rows[N - 1]);
        CHECK(lb.bits_per_use == doctest::Approx(want_bits[N - 1]).epsilon(5e-6));
    }

    BlockBoundOptions small;
    small.alphabet_cap = 100;
    CHECK_THROWS_AS(lb_sc2_block(m, 3, small), BudgetExceeded);
}

TEST_CASE("achievable block bound reduces to the zero-battery form") {
    ModelConfig cfg = fig45_cfg();
    cfg.set("rule", "additive");
    cfg.set("battery_cap", "0");
    set_bernoulli_harvest(cfg, 0.5);
    SystemModel m = model_from_config(cfg);
    LbResult lb = lb_sc2_block(m, 1);
    CHECK(lb.num_strategies == 2);
    CHECK(lb.bits_per_use == doctest::Approx(zero_battery_capacity(0.1)).epsilon(2e-6));
}

TEST_CASE("block program wrapper agrees with the direct call") {
    ModelConfig cfg = fig45_cfg();
    set_bernoulli_harvest(cfg, 0.3);
    SystemModel m = model_from_config(cfg);
    DirInfoResult a = ub_sc2_block(m, 2, {});
    DirInfoResult b = extended_ba_directed_info(m, 2, {});
    CHECK(a.bits_per_use == doctest::Approx(b.bits_per_use).epsilon(1e-12));
}

TEST_CASE("rate sweep: closed forms, kinds, and thread-count invariance") {
    const std::vector<double> grid{0.0, 0.25};
    SweepBudget budget;
    budget.rate_length = 20000;
    budget.gbaa_iterations = 2;
    budget.max_input_order = 1;
    budget.seed = 5;
    budget.threads = 1;
    SweepResult one = sweep_rates(fig3_cfg(), grid, budget);
    budget.threads = 4;
    SweepResult four = sweep_rates(fig3_cfg(), grid, budget);

    REQUIRE(one.points.size() == four.points.size());
    for (std::size_t i = 0; i < one.points.size(); ++i) {
        CHECK(one.points[i].kind == four.points[i].kind);
        CHECK(one.points[i].bits == four.points[i].bits); // bitwise equal
    }

    std::set<std::string> kinds;
    for (const CurvePoint &pt : one.points) {
        kinds.insert(pt.kind);
        if (pt.kind == "bsc-capacity")
            CHECK(pt.bits == doctest::Approx(bsc_capacity(pt.q)).epsilon(1e-12));
        if (pt.kind == "zero-battery")
            CHECK(pt.bits == doctest::Approx(zero_battery_capacity(pt.q)).epsilon(1e-12));
        if (pt.kind == "ir-iud") {
            CHECK(pt.tolerance > 0.0);
            CHECK(pt.seed == 5);
        }
    }
    CHECK(kinds == std::set<std::string>{"bsc-capacity", "zero-battery", "ir-iud", "ir-r0",
                                         "ir-r1"});
}

TEST_CASE("bound sweep: kind selection, consistency gate, serialization") {
    ModelConfig cfg = fig45_cfg();
    SweepBudget budget;
    budget.ub_dp_block = 400;
    budget.ub_dirinfo_block = 3;
    budget.lb_block = 2;
    budget.threads = 2;

    CHECK_THROWS_AS(sweep_bounds(cfg, {0.3}, budget, {"ub-sc1-dp", "nonsense"}),
                    ConfigError);

    SweepResult only = sweep_bounds(cfg, {0.3}, budget, {"ub-lnx"});
    REQUIRE(only.points.size() == 1);
    CHECK(only.points[0].kind == "ub-lnx");
    CHECK(only.points[0].p == doctest::Approx(0.3));
    CHECK(only.points[0].q == doctest::Approx(0.1));

    SweepResult full = sweep_bounds(cfg, {0.2, 0.5}, budget, {});
    std::set<std::string> kinds;
    for (const CurvePoint &pt : full.points) kinds.insert(pt.kind);
    CHECK(kinds == std::set<std::string>{"ub-sc1-dp", "ub-lnx", "ub-sc2-ln", "ub-sc2",
                                         "lb-sc2"});
    for (double p : {0.2, 0.5}) {
        double min_ub = 1e9, max_lb = -1e9;
        for (const CurvePoint &pt : full.points) {
            if (pt.p != p) continue;
            if (pt.kind.rfind("ub-", 0) == 0) min_ub = std::min(min_ub, pt.bits);
            if (pt.kind.rfind("lb-", 0) == 0) max_lb = std::max(max_lb, pt.bits);
        }
        CHECK(min_ub >= max_lb - 1e-9);
    }

    const std::string csv = curves_to_csv(full, "deadbeef00000000");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "kind,q,p,N,bits,tolerance,seed,fingerprint");
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        ++rows;
        CHECK(line.find("deadbeef00000000") != std::string::npos);
        CHECK(std::count(line.begin(), line.end(), ',') == 7);
    }
    CHECK(rows == full.points.size());
}

TEST_CASE("bound sweep: optimized-rate curves ride the packet-informed model") {
    ModelConfig cfg = fig45_cfg();
    SweepBudget budget;
    budget.rate_length = 20000;
    budget.gbaa_iterations = 2;
    budget.seed = 9;
    budget.threads = 1;
    SweepResult res = sweep_bounds(cfg, {0.3}, budget, {"lb-r0", "lb-r1"});
    REQUIRE(res.points.size() == 2);
    CHECK(res.points[0].kind == "lb-r0");
    CHECK(res.points[1].kind == "lb-r1");
    CHECK(res.points[0].seed == 9);
    CHECK(res.points[0].tolerance > 0.0);
    // A longer input memory never hurts the optimized achievable rate by more
    // than the stochastic slack.
    CHECK(res.points[1].bits >=
          res.points[0].bits - 2 * (res.points[0].tolerance + res.points[1].tolerance));
}
