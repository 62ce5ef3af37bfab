#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ehcap/config.hpp"
#include "ehcap/model.hpp"
#include "ehcap/optimize.hpp"

namespace ehcap {

// Backward dynamic program table for the per-state upper bounds.  Values are
// stored in nats; c[n][s] is the n-step value starting from state s.
struct DpTable {
    std::vector<std::vector<double>> values_nats; // (N+1) x |S|, row 0 zero
    std::vector<std::vector<std::vector<double>>> arg_dists; // per n, per s
    double bits_per_use(int n) const; // (1/n) max_s values[n][s] / ln 2
};

struct DpOptions {
    double inner_tol_nats = 1e-10;
    int inner_max_iter = 200000;
    bool keep_arg_dists = false;
};

// Per-state block upper bound via the state-feedback decomposition: each
// stage maximizes the one-step term plus the expected continuation.
DpTable ub_sc1_dp(const StateChannel &chan, int block_length, const DpOptions &opts = {});

// Entropy relaxation of the same recursion: log-sum-exp over feasible inputs
// of expected continuations (natural log internally).
DpTable ub_lnx(const StateChannel &chan, int block_length);

// Full-observation analogues over the overall state (packet history x energy
// state), with composite outputs (y, next packet, next state).  The reported
// value starts the recursion from the full-battery initial mixture.
struct EhDpResult {
    DpTable table;
    std::vector<double> initial; // pi over states from full battery
    double bits_per_use = 0.0;
};

EhDpResult ub_sc2_ln(const SystemModel &model, int block_length, const DpOptions &opts = {});

// Exhaustive block bounds over strategy alphabets.
struct BlockBoundOptions {
    std::uint64_t alphabet_cap = 2000000;
    double ba_tol_bits = 1e-6;
    int ba_max_iter = 200000;
};

// Upper bound: equivalent channel from causal state-feedback strategy words
// to (outputs, state trajectory), maximized over the initial state.
double ub_fscx_block(const StateChannel &chan, int block_length,
                     const BlockBoundOptions &opts = {});

// Achievable rate: strategies on harvest words, empty initial battery.
struct LbResult {
    double bits_per_use = 0.0;
    std::uint64_t num_strategies = 0; // before row dedup
    std::uint64_t num_rows = 0;       // after dedup
};

LbResult lb_sc2_block(const SystemModel &model, int block_length,
                      const BlockBoundOptions &opts = {});

// Full-observation upper bound (directed-information program).
DirInfoResult ub_sc2_block(const SystemModel &model, int block_length,
                           const DirInfoOptions &opts = {});

// ---- Figure sweeps ----

struct CurvePoint {
    std::string kind;
    double q = 0.0;
    double p = 0.0;
    int block_length = 0;
    double bits = 0.0;
    double tolerance = 0.0; // stderr or solver bracket; 0 for closed forms
    std::uint64_t seed = 0;
};

struct SweepResult {
    std::vector<CurvePoint> points;
    std::vector<std::string> notes;
};

struct SweepBudget {
    std::int64_t rate_length = 300000;
    int gbaa_iterations = 12;
    int max_input_order = 2;
    int ub_dp_block = 10000;
    int ub_dirinfo_block = 8;
    int lb_block = 3;
    std::uint64_t seed = 1;
    int threads = 1;
};

// Achievable-rate figure: closed forms plus the i.u.d. rate and optimized
// order-0..max_input_order rates on the state-feedback model, across a grid
// of crossover probabilities.  The config must use `dmc = bsc <q>`.
SweepResult sweep_rates(const ModelConfig &base, const std::vector<double> &q_grid,
                        const SweepBudget &budget);

// Bound-comparison figure: the dynamic-programming and block bounds across a
// grid of Bernoulli harvest rates at the config's fixed crossover.  `kinds`
// selects curves from {ub-sc1-dp, ub-lnx, ub-sc2-ln, ub-sc2, lb-sc2, lb-r0,
// lb-r1, lb-r2}; empty means the five bound kinds.
SweepResult sweep_bounds(const ModelConfig &base, const std::vector<double> &p_grid,
                         const SweepBudget &budget,
                         const std::vector<std::string> &kinds = {});

// CSV serialization (columns kind,q,p,N,bits,tolerance,seed,fingerprint).
std::string curves_to_csv(const SweepResult &sweep, const std::string &fingerprint);

} // namespace ehcap
