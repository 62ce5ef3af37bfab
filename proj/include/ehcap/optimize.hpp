#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "ehcap/fsc.hpp"
#include "ehcap/inforate.hpp"
#include "ehcap/model.hpp"

namespace ehcap {

struct BaResult {
    double capacity_bits = 0.0;
    std::vector<double> input_dist;
    int iterations = 0;
    double bracket_bits = 0.0; // final upper-lower gap
};

// Classic alternating-maximization capacity of a memoryless channel given as
// dense rows W[x][y].  Stops when the capacity sandwich (max over letters of
// the divergence to the output mixture, minus its input average) drops below
// tol bits.
BaResult ba_dmc_capacity(const std::vector<std::vector<double>> &W,
                         double tol_bits = 1e-6, int max_iter = 200000);

// Flat row-major variant for very large input alphabets (block strategy
// channels), avoiding per-row vector overhead.
BaResult ba_dmc_capacity(const std::vector<double> &rows, std::size_t num_inputs,
                         std::size_t num_outputs, double tol_bits = 1e-6,
                         int max_iter = 200000);

// max over p on the simplex of I(p; K) + sum_x p(x) linear[x], all in nats;
// K rows are conditional output distributions.  Same fixed point as the
// capacity iteration with the linear reward folded into the exponent.
struct ConcaveStepResult {
    double value_nats = 0.0;
    std::vector<double> input_dist;
};

ConcaveStepResult inner_concave_step(const std::vector<std::vector<double>> &K,
                                     const std::vector<double> &linear_nats,
                                     double tol_nats = 1e-10, int max_iter = 200000,
                                     const std::vector<double> *warm_start = nullptr);

// ---- Generalized stochastic ascent over Markov input processes ----

struct GbaaOptions {
    int order = 0;
    int iterations = 30;
    std::uint64_t seed = 1;
    std::int64_t t_path_length = 100000;  // per-iteration estimation path
    std::int64_t rate_path_length = 300000;
    int rate_blocks = 20;
    double kernel_floor = 1e-9;
    std::optional<MarkovInputProcess> init; // defaults to uniform
};

struct GbaaIterate {
    MarkovInputProcess input;
    double rate_bits = 0.0;
    double stderr_bits = 0.0;
};

struct GbaaResult {
    GbaaIterate best;
    std::vector<double> rate_trace;
    std::vector<double> stderr_trace;
};

// Stochastic ascent: per-transition values are conditional averages of the
// per-step information density along a fixed-seed path, the kernel update is
// exponentiated-value reweighting (floored and renormalized), and every
// iterate is re-scored with an independent rate estimate.  Returns the best
// cross-checked iterate, which by construction is never worse than the
// initial kernel's own estimate.
GbaaResult gbaa_optimize(const SurrogateFsc &fsc, const GbaaOptions &opts);

// ---- Extended alternating maximization for the full-observation bound ----

// Causal conditioning p(x_n | x^{n-1}, e^n) stored sparsely over reachable,
// feasible histories.  Keys pack the pair of prefixes in mixed radix.
struct CausalConditioning {
    int block_length = 0;
    // per level n (1-based: index n-1): history key -> distribution over X
    std::vector<std::map<std::uint64_t, std::vector<double>>> levels;
};

struct DirInfoOptions {
    double tol_bits = 1e-6;
    int max_sweeps = 400;
    // Hard budget on enumerated trajectory work per sweep.
    std::uint64_t trajectory_budget = 400000000ULL;
    // Keep only the highest-probability harvest words covering at least
    // 1 - harvest_mass_drop of the harvest law; 0 keeps everything.
    double harvest_mass_drop = 0.0;
};

struct DirInfoResult {
    double bits_per_use = 0.0;      // objective / N
    double truncation_bits = 0.0;   // upper bound on mass dropped, in bits/use
    int sweeps = 0;
    std::vector<double> objective_trace_bits; // per-use, monotone nondecreasing
    CausalConditioning conditioning;
};

// Maximizes the N-step directed information of the full-observation
// transmitter (initial battery full) over legal causal conditionings by
// sweeps of exact coordinate maximizations against the current posterior.
// The objective trace is monotone nondecreasing.
DirInfoResult extended_ba_directed_info(const SystemModel &model, int block_length,
                                        const DirInfoOptions &opts = {});

} // namespace ehcap
