#pragma once

#include <cstdint>
#include <vector>

#include "ehcap/fsc.hpp"

namespace ehcap {

struct SimulatedPath {
    std::vector<int> inputs;
    std::vector<int> outputs;
    std::vector<int> states; // z_1 .. z_{N+1}
};

SimulatedPath simulate_path(const SurrogateFsc &fsc, const MarkovInputProcess &input,
                            std::int64_t length, std::uint64_t seed);

// Per-step log2 contributions of the three sample entropies along one path:
// -log p(v_n | past), -log p(y_n | y-past), -log p(v_n, y_n | pair past).
// The output and pair terms come from forward passes over the hidden state
// with per-step renormalization.
struct SampleEntropySteps {
    std::vector<double> input_bits;
    std::vector<double> output_bits;
    std::vector<double> joint_bits;
};

SampleEntropySteps sample_entropy_steps(const SurrogateFsc &fsc,
                                        const MarkovInputProcess &input,
                                        const SimulatedPath &path);

struct RateEstimate {
    double rate_bits = 0.0;       // h_in + h_out - h_joint
    double stderr_bits = 0.0;     // from block estimates
    double input_entropy_bits = 0.0;
    double output_entropy_bits = 0.0;
    double joint_entropy_bits = 0.0;
    std::int64_t length = 0;
    int blocks = 0;
    std::uint64_t seed = 0;
};

struct RateOptions {
    std::int64_t length = 1000000;
    int blocks = 20;
    std::uint64_t seed = 1;
    bool certified = false; // an ergodicity certificate was obtained
    bool force = false;     // proceed without one
};

// Sample-entropy information rate estimate.  Requires opts.certified or
// opts.force, else throws NoErgodicityCertificate.
RateEstimate estimate_info_rate(const SurrogateFsc &fsc, const MarkovInputProcess &input,
                                const RateOptions &opts);

// Exact (1/N) I(V^N; Y^N) for short blocks.  H(Y^N) is enumerated over output
// sequences; H(Y^N | V^N) uses a merged forward dynamic program over the
// posterior state vector, whose correctness is cross-checked in tests against
// plain enumeration.  Budget counts DP nodes and enumeration leaves.
struct ExactMiOptions {
    std::uint64_t node_budget = 2000000; // max merged nodes per level
    double key_quantum = 0x1.0p-40;      // posterior key quantization
};

double exact_block_mi(const SurrogateFsc &fsc, const MarkovInputProcess &input,
                      int block_length, const ExactMiOptions &opts = {});

} // namespace ehcap
