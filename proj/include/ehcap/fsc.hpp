#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ehcap/model.hpp"
#include "ehcap/policy.hpp"

namespace ehcap {

// Finite-state channel over the policy alphabet.  Hidden states are tuples
// (packet history, energy-state history); transitions are stored sparsely as
// (output, next state, probability) triples per (input, state) pair, with
// structurally impossible tuple transitions omitted.
struct SurrogateFsc {
    struct Trans {
        int y;
        int z2;
        double p;
    };

    int num_inputs = 0;  // |V|
    int num_outputs = 0; // |Y|
    int num_states = 0;  // |Z|

    std::vector<std::string> state_labels;
    std::vector<std::vector<Trans>> kernel; // index v * num_states + z
    std::vector<double> initial_state;      // distribution over states
    bool separable = false;                 // p(y,z'|v,z) = p(y|v,z) p(z'|v,z)

    PolicyAlphabet policies; // empty (size 0) for raw FSC-X inputs

    const std::vector<Trans> &slice(int v, int z) const {
        return kernel[static_cast<std::size_t>(v) * num_states + z];
    }

    // Dense caches derived from the sparse kernel.
    std::vector<double> output_dist(int v, int z) const;        // p(y|v,z)
    std::vector<double> state_marginal_row(int v, int z) const; // p(z'|v,z)
    std::vector<std::vector<double>> state_marginal(int v) const; // Z x Z

    void validate() const;
    bool check_separable(double tol = 1e-12) const;
    std::string to_json() const; // debug dump: labels, policies, kernel
};

struct SurrogateOptions {
    int memory_states = 1;        // m
    int memory_packets = 0;       // l (scenario with packet observation only)
    std::uint64_t policy_cap = 1000000;
    int initial_battery = -1;     // -1: default (empty battery, the achievability side)
    int dummy_state_index = 0;    // pads state history before time 1
};

// Transmitter observes the available energy (state feedback).
SurrogateFsc build_fsc_sc1(const SystemModel &model, const SurrogateOptions &opt = {});

// Transmitter observes the initial battery and the packet sequence.
SurrogateFsc build_fsc_sc2(const SystemModel &model, const SurrogateOptions &opt = {});

// Generic constrained finite-state channel given an explicit one-step kernel.
SurrogateFsc build_fsc_x(const StateChannel &chan, int memory_states,
                         const std::vector<double> &initial_state,
                         std::uint64_t policy_cap = 1000000);

// Stationary input process over policies: order-k Markov chain.  Order 0 is a
// single marginal row.  For k >= 1 `initial` is a distribution over V^k
// (mixed radix, oldest symbol most significant).
struct MarkovInputProcess {
    int order = 0;
    int num_symbols = 0;
    std::vector<std::vector<double>> kernel; // |V|^k rows of length |V|
    std::vector<double> initial;             // |V|^k entries (k >= 1), else empty

    int num_histories() const;
    int history_index(const std::vector<int> &hist) const;
    int push(int history_index, int symbol) const; // drop oldest, append
    void validate() const;

    static MarkovInputProcess uniform(int num_symbols, int order);
};

// The pair process (input history, channel state) as a single Markov chain;
// rows/columns are indexed by h * |Z| + z with h an input history of length
// max(order, 1).  Used for ergodicity certification.
struct JointChain {
    int history_length = 1;
    int num_symbols = 0;
    int num_states = 0;
    std::vector<std::vector<double>> transition; // square, row stochastic
    std::vector<double> initial;

    int size() const { return static_cast<int>(transition.size()); }
};

JointChain joint_chain(const SurrogateFsc &fsc, const MarkovInputProcess &input);

} // namespace ehcap
