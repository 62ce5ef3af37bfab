#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ehcap/errors.hpp"

namespace ehcap {

enum class EnergyRule { Additive, StoreFirst, LossyStoreFirst };
enum class Scenario { FscX, EhSc1, EhSc2 };

std::string to_string(EnergyRule r);
std::string to_string(Scenario s);

// Exogenous harvest process: order-r Markov over a finite set of nonnegative
// integer energy packets.  Order 0 means i.i.d.; the kernel then has a single
// row.  Rows are indexed by the mixed-radix encoding of the last `order`
// packets, oldest first.
struct HarvestProcess {
    int order = 0;
    std::vector<int> alphabet;                  // sorted, distinct, >= 0
    std::vector<std::vector<double>> kernel;    // |alphabet|^order rows
    std::vector<int> prehistory;                // size == order, alphabet indices

    int num_symbols() const { return static_cast<int>(alphabet.size()); }
    int num_histories() const;
    int history_index(const std::vector<int> &hist) const; // symbol indices
    const std::vector<double> &row(int history_index) const;
    bool iid() const { return order == 0; }
    bool full_support() const;
    void validate() const;
};

// The discrete transmitter model: finite input/output alphabets, a memoryless
// noise channel, per-symbol energy costs, a finite battery, an energy
// combining rule and the harvest process.
struct SystemModel {
    std::vector<int> input_alphabet;    // contains 0
    std::vector<int> output_alphabet;
    std::vector<std::vector<double>> dmc; // |X| x |Y|
    std::vector<int> cost;              // per input index; cost[index_of(0)] == 0
    int battery_cap = 0;
    EnergyRule rule = EnergyRule::Additive;
    double leak_beta = 1.0;             // battery retention, lossy rule only
    double harvest_eta = 1.0;           // harvesting efficiency, lossy rule only
    HarvestProcess harvest;
    Scenario scenario = Scenario::EhSc1;

    // Derived, filled by finalize().
    std::vector<int> battery_levels;    // 0..battery_cap
    std::vector<int> energy_states;     // sorted distinct values of S(b, e)

    void finalize();                    // validates and materializes alphabets

    int num_inputs() const { return static_cast<int>(input_alphabet.size()); }
    int num_outputs() const { return static_cast<int>(output_alphabet.size()); }
    int num_states() const { return static_cast<int>(energy_states.size()); }

    int state_index(int s_value) const; // throws if not a state value
    int max_cost() const;

    // S(b, e): energy available in a slot entered with battery b and harvest e.
    int available_energy(int battery, int packet) const;

    // Battery carried into the next slot after spending cost(x) out of s.
    int next_battery(int x_index, int s_value) const;

    // S(x, s, e'): next available energy; throws InfeasibleInput if
    // cost(x) > s.
    int next_state(int x_index, int s_value, int next_packet) const;

    // Indices of inputs x with cost(x) <= s, in alphabet order.
    std::vector<int> feasible_inputs(int s_value) const;
};

// The i.i.d.-harvest single-step kernel p(y, s' | x, s) seen by a transmitter
// that observes s (finite-state channel view).  Requires an i.i.d. harvest.
struct StateChannel {
    int num_inputs = 0;
    int num_outputs = 0;
    int num_states = 0;
    // kernel[x][s][y][s2]
    std::vector<std::vector<std::vector<std::vector<double>>>> kernel;
    std::vector<std::vector<int>> feasible;     // per state, input indices

    void validate() const;
};

StateChannel state_channel_from_model(const SystemModel &model);

} // namespace ehcap
