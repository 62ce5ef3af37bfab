#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ehcap/model.hpp"

namespace ehcap {

// Alphabet of constrained transmission policies: maps from the last m energy
// states (and, when the transmitter also sees the harvest, the last l
// packets) to a feasible input.  The policy's value at an argument tuple must
// be feasible for the tuple's most recent state.
//
// Enumeration order is canonical: argument tuples are ordered
// lexicographically (oldest coordinate most significant), and policies are
// ordered lexicographically by their value vectors with the last argument
// tuple varying fastest.
struct PolicyAlphabet {
    int memory_states = 1;   // m >= 1
    int memory_packets = 0;  // l >= 0 (zero unless the policy sees packets)
    int num_states = 0;
    int num_packets = 0;
    // Per argument tuple: the feasible input set of its newest state.
    std::vector<std::vector<int>> tuple_choices;
    // policies[v][tuple] = input index.
    std::vector<std::vector<int>> policies;

    int domain_size() const { return static_cast<int>(tuple_choices.size()); }
    int size() const { return static_cast<int>(policies.size()); }

    // Argument tuple encoding: s-history (oldest first) then packet history
    // (oldest first), mixed radix, last coordinate least significant.
    int tuple_index(const std::vector<int> &state_hist,
                    const std::vector<int> &packet_hist) const;

    std::string describe(int v) const;
};

// Enumerates every policy; throws AlphabetTooLarge if the count would exceed
// `cap` (default one million).
PolicyAlphabet enumerate_policies(const SystemModel &model, int memory_states,
                                  int memory_packets, std::uint64_t cap = 1000000);

// Exact policy count as long double (usable even above the cap).
long double policy_count(const SystemModel &model, int memory_states,
                         int memory_packets);

} // namespace ehcap
