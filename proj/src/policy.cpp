#include "ehcap/policy.hpp"

#include <cmath>

#include "ehcap/errors.hpp"

namespace ehcap {

namespace {

// Builds the per-tuple choice sets in canonical tuple order.  A tuple is
// (s_{n-m+1},...,s_n, e_{n-l+1},...,e_n) encoded mixed-radix with the last
// coordinate least significant; the choice set is X(s_n).
std::vector<std::vector<int>> build_tuple_choices(const SystemModel &model,
                                                  int m, int l) {
    int ns = model.num_states();
    int ne = model.harvest.num_symbols();
    long long domain = 1;
    for (int i = 0; i < m; ++i) domain *= ns;
    for (int i = 0; i < l; ++i) domain *= ne;

    std::vector<std::vector<int>> choices(static_cast<std::size_t>(domain));
    for (long long t = 0; t < domain; ++t) {
        long long rest = t;
        for (int i = 0; i < l; ++i) rest /= ne; // strip packet coordinates
        int newest_state = static_cast<int>(rest % ns);
        choices[static_cast<std::size_t>(t)] =
            model.feasible_inputs(model.energy_states[newest_state]);
    }
    return choices;
}

} // namespace

int PolicyAlphabet::tuple_index(const std::vector<int> &state_hist,
                                const std::vector<int> &packet_hist) const {
    if (static_cast<int>(state_hist.size()) != memory_states ||
        static_cast<int>(packet_hist.size()) != memory_packets)
        throw IncompatibleDimensions("policy argument tuple has wrong shape");
    long long idx = 0;
    for (int s : state_hist) {
        if (s < 0 || s >= num_states)
            throw IncompatibleDimensions("state index out of range");
        idx = idx * num_states + s;
    }
    for (int e : packet_hist) {
        if (e < 0 || e >= num_packets)
            throw IncompatibleDimensions("packet index out of range");
        idx = idx * num_packets + e;
    }
    return static_cast<int>(idx);
}

std::string PolicyAlphabet::describe(int v) const {
    std::string out = "[";
    const auto &pol = policies.at(static_cast<std::size_t>(v));
    for (std::size_t t = 0; t < pol.size(); ++t) {
        if (t) out += ' ';
        out += std::to_string(pol[t]);
    }
    out += ']';
    return out;
}

long double policy_count(const SystemModel &model, int memory_states,
                         int memory_packets) {
    if (memory_states < 1) throw ConfigError("policy memory over states must be >= 1");
    if (memory_packets < 0) throw ConfigError("policy memory over packets must be >= 0");
    int ns = model.num_states();
    int ne = model.harvest.num_symbols();
    // Tuples sharing the same newest state share a choice-set size; the newest
    // state contributes once and the remaining coordinates multiply the
    // exponent.
    long double older = 1.0L;
    for (int i = 0; i < memory_states - 1; ++i) older *= ns;
    for (int i = 0; i < memory_packets; ++i) older *= ne;
    long double total = 1.0L;
    for (int si = 0; si < ns; ++si) {
        long double c = static_cast<long double>(
            model.feasible_inputs(model.energy_states[si]).size());
        total *= std::pow(c, older);
    }
    return total;
}

PolicyAlphabet enumerate_policies(const SystemModel &model, int memory_states,
                                  int memory_packets, std::uint64_t cap) {
    if (memory_states < 1) throw ConfigError("policy memory over states must be >= 1");
    if (memory_packets < 0) throw ConfigError("policy memory over packets must be >= 0");

    long double count = policy_count(model, memory_states, memory_packets);
    if (count > static_cast<long double>(cap))
        throw AlphabetTooLarge("policy alphabet would hold about " +
                               std::to_string(static_cast<double>(count)) +
                               " members (cap " + std::to_string(cap) + ")");

    PolicyAlphabet pa;
    pa.memory_states = memory_states;
    pa.memory_packets = memory_packets;
    pa.num_states = model.num_states();
    pa.num_packets = model.harvest.num_symbols();
    pa.tuple_choices = build_tuple_choices(model, memory_states, memory_packets);

    int domain = pa.domain_size();
    std::vector<int> digit(static_cast<std::size_t>(domain), 0);
    pa.policies.reserve(static_cast<std::size_t>(count));
    while (true) {
        std::vector<int> pol(static_cast<std::size_t>(domain));
        for (int t = 0; t < domain; ++t)
            pol[static_cast<std::size_t>(t)] =
                pa.tuple_choices[static_cast<std::size_t>(t)]
                                [static_cast<std::size_t>(digit[static_cast<std::size_t>(t)])];
        pa.policies.push_back(std::move(pol));
        // Odometer step, last tuple fastest.
        int t = domain - 1;
        while (t >= 0) {
            if (++digit[static_cast<std::size_t>(t)] <
                static_cast<int>(pa.tuple_choices[static_cast<std::size_t>(t)].size()))
                break;
            digit[static_cast<std::size_t>(t)] = 0;
            --t;
        }
        if (t < 0) break;
    }
    return pa;
}

} // namespace ehcap
