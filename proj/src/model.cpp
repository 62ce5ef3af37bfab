#include "ehcap/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ehcap/prob.hpp"

namespace ehcap {

std::string to_string(EnergyRule r) {
    switch (r) {
    case EnergyRule::Additive: return "additive";
    case EnergyRule::StoreFirst: return "store-first";
    case EnergyRule::LossyStoreFirst: return "lossy-store-first";
    }
    return "?";
}

std::string to_string(Scenario s) {
    switch (s) {
    case Scenario::FscX: return "fsc-x";
    case Scenario::EhSc1: return "eh-sc1";
    case Scenario::EhSc2: return "eh-sc2";
    }
    return "?";
}

int HarvestProcess::num_histories() const {
    int n = 1;
    for (int i = 0; i < order; ++i) n *= num_symbols();
    return n;
}

int HarvestProcess::history_index(const std::vector<int> &hist) const {
    if (static_cast<int>(hist.size()) != order)
        throw IncompatibleDimensions("harvest history length != order");
    int idx = 0;
    for (int h : hist) {
        if (h < 0 || h >= num_symbols())
            throw IncompatibleDimensions("harvest history symbol out of range");
        idx = idx * num_symbols() + h;
    }
    return idx;
}

const std::vector<double> &HarvestProcess::row(int history_index) const {
    return kernel.at(static_cast<std::size_t>(history_index));
}

bool HarvestProcess::full_support() const {
    for (const auto &r : kernel)
        for (double v : r)
            if (v <= 0.0) return false;
    return true;
}

void HarvestProcess::validate() const {
    if (order < 0) throw ConfigError("harvest order must be >= 0");
    if (alphabet.empty()) throw ConfigError("harvest alphabet empty");
    for (std::size_t i = 0; i < alphabet.size(); ++i) {
        if (alphabet[i] < 0) throw ConfigError("harvest packets must be >= 0");
        if (i > 0 && alphabet[i] <= alphabet[i - 1])
            throw ConfigError("harvest alphabet must be sorted and distinct");
    }
    if (static_cast<int>(kernel.size()) != num_histories())
        throw IncompatibleDimensions("harvest kernel row count != |E|^order");
    for (const auto &r : kernel)
        if (static_cast<int>(r.size()) != num_symbols())
            throw IncompatibleDimensions("harvest kernel row width != |E|");
    check_stochastic(kernel, "harvest kernel");
    if (static_cast<int>(prehistory.size()) != order)
        throw ConfigError("harvest prehistory length != order");
    for (int h : prehistory)
        if (h < 0 || h >= num_symbols())
            throw ConfigError("harvest prehistory symbol out of range");
}

void SystemModel::finalize() {
    if (input_alphabet.empty()) throw ConfigError("input alphabet empty");
    if (output_alphabet.empty()) throw ConfigError("output alphabet empty");
    if (std::find(input_alphabet.begin(), input_alphabet.end(), 0) ==
        input_alphabet.end())
        throw ConfigError("input alphabet must contain the idle symbol 0");
    if (dmc.size() != input_alphabet.size())
        throw IncompatibleDimensions("dmc rows != |X|");
    for (const auto &r : dmc)
        if (r.size() != output_alphabet.size())
            throw IncompatibleDimensions("dmc cols != |Y|");
    check_stochastic(dmc, "dmc");
    if (cost.size() != input_alphabet.size())
        throw IncompatibleDimensions("cost entries != |X|");
    for (std::size_t i = 0; i < cost.size(); ++i) {
        if (cost[i] < 0) throw ConfigError("costs must be >= 0");
        if (input_alphabet[i] == 0 && cost[i] != 0)
            throw ConfigError("idle symbol must cost 0");
    }
    if (battery_cap < 0) throw ConfigError("battery capacity must be >= 0");
    if (rule == EnergyRule::LossyStoreFirst) {
        if (leak_beta < 0.0 || leak_beta > 1.0)
            throw ConfigError("battery retention must be in [0,1]");
        if (harvest_eta < 0.0 || harvest_eta > 1.0)
            throw ConfigError("harvesting efficiency must be in [0,1]");
    }
    harvest.validate();

    battery_levels.clear();
    for (int b = 0; b <= battery_cap; ++b) battery_levels.push_back(b);

    std::set<int> states;
    for (int b : battery_levels)
        for (int e : harvest.alphabet) states.insert(available_energy(b, e));
    energy_states.assign(states.begin(), states.end());

    // Every state must allow the idle symbol, which is free by construction.
    for (int s : energy_states)
        if (feasible_inputs(s).empty())
            throw ConfigError("state with empty feasible input set");
}

int SystemModel::state_index(int s_value) const {
    auto it = std::lower_bound(energy_states.begin(), energy_states.end(), s_value);
    if (it == energy_states.end() || *it != s_value)
        throw IncompatibleDimensions("not an energy state: " + std::to_string(s_value));
    return static_cast<int>(it - energy_states.begin());
}

int SystemModel::max_cost() const {
    int m = 0;
    for (int c : cost) m = std::max(m, c);
    return m;
}

int SystemModel::available_energy(int battery, int packet) const {
    switch (rule) {
    case EnergyRule::Additive:
        return battery + packet;
    case EnergyRule::StoreFirst:
        return std::min(battery + packet, battery_cap);
    case EnergyRule::LossyStoreFirst:
        return std::min(static_cast<int>(std::floor(leak_beta * battery +
                                                    harvest_eta * packet)),
                        battery_cap);
    }
    return 0;
}

int SystemModel::next_battery(int x_index, int s_value) const {
    if (cost.at(x_index) > s_value)
        throw InfeasibleInput("input cost exceeds available energy");
    return std::min(s_value - cost[x_index], battery_cap);
}

int SystemModel::next_state(int x_index, int s_value, int next_packet) const {
    return available_energy(next_battery(x_index, s_value), next_packet);
}

std::vector<int> SystemModel::feasible_inputs(int s_value) const {
    std::vector<int> xs;
    for (std::size_t i = 0; i < input_alphabet.size(); ++i)
        if (cost[i] <= s_value) xs.push_back(static_cast<int>(i));
    return xs;
}

void StateChannel::validate() const {
    if (num_inputs <= 0 || num_outputs <= 0 || num_states <= 0)
        throw ConfigError("state channel with empty alphabet");
    for (int s = 0; s < num_states; ++s) {
        if (feasible[s].empty()) throw ConfigError("state with no feasible input");
        for (int x : feasible[s]) {
            double tot = 0.0;
            for (int y = 0; y < num_outputs; ++y)
                for (int s2 = 0; s2 < num_states; ++s2) {
                    double v = kernel[x][s][y][s2];
                    if (v < 0.0) throw NotStochastic("state channel: negative");
                    tot += v;
                }
            if (std::abs(tot - 1.0) > 1e-9)
                throw NotStochastic("state channel slice does not sum to 1");
        }
    }
}

StateChannel state_channel_from_model(const SystemModel &model) {
    if (!model.harvest.iid())
        throw RequiresIidHarvest("state channel view needs an i.i.d. harvest");
    StateChannel ch;
    ch.num_inputs = model.num_inputs();
    ch.num_outputs = model.num_outputs();
    ch.num_states = model.num_states();
    ch.kernel.assign(
        ch.num_inputs,
        std::vector<std::vector<std::vector<double>>>(
            ch.num_states, std::vector<std::vector<double>>(
                               ch.num_outputs, std::vector<double>(ch.num_states, 0.0))));
    ch.feasible.resize(ch.num_states);
    const auto &pe = model.harvest.row(0);
    for (int si = 0; si < ch.num_states; ++si) {
        int s = model.energy_states[si];
        ch.feasible[si] = model.feasible_inputs(s);
        for (int x : ch.feasible[si]) {
            for (int ei = 0; ei < model.harvest.num_symbols(); ++ei) {
                int s2 = model.next_state(x, s, model.harvest.alphabet[ei]);
                int s2i = model.state_index(s2);
                for (int y = 0; y < ch.num_outputs; ++y)
                    ch.kernel[x][si][y][s2i] += model.dmc[x][y] * pe[ei];
            }
        }
    }
    ch.validate();
    return ch;
}

} // namespace ehcap
