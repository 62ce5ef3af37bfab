#include "ehcap/fsc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ehcap/errors.hpp"
#include "ehcap/prob.hpp"

namespace ehcap {

namespace {

long long ipow(long long b, int e) {
    long long r = 1;
    while (e-- > 0) r *= b;
    return r;
}

void decode_mixed(long long code, int radix, int len, std::vector<int> &out) {
    out.assign(static_cast<std::size_t>(len), 0);
    for (int i = len - 1; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = static_cast<int>(code % radix);
        code /= radix;
    }
}

long long encode_mixed(const std::vector<int> &digits, int radix) {
    long long c = 0;
    for (int d : digits) c = c * radix + d;
    return c;
}

std::string format_label(const std::vector<int> &evals, const std::vector<int> &svals) {
    std::string out;
    if (!evals.empty()) {
        out += "e=";
        for (std::size_t i = 0; i < evals.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(evals[i]);
        }
        out += ';';
    }
    out += "s=";
    for (std::size_t i = 0; i < svals.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(svals[i]);
    }
    return out;
}

// Shared EH construction; l = 0 gives the state-feedback variant.
SurrogateFsc build_eh(const SystemModel &model, int l, const SurrogateOptions &opt) {
    const int m = opt.memory_states;
    const int r = model.harvest.order;
    const int h = std::max(l, r);
    const int ns = model.num_states();
    const int ne = model.harvest.num_symbols();

    SurrogateFsc fsc;
    fsc.policies = enumerate_policies(model, m, l, opt.policy_cap);
    fsc.num_inputs = fsc.policies.size();
    fsc.num_outputs = model.num_outputs();

    const long long s_block = ipow(ns, m);
    const long long num_z = ipow(ne, h) * s_block;
    fsc.num_states = static_cast<int>(num_z);
    fsc.kernel.assign(static_cast<std::size_t>(fsc.num_inputs) * num_z, {});
    fsc.state_labels.resize(static_cast<std::size_t>(num_z));

    std::vector<int> e_hist, s_hist, e_cond, evals, svals;
    std::vector<double> joint(static_cast<std::size_t>(fsc.num_outputs) * num_z);

    for (long long z = 0; z < num_z; ++z) {
        decode_mixed(z / s_block, ne, h, e_hist);
        decode_mixed(z % s_block, ns, m, s_hist);

        evals.clear();
        for (int e : e_hist) evals.push_back(model.harvest.alphabet[e]);
        svals.clear();
        for (int s : s_hist) svals.push_back(model.energy_states[s]);
        fsc.state_labels[static_cast<std::size_t>(z)] = format_label(evals, svals);

        const int s_now = model.energy_states[s_hist.back()];
        std::vector<int> e_args(e_hist.end() - l, e_hist.end());
        const int tuple = fsc.policies.tuple_index(s_hist, e_args);

        e_cond.assign(e_hist.end() - r, e_hist.end());
        const auto &pe = model.harvest.row(model.harvest.history_index(e_cond));

        for (int v = 0; v < fsc.num_inputs; ++v) {
            const int x = fsc.policies.policies[static_cast<std::size_t>(v)]
                                                [static_cast<std::size_t>(tuple)];
            std::fill(joint.begin(), joint.end(), 0.0);
            for (int e2 = 0; e2 < ne; ++e2) {
                if (pe[e2] <= 0.0) continue;
                const int s2 =
                    model.state_index(model.next_state(x, s_now, model.harvest.alphabet[e2]));
                // Shift both histories.
                long long e_next = (h > 0)
                                       ? ((z / s_block) % ipow(ne, h - 1)) * ne + e2
                                       : 0;
                long long s_next = ((z % s_block) % ipow(ns, m - 1)) * ns + s2;
                long long z2 = e_next * s_block + s_next;
                for (int y = 0; y < fsc.num_outputs; ++y) {
                    double p = model.dmc[static_cast<std::size_t>(x)]
                                        [static_cast<std::size_t>(y)] *
                               pe[e2];
                    if (p > 0.0)
                        joint[static_cast<std::size_t>(y) * num_z + z2] += p;
                }
            }
            auto &slice = fsc.kernel[static_cast<std::size_t>(v) * num_z + z];
            for (int y = 0; y < fsc.num_outputs; ++y)
                for (long long z2 = 0; z2 < num_z; ++z2) {
                    double p = joint[static_cast<std::size_t>(y) * num_z + z2];
                    if (p > 0.0) slice.push_back({y, static_cast<int>(z2), p});
                }
        }
    }

    // Initial state: configured battery, harvest prehistory, dummy padding.
    int b1 = opt.initial_battery < 0 ? 0 : opt.initial_battery;
    if (b1 > model.battery_cap)
        throw ConfigError("initial battery exceeds battery capacity");
    if (opt.dummy_state_index < 0 || opt.dummy_state_index >= ns)
        throw ConfigError("dummy state index out of range");

    std::vector<int> pre_e(static_cast<std::size_t>(h), 0);
    for (int i = 0; i < r; ++i)
        pre_e[static_cast<std::size_t>(h - r + i)] =
            model.harvest.prehistory[static_cast<std::size_t>(i)];
    const auto &pe1 = model.harvest.row(model.harvest.history_index(
        std::vector<int>(pre_e.end() - r, pre_e.end())));

    fsc.initial_state.assign(static_cast<std::size_t>(num_z), 0.0);
    for (int e1 = 0; e1 < ne; ++e1) {
        if (pe1[e1] <= 0.0) continue;
        int s1 = model.state_index(model.available_energy(b1, model.harvest.alphabet[e1]));
        std::vector<int> eh(pre_e.begin() + (h > 0 ? 1 : 0), pre_e.end());
        if (h > 0) eh.push_back(e1);
        std::vector<int> sh(static_cast<std::size_t>(m - 1), opt.dummy_state_index);
        sh.push_back(s1);
        long long z1 = encode_mixed(eh, ne) * s_block + encode_mixed(sh, ns);
        fsc.initial_state[static_cast<std::size_t>(z1)] += pe1[e1];
    }

    fsc.separable = true;
    fsc.validate();
    return fsc;
}

PolicyAlphabet enumerate_for_channel(const StateChannel &chan, int m,
                                     std::uint64_t cap) {
    if (m < 1) throw ConfigError("policy memory over states must be >= 1");
    PolicyAlphabet pa;
    pa.memory_states = m;
    pa.memory_packets = 0;
    pa.num_states = chan.num_states;
    pa.num_packets = 0;

    long long domain = ipow(chan.num_states, m);
    pa.tuple_choices.resize(static_cast<std::size_t>(domain));
    long double count = 1.0L;
    for (long long t = 0; t < domain; ++t) {
        int newest = static_cast<int>(t % chan.num_states);
        pa.tuple_choices[static_cast<std::size_t>(t)] =
            chan.feasible[static_cast<std::size_t>(newest)];
        count *= static_cast<long double>(
            pa.tuple_choices[static_cast<std::size_t>(t)].size());
    }
    if (count > static_cast<long double>(cap))
        throw AlphabetTooLarge("policy alphabet would hold about " +
                               std::to_string(static_cast<double>(count)) +
                               " members (cap " + std::to_string(cap) + ")");

    std::vector<int> digit(static_cast<std::size_t>(domain), 0);
    while (true) {
        std::vector<int> pol(static_cast<std::size_t>(domain));
        for (long long t = 0; t < domain; ++t)
            pol[static_cast<std::size_t>(t)] =
                pa.tuple_choices[static_cast<std::size_t>(t)]
                                [static_cast<std::size_t>(digit[static_cast<std::size_t>(t)])];
        pa.policies.push_back(std::move(pol));
        long long t = domain - 1;
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

} // namespace

std::vector<double> SurrogateFsc::output_dist(int v, int z) const {
    std::vector<double> d(static_cast<std::size_t>(num_outputs), 0.0);
    for (const auto &t : slice(v, z)) d[static_cast<std::size_t>(t.y)] += t.p;
    return d;
}

std::vector<double> SurrogateFsc::state_marginal_row(int v, int z) const {
    std::vector<double> d(static_cast<std::size_t>(num_states), 0.0);
    for (const auto &t : slice(v, z)) d[static_cast<std::size_t>(t.z2)] += t.p;
    return d;
}

std::vector<std::vector<double>> SurrogateFsc::state_marginal(int v) const {
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(num_states));
    for (int z = 0; z < num_states; ++z) rows.push_back(state_marginal_row(v, z));
    return rows;
}

void SurrogateFsc::validate() const {
    if (num_inputs <= 0 || num_outputs <= 0 || num_states <= 0)
        throw ConfigError("surrogate channel with empty alphabet");
    if (kernel.size() != static_cast<std::size_t>(num_inputs) * num_states)
        throw IncompatibleDimensions("surrogate kernel slice count mismatch");
    for (int v = 0; v < num_inputs; ++v)
        for (int z = 0; z < num_states; ++z) {
            double tot = 0.0;
            for (const auto &t : slice(v, z)) {
                if (t.p < 0.0) throw NotStochastic("surrogate kernel: negative entry");
                if (t.y < 0 || t.y >= num_outputs || t.z2 < 0 || t.z2 >= num_states)
                    throw IncompatibleDimensions("surrogate kernel: index out of range");
                tot += t.p;
            }
            if (std::abs(tot - 1.0) > 1e-10)
                throw NotStochastic("surrogate kernel slice does not sum to 1");
        }
    check_distribution(initial_state, "surrogate initial state");
    if (separable && !check_separable())
        throw NotStochastic("surrogate kernel flagged separable but is not");
}

bool SurrogateFsc::check_separable(double tol) const {
    std::vector<double> dense(static_cast<std::size_t>(num_outputs) * num_states);
    for (int v = 0; v < num_inputs; ++v)
        for (int z = 0; z < num_states; ++z) {
            std::fill(dense.begin(), dense.end(), 0.0);
            for (const auto &t : slice(v, z))
                dense[static_cast<std::size_t>(t.y) * num_states + t.z2] += t.p;
            auto py = output_dist(v, z);
            auto pz = state_marginal_row(v, z);
            for (int y = 0; y < num_outputs; ++y)
                for (int z2 = 0; z2 < num_states; ++z2)
                    if (std::abs(dense[static_cast<std::size_t>(y) * num_states + z2] -
                                 py[static_cast<std::size_t>(y)] *
                                     pz[static_cast<std::size_t>(z2)]) > tol)
                        return false;
        }
    return true;
}

std::string SurrogateFsc::to_json() const {
    char buf[160];
    std::string out = "{\n  \"inputs\": " + std::to_string(num_inputs) +
                      ",\n  \"outputs\": " + std::to_string(num_outputs) +
                      ",\n  \"states\": [";
    for (int z = 0; z < num_states; ++z) {
        if (z) out += ", ";
        out += '"' + state_labels[static_cast<std::size_t>(z)] + '"';
    }
    out += "],\n  \"separable\": ";
    out += separable ? "true" : "false";
    out += ",\n  \"initial\": [";
    for (int z = 0; z < num_states; ++z) {
        if (z) out += ", ";
        std::snprintf(buf, sizeof(buf), "%.17g", initial_state[static_cast<std::size_t>(z)]);
        out += buf;
    }
    out += "],\n  \"policies\": [";
    for (std::size_t v = 0; v < policies.policies.size(); ++v) {
        if (v) out += ", ";
        out += '[';
        const auto &pol = policies.policies[v];
        for (std::size_t t = 0; t < pol.size(); ++t) {
            if (t) out += ", ";
            out += std::to_string(pol[t]);
        }
        out += ']';
    }
    out += "],\n  \"kernel\": [\n";
    bool first = true;
    for (int v = 0; v < num_inputs; ++v)
        for (int z = 0; z < num_states; ++z)
            for (const auto &t : slice(v, z)) {
                if (!first) out += ",\n";
                first = false;
                std::snprintf(buf, sizeof(buf),
                              "    {\"v\": %d, \"z\": %d, \"y\": %d, \"z2\": %d, \"p\": %.17g}",
                              v, z, t.y, t.z2, t.p);
                out += buf;
            }
    out += "\n  ]\n}\n";
    return out;
}

SurrogateFsc build_fsc_sc1(const SystemModel &model, const SurrogateOptions &opt) {
    return build_eh(model, 0, opt);
}

SurrogateFsc build_fsc_sc2(const SystemModel &model, const SurrogateOptions &opt) {
    return build_eh(model, opt.memory_packets, opt);
}

SurrogateFsc build_fsc_x(const StateChannel &chan, int memory_states,
                         const std::vector<double> &initial_state,
                         std::uint64_t policy_cap) {
    chan.validate();
    if (static_cast<int>(initial_state.size()) != chan.num_states)
        throw IncompatibleDimensions("initial state length != |S|");
    check_distribution(initial_state, "fsc-x initial state");

    SurrogateFsc fsc;
    fsc.policies = enumerate_for_channel(chan, memory_states, policy_cap);
    fsc.num_inputs = fsc.policies.size();
    fsc.num_outputs = chan.num_outputs;
    const int m = memory_states;
    const long long num_z = ipow(chan.num_states, m);
    fsc.num_states = static_cast<int>(num_z);
    fsc.kernel.assign(static_cast<std::size_t>(fsc.num_inputs) * num_z, {});
    fsc.state_labels.resize(static_cast<std::size_t>(num_z));

    std::vector<int> s_hist;
    for (long long z = 0; z < num_z; ++z) {
        decode_mixed(z, chan.num_states, m, s_hist);
        fsc.state_labels[static_cast<std::size_t>(z)] = format_label({}, s_hist);
        const int s_now = s_hist.back();
        for (int v = 0; v < fsc.num_inputs; ++v) {
            const int x = fsc.policies.policies[static_cast<std::size_t>(v)]
                                                [static_cast<std::size_t>(z)];
            auto &slice = fsc.kernel[static_cast<std::size_t>(v) * num_z + z];
            for (int y = 0; y < chan.num_outputs; ++y)
                for (int s2 = 0; s2 < chan.num_states; ++s2) {
                    double p = chan.kernel[static_cast<std::size_t>(x)]
                                          [static_cast<std::size_t>(s_now)]
                                          [static_cast<std::size_t>(y)]
                                          [static_cast<std::size_t>(s2)];
                    if (p <= 0.0) continue;
                    long long z2 = (z % ipow(chan.num_states, m - 1)) * chan.num_states + s2;
                    slice.push_back({y, static_cast<int>(z2), p});
                }
        }
    }

    fsc.initial_state.assign(static_cast<std::size_t>(num_z), 0.0);
    for (int s = 0; s < chan.num_states; ++s) {
        if (initial_state[static_cast<std::size_t>(s)] <= 0.0) continue;
        std::vector<int> sh(static_cast<std::size_t>(m - 1), 0);
        sh.push_back(s);
        fsc.initial_state[static_cast<std::size_t>(encode_mixed(sh, chan.num_states))] +=
            initial_state[static_cast<std::size_t>(s)];
    }

    fsc.separable = fsc.check_separable();
    fsc.validate();
    return fsc;
}

int MarkovInputProcess::num_histories() const {
    int n = 1;
    for (int i = 0; i < order; ++i) n *= num_symbols;
    return n;
}

int MarkovInputProcess::history_index(const std::vector<int> &hist) const {
    if (static_cast<int>(hist.size()) != order)
        throw IncompatibleDimensions("input history length != order");
    int idx = 0;
    for (int v : hist) {
        if (v < 0 || v >= num_symbols)
            throw IncompatibleDimensions("input symbol out of range");
        idx = idx * num_symbols + v;
    }
    return idx;
}

int MarkovInputProcess::push(int history_index, int symbol) const {
    if (order == 0) return 0;
    int mod = num_histories() / num_symbols;
    return (history_index % mod) * num_symbols + symbol;
}

void MarkovInputProcess::validate() const {
    if (order < 0) throw ConfigError("input process order must be >= 0");
    if (num_symbols <= 0) throw ConfigError("input process over empty alphabet");
    if (static_cast<int>(kernel.size()) != num_histories())
        throw IncompatibleDimensions("input kernel rows != |V|^order");
    for (const auto &row : kernel)
        if (static_cast<int>(row.size()) != num_symbols)
            throw IncompatibleDimensions("input kernel row width != |V|");
    check_stochastic(kernel, "input kernel", 1e-12);
    if (order >= 1) {
        if (static_cast<int>(initial.size()) != num_histories())
            throw IncompatibleDimensions("input initial length != |V|^order");
        check_distribution(initial, "input initial");
    }
}

MarkovInputProcess MarkovInputProcess::uniform(int num_symbols, int order) {
    MarkovInputProcess p;
    p.order = order;
    p.num_symbols = num_symbols;
    int rows = p.num_histories();
    p.kernel.assign(static_cast<std::size_t>(rows),
                    std::vector<double>(static_cast<std::size_t>(num_symbols),
                                        1.0 / num_symbols));
    if (order >= 1)
        p.initial.assign(static_cast<std::size_t>(rows), 1.0 / rows);
    return p;
}

JointChain joint_chain(const SurrogateFsc &fsc, const MarkovInputProcess &input) {
    input.validate();
    if (input.num_symbols != fsc.num_inputs)
        throw IncompatibleDimensions("input process alphabet != |V|");

    const int k = input.order;
    const int K = std::max(k, 1);
    const int V = fsc.num_inputs;
    const int Z = fsc.num_states;
    long long H = ipow(V, K);
    long long n = H * Z;

    JointChain jc;
    jc.history_length = K;
    jc.num_symbols = V;
    jc.num_states = Z;
    jc.transition.assign(static_cast<std::size_t>(n),
                         std::vector<double>(static_cast<std::size_t>(n), 0.0));

    const long long keep = H / V; // drop the oldest symbol
    for (long long hh = 0; hh < H; ++hh) {
        // Input conditioning uses the most recent k symbols of the history.
        int cond = (k == 0) ? 0 : static_cast<int>(hh);
        const auto &row = input.kernel[static_cast<std::size_t>(cond)];
        for (int z = 0; z < Z; ++z) {
            auto &trow = jc.transition[static_cast<std::size_t>(hh * Z + z)];
            for (int v = 0; v < V; ++v) {
                if (row[static_cast<std::size_t>(v)] <= 0.0) continue;
                long long h2 = (hh % keep) * V + v;
                for (const auto &t : fsc.slice(v, z))
                    trow[static_cast<std::size_t>(h2 * Z + t.z2)] +=
                        row[static_cast<std::size_t>(v)] * t.p;
            }
        }
    }

    // Initial node distribution: (first K inputs, the state they lead to).
    jc.initial.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<int> hist;
    for (long long hh = 0; hh < H; ++hh) {
        decode_mixed(hh, V, K, hist);
        double w = 1.0;
        std::vector<double> dist = fsc.initial_state;
        int cond = 0;
        for (int i = 0; i < K && w > 0.0; ++i) {
            int v = hist[static_cast<std::size_t>(i)];
            int crow = (k == 0) ? 0 : cond;
            if (k >= 1 && i < k) {
                // For order-k inputs the first k symbols are drawn jointly from
                // the initial history distribution; weight once at the end.
                crow = -1;
            }
            if (crow >= 0) w *= input.kernel[static_cast<std::size_t>(crow)]
                                            [static_cast<std::size_t>(v)];
            std::vector<double> next(static_cast<std::size_t>(Z), 0.0);
            for (int z = 0; z < Z; ++z) {
                if (dist[static_cast<std::size_t>(z)] <= 0.0) continue;
                for (const auto &t : fsc.slice(v, z))
                    next[static_cast<std::size_t>(t.z2)] +=
                        dist[static_cast<std::size_t>(z)] * t.p;
            }
            dist.swap(next);
            cond = input.push(cond, v);
        }
        if (k >= 1) w *= input.initial[static_cast<std::size_t>(hh)];
        if (w <= 0.0) continue;
        for (int z = 0; z < Z; ++z)
            jc.initial[static_cast<std::size_t>(hh * Z + z)] +=
                w * dist[static_cast<std::size_t>(z)];
    }

    return jc;
}

} // namespace ehcap
