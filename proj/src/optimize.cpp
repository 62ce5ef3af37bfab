#include "ehcap/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ehcap/ergodicity.hpp"
#include "ehcap/errors.hpp"
#include "ehcap/prob.hpp"

namespace ehcap {

namespace {

// splitmix64-style mixing for derived stream seeds
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t x = a + 0x9E3779B97F4A7C15ULL * (b + 1) + 0x94D049BB133111EBULL * (c + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

// t_x = sum_y K[x][y] * ln(K[x][y] / r[y]) in nats; zero entries contribute 0.
double letter_divergence_nats(const std::vector<double> &row, const std::vector<double> &r) {
    double t = 0.0;
    for (std::size_t y = 0; y < row.size(); ++y) {
        if (row[y] > 0.0) t += row[y] * std::log(row[y] / r[y]);
    }
    return t;
}

} // namespace

namespace {

struct DenseCap {
    double lb_nats = 0.0;
    double ub_nats = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Accelerated capacity iteration on a dense row-major matrix. `p` carries the
// start distribution in and the final distribution out. The sandwich
// [sum_x p_x t_x, max_x t_x] brackets the capacity for every distribution, so
// the overrelaxed exponent only affects speed, never validity.
DenseCap dense_capacity(const double *rows, std::size_t num_inputs, std::size_t num_outputs,
                        double tol_nats, int max_iter, std::vector<double> &p) {
    std::vector<double> r(num_outputs), t(num_inputs);
    std::vector<double> cand(num_inputs), best(num_inputs);
    auto rate_nats = [&](const std::vector<double> &q) {
        std::fill(r.begin(), r.end(), 0.0);
        for (std::size_t x = 0; x < num_inputs; ++x) {
            const double *row = rows + x * num_outputs;
            for (std::size_t y = 0; y < num_outputs; ++y) r[y] += q[x] * row[y];
        }
        double v = 0.0;
        for (std::size_t x = 0; x < num_inputs; ++x) {
            if (q[x] == 0.0) continue;
            const double *row = rows + x * num_outputs;
            double tv = 0.0;
            for (std::size_t y = 0; y < num_outputs; ++y)
                if (row[y] > 0.0) tv += row[y] * std::log(row[y] / r[y]);
            v += q[x] * tv;
        }
        return v;
    };
    double ub_of_t = 0.0;
    auto tilt = [&](double alpha, std::vector<double> &dst) {
        double tot = 0.0;
        for (std::size_t x = 0; x < num_inputs; ++x) {
            double v = p[x] * std::exp(alpha * (t[x] - ub_of_t));
            if (v == 0.0 && p[x] > 0.0) v = 1e-300;
            dst[x] = v;
            tot += v;
        }
        for (double &v : dst) v /= tot;
    };
    DenseCap out;
    for (int it = 1; it <= max_iter; ++it) {
        std::fill(r.begin(), r.end(), 0.0);
        for (std::size_t x = 0; x < num_inputs; ++x) {
            const double *row = rows + x * num_outputs;
            for (std::size_t y = 0; y < num_outputs; ++y) r[y] += p[x] * row[y];
        }
        double lb = 0.0, ub = -std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < num_inputs; ++x) {
            const double *row = rows + x * num_outputs;
            double tv = 0.0;
            for (std::size_t y = 0; y < num_outputs; ++y)
                if (row[y] > 0.0) tv += row[y] * std::log(row[y] / r[y]);
            t[x] = tv;
            lb += p[x] * tv;
            ub = std::max(ub, tv);
        }
        out.lb_nats = lb;
        out.ub_nats = ub;
        out.iterations = it;
        if (ub - lb <= tol_nats) {
            out.converged = true;
            return out;
        }
        ub_of_t = ub;
        tilt(1.0, best);
        double best_rate = rate_nats(best);
        for (double alpha = 2.0; alpha <= 1e18; alpha *= 2.0) {
            tilt(alpha, cand);
            const double cr = rate_nats(cand);
            if (cr <= best_rate) break;
            best_rate = cr;
            best.swap(cand);
        }
        p.swap(best);
    }
    return out;
}

} // namespace

BaResult ba_dmc_capacity(const std::vector<double> &rows, std::size_t num_inputs,
                         std::size_t num_outputs, double tol_bits, int max_iter) {
    if (num_inputs == 0 || num_outputs == 0 || rows.size() != num_inputs * num_outputs)
        throw IncompatibleDimensions("flat channel matrix has wrong size");
    for (std::size_t x = 0; x < num_inputs; ++x) {
        double sum = 0.0;
        for (std::size_t y = 0; y < num_outputs; ++y) {
            const double v = rows[x * num_outputs + y];
            if (v < 0.0) throw NotStochastic("channel matrix has a negative entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw NotStochastic("channel matrix row " + std::to_string(x) + " sums to " +
                                std::to_string(sum));
    }
    const double tol_nats = tol_bits * kLn2;
    constexpr std::size_t kDenseInputCap = 1024;
    if (num_inputs <= kDenseInputCap) {
        std::vector<double> p(num_inputs, 1.0 / static_cast<double>(num_inputs));
        DenseCap res = dense_capacity(rows.data(), num_inputs, num_outputs, tol_nats,
                                      max_iter, p);
        if (!res.converged)
            throw NonConvergence(
                "capacity iteration bracket did not close within the iteration cap");
        BaResult out;
        out.capacity_bits = res.lb_nats / kLn2;
        out.input_dist = std::move(p);
        out.iterations = res.iterations;
        out.bracket_bits = (res.ub_nats - res.lb_nats) / kLn2;
        return out;
    }
    // Large input alphabet: grow a working set of rows. A tight solve on the
    // working set yields an achievable rate; one pass over all rows bounds the
    // capacity from above at the induced output distribution, and rows beating
    // that certificate join the set.
    std::vector<double> r(num_outputs), t(num_inputs);
    std::vector<std::size_t> active;
    std::vector<char> in_active(num_inputs, 0);
    {
        const double u = 1.0 / static_cast<double>(num_inputs);
        std::fill(r.begin(), r.end(), 0.0);
        for (std::size_t x = 0; x < num_inputs; ++x) {
            const double *row = rows.data() + x * num_outputs;
            for (std::size_t y = 0; y < num_outputs; ++y) r[y] += u * row[y];
        }
        for (std::size_t x = 0; x < num_inputs; ++x) {
            const double *row = rows.data() + x * num_outputs;
            double tv = 0.0;
            for (std::size_t y = 0; y < num_outputs; ++y)
                if (row[y] > 0.0) tv += row[y] * std::log(row[y] / r[y]);
            t[x] = tv;
        }
        std::vector<std::size_t> order(num_inputs);
        for (std::size_t x = 0; x < num_inputs; ++x) order[x] = x;
        const std::size_t seed_count = std::min<std::size_t>(256, num_inputs);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(seed_count),
                          order.end(),
                          [&](std::size_t a, std::size_t b) { return t[a] > t[b]; });
        for (std::size_t i = 0; i < seed_count; ++i) {
            active.push_back(order[i]);
            in_active[order[i]] = 1;
        }
    }
    std::vector<double> sub_rows, sub_p;
    int total_iterations = 0;
    constexpr int kMaxRounds = 200;
    for (int round = 0; round < kMaxRounds; ++round) {
        sub_rows.resize(active.size() * num_outputs);
        for (std::size_t i = 0; i < active.size(); ++i)
            std::copy_n(rows.data() + active[i] * num_outputs, num_outputs,
                        sub_rows.data() + i * num_outputs);
        sub_p.assign(active.size(), 1.0 / static_cast<double>(active.size()));
        DenseCap sub = dense_capacity(sub_rows.data(), active.size(), num_outputs,
                                      0.5 * tol_nats, max_iter, sub_p);
        total_iterations += sub.iterations;
        if (!sub.converged)
            throw NonConvergence(
                "capacity iteration bracket did not close within the iteration cap");
        std::fill(r.begin(), r.end(), 0.0);
        for (std::size_t i = 0; i < active.size(); ++i) {
            const double *row = sub_rows.data() + i * num_outputs;
            for (std::size_t y = 0; y < num_outputs; ++y) r[y] += sub_p[i] * row[y];
        }
        double ub = -std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < num_inputs; ++x) {
            const double *row = rows.data() + x * num_outputs;
            double tv = 0.0;
            for (std::size_t y = 0; y < num_outputs; ++y)
                if (row[y] > 0.0) tv += row[y] * std::log(row[y] / r[y]);
            t[x] = tv;
            ub = std::max(ub, tv);
        }
        const double lb = sub.lb_nats;
        if (ub - lb <= tol_nats) {
            BaResult out;
            out.capacity_bits = lb / kLn2;
            out.input_dist.assign(num_inputs, 0.0);
            for (std::size_t i = 0; i < active.size(); ++i)
                out.input_dist[active[i]] = sub_p[i];
            out.iterations = total_iterations;
            out.bracket_bits = (ub - lb) / kLn2;
            return out;
        }
        std::vector<std::size_t> violators;
        for (std::size_t x = 0; x < num_inputs; ++x)
            if (!in_active[x] && t[x] > lb + 0.5 * tol_nats) violators.push_back(x);
        if (violators.empty())
            throw NonConvergence(
                "capacity certificate did not close despite an exhausted working set");
        const std::size_t grow = std::min<std::size_t>(64, violators.size());
        std::partial_sort(violators.begin(),
                          violators.begin() + static_cast<std::ptrdiff_t>(grow),
                          violators.end(),
                          [&](std::size_t a, std::size_t b) { return t[a] > t[b]; });
        for (std::size_t i = 0; i < grow; ++i) {
            active.push_back(violators[i]);
            in_active[violators[i]] = 1;
        }
    }
    throw NonConvergence("capacity working set grew past the round cap");
}

BaResult ba_dmc_capacity(const std::vector<std::vector<double>> &W, double tol_bits,
                         int max_iter) {
    check_stochastic(W, "channel matrix");
    const std::size_t nx = W.size(), ny = W[0].size();
    std::vector<double> flat(nx * ny);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) flat[x * ny + y] = W[x][y];
    return ba_dmc_capacity(flat, nx, ny, tol_bits, max_iter);
}

ConcaveStepResult inner_concave_step(const std::vector<std::vector<double>> &K,
                                     const std::vector<double> &linear_nats,
                                     double tol_nats, int max_iter,
                                     const std::vector<double> *warm_start) {
    const int nx = static_cast<int>(K.size());
    if (nx == 0) throw IncompatibleDimensions("inner step needs at least one input row");
    const std::size_t ny = K[0].size();
    if (linear_nats.size() != static_cast<std::size_t>(nx))
        throw IncompatibleDimensions("linear reward length mismatch");
    std::vector<double> p(nx, 1.0 / nx);
    if (warm_start != nullptr) {
        if (warm_start->size() != static_cast<std::size_t>(nx))
            throw IncompatibleDimensions("warm start length mismatch");
        double tot = 0.0;
        for (int x = 0; x < nx; ++x) {
            p[x] = std::max((*warm_start)[x], 1e-12);
            tot += p[x];
        }
        for (double &v : p) v /= tot;
    }
    std::vector<double> r(ny), t(nx);
    double ub = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        std::fill(r.begin(), r.end(), 0.0);
        for (int x = 0; x < nx; ++x)
            for (std::size_t y = 0; y < ny; ++y) r[y] += p[x] * K[x][y];
        double lb = 0.0;
        ub = -std::numeric_limits<double>::infinity();
        for (int x = 0; x < nx; ++x) {
            t[x] = letter_divergence_nats(K[x], r) + linear_nats[x];
            lb += p[x] * t[x];
            ub = std::max(ub, t[x]);
        }
        if (ub - lb <= tol_nats) {
            ConcaveStepResult out;
            out.value_nats = ub; // conservative side of the sandwich
            out.input_dist = p;
            return out;
        }
        double tot = 0.0;
        for (int x = 0; x < nx; ++x) {
            p[x] *= std::exp(t[x] - ub);
            tot += p[x];
        }
        for (double &v : p) v /= tot;
    }
    throw NonConvergence("concave step bracket did not close within the iteration cap");
}

namespace {

// Conditional averages of the per-step information density (nats) along one
// simulated path, keyed by (input history, consumed symbol).
std::vector<std::vector<double>> transition_values(const SurrogateFsc &fsc,
                                                   const MarkovInputProcess &input,
                                                   std::int64_t length, std::uint64_t seed) {
    SimulatedPath path = simulate_path(fsc, input, length, seed);
    SampleEntropySteps steps = sample_entropy_steps(fsc, input, path);
    const int nh = input.num_histories();
    const int nv = input.num_symbols;
    std::vector<std::vector<double>> sum(nh, std::vector<double>(nv, 0.0));
    std::vector<std::vector<std::int64_t>> cnt(nh, std::vector<std::int64_t>(nv, 0));
    int h = 0;
    const int k = input.order;
    for (std::int64_t n = 0; n < length; ++n) {
        const int v = path.inputs[static_cast<std::size_t>(n)];
        if (n >= k) {
            const double dens_bits = steps.input_bits[static_cast<std::size_t>(n)] +
                                     steps.output_bits[static_cast<std::size_t>(n)] -
                                     steps.joint_bits[static_cast<std::size_t>(n)];
            sum[h][v] += dens_bits * kLn2;
            cnt[h][v] += 1;
        }
        if (k > 0) {
            if (n < k) {
                h = h * nv + v; // fill the first window
            } else {
                h = input.push(h, v);
            }
        }
    }
    for (int a = 0; a < nh; ++a)
        for (int v = 0; v < nv; ++v) sum[a][v] = cnt[a][v] > 0 ? sum[a][v] / cnt[a][v] : 0.0;
    return sum;
}

} // namespace

GbaaResult gbaa_optimize(const SurrogateFsc &fsc, const GbaaOptions &opts) {
    fsc.validate();
    MarkovInputProcess cur =
        opts.init ? *opts.init : MarkovInputProcess::uniform(fsc.num_inputs, opts.order);
    cur.validate();
    if (cur.num_symbols != fsc.num_inputs)
        throw IncompatibleDimensions("input process symbol count != channel input count");
    if (cur.order != opts.order)
        throw IncompatibleDimensions("input process order != requested order");

    auto check_alive = [&](const MarkovInputProcess &in, int iteration) {
        SupportCheck sc = irreducible_on_support(fsc, in);
        if (!sc.irreducible)
            throw ErgodicityLost("joint input/state chain splits into " +
                                 std::to_string(sc.num_recurrent_classes) +
                                 " recurrent classes at iteration " + std::to_string(iteration));
    };
    auto score = [&](const MarkovInputProcess &in, int iteration) {
        RateOptions ro;
        ro.length = opts.rate_path_length;
        ro.blocks = opts.rate_blocks;
        ro.seed = mix_seed(opts.seed, static_cast<std::uint64_t>(iteration), 1);
        ro.certified = true; // the joint chain was just verified irreducible
        return estimate_info_rate(fsc, in, ro);
    };

    check_alive(cur, 0);
    RateEstimate est = score(cur, 0);

    GbaaResult out;
    out.best = GbaaIterate{cur, est.rate_bits, est.stderr_bits};
    out.rate_trace.push_back(est.rate_bits);
    out.stderr_trace.push_back(est.stderr_bits);

    int stale = 0;
    for (int it = 1; it <= opts.iterations; ++it) {
        std::vector<std::vector<double>> T = transition_values(
            fsc, cur, opts.t_path_length, mix_seed(opts.seed, static_cast<std::uint64_t>(it), 0));
        MarkovInputProcess next = cur;
        for (int a = 0; a < cur.num_histories(); ++a) {
            double tot = 0.0;
            for (int v = 0; v < cur.num_symbols; ++v) {
                double w = cur.kernel[a][v];
                // structural zeros stay exactly zero
                w = w > 0.0 ? std::max(w * std::exp(T[a][v]), opts.kernel_floor) : 0.0;
                next.kernel[a][v] = w;
                tot += w;
            }
            for (int v = 0; v < cur.num_symbols; ++v) next.kernel[a][v] /= tot;
        }
        check_alive(next, it);
        est = score(next, it);
        out.rate_trace.push_back(est.rate_bits);
        out.stderr_trace.push_back(est.stderr_bits);
        cur = next;
        if (est.rate_bits > out.best.rate_bits) {
            out.best = GbaaIterate{cur, est.rate_bits, est.stderr_bits};
            stale = 0;
        } else if (est.rate_bits + 2.0 * est.stderr_bits < out.best.rate_bits && ++stale >= 5) {
            break; // plateau: five consecutive significantly-worse scores
        }
    }
    return out;
}

} // namespace ehcap
