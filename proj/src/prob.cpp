#include "ehcap/prob.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ehcap {

double zero_battery_capacity(double q) {
    if (q < 0.0 || q > 1.0) throw ConfigError("crossover must be in [0,1]");
    if (std::abs(q - 0.5) < 1e-15) return 0.0;
    const double cap = 1.0 - binary_entropy(q);
    const double alpha = std::exp2(-cap / (0.5 - q));
    const double pi0 = 1.0 / (1.0 + alpha);
    const double share = (pi0 - 0.5) / (0.5 - q);
    return binary_entropy(pi0) - 1.0 + share * cap;
}

double log_sum_exp(const std::vector<double> &a) {
    if (a.empty()) throw ConfigError("log_sum_exp of empty set");
    double m = *std::max_element(a.begin(), a.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : a) s += std::exp(v - m);
    return m + std::log(s);
}

double entropy_bits(const std::vector<double> &w) {
    double tot = 0.0;
    for (double v : w) tot += v;
    if (tot <= 0.0) return 0.0;
    double h = 0.0;
    for (double v : w)
        if (v > 0.0) h -= (v / tot) * std::log2(v / tot);
    return h;
}

void check_distribution(const std::vector<double> &p, const std::string &what,
                        double tol) {
    double tot = 0.0;
    for (double v : p) {
        if (v < -tol) throw NotStochastic(what + ": negative probability");
        tot += v;
    }
    if (std::abs(tot - 1.0) > tol)
        throw NotStochastic(what + ": probabilities sum to " + std::to_string(tot));
}

void check_stochastic(const std::vector<std::vector<double>> &rows,
                      const std::string &what, double tol) {
    if (rows.empty()) throw NotStochastic(what + ": empty kernel");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
            throw IncompatibleDimensions(what + ": ragged rows");
        check_distribution(rows[i], what + " row " + std::to_string(i), tol);
    }
}

std::uint64_t fnv1a(const std::string &bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fingerprint_hex(const std::string &bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(bytes)));
    return std::string(buf);
}

MeanStderr mean_stderr(const std::vector<double> &xs) {
    MeanStderr r;
    if (xs.empty()) return r;
    const double n = static_cast<double>(xs.size());
    for (double v : xs) r.mean += v;
    r.mean /= n;
    if (xs.size() < 2) return r;
    double ss = 0.0;
    for (double v : xs) ss += (v - r.mean) * (v - r.mean);
    r.stderr_of_mean = std::sqrt(ss / (n - 1.0) / n);
    return r;
}

} // namespace ehcap
