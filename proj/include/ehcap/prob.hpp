#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ehcap/errors.hpp"

namespace ehcap {

inline constexpr double kLn2 = 0.6931471805599453094;

// Binary entropy in bits; H(0) = H(1) = 0.
inline double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

inline double bsc_capacity(double q) { return 1.0 - binary_entropy(q); }

// Shannon capacity of the two-input channel {(1-q, q), (1/2, 1/2)} in closed
// form; this is the single-letter optimum when transmission is possible only
// in the half of the slots with fresh energy.  Returns 0 at q = 1/2.
double zero_battery_capacity(double q);

inline double xlogx(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

// log(sum exp(a_i)) in natural log, stable for large magnitudes.
double log_sum_exp(const std::vector<double> &a);

// Entropy in bits of a distribution given as nonnegative weights (normalized
// internally).
double entropy_bits(const std::vector<double> &w);

void check_distribution(const std::vector<double> &p, const std::string &what,
                        double tol = 1e-9);

// Row-stochastic check for a dense matrix stored as vector of rows.
void check_stochastic(const std::vector<std::vector<double>> &rows,
                      const std::string &what, double tol = 1e-9);

// Deterministic RNG used everywhere randomness is needed.  The uniform mapping
// is fixed explicitly (not distribution-class dependent) so identical seeds
// give identical streams on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // Index sampled by CDF walk over nonnegative weights summing to ~1.
    int sample(const std::vector<double> &p) {
        double u = uniform(), acc = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            acc += p[i];
            if (u < acc) return static_cast<int>(i);
        }
        // Fall back to the last positive entry (guards rounding at u ~ 1).
        for (std::size_t i = p.size(); i-- > 0;)
            if (p[i] > 0.0) return static_cast<int>(i);
        return static_cast<int>(p.size()) - 1;
    }

    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
};

// FNV-1a over a byte string; used for stable config fingerprints.
std::uint64_t fnv1a(const std::string &bytes);
std::string fingerprint_hex(const std::string &bytes);

// Mean and standard error of the mean of a sample.
struct MeanStderr {
    double mean = 0.0;
    double stderr_of_mean = 0.0;
};
MeanStderr mean_stderr(const std::vector<double> &xs);

} // namespace ehcap
