#pragma once

#include <stdexcept>
#include <string>

namespace ehcap {

// Configuration or argument rejected before any computation started.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string &what) : std::runtime_error(what) {}
};

struct NotStochastic : ConfigError {
    explicit NotStochastic(const std::string &what) : ConfigError(what) {}
};

struct InfeasibleInput : std::runtime_error {
    explicit InfeasibleInput(const std::string &what) : std::runtime_error(what) {}
};

struct IncompatibleDimensions : ConfigError {
    explicit IncompatibleDimensions(const std::string &what) : ConfigError(what) {}
};

// An enumeration (policies, strategies, block inputs) would exceed its cap.
struct AlphabetTooLarge : std::runtime_error {
    explicit AlphabetTooLarge(const std::string &what) : std::runtime_error(what) {}
};

// A computation would exceed an explicit resource budget.  Budgets are hard
// errors, never silent truncation.
struct BudgetExceeded : std::runtime_error {
    explicit BudgetExceeded(const std::string &what) : std::runtime_error(what) {}
};

struct NonConvergence : std::runtime_error {
    explicit NonConvergence(const std::string &what) : std::runtime_error(what) {}
};

struct RequiresIidHarvest : ConfigError {
    explicit RequiresIidHarvest(const std::string &what) : ConfigError(what) {}
};

// Long-run estimates are refused without an ergodicity certificate unless the
// caller explicitly overrides.
struct NoErgodicityCertificate : std::runtime_error {
    explicit NoErgodicityCertificate(const std::string &what) : std::runtime_error(what) {}
};

// An optimizer stepped onto a kernel whose joint chain lost irreducibility.
struct ErgodicityLost : std::runtime_error {
    explicit ErgodicityLost(const std::string &what) : std::runtime_error(what) {}
};

} // namespace ehcap
