#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ehcap/fsc.hpp"
#include "ehcap/model.hpp"

namespace ehcap {

// Dobrushin contraction coefficient of a row-stochastic matrix:
// max over row pairs of the one-sided total variation.  delta < 1 iff the
// matrix is scrambling (every two rows overlap).
double dobrushin_delta(const std::vector<std::vector<double>> &P);
bool is_scrambling(const std::vector<std::vector<double>> &P);
bool has_positive_column(const std::vector<std::vector<double>> &P);

enum class ErgodicityVerdict {
    CertifiedAmsErgodic,
    CertifiedIndecomposable,
    Inconclusive,
};

std::string to_string(ErgodicityVerdict v);

struct ErgodicityReport {
    ErgodicityVerdict verdict = ErgodicityVerdict::Inconclusive;
    std::string condition;            // which test fired
    std::string witness;              // human-readable evidence
    std::optional<int> word_length;   // for word-based certificates
    bool decomposability_witness = false; // a bad cycle was found at the cap

    bool certified() const { return verdict != ErgodicityVerdict::Inconclusive; }
};

// Searches for a horizon n <= depth_cap such that every input word of length
// n forces a positive column in the product of state-marginal matrices.
// Monotone: once a support profile gains a common state it keeps it, so the
// search explores only the "bad" frontier.  If the bad frontier cycles the
// report is Inconclusive with a decomposability witness.
ErgodicityReport check_indecomposable(const SurrogateFsc &fsc, int depth_cap = 64);

// Closed-form sufficient conditions on the model (always-available packet,
// i.i.d. full-support interval conditions), optionally followed by a search
// for a merging word with positive probability under `input`.
ErgodicityReport check_sufficient_conditions(const SystemModel &model,
                                             const SurrogateFsc &fsc,
                                             const MarkovInputProcess *input = nullptr,
                                             int depth_cap = 64);

// Restriction of a finite chain to the support of its long-run mean
// occupation started from `initial`.  Computed exactly from the recurrent
// classes: the support is the union of recurrent classes reachable from the
// initial support, and the chain is AMS-ergodic iff that union is a single
// class.
struct SupportCheck {
    bool irreducible = false;
    std::vector<int> support;         // sorted state indices
    int num_recurrent_classes = 0;
};

SupportCheck irreducible_on_support(const std::vector<std::vector<double>> &P,
                                    const std::vector<double> &initial);

// Convenience wrapper: joint input/state chain of (fsc, input).
SupportCheck irreducible_on_support(const SurrogateFsc &fsc,
                                    const MarkovInputProcess &input);

} // namespace ehcap
