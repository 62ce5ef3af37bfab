#pragma once

#include <map>
#include <string>
#include <vector>

#include "ehcap/model.hpp"

namespace ehcap {

// Flat key/value model configuration.  One `key = value` pair per line, `#`
// starts a comment.  Repeated keys are allowed only for `dmc_row` and
// `harvest_row`, which accumulate in file order.
struct ModelConfig {
    std::vector<std::pair<std::string, std::string>> entries;

    static ModelConfig parse_file(const std::string &path);
    static ModelConfig parse_text(const std::string &text);

    bool has(const std::string &key) const;
    std::string get(const std::string &key) const; // throws ConfigError if absent
    std::string get_or(const std::string &key, const std::string &fallback) const;
    std::vector<std::string> get_all(const std::string &key) const;
    void set(const std::string &key, const std::string &value); // replaces

    // Canonical serialization (sorted keys, normalized numbers) used for the
    // model fingerprint carried on every output row.
    std::string canonical() const;
    std::string fingerprint() const;
};

SystemModel model_from_config(const ModelConfig &cfg);

// Fixture helpers used by tests and the reproduce-fig command: rewrite the
// sweepable parameters of a config built around `dmc = bsc <q>` and a
// Bernoulli harvest.
void set_bsc_crossover(ModelConfig &cfg, double q);
void set_bernoulli_harvest(ModelConfig &cfg, double p);

} // namespace ehcap
