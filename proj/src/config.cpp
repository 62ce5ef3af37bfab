#include "ehcap/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ehcap/errors.hpp"
#include "ehcap/prob.hpp"

namespace ehcap {

namespace {

std::string trim(const std::string &s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> tokens(const std::string &s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

std::string normalize_number(const std::string &tok) {
    char *end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == nullptr || *end != '\0' || end == tok.c_str()) return tok;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string normalize_value(const std::string &value) {
    std::string out;
    for (const auto &t : tokens(value)) {
        if (!out.empty()) out += ' ';
        out += normalize_number(t);
    }
    return out;
}

double parse_double(const std::string &tok, const std::string &what) {
    char *end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == nullptr || *end != '\0' || end == tok.c_str())
        throw ConfigError("bad number for " + what + ": '" + tok + "'");
    return v;
}

int parse_int(const std::string &tok, const std::string &what) {
    double v = parse_double(tok, what);
    int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw ConfigError(what + " must be an integer, got '" + tok + "'");
    return i;
}

std::vector<int> parse_ints(const std::string &value, const std::string &what) {
    std::vector<int> out;
    for (const auto &t : tokens(value)) out.push_back(parse_int(t, what));
    return out;
}

std::vector<double> parse_doubles(const std::string &value, const std::string &what) {
    std::vector<double> out;
    for (const auto &t : tokens(value)) out.push_back(parse_double(t, what));
    return out;
}

bool repeatable(const std::string &key) {
    return key == "dmc_row" || key == "harvest_row";
}

} // namespace

ModelConfig ModelConfig::parse_text(const std::string &text) {
    ModelConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) +
                                           ": empty key");
        if (!repeatable(key) && cfg.has(key))
            throw ConfigError("config: duplicate key '" + key + "'");
        cfg.entries.emplace_back(key, value);
    }
    return cfg;
}

ModelConfig ModelConfig::parse_file(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_text(ss.str());
}

bool ModelConfig::has(const std::string &key) const {
    for (const auto &e : entries)
        if (e.first == key) return true;
    return false;
}

std::string ModelConfig::get(const std::string &key) const {
    for (const auto &e : entries)
        if (e.first == key) return e.second;
    throw ConfigError("config: missing key '" + key + "'");
}

std::string ModelConfig::get_or(const std::string &key,
                                const std::string &fallback) const {
    for (const auto &e : entries)
        if (e.first == key) return e.second;
    return fallback;
}

std::vector<std::string> ModelConfig::get_all(const std::string &key) const {
    std::vector<std::string> out;
    for (const auto &e : entries)
        if (e.first == key) out.push_back(e.second);
    return out;
}

void ModelConfig::set(const std::string &key, const std::string &value) {
    entries.erase(std::remove_if(entries.begin(), entries.end(),
                                 [&](const auto &e) { return e.first == key; }),
                  entries.end());
    entries.emplace_back(key, value);
}

std::string ModelConfig::canonical() const {
    // Sort by key but keep repeated rows in file order (stable sort).
    std::vector<std::pair<std::string, std::string>> sorted = entries;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto &a, const auto &b) { return a.first < b.first; });
    std::string out;
    for (const auto &e : sorted) {
        out += e.first;
        out += " = ";
        out += normalize_value(e.second);
        out += '\n';
    }
    return out;
}

std::string ModelConfig::fingerprint() const {
    return fingerprint_hex(canonical());
}

SystemModel model_from_config(const ModelConfig &cfg) {
    SystemModel m;

    std::string scen = cfg.get_or("scenario", "eh-sc1");
    if (scen == "eh-sc1") m.scenario = Scenario::EhSc1;
    else if (scen == "eh-sc2") m.scenario = Scenario::EhSc2;
    else if (scen == "fsc-x") m.scenario = Scenario::FscX;
    else throw ConfigError("unknown scenario '" + scen + "'");

    std::string rule = cfg.get("rule");
    if (rule == "additive") m.rule = EnergyRule::Additive;
    else if (rule == "store-first") m.rule = EnergyRule::StoreFirst;
    else if (rule == "lossy-store-first") m.rule = EnergyRule::LossyStoreFirst;
    else throw ConfigError("unknown rule '" + rule + "'");

    m.battery_cap = parse_int(cfg.get("battery_cap"), "battery_cap");
    m.leak_beta = parse_double(cfg.get_or("leak_beta", "1"), "leak_beta");
    m.harvest_eta = parse_double(cfg.get_or("harvest_eta", "1"), "harvest_eta");

    m.input_alphabet = parse_ints(cfg.get("input_alphabet"), "input_alphabet");
    m.cost = parse_ints(cfg.get("cost"), "cost");

    if (cfg.has("dmc")) {
        auto t = tokens(cfg.get("dmc"));
        if (t.size() == 2 && t[0] == "bsc") {
            double q = parse_double(t[1], "bsc crossover");
            if (q < 0.0 || q > 1.0) throw ConfigError("bsc crossover must be in [0,1]");
            if (m.input_alphabet.size() != 2)
                throw ConfigError("dmc = bsc needs a binary input alphabet");
            m.output_alphabet = {0, 1};
            m.dmc = {{1.0 - q, q}, {q, 1.0 - q}};
        } else {
            throw ConfigError("unknown dmc shorthand '" + cfg.get("dmc") + "'");
        }
        if (!cfg.get_all("dmc_row").empty())
            throw ConfigError("give either dmc or dmc_row lines, not both");
    } else {
        auto rows = cfg.get_all("dmc_row");
        if (rows.empty()) throw ConfigError("config needs dmc or dmc_row lines");
        for (const auto &r : rows) m.dmc.push_back(parse_doubles(r, "dmc_row"));
        if (cfg.has("output_alphabet"))
            m.output_alphabet = parse_ints(cfg.get("output_alphabet"), "output_alphabet");
        else
            for (std::size_t y = 0; y < m.dmc.at(0).size(); ++y)
                m.output_alphabet.push_back(static_cast<int>(y));
    }

    m.harvest.alphabet = parse_ints(cfg.get("harvest_alphabet"), "harvest_alphabet");
    if (cfg.has("harvest")) {
        auto t = tokens(cfg.get("harvest"));
        if (t.size() == 2 && t[0] == "bernoulli") {
            double p = parse_double(t[1], "harvest rate");
            if (p < 0.0 || p > 1.0) throw ConfigError("harvest rate must be in [0,1]");
            if (m.harvest.alphabet.size() != 2)
                throw ConfigError("harvest = bernoulli needs a binary harvest alphabet");
            m.harvest.order = 0;
            m.harvest.kernel = {{1.0 - p, p}};
        } else {
            throw ConfigError("unknown harvest shorthand '" + cfg.get("harvest") + "'");
        }
        if (!cfg.get_all("harvest_row").empty())
            throw ConfigError("give either harvest or harvest_row lines, not both");
    } else {
        m.harvest.order = parse_int(cfg.get_or("harvest_order", "0"), "harvest_order");
        auto rows = cfg.get_all("harvest_row");
        if (rows.empty()) throw ConfigError("config needs harvest or harvest_row lines");
        for (const auto &r : rows)
            m.harvest.kernel.push_back(parse_doubles(r, "harvest_row"));
        if (cfg.has("harvest_prehistory"))
            m.harvest.prehistory =
                parse_ints(cfg.get("harvest_prehistory"), "harvest_prehistory");
    }
    if (m.harvest.order > 0 && m.harvest.prehistory.empty())
        throw ConfigError("harvest_order > 0 needs harvest_prehistory");

    m.finalize();
    return m;
}

void set_bsc_crossover(ModelConfig &cfg, double q) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", q);
    cfg.entries.erase(std::remove_if(cfg.entries.begin(), cfg.entries.end(),
                                     [](const auto &e) { return e.first == "dmc_row"; }),
                      cfg.entries.end());
    cfg.set("dmc", std::string("bsc ") + buf);
}

void set_bernoulli_harvest(ModelConfig &cfg, double p) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", p);
    cfg.entries.erase(
        std::remove_if(cfg.entries.begin(), cfg.entries.end(),
                       [](const auto &e) { return e.first == "harvest_row"; }),
        cfg.entries.end());
    cfg.set("harvest", std::string("bernoulli ") + buf);
}

} // namespace ehcap
