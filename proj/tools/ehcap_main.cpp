// ehcap: batch front end for the energy-harvesting channel library.
//
// Subcommands: model-info, ergodicity, rate, optimize, dirinfo, bounds,
// reproduce-fig.  Exit codes: 0 success, 2 configuration/argument error,
// 3 budget exceeded, 4 missing ergodicity certificate (without --force).
// File outputs are written atomically (temp file + rename) and every output
// row carries the fingerprint of the canonicalized model config, so a rerun
// with identical arguments, seed, and thread count is byte-identical.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ehcap/bounds.hpp"
#include "ehcap/config.hpp"
#include "ehcap/ergodicity.hpp"
#include "ehcap/errors.hpp"
#include "ehcap/fsc.hpp"
#include "ehcap/inforate.hpp"
#include "ehcap/model.hpp"
#include "ehcap/optimize.hpp"
#include "ehcap/prob.hpp"

using nlohmann::json;

namespace {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char *env = std::getenv("EHCAP_THREADS")) {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
        throw ehcap::ConfigError("EHCAP_THREADS must be a positive integer");
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void write_atomic(const std::string &path, const std::string &content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ehcap::ConfigError("cannot open output file: " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw ehcap::ConfigError("short write to output file: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw ehcap::ConfigError("cannot move output into place: " + ec.message());
}

void emit(const std::string &content, const std::string &out_path) {
    if (out_path.empty()) {
        std::fwrite(content.data(), 1, content.size(), stdout);
        return;
    }
    write_atomic(out_path, content);
}

std::string join_ints(const std::vector<int> &v) {
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(v[i]);
    }
    s += "}";
    return s;
}

int default_memory_packets(const ehcap::SystemModel &model) {
    return model.scenario == ehcap::Scenario::EhSc2 ? 1 : 0;
}

// Scenario-appropriate surrogate channel over bounded-memory policies.
ehcap::SurrogateFsc make_surrogate(const ehcap::SystemModel &model, int memory_states,
                                   int memory_packets) {
    ehcap::SurrogateOptions so;
    so.memory_states = memory_states;
    so.memory_packets = memory_packets;
    switch (model.scenario) {
    case ehcap::Scenario::EhSc1:
        return ehcap::build_fsc_sc1(model, so);
    case ehcap::Scenario::EhSc2:
        return ehcap::build_fsc_sc2(model, so);
    case ehcap::Scenario::FscX: {
        const ehcap::StateChannel chan = ehcap::state_channel_from_model(model);
        // Initial state: empty battery plus one harvest draw.
        std::vector<double> init(static_cast<std::size_t>(chan.num_states), 0.0);
        const std::vector<double> &pe = model.harvest.row(0);
        for (int e = 0; e < model.harvest.num_symbols(); ++e) {
            const int s = model.available_energy(0, model.harvest.alphabet[e]);
            init[static_cast<std::size_t>(model.state_index(s))] += pe[e];
        }
        return ehcap::build_fsc_x(chan, memory_states, init, so.policy_cap);
    }
    }
    throw ehcap::ConfigError("unknown scenario");
}

ehcap::MarkovInputProcess load_input_process(const std::string &spec, int num_inputs) {
    if (spec == "iud") return ehcap::MarkovInputProcess::uniform(num_inputs, 0);
    const std::string prefix = "markov:";
    if (spec.rfind(prefix, 0) != 0)
        throw ehcap::ConfigError("--input must be 'iud' or 'markov:<file>'");
    const std::string path = spec.substr(prefix.size());
    std::ifstream in(path);
    if (!in) throw ehcap::ConfigError("cannot open input-process file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception &e) {
        throw ehcap::ConfigError("input-process file is not valid JSON: " +
                                 std::string(e.what()));
    }
    ehcap::MarkovInputProcess mp;
    try {
        mp.order = j.at("order").get<int>();
        mp.kernel = j.at("kernel").get<std::vector<std::vector<double>>>();
        if (j.contains("initial")) mp.initial = j.at("initial").get<std::vector<double>>();
    } catch (const std::exception &e) {
        throw ehcap::ConfigError("input-process file missing fields: " +
                                 std::string(e.what()));
    }
    mp.num_symbols = mp.kernel.empty() ? 0 : static_cast<int>(mp.kernel.front().size());
    if (mp.num_symbols != num_inputs)
        throw ehcap::IncompatibleDimensions(
            "input process symbol count " + std::to_string(mp.num_symbols) +
            " != surrogate input count " + std::to_string(num_inputs));
    mp.validate();
    return mp;
}

json report_to_json(const ehcap::ErgodicityReport &rep) {
    json j;
    j["verdict"] = ehcap::to_string(rep.verdict);
    j["certified"] = rep.certified();
    j["condition"] = rep.condition;
    j["witness"] = rep.witness;
    if (rep.word_length)
        j["word_length"] = *rep.word_length;
    else
        j["word_length"] = nullptr;
    j["decomposability_witness"] = rep.decomposability_witness;
    return j;
}

std::vector<double> parse_grid(const std::string &spec, char axis) {
    // "p=0.1:0.9:0.1" or a comma list "p=0.1,0.25,0.5"
    const std::string prefix = std::string(1, axis) + "=";
    if (spec.rfind(prefix, 0) != 0)
        throw ehcap::ConfigError("--grid must start with '" + prefix + "'");
    const std::string body = spec.substr(prefix.size());
    std::vector<double> grid;
    try {
        if (body.find(':') != std::string::npos) {
            double a = 0.0, b = 0.0, step = 0.0;
            if (std::sscanf(body.c_str(), "%lf:%lf:%lf", &a, &b, &step) != 3 || step <= 0.0)
                throw ehcap::ConfigError("--grid needs start:end:step with positive step");
            for (double v = a; v <= b + 0.5 * step; v += step) grid.push_back(v);
        } else {
            std::stringstream ss(body);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) grid.push_back(std::stod(tok));
        }
    } catch (const std::invalid_argument &) {
        throw ehcap::ConfigError("--grid has a non-numeric entry: " + body);
    }
    if (grid.empty()) throw ehcap::ConfigError("--grid produced no points");
    return grid;
}

std::string csv_with_notes(const ehcap::SweepResult &sweep, const std::string &fingerprint,
                           const std::vector<std::string> &extra_notes) {
    std::string out = ehcap::curves_to_csv(sweep, fingerprint);
    for (const std::string &n : extra_notes) out += "# note: " + n + "\n";
    for (const std::string &n : sweep.notes) out += "# note: " + n + "\n";
    return out;
}

int run(int argc, char **argv) {
    CLI::App app{"capacity bounds and information rates for discrete "
                 "energy-harvesting channels with finite battery"};
    app.require_subcommand(1);

    // ---- model-info ----
    auto *info = app.add_subcommand("model-info", "print model and surrogate dimensions");
    std::string info_model;
    int info_m = 1, info_l = -1;
    bool info_json = false;
    info->add_option("model", info_model, "model config file")->required();
    info->add_option("-m,--memory-states", info_m, "policy state-history length");
    info->add_option("-l,--memory-packets", info_l,
                     "policy harvest-history length (default by scenario)");
    info->add_flag("--json", info_json, "machine-readable output");

    // ---- ergodicity ----
    auto *erg = app.add_subcommand("ergodicity", "certify long-run convergence conditions");
    std::string erg_model;
    int erg_m = 1, erg_l = -1, erg_depth = 64;
    bool erg_json = false;
    erg->add_option("model", erg_model, "model config file")->required();
    erg->add_option("-m,--memory-states", erg_m, "policy state-history length");
    erg->add_option("-l,--memory-packets", erg_l, "policy harvest-history length");
    erg->add_option("--depth", erg_depth, "merging-word search cap");
    erg->add_flag("--json", erg_json, "machine-readable output");

    // ---- rate ----
    auto *rate = app.add_subcommand("rate", "estimate an achievable information rate");
    std::string rate_model, rate_input = "iud", rate_out;
    std::int64_t rate_length = 1000000;
    int rate_blocks = 20, rate_m = 1, rate_l = -1, rate_exact_n = 0;
    std::uint64_t rate_seed = 0;
    bool rate_force = false;
    rate->add_option("model", rate_model, "model config file")->required();
    rate->add_option("--input", rate_input, "'iud' or 'markov:<json file>'");
    rate->add_option("--length", rate_length, "simulated path length")
        ->check(CLI::PositiveNumber);
    rate->add_option("--blocks", rate_blocks, "bootstrap block count")
        ->check(CLI::PositiveNumber);
    rate->add_option("--seed", rate_seed, "simulation seed")->required();
    rate->add_option("--exact-n", rate_exact_n, "also compute the exact block value at n")
        ->check(CLI::PositiveNumber);
    rate->add_option("-m,--memory-states", rate_m, "policy state-history length");
    rate->add_option("-l,--memory-packets", rate_l, "policy harvest-history length");
    rate->add_flag("--force", rate_force, "run without an ergodicity certificate");
    rate->add_option("--out", rate_out, "write JSON here instead of stdout");

    // ---- optimize ----
    auto *opt = app.add_subcommand("optimize", "optimize a Markov input process");
    std::string opt_model, opt_out;
    int opt_order = 0, opt_iters = 30, opt_m = 1, opt_l = -1;
    std::int64_t opt_rate_length = 300000, opt_t_length = 100000;
    std::uint64_t opt_seed = 0;
    opt->add_option("model", opt_model, "model config file")->required();
    opt->add_option("--order", opt_order, "Markov order of the input process")
        ->check(CLI::NonNegativeNumber);
    opt->add_option("--iters", opt_iters, "ascent iterations")->check(CLI::PositiveNumber);
    opt->add_option("--seed", opt_seed, "simulation seed")->required();
    opt->add_option("--length", opt_rate_length, "rate-estimate path length")
        ->check(CLI::PositiveNumber);
    opt->add_option("--t-length", opt_t_length, "value-estimate path length")
        ->check(CLI::PositiveNumber);
    opt->add_option("-m,--memory-states", opt_m, "policy state-history length");
    opt->add_option("-l,--memory-packets", opt_l, "policy harvest-history length");
    opt->add_option("--out", opt_out, "write JSON here instead of stdout");

    // ---- dirinfo ----
    auto *dir = app.add_subcommand("dirinfo",
                                   "directed-information block upper bound (genie-aided)");
    std::string dir_model, dir_out;
    int dir_block = 0, dir_sweeps = 400;
    double dir_tol = 1e-6, dir_mass_drop = 0.0;
    std::uint64_t dir_budget = 400000000ULL;
    dir->add_option("model", dir_model, "model config file")->required();
    dir->add_option("--block", dir_block, "block length N")->required()
        ->check(CLI::PositiveNumber);
    dir->add_option("--tol", dir_tol, "convergence tolerance in bits per use")
        ->check(CLI::PositiveNumber);
    dir->add_option("--max-sweeps", dir_sweeps, "sweep cap")->check(CLI::PositiveNumber);
    dir->add_option("--budget", dir_budget, "trajectory-visit budget")
        ->check(CLI::PositiveNumber);
    dir->add_option("--mass-drop", dir_mass_drop,
                    "harvest-word tail mass to truncate (adds a bounded slack)");
    dir->add_option("--out", dir_out, "write JSON here instead of stdout");

    // ---- bounds ----
    auto *bnd = app.add_subcommand("bounds", "sweep capacity bounds over a harvest grid");
    std::string bnd_model, bnd_kinds = "ub-sc1-dp,ub-lnx,ub-sc2-ln,ub-sc2,lb-sc2";
    std::string bnd_grid, bnd_out;
    int bnd_n = 10000, bnd_dirinfo_n = 8, bnd_lb_n = 3, bnd_gbaa_iters = 12, bnd_threads = 0;
    std::int64_t bnd_length = 300000;
    std::uint64_t bnd_seed = 0;
    bnd->add_option("model", bnd_model, "model config file")->required();
    bnd->add_option("--kinds", bnd_kinds, "comma list of curve kinds");
    bnd->add_option("--grid", bnd_grid, "harvest grid, e.g. p=0.1:0.9:0.1");
    bnd->add_option("--n", bnd_n, "recursion depth for the per-use bounds");
    bnd->add_option("--dirinfo-n", bnd_dirinfo_n, "block length for ub-sc2")
        ->check(CLI::PositiveNumber);
    bnd->add_option("--lb-n", bnd_lb_n, "block length for lb-sc2")
        ->check(CLI::PositiveNumber);
    bnd->add_option("--length", bnd_length, "rate path length for lb-r kinds")
        ->check(CLI::PositiveNumber);
    bnd->add_option("--gbaa-iters", bnd_gbaa_iters, "ascent iterations for lb-r kinds")
        ->check(CLI::PositiveNumber);
    bnd->add_option("--seed", bnd_seed, "seed (required for lb-r kinds)");
    bnd->add_option("--threads", bnd_threads, "worker threads (default: cores)");
    bnd->add_option("--out", bnd_out, "write CSV here instead of stdout");

    // ---- reproduce-fig ----
    auto *fig = app.add_subcommand("reproduce-fig", "emit the curves of a summary figure");
    int fig_id = 0, fig_budget_n = 8, fig_dp_n = 10000, fig_lb_n = 3, fig_gbaa_iters = 12;
    int fig_max_order = 2, fig_threads = 0;
    std::int64_t fig_length = 300000;
    std::uint64_t fig_seed = 0;
    std::string fig_fixtures, fig_grid, fig_out;
    fig->add_option("figure", fig_id, "figure id: 3, 4, or 5")->required();
    fig->add_option("--seed", fig_seed, "simulation seed")->required();
    fig->add_option("--budget-n", fig_budget_n, "block length for ub-sc2")
        ->check(CLI::PositiveNumber);
    fig->add_option("--dp-n", fig_dp_n, "recursion depth for per-use bounds")
        ->check(CLI::PositiveNumber);
    fig->add_option("--lb-n", fig_lb_n, "block length for lb-sc2")
        ->check(CLI::PositiveNumber);
    fig->add_option("--length", fig_length, "rate path length")
        ->check(CLI::PositiveNumber);
    fig->add_option("--gbaa-iters", fig_gbaa_iters, "ascent iterations")
        ->check(CLI::PositiveNumber);
    fig->add_option("--max-order", fig_max_order, "largest Markov input order")
        ->check(CLI::NonNegativeNumber);
    fig->add_option("--grid", fig_grid, "override the sweep grid");
    fig->add_option("--fixtures", fig_fixtures,
                    "fixture directory (default: $EHCAP_FIXTURE_DIR or ./fixtures)");
    fig->add_option("--threads", fig_threads, "worker threads (default: cores)");
    fig->add_option("--out", fig_out, "write CSV here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 2;
    }

    if (info->parsed()) {
        const ehcap::ModelConfig cfg = ehcap::ModelConfig::parse_file(info_model);
        const ehcap::SystemModel model = ehcap::model_from_config(cfg);
        const int l = info_l < 0 ? default_memory_packets(model) : info_l;
        const ehcap::SurrogateFsc fsc = make_surrogate(model, info_m, l);
        if (info_json) {
            json j;
            j["scenario"] = ehcap::to_string(model.scenario);
            j["battery_capacity"] = model.battery_cap;
            j["input_alphabet"] = model.input_alphabet;
            j["costs"] = model.cost;
            j["num_outputs"] = model.num_outputs();
            j["harvest"] = {{"order", model.harvest.order},
                            {"alphabet", model.harvest.alphabet},
                            {"iid", model.harvest.iid()}};
            j["energy_states"] = model.energy_states;
            j["surrogate"] = {{"memory_states", info_m},
                              {"memory_packets", l},
                              {"num_policies", fsc.num_inputs},
                              {"num_hidden_states", fsc.num_states},
                              {"separable", fsc.check_separable()}};
            j["fingerprint"] = cfg.fingerprint();
            emit(j.dump(2) + "\n", "");
        } else {
            std::string s;
            s += "scenario:      " + ehcap::to_string(model.scenario) + "\n";
            s += "battery cap:   " + std::to_string(model.battery_cap) + "\n";
            s += "inputs:        " + join_ints(model.input_alphabet) + ", costs " +
                 join_ints(model.cost) + "\n";
            s += "outputs:       " + std::to_string(model.num_outputs()) + "\n";
            s += "harvest:       " + std::string(model.harvest.iid() ? "iid" : "markov") +
                 " over " + join_ints(model.harvest.alphabet) + "\n";
            s += "energy states: S = " + join_ints(model.energy_states) + "\n";
            s += "policies:      |V(m=" + std::to_string(info_m) + ")| = " +
                 std::to_string(fsc.num_inputs) + "\n";
            s += "hidden states: |Z| = " + std::to_string(fsc.num_states) + "\n";
            s += "fingerprint:   " + cfg.fingerprint() + "\n";
            emit(s, "");
        }
        return 0;
    }

    if (erg->parsed()) {
        const ehcap::ModelConfig cfg = ehcap::ModelConfig::parse_file(erg_model);
        const ehcap::SystemModel model = ehcap::model_from_config(cfg);
        const int l = erg_l < 0 ? default_memory_packets(model) : erg_l;
        const ehcap::SurrogateFsc fsc = make_surrogate(model, erg_m, l);
        const ehcap::MarkovInputProcess iud =
            ehcap::MarkovInputProcess::uniform(fsc.num_inputs, 0);
        const ehcap::ErgodicityReport rep =
            ehcap::check_sufficient_conditions(model, fsc, &iud, erg_depth);
        if (erg_json) {
            json j = report_to_json(rep);
            j["fingerprint"] = cfg.fingerprint();
            emit(j.dump(2) + "\n", "");
        } else {
            std::string s;
            s += "verdict:   " + ehcap::to_string(rep.verdict) + "\n";
            s += "condition: " + (rep.condition.empty() ? "-" : rep.condition) + "\n";
            s += "witness:   " + (rep.witness.empty() ? "-" : rep.witness) + "\n";
            if (rep.word_length)
                s += "word length: " + std::to_string(*rep.word_length) + "\n";
            if (rep.decomposability_witness)
                s += "decomposability witness found at the search cap\n";
            s += "fingerprint: " + cfg.fingerprint() + "\n";
            emit(s, "");
        }
        return 0;
    }

    if (rate->parsed()) {
        const ehcap::ModelConfig cfg = ehcap::ModelConfig::parse_file(rate_model);
        const ehcap::SystemModel model = ehcap::model_from_config(cfg);
        const int l = rate_l < 0 ? default_memory_packets(model) : rate_l;
        const ehcap::SurrogateFsc fsc = make_surrogate(model, rate_m, l);
        const ehcap::MarkovInputProcess input = load_input_process(rate_input, fsc.num_inputs);
        const ehcap::ErgodicityReport rep =
            ehcap::check_sufficient_conditions(model, fsc, &input);
        if (!rep.certified() && !rate_force)
            throw ehcap::NoErgodicityCertificate(
                "no ergodicity certificate for this model/input; pass --force to estimate "
                "anyway");
        if (!rep.certified())
            std::fprintf(stderr,
                         "warning: estimating without an ergodicity certificate (--force)\n");
        ehcap::RateOptions ro;
        ro.length = rate_length;
        ro.blocks = rate_blocks;
        ro.seed = rate_seed;
        ro.certified = rep.certified();
        ro.force = rate_force;
        const ehcap::RateEstimate est = ehcap::estimate_info_rate(fsc, input, ro);
        json j;
        j["command"] = "rate";
        j["fingerprint"] = cfg.fingerprint();
        j["input"] = rate_input;
        j["surrogate"] = {{"memory_states", rate_m}, {"memory_packets", l}};
        j["certificate"] = report_to_json(rep);
        j["rate_bits"] = est.rate_bits;
        j["stderr_bits"] = est.stderr_bits;
        j["input_entropy_bits"] = est.input_entropy_bits;
        j["output_entropy_bits"] = est.output_entropy_bits;
        j["joint_entropy_bits"] = est.joint_entropy_bits;
        j["length"] = est.length;
        j["blocks"] = est.blocks;
        j["seed"] = est.seed;
        if (rate_exact_n > 0) {
            const double exact = ehcap::exact_block_mi(fsc, input, rate_exact_n);
            j["exact"] = {{"n", rate_exact_n}, {"bits_per_use", exact}};
        }
        emit(j.dump(2) + "\n", rate_out);
        return 0;
    }

    if (opt->parsed()) {
        const ehcap::ModelConfig cfg = ehcap::ModelConfig::parse_file(opt_model);
        const ehcap::SystemModel model = ehcap::model_from_config(cfg);
        const int l = opt_l < 0 ? default_memory_packets(model) : opt_l;
        const ehcap::SurrogateFsc fsc = make_surrogate(model, opt_m, l);
        ehcap::GbaaOptions go;
        go.order = opt_order;
        go.iterations = opt_iters;
        go.seed = opt_seed;
        go.rate_path_length = opt_rate_length;
        go.t_path_length = opt_t_length;
        const ehcap::GbaaResult res = ehcap::gbaa_optimize(fsc, go);
        json j;
        j["command"] = "optimize";
        j["fingerprint"] = cfg.fingerprint();
        j["order"] = opt_order;
        j["seed"] = opt_seed;
        j["surrogate"] = {{"memory_states", opt_m}, {"memory_packets", l}};
        json trace = json::array();
        for (std::size_t i = 0; i < res.rate_trace.size(); ++i)
            trace.push_back({{"iteration", i},
                             {"rate_bits", res.rate_trace[i]},
                             {"stderr_bits", res.stderr_trace[i]}});
        j["trace"] = trace;
        j["best"] = {{"rate_bits", res.best.rate_bits},
                     {"stderr_bits", res.best.stderr_bits},
                     {"order", res.best.input.order},
                     {"kernel", res.best.input.kernel},
                     {"initial", res.best.input.initial}};
        emit(j.dump(2) + "\n", opt_out);
        return 0;
    }

    if (dir->parsed()) {
        const ehcap::ModelConfig cfg = ehcap::ModelConfig::parse_file(dir_model);
        const ehcap::SystemModel model = ehcap::model_from_config(cfg);
        ehcap::DirInfoOptions dio;
        dio.tol_bits = dir_tol;
        dio.max_sweeps = dir_sweeps;
        dio.trajectory_budget = dir_budget;
        dio.harvest_mass_drop = dir_mass_drop;
        const ehcap::DirInfoResult res = ehcap::ub_sc2_block(model, dir_block, dio);
        json j;
        j["command"] = "dirinfo";
        j["fingerprint"] = cfg.fingerprint();
        j["block"] = dir_block;
        j["bits_per_use"] = res.bits_per_use;
        j["truncation_bits"] = res.truncation_bits;
        j["upper_bound_bits"] = res.bits_per_use + res.truncation_bits;
        j["sweeps"] = res.sweeps;
        j["tol_bits"] = dir_tol;
        j["objective_trace_bits"] = res.objective_trace_bits;
        emit(j.dump(2) + "\n", dir_out);
        return 0;
    }

    if (bnd->parsed()) {
        if (bnd_n < 1) throw ehcap::ConfigError("--n must be a positive block length");
        const ehcap::ModelConfig cfg = ehcap::ModelConfig::parse_file(bnd_model);
        std::vector<std::string> kinds;
        {
            std::stringstream ss(bnd_kinds);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) kinds.push_back(tok);
        }
        bool stochastic = false;
        for (const std::string &k : kinds)
            if (k.rfind("lb-r", 0) == 0) stochastic = true;
        if (stochastic && bnd->count("--seed") == 0)
            throw ehcap::ConfigError("--seed is required when lb-r kinds are requested");
        std::vector<double> grid;
        if (bnd_grid.empty()) {
            ehcap::SystemModel model = ehcap::model_from_config(cfg);
            grid = {model.harvest.row(0).size() > 1 ? model.harvest.row(0)[1] : 0.0};
        } else {
            grid = parse_grid(bnd_grid, 'p');
        }
        ehcap::SweepBudget budget;
        budget.ub_dp_block = bnd_n;
        budget.ub_dirinfo_block = bnd_dirinfo_n;
        budget.lb_block = bnd_lb_n;
        budget.rate_length = bnd_length;
        budget.gbaa_iterations = bnd_gbaa_iters;
        budget.seed = bnd_seed;
        budget.threads = resolve_threads(bnd_threads);
        const ehcap::SweepResult sweep = ehcap::sweep_bounds(cfg, grid, budget, kinds);
        const std::string csv = csv_with_notes(sweep, cfg.fingerprint(), {});
        emit(csv, bnd_out);
        if (!bnd_out.empty())
            for (const std::string &n : sweep.notes)
                std::fprintf(stderr, "note: %s\n", n.c_str());
        return 0;
    }

    if (fig->parsed()) {
        std::string fixtures = fig_fixtures;
        if (fixtures.empty()) {
            if (const char *env = std::getenv("EHCAP_FIXTURE_DIR")) fixtures = env;
            else fixtures = "fixtures";
        }
        ehcap::SweepBudget budget;
        budget.rate_length = fig_length;
        budget.gbaa_iterations = fig_gbaa_iters;
        budget.max_input_order = fig_max_order;
        budget.ub_dp_block = fig_dp_n;
        budget.ub_dirinfo_block = fig_budget_n;
        budget.lb_block = fig_lb_n;
        budget.seed = fig_seed;
        budget.threads = resolve_threads(fig_threads);

        ehcap::SweepResult sweep;
        std::vector<std::string> extra;
        std::string fingerprint;
        if (fig_id == 3) {
            const ehcap::ModelConfig cfg =
                ehcap::ModelConfig::parse_file(fixtures + "/fig3.cfg");
            fingerprint = cfg.fingerprint();
            std::vector<double> grid = fig_grid.empty()
                                           ? parse_grid("q=0:0.5:0.05", 'q')
                                           : parse_grid(fig_grid, 'q');
            sweep = ehcap::sweep_rates(cfg, grid, budget);
            if (fig_max_order < 2)
                extra.push_back("ir-r curves stop at order " +
                                std::to_string(fig_max_order) +
                                "; the full-budget run sweeps orders 0..2");
        } else if (fig_id == 4 || fig_id == 5) {
            ehcap::ModelConfig cfg = ehcap::ModelConfig::parse_file(fixtures + "/fig45.cfg");
            ehcap::set_bsc_crossover(cfg, fig_id == 4 ? 0.0 : 0.1);
            fingerprint = cfg.fingerprint();
            std::vector<double> grid = fig_grid.empty()
                                           ? parse_grid("p=0.1:0.9:0.1", 'p')
                                           : parse_grid(fig_grid, 'p');
            const std::vector<std::string> kinds = {"ub-sc1-dp", "ub-lnx", "ub-sc2-ln",
                                                    "ub-sc2",    "lb-sc2", "lb-r0",
                                                    "lb-r1"};
            sweep = ehcap::sweep_bounds(cfg, grid, budget, kinds);
            if (fig_budget_n < 16)
                extra.push_back("ub-sc2 computed at N=" + std::to_string(fig_budget_n) +
                                "; the full-budget run uses N=16");
            if (fig_lb_n < 4)
                extra.push_back("lb-sc2 computed at N=" + std::to_string(fig_lb_n) +
                                "; the full-budget run uses N=4");
        } else {
            throw ehcap::ConfigError("unknown figure id: " + std::to_string(fig_id));
        }
        const std::string csv = csv_with_notes(sweep, fingerprint, extra);
        emit(csv, fig_out);
        if (!fig_out.empty()) {
            for (const std::string &n : extra) std::fprintf(stderr, "note: %s\n", n.c_str());
            for (const std::string &n : sweep.notes)
                std::fprintf(stderr, "note: %s\n", n.c_str());
        }
        return 0;
    }

    return 2;
}

} // namespace

int main(int argc, char **argv) {
    try {
        return run(argc, argv);
    } catch (const ehcap::BudgetExceeded &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const ehcap::AlphabetTooLarge &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const ehcap::NoErgodicityCertificate &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const ehcap::ErgodicityLost &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const ehcap::ConfigError &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ehcap::InfeasibleInput &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ehcap::NonConvergence &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
