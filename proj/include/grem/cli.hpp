#pragma once

// Experiment orchestration: a single JSON/flag config, subcommands that run
// the library pipelines, and machine-readable CSV/JSON artifacts. Artifacts
// embed the resolved config and seeds, carry no timestamps, and are
// byte-identical across reruns and thread counts.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grem/builtins.hpp"
#include "grem/cascade.hpp"
#include "grem/chain.hpp"
#include "grem/field.hpp"
#include "grem/gibbs.hpp"
#include "grem/model.hpp"
#include "grem/stats.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace grem::cli {

struct experiment_config {
    std::string command;
    std::string model_source;  // "builtin:NAME" or a file path
    double beta = 0.0;         // 0 = use 2 beta_K
    std::vector<int> n_list;
    std::uint64_t seed = 1;
    std::uint64_t replicas = 200;
    std::uint64_t mc_samples = 1000000;
    std::uint64_t triples = 10000;
    double tol = default_tol;
    double eps1 = 0.1;
    double eps2 = 10.0;
    double coverage = 0.999;
    double window_lo = -10.0;
    double window_hi = 1e300;
    std::string out_dir = "out";
    bool oracle = false;
    int threads = 0;
};

/// The experiment parameters an artifact depends on. Execution details
/// (output directory, thread count) are deliberately left out: results are
/// independent of them, and including them would break byte-identity.
inline nlohmann::json config_to_json(const experiment_config& c) {
    nlohmann::json j;
    j["command"] = c.command;
    j["model"] = c.model_source;
    j["beta"] = c.beta;
    j["N"] = c.n_list;
    j["seed"] = c.seed;
    j["replicas"] = c.replicas;
    j["mc_samples"] = c.mc_samples;
    j["triples"] = c.triples;
    j["tol"] = c.tol;
    j["eps1"] = c.eps1;
    j["eps2"] = c.eps2;
    j["coverage"] = c.coverage;
    j["window"] = {c.window_lo, c.window_hi};
    j["oracle"] = c.oracle;
    return j;
}

inline model_t resolve_model(const std::string& source) {
    if (source.rfind("builtin:", 0) == 0) return builtin_model(source.substr(8)).model;
    std::ifstream in(source);
    if (!in) fail(errc::parse_error, "cannot open model file " + source);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(errc::parse_error, "model file " + source + ": " + e.what());
    }
    auto res = validate_model(model_spec_from_json(j));
    if (!res.ok()) fail(res.issues.front().code, res.issues.front().message);
    return *std::move(res.model);
}

namespace detail {

inline std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            fail(errc::parse_error, "bad N list entry \"" + item + "\"");
        }
    }
    return out;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

} // namespace detail

/// Parses flags (and an optional --config JSON, overridden by flags) into a
/// validated config. Every N in the list must satisfy the gamma_i N
/// integrality constraint before any work starts.
inline experiment_config load_config(const std::vector<std::string>& args) {
    experiment_config cfg;
    CLI::App app{"nonhierarchical GREM toolkit"};
    app.require_subcommand(1);

    std::string config_path, n_csv;
    app.add_option("--config", config_path, "JSON config file; flags override");

    std::vector<CLI::App*> subs;
    for (const char* name : {"analyze", "free-energy", "simulate", "gibbs", "cascade",
                             "compare", "models"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--model", cfg.model_source, "builtin:NAME or model file path");
        sub->add_option("--beta", cfg.beta, "inverse temperature (default 2 beta_K)");
        sub->add_option("--N", n_csv, "comma-separated system sizes");
        sub->add_option("--seed", cfg.seed, "master seed");
        sub->add_option("--replicas", cfg.replicas, "disorder replicas");
        sub->add_option("--samples", cfg.mc_samples, "MC samples for constants");
        sub->add_option("--triples", cfg.triples, "Gibbs triples per replica");
        sub->add_option("--tol", cfg.tol, "solver tolerance");
        sub->add_option("--eps1", cfg.eps1, "T1 thinning epsilon");
        sub->add_option("--eps2", cfg.eps2, "T2 thinning epsilon");
        sub->add_option("--coverage", cfg.coverage, "pair-measure coverage target");
        sub->add_option("--out", cfg.out_dir, "output directory");
        sub->add_flag("--oracle", cfg.oracle, "enable exhaustive chain checks");
        sub->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
        subs.push_back(sub);
    }

    // defaults from --config, then flags override
    std::vector<const char*> argv;
    argv.push_back("grem");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        std::fputs(app.help().c_str(), stdout);
        std::exit(0);
    } catch (const CLI::ParseError& e) {
        fail(errc::parse_error, e.what());
    }
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) fail(errc::parse_error, "cannot open config " + config_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            fail(errc::parse_error, std::string("config parse: ") + e.what());
        }
        experiment_config file_cfg = cfg;
        if (j.contains("model")) file_cfg.model_source = j["model"].get<std::string>();
        if (j.contains("beta")) file_cfg.beta = j["beta"].get<double>();
        if (j.contains("N")) file_cfg.n_list = j["N"].get<std::vector<int>>();
        if (j.contains("seed")) file_cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("replicas")) file_cfg.replicas = j["replicas"].get<std::uint64_t>();
        if (j.contains("mc_samples")) file_cfg.mc_samples = j["mc_samples"].get<std::uint64_t>();
        if (j.contains("triples")) file_cfg.triples = j["triples"].get<std::uint64_t>();
        if (j.contains("tol")) file_cfg.tol = j["tol"].get<double>();
        if (j.contains("eps1")) file_cfg.eps1 = j["eps1"].get<double>();
        if (j.contains("eps2")) file_cfg.eps2 = j["eps2"].get<double>();
        if (j.contains("coverage")) file_cfg.coverage = j["coverage"].get<double>();
        if (j.contains("window")) {
            file_cfg.window_lo = j["window"].at(0).get<double>();
            file_cfg.window_hi = j["window"].at(1).get<double>();
        }
        if (j.contains("out")) file_cfg.out_dir = j["out"].get<std::string>();
        if (j.contains("oracle")) file_cfg.oracle = j["oracle"].get<bool>();
        if (j.contains("threads")) file_cfg.threads = j["threads"].get<int>();
        // flags that were explicitly given override the file
        std::swap(cfg, file_cfg);
        for (auto* sub : subs) {
            if (!sub->parsed()) continue;
            if (sub->count("--model")) cfg.model_source = file_cfg.model_source;
            if (sub->count("--beta")) cfg.beta = file_cfg.beta;
            if (sub->count("--seed")) cfg.seed = file_cfg.seed;
            if (sub->count("--replicas")) cfg.replicas = file_cfg.replicas;
            if (sub->count("--samples")) cfg.mc_samples = file_cfg.mc_samples;
            if (sub->count("--triples")) cfg.triples = file_cfg.triples;
            if (sub->count("--tol")) cfg.tol = file_cfg.tol;
            if (sub->count("--eps1")) cfg.eps1 = file_cfg.eps1;
            if (sub->count("--eps2")) cfg.eps2 = file_cfg.eps2;
            if (sub->count("--coverage")) cfg.coverage = file_cfg.coverage;
            if (sub->count("--out")) cfg.out_dir = file_cfg.out_dir;
            if (sub->count("--oracle")) cfg.oracle = file_cfg.oracle;
            if (sub->count("--threads")) cfg.threads = file_cfg.threads;
        }
    }
    if (!n_csv.empty()) cfg.n_list = detail::parse_int_list(n_csv);

    for (auto* sub : subs)
        if (sub->parsed()) cfg.command = sub->get_name();
    if (cfg.command.empty()) fail(errc::parse_error, "no command given");

    if (cfg.command != "models") {
        if (cfg.model_source.empty()) fail(errc::parse_error, "missing --model");
        const auto model = resolve_model(cfg.model_source);
        for (int N : cfg.n_list) {
            try {
                make_size(model, N);
            } catch (const error& e) {
                if (e.code() == errc::invalid_n)
                    fail(errc::invalid_n, "N=" + std::to_string(N) + ": " + e.what());
                throw;
            }
        }
        if (cfg.beta == 0.0) {
            const auto solved = build_chain(model, cfg.tol);
            cfg.beta = 2.0 * solved.levels.beta.back();
        }
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string model_tag(const std::string& source) {
    if (source.rfind("builtin:", 0) == 0) return source.substr(8);
    return std::filesystem::path(source).stem().string();
}

inline std::string artifact_name(const experiment_config& c, const std::string& ext,
                                 std::optional<int> n = std::nullopt,
                                 const std::string& suffix = "") {
    std::string name = c.command + "_" + model_tag(c.model_source) + "_" +
                       std::to_string(n.value_or(c.n_list.empty() ? 0 : c.n_list.front())) + "_" +
                       fmt6(c.beta) + "_" + std::to_string(c.seed);
    if (!suffix.empty()) name += "_" + suffix;
    return name + "." + ext;
}

inline std::filesystem::path open_out_dir(const experiment_config& c) {
    std::filesystem::path dir(c.out_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string mark_string(subset_t s) {
    if (s.is_empty()) return "-";
    std::string out;
    for (int i : s.members()) {
        if (!out.empty()) out += "|";
        out += std::to_string(i);
    }
    return out;
}

inline nlohmann::json chain_json(const chain_t& chain) {
    nlohmann::json arr = nlohmann::json::array();
    for (subset_t a : chain.sets) arr.push_back(a.members());
    return arr;
}

} // namespace detail

struct command_result {
    int exit_code = 0;
    std::vector<std::string> artifacts;
    std::string summary;
};

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline command_result run_models(const experiment_config&) {
    command_result res;
    std::string text = "name,n,family,chain,betas,irreducible\n";
    for (const auto& name : builtin_names()) {
        auto b = builtin_model(name);
        std::string fam;
        for (const auto& [j, w] : b.model.weights()) {
            if (!fam.empty()) fam += " ";
            fam += j.str();
        }
        std::string betas;
        for (double v : b.expected_beta) {
            if (!betas.empty()) betas += " ";
            betas += detail::fmt6(v);
        }
        text += name + "," + std::to_string(b.model.n()) + "," + fam + "," +
                b.expected_chain.str() + "," + betas + "," +
                (b.expected_irreducible ? "yes" : "no") + "\n";
    }
    res.summary = text;
    return res;
}

inline command_result run_analyze(const experiment_config& cfg) {
    command_result res;
    const auto model = resolve_model(cfg.model_source);
    const auto solved = build_chain(model, cfg.tol);
    const auto criticals = find_critical_subsets(model, solved.chain, solved.levels, cfg.tol);
    const auto irr = check_irreducibility(model, solved.chain);

    nlohmann::json j;
    j["config"] = config_to_json(cfg);
    j["chain"] = detail::chain_json(solved.chain);
    j["beta"] = solved.levels.beta;
    j["delta"] = solved.levels.delta;
    j["g"] = solved.levels.g;
    j["irreducible"] = irr.irreducible();
    j["condition_c"] = irr.condition_c;
    j["condition_c_prime"] = irr.condition_c_prime;
    nlohmann::json wit = nlohmann::json::array();
    for (const auto& w : irr.witnesses) {
        nlohmann::json e;
        e["condition"] = w.condition == 'c' ? "c" : "c_prime";
        e["level"] = w.level;
        e["A"] = w.a.members();
        e["detail"] = w.detail;
        wit.push_back(e);
    }
    j["witnesses"] = wit;

    nlohmann::json crit = nlohmann::json::array();
    for (int l = 1; l <= solved.chain.levels(); ++l) {
        for (const auto& c : criticals.per_level[static_cast<std::size_t>(l - 1)]) {
            nlohmann::json e;
            e["level"] = l;
            e["A"] = c.a.members();
            e["alpha_hat"] = c.alpha_hat;
            e["alpha_hat_c"] = c.alpha_hat_c;
            crit.push_back(e);
        }
    }
    j["critical_subsets"] = crit;

    // critical constants, with the degenerate (reducible) case surfaced
    nlohmann::json consts = nlohmann::json::array();
    try {
        const auto estimates = estimate_critical_constants(model, solved.chain, solved.levels,
                                                           criticals, cfg.mc_samples, cfg.seed);
        for (std::size_t l = 0; l < estimates.size(); ++l) {
            nlohmann::json e;
            e["level"] = l + 1;
            e["C"] = estimates[l].value;
            e["se"] = estimates[l].se;
            e["samples"] = estimates[l].samples;
            e["seed"] = cfg.seed;
            e["exact"] = estimates[l].exact;
            consts.push_back(e);
        }
        j["constants"] = consts;
    } catch (const error& e) {
        if (e.code() != errc::degenerate_constant) throw;
        j["constants"] = nullptr;
        j["warning"] = std::string(e.what());
    }
    // T1 degeneracy warning per level
    nlohmann::json degen = nlohmann::json::array();
    for (int l = 1; l <= solved.chain.levels(); ++l)
        degen.push_back(t1_degenerate(criticals.per_level[static_cast<std::size_t>(l - 1)]));
    j["t1_degenerate"] = degen;

    auto dir = detail::open_out_dir(cfg);
    const auto name = detail::artifact_name(cfg, "json");
    detail::write_text(dir / name, j.dump(2) + "\n");
    res.artifacts.push_back((dir / name).string());
    res.summary = j.dump(2);
    return res;
}

inline command_result run_free_energy(const experiment_config& cfg) {
    command_result res;
    const auto model = resolve_model(cfg.model_source);
    const auto solved = build_chain(model, cfg.tol);
    const auto grid = default_beta_grid(solved.levels, 50);
    const bool with_oracle = model.n() <= 5 || (cfg.oracle && model.n() <= 8);
    std::optional<exhaustive_result> oracle;
    if (with_oracle) oracle = exhaustive_min_chain(model, grid);

    std::string csv = "# config: " + config_to_json(cfg).dump() + "\n";
    csv += "beta,f_recursion,f_exhaustive,regime_m\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double f = free_energy_chain(solved.levels, grid[i], cfg.tol);
        csv += detail::fmt(grid[i]) + "," + detail::fmt(f) + ",";
        if (oracle) csv += detail::fmt(oracle->minima[i]);
        csv += "," + std::to_string(phase_points(solved.levels, grid[i]).m) + "\n";
    }
    auto dir = detail::open_out_dir(cfg);
    const auto name = detail::artifact_name(cfg, "csv");
    detail::write_text(dir / name, csv);
    res.artifacts.push_back((dir / name).string());
    res.summary = "wrote " + name;
    return res;
}

inline command_result run_simulate(const experiment_config& cfg) {
    command_result res;
    const auto model = resolve_model(cfg.model_source);
    const auto solved = build_chain(model, cfg.tol);
    auto dir = detail::open_out_dir(cfg);
    if (cfg.n_list.empty()) fail(errc::parse_error, "simulate needs --N");
    for (int N : cfg.n_list) {
        const auto size = make_size(model, N);
        const auto cent = compute_centering(solved.levels, N, cfg.beta);
        std::string csv = "# config: " + config_to_json(cfg).dump() + "\n";
        csv += "replica,seed";
        for (int i = 1; i <= model.n(); ++i) csv += ",sigma_" + std::to_string(i);
        csv += ",hatX_K";
        for (int j = 1; j <= solved.chain.levels(); ++j) csv += ",hatX_" + std::to_string(j);
        csv += "\n";
        const auto rows = run_replicas<std::string>(
            cfg.replicas,
            [&](std::uint64_t r) {
                const std::uint64_t rs = replica_seed(cfg.seed, r);
                const auto real = sample_field(model, size, rs);
                const auto points = extremal_points(real, cent, cfg.window_lo, cfg.window_hi);
                std::string out;
                for (const auto& p : points) {
                    out += std::to_string(r) + "," + std::to_string(rs);
                    for (int i = 1; i <= model.n(); ++i)
                        out += "," + std::to_string(size.coord(p.sigma, i));
                    const auto e = energies(real, solved.chain, cent, p.sigma);
                    out += "," + detail::fmt(p.value);
                    for (double h : e.hat) out += "," + detail::fmt(h);
                    out += "\n";
                }
                return out;
            },
            cfg.threads);
        for (const auto& row : rows) csv += row;
        const auto name = detail::artifact_name(cfg, "csv", N);
        detail::write_text(dir / name, csv);
        res.artifacts.push_back((dir / name).string());
    }
    res.summary = "wrote " + std::to_string(res.artifacts.size()) + " extremal CSV(s)";
    return res;
}

inline command_result run_gibbs(const experiment_config& cfg) {
    command_result res;
    const auto model = resolve_model(cfg.model_source);
    const auto solved = build_chain(model, cfg.tol);
    auto dir = detail::open_out_dir(cfg);
    if (cfg.n_list.empty()) fail(errc::parse_error, "gibbs needs --N");
    for (int N : cfg.n_list) {
        const auto size = make_size(model, N);
        const auto real = sample_field(model, size, replica_seed(cfg.seed, 0));
        const auto table = gibbs_table_of(real, cfg.beta);

        const auto pairs = marked_pair_measure(table, model, size, cfg.coverage);
        std::string csv = "# config: " + config_to_json(cfg).dump() + "\n";
        csv += "w1,w2,mark_set\n";
        for (const auto& atom : pairs.atoms)
            csv += detail::fmt(atom.w1) + "," + detail::fmt(atom.w2) + "," +
                   detail::mark_string(atom.mark) + "\n";
        const auto pair_name = detail::artifact_name(cfg, "csv", N, "pairs");
        detail::write_text(dir / pair_name, csv);
        res.artifacts.push_back((dir / pair_name).string());

        const auto um = ultrametric_stats(table, model, size, cfg.triples,
                                          replica_seed(cfg.seed ^ 0x5eedULL, 0));
        nlohmann::json j;
        j["config"] = config_to_json(cfg);
        j["beta"] = cfg.beta;
        j["N"] = N;
        j["triples"] = um.triples;
        j["violations"] = um.violations;
        j["fraction"] = um.fraction;
        j["se"] = um.se;
        j["seed"] = um.seed;
        j["f_N"] = table.log_partition;
        j["coverage"] = pairs.coverage;
        // weight-table summary: the top of the sorted weight list
        std::vector<double> top(table.weights);
        std::sort(top.begin(), top.end(), std::greater<double>());
        if (top.size() > 64) top.resize(64);
        j["top_weights"] = top;

        // thinning pass fractions at (eps1, eps2) over a strided sample of
        // configurations, per level
        const auto criticals = find_critical_subsets(model, solved.chain, solved.levels, cfg.tol);
        nlohmann::json thin = nlohmann::json::array();
        const std::uint64_t stride = std::max<std::uint64_t>(1, size.config_count / 4096);
        for (int k = 1; k <= solved.chain.levels(); ++k) {
            std::uint64_t t1_pass = 0, t1_total = 0, t2_pass = 0, t2_total = 0, sampled = 0;
            bool degenerate = false;
            for (std::uint64_t c = 0; c < size.config_count; c += stride) {
                const auto th = thinning_filter(real, solved.chain, criticals, k, cfg.eps1,
                                                cfg.eps2, static_cast<config_t>(c));
                degenerate = th.degenerate_t1;
                for (const auto& [a, ok] : th.t1) {
                    ++t1_total;
                    t1_pass += ok;
                }
                for (const auto& [a, ok] : th.t2) {
                    ++t2_total;
                    t2_pass += ok;
                }
                ++sampled;
            }
            nlohmann::json e;
            e["level"] = k;
            e["sampled_configs"] = sampled;
            e["t1_pass_fraction"] =
                t1_total ? static_cast<double>(t1_pass) / static_cast<double>(t1_total) : 1.0;
            e["t2_pass_fraction"] =
                t2_total ? static_cast<double>(t2_pass) / static_cast<double>(t2_total) : 1.0;
            e["t1_degenerate"] = degenerate;
            thin.push_back(e);
        }
        j["thinning"] = thin;
        const auto um_name = detail::artifact_name(cfg, "json", N, "ultrametric");
        detail::write_text(dir / um_name, j.dump(2) + "\n");
        res.artifacts.push_back((dir / um_name).string());
    }
    res.summary = "wrote " + std::to_string(res.artifacts.size()) + " gibbs artifact(s)";
    return res;
}

inline command_result run_cascade(const experiment_config& cfg) {
    command_result res;
    const auto model = resolve_model(cfg.model_source);
    const auto solved = build_chain(model, cfg.tol);
    const auto criticals = find_critical_subsets(model, solved.chain, solved.levels, cfg.tol);
    const auto constants = estimate_critical_constants(model, solved.chain, solved.levels,
                                                       criticals, cfg.mc_samples, cfg.seed);
    auto dir = detail::open_out_dir(cfg);

    nlohmann::json cj = nlohmann::json::array();
    for (std::size_t l = 0; l < constants.size(); ++l) {
        nlohmann::json e;
        e["level"] = l + 1;
        e["C"] = constants[l].value;
        e["se"] = constants[l].se;
        e["samples"] = constants[l].samples;
        e["seed"] = cfg.seed;
        cj.push_back(e);
    }
    nlohmann::json j;
    j["config"] = config_to_json(cfg);
    j["constants"] = cj;
    const auto cname = detail::artifact_name(cfg, "json", std::nullopt, "constants");
    detail::write_text(dir / cname, j.dump(2) + "\n");
    res.artifacts.push_back((dir / cname).string());

    const auto cs = make_cascade_spec(solved.levels, constants, 50.0);
    const auto sample = sample_cascade(cs, replica_seed(cfg.seed, 0));
    const auto law = cascade_to_limit_law(sample, cs, solved.chain, cfg.beta, cfg.coverage);
    std::string csv = "# config: " + config_to_json(cfg).dump() + "\n";
    csv += "w1,w2,mark_set\n";
    for (const auto& atom : law.pairs.atoms)
        csv += detail::fmt(atom.w1) + "," + detail::fmt(atom.w2) + "," +
               detail::mark_string(atom.mark) + "\n";
    const auto lname = detail::artifact_name(cfg, "csv", std::nullopt, "limitlaw");
    detail::write_text(dir / lname, csv);
    res.artifacts.push_back((dir / lname).string());
    res.summary = "wrote cascade constants and limit-law sample";
    return res;
}

inline command_result run_compare(const experiment_config& cfg) {
    command_result res;
    const auto model = resolve_model(cfg.model_source);
    const auto solved = build_chain(model, cfg.tol);
    const auto criticals = find_critical_subsets(model, solved.chain, solved.levels, cfg.tol);
    std::vector<int> ns = cfg.n_list;
    if (ns.empty()) fail(errc::parse_error, "compare needs --N");
    const int n_max = ns.back();

    std::vector<comparison_report> reports;

    // extremal Poisson window counts at the largest N
    {
        const auto constants = estimate_critical_constants(
            model, solved.chain, solved.levels, criticals, cfg.mc_samples, cfg.seed);
        double c_product = 1.0;
        for (const auto& c : constants) c_product *= c.value;
        auto counts =
            extremal_count_experiment(model, n_max, 0.0, 1e300, cfg.replicas, cfg.seed, cfg.threads);
        for (auto& r : poisson_count_test(counts, c_product, cfg.seed)) reports.push_back(r);
    }

    // KS of the recentered max against the cascade max, per N
    {
        const auto constants = estimate_critical_constants(
            model, solved.chain, solved.levels, criticals, cfg.mc_samples, cfg.seed);
        const auto cs = make_cascade_spec(solved.levels, constants, 50.0);
        auto oracle = cascade_max_samples(cs, 10 * cfg.replicas, cfg.seed ^ 0xabcdULL, cfg.threads);
        // trend acceptance: non-increasing within the KS sampling noise
        const double allowance = std::sqrt(1.0 / static_cast<double>(cfg.replicas) +
                                           1.0 / static_cast<double>(10 * cfg.replicas));
        double prev = 1.0;
        for (int N : ns) {
            auto emp = max_energy_samples(model, N, cfg.replicas, cfg.seed + N, cfg.threads);
            auto ks = ks_distance(emp, oracle, cfg.seed, 200);
            comparison_report r;
            r.test = "ks_max_N" + std::to_string(N);
            r.statistic = ks.distance;
            r.expected = 0.0;
            r.se = 0.5 * allowance;
            r.z = ks.distance;
            r.pass = N == ns.front() || ks.distance <= prev + allowance;
            r.replicas = cfg.replicas;
            r.seed = cfg.seed;
            r.details = "p_value=" + detail::fmt6(ks.p_value);
            reports.push_back(r);
            prev = ks.distance;
        }
    }

    // Gibbs weight moments against the Poisson-Dirichlet oracle
    {
        const double x = solved.levels.beta.back() / cfg.beta;
        if (x > 0.0 && x < 1.0) {
            auto emp = gibbs_weight_moments(model, n_max, cfg.beta, {2, 3}, cfg.replicas / 4 + 50,
                                            cfg.seed, cfg.threads);
            std::vector<std::vector<double>> oracle;
            for (std::uint64_t s = 0; s < 20000; ++s)
                oracle.push_back(sample_pd(x, 1e-6, replica_seed(cfg.seed ^ 0x9dULL, s)));
            std::vector<std::vector<double>> emp_by_order(2), ora_by_order(2);
            for (const auto& row : emp) {
                emp_by_order[0].push_back(row[0]);
                emp_by_order[1].push_back(row[1]);
            }
            for (const auto& w : oracle) {
                double s2 = 0.0, s3 = 0.0;
                for (double v : w) {
                    s2 += v * v;
                    s3 += v * v * v;
                }
                ora_by_order[0].push_back(s2);
                ora_by_order[1].push_back(s3);
            }
            for (auto& r : moment_check_values({2, 3}, emp_by_order, ora_by_order, cfg.seed))
                reports.push_back(r);
        }
    }

    // off-chain pair mass decreasing over the N grid
    {
        double prev = 1.0;
        for (int N : ns) {
            const auto size = make_size(model, N);
            const auto real = sample_field(model, size, replica_seed(cfg.seed, 1));
            const auto table = gibbs_table_of(real, cfg.beta);
            const auto pairs = marked_pair_measure(table, model, size, cfg.coverage);
            const auto mm = mark_mass_report(pairs, solved.chain);
            comparison_report r;
            r.test = "offchain_mass_N" + std::to_string(N);
            r.statistic = mm.total > 0.0 ? mm.off_chain / mm.total : 0.0;
            r.expected = 0.0;
            r.se = 0.0;
            r.z = r.statistic;
            r.pass = r.statistic <= prev || N == ns.front();
            r.replicas = 1;
            r.seed = cfg.seed;
            reports.push_back(r);
            prev = r.statistic;
        }
    }

    bool all_pass = true;
    std::string csv = "# config: " + config_to_json(cfg).dump() + "\n";
    csv += "test,statistic,expected,se,z,pass\n";
    std::string jsonl;
    for (const auto& r : reports) {
        all_pass = all_pass && r.pass;
        csv += r.test + "," + detail::fmt(r.statistic) + "," + detail::fmt(r.expected) + "," +
               detail::fmt(r.se) + "," + detail::fmt(r.z) + "," + (r.pass ? "PASS" : "FAIL") + "\n";
        nlohmann::json j;
        j["test"] = r.test;
        j["statistic"] = r.statistic;
        j["expected"] = r.expected;
        j["se"] = r.se;
        j["z"] = r.z;
        j["pass"] = r.pass;
        j["replicas"] = r.replicas;
        j["seed"] = r.seed;
        if (!r.details.empty()) j["details"] = r.details;
        jsonl += j.dump() + "\n";
    }
    auto dir = detail::open_out_dir(cfg);
    const auto cname = detail::artifact_name(cfg, "csv", n_max, "summary");
    const auto jname = detail::artifact_name(cfg, "jsonl", n_max, "reports");
    detail::write_text(dir / cname, csv);
    detail::write_text(dir / jname, jsonl);
    res.artifacts.push_back((dir / cname).string());
    res.artifacts.push_back((dir / jname).string());
    res.summary = csv;
    res.exit_code = all_pass ? 0 : 2;
    return res;
}

inline command_result run_command(const experiment_config& cfg) {
    if (cfg.command == "models") return run_models(cfg);
    if (cfg.command == "analyze") return run_analyze(cfg);
    if (cfg.command == "free-energy") return run_free_energy(cfg);
    if (cfg.command == "simulate") return run_simulate(cfg);
    if (cfg.command == "gibbs") return run_gibbs(cfg);
    if (cfg.command == "cascade") return run_cascade(cfg);
    if (cfg.command == "compare") return run_compare(cfg);
    fail(errc::parse_error, "unknown command " + cfg.command);
}

inline int main_entry(const std::vector<std::string>& args) {
    try {
        const auto cfg = load_config(args);
        const auto res = run_command(cfg);
        if (!res.summary.empty()) std::fputs((res.summary + "\n").c_str(), stdout);
        for (const auto& a : res.artifacts) std::fprintf(stdout, "artifact: %s\n", a.c_str());
        return res.exit_code;
    } catch (const error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

} // namespace grem::cli
