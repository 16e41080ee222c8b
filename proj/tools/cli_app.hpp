// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. The whole surface lives in run_cli so that the
// tests can drive it in-process; hurst_cli.cpp only forwards argv.
#pragma once

#include "hurst/hurst.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace hurst::cli {

// Usage problems found after parsing (missing flags, bad combinations).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Settings {
    double H = 0.5;
    double T = 1.0;
    long n = 0;
    std::uint64_t seed = 0;
    double tol = 1e-10;
    long max_radius = 1L << 20;
    std::string out = "-";
    std::string format;
    std::string convention = "derived";
    std::string method = "auto";
    std::string input;
    bool use_stdin = false;
    long reps = 100000;
    int bins = 81;
    double z_range = 0.0;
    std::vector<std::string> variants{"b_star", "b_star_star"};
    int workers = 0;
    int bootstrap = 200;
    std::string svg;
    std::string csv;
    double range = 0.0;
    int steps = 201;
    std::string config;
};

namespace detail {

inline std::string json_scalar_token(const nlohmann::json& v)
{
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw UsageError("config values must be scalars or arrays of scalars");
}

inline bool flag_given(const std::vector<std::string>& args, const std::string& key)
{
    const std::string flag = "--" + key;
    for (const auto& a : args)
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
}

// Inserts "--key value" for every config entry whose flag is absent from
// the command line, so explicit flags always win.
inline std::vector<std::string> merge_config(std::vector<std::string> args)
{
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty() || args.empty()) return args;
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    std::vector<std::string> extra;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (flag_given(args, it.key())) continue;
        if (it.value().is_boolean()) {
            extra.push_back("--" + it.key() + "=" + json_scalar_token(it.value()));
            continue;
        }
        extra.push_back("--" + it.key());
        if (it.value().is_array()) {
            for (const auto& v : it.value()) extra.push_back(json_scalar_token(v));
        } else {
            extra.push_back(json_scalar_token(it.value()));
        }
    }
    args.insert(args.begin() + 1, extra.begin(), extra.end()); // after the subcommand name
    return args;
}

inline Convention parse_convention(const std::string& s)
{
    return s == "published" ? Convention::published : Convention::derived;
}

inline FbmMethod parse_method(const std::string& s)
{
    if (s == "circulant") return FbmMethod::circulant;
    if (s == "cholesky") return FbmMethod::cholesky;
    return FbmMethod::automatic;
}

inline SeriesOptions series_options(const Settings& s)
{
    SeriesOptions o;
    o.tol = s.tol;
    o.max_radius = s.max_radius;
    return o;
}

inline void write_output(const Settings& s, const std::string& text, std::ostream& out)
{
    if (s.out.empty() || s.out == "-") {
        out << text;
        return;
    }
    std::ofstream f(s.out, std::ios::binary);
    if (!f) throw UsageError("cannot write output file '" + s.out + "'");
    f << text;
}

inline void write_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write file '" + path + "'");
    f << text;
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// Flattens nested JSON into "a.b,value" rows.
inline void flatten(const nlohmann::json& j, const std::string& prefix, std::string& out)
{
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
    } else if (j.is_number_float()) {
        out += prefix + "," + shortest_repr(j.get<double>()) + "\n";
    } else {
        out += prefix + "," + (j.is_string() ? j.get<std::string>() : j.dump()) + "\n";
    }
}

inline nlohmann::json base_config(const std::string& sub, const Settings& s)
{
    nlohmann::json c{{"subcommand", sub}, {"format", s.format}, {"tol", s.tol},
                     {"max_radius", s.max_radius}, {"convention", s.convention}};
    return c;
}

} // namespace detail

// Subcommand bodies. Each returns the bytes for the main output.

inline std::string cmd_coeffs(const Settings& s, std::ostream&)
{
    const auto conv = detail::parse_convention(s.convention);
    const auto co = cached_coefficients(s.H, detail::series_options(s), conv);
    const auto m = make_expansion(co);
    auto cfg = detail::base_config("coeffs", s);
    cfg["H"] = s.H;
    nlohmann::json j{{"config", cfg}, {"coefficients", to_json(co)}, {"model", to_json(m)}};
    if (s.format == "csv") {
        std::string out = "key,value\n";
        detail::flatten(nlohmann::json{{"coefficients", to_json(co)}, {"model", to_json(m)}}, "", out);
        return out;
    }
    return detail::dump(j);
}

inline std::string cmd_simulate(const Settings& s, std::ostream&)
{
    const HurstModel model{s.H, s.T, s.n};
    const auto path = generate_path(model, s.seed, detail::parse_method(s.method));
    const auto N = static_cast<double>(2 * s.n);
    if (s.format == "json") {
        auto cfg = detail::base_config("simulate", s);
        cfg.update({{"H", s.H}, {"T", s.T}, {"n", s.n}, {"seed", s.seed}, {"method", s.method}});
        nlohmann::json t = nlohmann::json::array(), b = nlohmann::json::array();
        for (std::size_t j = 0; j < path.values.size(); ++j) {
            t.push_back(s.T * static_cast<double>(j) / N);
            b.push_back(path.values[j]);
        }
        return detail::dump({{"config", cfg}, {"t", t}, {"B", b}});
    }
    std::string out = "t,B\n";
    for (std::size_t j = 0; j < path.values.size(); ++j)
        out += shortest_repr(s.T * static_cast<double>(j) / N) + "," + shortest_repr(path.values[j]) + "\n";
    return out;
}

inline std::string cmd_estimate(const Settings& s, std::istream& in, std::ostream& err)
{
    if (s.input.empty() == !s.use_stdin) throw UsageError("estimate needs exactly one of --input or --stdin");
    const auto data = s.use_stdin ? ingest_series(in) : ingest_series_file(s.input);
    for (const auto& w : data.warnings) err << "warning: " << w << "\n";
    const CorrectionTable table(detail::series_options(s), detail::parse_convention(s.convention));
    const auto r = estimate_h_corrected(data.samples, table);
    auto j = to_json(r);
    if (s.format == "csv") {
        std::string out = "key,value\n";
        detail::flatten(j, "", out);
        return out;
    }
    auto cfg = detail::base_config("estimate", s);
    cfg["input"] = s.use_stdin ? "-" : s.input;
    j["config"] = cfg;
    return detail::dump(j);
}

inline std::string cmd_expand(const Settings& s, std::ostream&)
{
    if (s.steps < 3) throw UsageError("--steps must be at least 3");
    const auto m = build_expansion(s.H, detail::series_options(s), detail::parse_convention(s.convention));
    const double range = s.range > 0.0 ? s.range : 6.0 * std::sqrt(m.v);
    std::vector<std::array<double, 4>> rows;
    for (int i = 0; i < s.steps; ++i) {
        const double z = -range + 2.0 * range * i / (s.steps - 1);
        rows.push_back({z, density_pn(m, s.n, z), normal_pdf(z, m.v), density_pn_b(m, s.n, m.b_star, z)});
    }
    if (s.format == "json") {
        auto cfg = detail::base_config("expand", s);
        cfg.update({{"H", s.H}, {"n", s.n}, {"range", range}, {"steps", s.steps}});
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : rows) arr.push_back({{"z", r[0]}, {"p_n", r[1]}, {"phi", r[2]}, {"p_n_b", r[3]}});
        return detail::dump({{"config", cfg}, {"model", to_json(m)}, {"rows", arr}});
    }
    std::string out = "z,p_n,phi,p_n_b\n";
    for (const auto& r : rows)
        out += shortest_repr(r[0]) + "," + shortest_repr(r[1]) + "," + shortest_repr(r[2]) + "," +
               shortest_repr(r[3]) + "\n";
    return out;
}

inline McConfig mc_config(const Settings& s)
{
    McConfig c;
    c.H = s.H;
    c.T = s.T;
    c.n = s.n;
    c.reps = s.reps;
    c.seed = s.seed;
    c.bins = s.bins;
    c.z_range = s.z_range;
    c.variant_b_star = c.variant_b_star_star = false;
    for (const auto& v : s.variants) {
        if (v == "b_star") c.variant_b_star = true;
        else if (v == "b_star_star") c.variant_b_star_star = true;
        else if (v != "plain" && v != "none") throw UsageError("unknown variant '" + v + "'");
    }
    c.workers = s.workers;
    c.bootstrap = s.bootstrap;
    c.series = detail::series_options(s);
    c.convention = detail::parse_convention(s.convention);
    c.method = detail::parse_method(s.method);
    return c;
}

inline std::string cmd_mc(const Settings& s, std::ostream&)
{
    const auto report = run_mc(mc_config(s));
    if (!s.svg.empty()) detail::write_file(s.svg, render_svg(report));
    if (!s.csv.empty()) detail::write_file(s.csv, density_csv(report));
    if (s.format == "csv") return density_csv(report);
    return detail::dump(to_json(report));
}

// Developer checks: chain-average convergence and kernel decay tables.
inline std::string cmd_diag(const Settings& s, std::ostream&)
{
    nlohmann::json an = nlohmann::json::array();
    for (int k : {2, 3}) {
        const std::vector<Kernel> ks(static_cast<std::size_t>(k), Kernel::rho_hat);
        ChainSpec spec;
        for (int a = 0; a < k; ++a) spec.factors.push_back(presets::hat());
        const double limit = chain_sum(s.H, spec, detail::series_options(s)).value;
        const long nmax = k == 2 ? 4096 : (s.H == 0.5 ? 2048 : 512);
        for (long n = 64; n <= nmax; n *= 2) {
            const double a = a_n_diagnostic(s.H, ks, n, std::vector<long>(static_cast<std::size_t>(k), n));
            an.push_back({{"k", k}, {"n", n}, {"a_n", a}, {"limit", limit}, {"error", a - limit}});
        }
    }
    nlohmann::json decay = nlohmann::json::array();
    for (long j : {10L, 100L, 1000L, 10000L, 100000L}) {
        const double sc = std::pow(static_cast<double>(j), 4.0 - 2.0 * s.H);
        decay.push_back({{"j", j},
                         {"rho_hat_scaled", rho_hat(s.H, j) * sc},
                         {"rho_tilde_scaled", rho_tilde(s.H, j) * sc}});
    }
    auto cfg = detail::base_config("diag", s);
    cfg["H"] = s.H;
    nlohmann::json j{{"config", cfg},
                     {"a_n", an},
                     {"decay", decay},
                     {"decay_constant", {{"rho_hat", decay_constant(s.H, Kernel::rho_hat)},
                                         {"rho_tilde", decay_constant(s.H, Kernel::rho_tilde)}}}};
    if (s.format == "csv") {
        std::string out = "key,value\n";
        detail::flatten(j, "", out);
        return out;
    }
    return detail::dump(j);
}

// Entry point. Exit codes: 0 success, 1 usage or input error, 2 a series
// tolerance could not be met.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err, std::istream& in = std::cin)
{
    Settings s;
    CLI::App app{"Hurst coefficient estimation with second-order Edgeworth corrections", "hurst"};
    app.require_subcommand(1);
    auto* coeffs = app.add_subcommand("coeffs", "Limit constants and expansion coefficients");
    auto* simulate = app.add_subcommand("simulate", "Simulate one fBm path on the fine grid");
    auto* estimate = app.add_subcommand("estimate", "Estimate H from an observed series");
    auto* expand = app.add_subcommand("expand", "Tabulate the expansion density");
    auto* mc = app.add_subcommand("mc", "Monte Carlo study of the estimator");
    auto* diag = app.add_subcommand("diag", "Developer diagnostics");

    const std::vector<std::string> formats{"json", "csv"};
    auto common = [&](CLI::App* sub, const std::string& fmt) {
        s.format = fmt;
        sub->add_option("--tol", s.tol, "Series tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--max-radius", s.max_radius, "Truncation radius cap")->check(CLI::PositiveNumber);
        sub->add_option("--out", s.out, "Output path, '-' for stdout");
        sub->add_option("--format", s.format, "Output format")->check(CLI::IsMember(formats));
        sub->add_option("--config", s.config, "JSON file with default flag values");
        sub->add_option("--convention", s.convention, "Fine-grid contraction ratios")
            ->check(CLI::IsMember({"derived", "published"}));
    };
    auto model_flags = [&](CLI::App* sub, bool with_n, bool with_T) {
        sub->add_option("--H", s.H, "Hurst coefficient in (0,1)");
        if (with_T) sub->add_option("--T", s.T, "Horizon");
        if (with_n) sub->add_option("--n", s.n, "Number of coarse intervals");
    };
    common(coeffs, "json");
    model_flags(coeffs, false, false);
    common(simulate, "csv");
    model_flags(simulate, true, true);
    simulate->add_option("--seed", s.seed, "Random seed");
    simulate->add_option("--method", s.method)->check(CLI::IsMember({"circulant", "cholesky", "auto"}));
    common(estimate, "json");
    estimate->add_option("--input", s.input, "CSV file with the series");
    estimate->add_flag("--stdin", s.use_stdin, "Read the series from standard input");
    common(expand, "csv");
    model_flags(expand, true, false);
    expand->add_option("--range", s.range, "Half-width of the z grid (default 6 sqrt(v))");
    expand->add_option("--steps", s.steps, "Number of grid points");
    common(mc, "json");
    model_flags(mc, true, true);
    mc->add_option("--seed", s.seed, "Random seed");
    mc->add_option("--reps", s.reps, "Replications");
    mc->add_option("--bins", s.bins, "Histogram bins (odd)");
    mc->add_option("--z-range", s.z_range, "Histogram half-width (default 5 sqrt(v))");
    mc->add_option("--variants", s.variants, "Corrected estimators: b_star, b_star_star, none");
    mc->add_option("--workers", s.workers, "Worker threads (0: all cores)");
    mc->add_option("--bootstrap", s.bootstrap, "Bootstrap resamples");
    mc->add_option("--method", s.method)->check(CLI::IsMember({"circulant", "cholesky", "auto"}));
    mc->add_option("--svg", s.svg, "Write an SVG overlay figure");
    mc->add_option("--csv", s.csv, "Write the density table");
    common(diag, "json");
    model_flags(diag, false, false);

    // Per-subcommand default formats; `common` above set the last one.
    std::string sub_name = args.empty() ? "" : args.front();
    if (sub_name == "simulate" || sub_name == "expand") s.format = "csv";
    else s.format = "json";

    try {
        args = detail::merge_config(args);
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
        CLI::App* sub = app.get_subcommands().front();

        std::vector<std::string> required;
        if (sub == simulate || sub == expand || sub == mc) required = {"--H", "--n"};
        if (sub == coeffs) required = {"--H"};
        std::string missing;
        for (const auto& r : required)
            if (sub->count(r) == 0) missing += (missing.empty() ? "" : ", ") + r;
        if (!missing.empty()) throw UsageError("missing required flags: " + missing);

        std::string text;
        if (sub == coeffs) text = cmd_coeffs(s, err);
        else if (sub == simulate) text = cmd_simulate(s, err);
        else if (sub == estimate) text = cmd_estimate(s, in, err);
        else if (sub == expand) text = cmd_expand(s, err);
        else if (sub == mc) text = cmd_mc(s, err);
        else text = cmd_diag(s, err);

        if (s.format == "csv" && sub != coeffs) {
            // CSV carries no room for metadata; the resolved settings go to stderr.
            nlohmann::json cfg = detail::base_config(sub->get_name(), s);
            cfg.update({{"H", s.H}, {"T", s.T}, {"n", s.n}, {"seed", s.seed}});
            err << "config: " << cfg.dump() << "\n";
        }
        detail::write_output(s, text, out);
        return 0;
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return 0;
    } catch (const CLI::Success&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const ToleranceError& e) {
        err << "tolerance error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace hurst::cli
