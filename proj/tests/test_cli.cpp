// SPDX-License-Identifier: Apache-2.0
#include "cli_app.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using Catch::Approx;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args, const std::string& input = "")
{
    std::ostringstream out, err;
    std::istringstream in(input);
    const int code = hurst::cli::run_cli(std::move(args), out, err, in);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string& header)
{
    std::istringstream in(text);
    std::getline(in, header);
    std::vector<std::vector<double>> rows;
    for (std::string line; std::getline(in, line);) {
        std::vector<double> row;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content)
{
    const auto p = std::filesystem::temp_directory_path() / ("hurst_cli_test_" + name);
    std::ofstream(p) << content;
    return p;
}

// Minimal JSON Schema check covering the keywords used by the report schema.
bool type_ok(const json& v, const std::string& t)
{
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    if (t == "null") return v.is_null();
    if (t == "boolean") return v.is_boolean();
    return false;
}

void validate(const json& v, const json& s, const std::string& at, std::vector<std::string>& errs)
{
    if (s.contains("type")) {
        bool ok = false;
        if (s["type"].is_array()) {
            for (const auto& t : s["type"]) ok = ok || type_ok(v, t.get<std::string>());
        } else {
            ok = type_ok(v, s["type"].get<std::string>());
        }
        if (!ok) {
            errs.push_back(at + ": wrong type");
            return;
        }
    }
    if (s.contains("enum") && std::find(s["enum"].begin(), s["enum"].end(), v) == s["enum"].end())
        errs.push_back(at + ": not in enum");
    if (v.is_number()) {
        const double x = v.get<double>();
        if (s.contains("minimum") && x < s["minimum"].get<double>()) errs.push_back(at + ": below minimum");
        if (s.contains("maximum") && x > s["maximum"].get<double>()) errs.push_back(at + ": above maximum");
        if (s.contains("exclusiveMinimum") && x <= s["exclusiveMinimum"].get<double>())
            errs.push_back(at + ": not above exclusive minimum");
    }
    if (v.is_object()) {
        for (const auto& r : s.value("required", json::array()))
            if (!v.contains(r.get<std::string>())) errs.push_back(at + ": missing " + r.get<std::string>());
        const auto props = s.value("properties", json::object());
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (props.contains(it.key())) validate(it.value(), props[it.key()], at + "/" + it.key(), errs);
            else if (s.value("additionalProperties", true) == false) errs.push_back(at + ": extra " + it.key());
        }
    }
    if (v.is_array() && s.contains("items"))
        for (std::size_t i = 0; i < v.size(); ++i) validate(v[i], s["items"], at + "/" + std::to_string(i), errs);
}

std::vector<std::string> validate(const json& v, const json& schema)
{
    std::vector<std::string> errs;
    validate(v, schema, "", errs);
    return errs;
}

} // namespace

TEST_CASE("coeffs reports the H = 1/2 constants", "[cli]")
{
    const auto r = run({"coeffs", "--H", "0.5"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["coefficients"]["sigma11"].get<double>() == Approx(3.0).epsilon(1e-10));
    CHECK(j["coefficients"]["g_inf"].get<double>() == Approx(3.0).epsilon(1e-10));
    CHECK(j["coefficients"]["theta"].get<double>() == Approx(0.75).epsilon(1e-10));
    CHECK(j["config"]["H"] == 0.5);

    const auto p = run({"coeffs", "--H", "0.5", "--convention", "published"});
    REQUIRE(p.code == 0);
    CHECK(json::parse(p.out)["coefficients"]["theta"].get<double>() == Approx(7.0 / 6.0).epsilon(1e-10));

    const auto c = run({"coeffs", "--H", "0.5", "--format", "csv"});
    REQUIRE(c.code == 0);
    CHECK(c.out.rfind("key,value\n", 0) == 0);
    CHECK(c.out.find("coefficients.sigma11,3") != std::string::npos);
}

TEST_CASE("exit codes", "[cli]")
{
    const auto bad = run({"coeffs", "--H", "1.2"});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("(0,1)") != std::string::npos);
    CHECK(run({"coeffs", "--H", "0.7", "--tol", "1e-14", "--max-radius", "4"}).code == 2);
    CHECK(run({"coeffs", "--H", "0.5", "--bogus", "1"}).code == 1);
    CHECK(run({}).code == 1);
    CHECK(run({"estimate"}).code == 1);
    CHECK(run({"coeffs", "--help"}).code == 0);

    const auto missing = run({"mc"});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("--H") != std::string::npos);
    CHECK(missing.err.find("--n") != std::string::npos);
    const auto only_n = run({"mc", "--H", "0.5"});
    CHECK(only_n.code == 1);
    CHECK(only_n.err.find("--n") != std::string::npos);
    CHECK(only_n.err.find("--H") == std::string::npos);
}

TEST_CASE("expand tabulates a unit-mass density", "[cli]")
{
    const auto r = run({"expand", "--H", "0.5", "--n", "64", "--steps", "401"});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("config: {") != std::string::npos);
    std::string header;
    const auto rows = parse_csv(r.out, header);
    CHECK(header == "z,p_n,phi,p_n_b");
    REQUIRE(rows.size() == 401);
    const auto& mid = rows[200];
    CHECK(mid[0] == Approx(0.0).margin(1e-12));
    CHECK(mid[1] == Approx(0.31930).epsilon(1e-4));
    double mass = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i][2] == Approx(rows[rows.size() - 1 - i][2]).epsilon(1e-12));
        if (i > 0) mass += 0.5 * (rows[i][1] + rows[i - 1][1]) * (rows[i][0] - rows[i - 1][0]);
    }
    CHECK(std::abs(mass - 1.0) < 1e-4);
    CHECK(run({"expand", "--H", "0.5", "--n", "64", "--steps", "2"}).code == 1);
}

TEST_CASE("simulate and estimate round trip", "[cli]")
{
    const auto s = run({"simulate", "--H", "0.5", "--n", "64", "--seed", "9"});
    REQUIRE(s.code == 0);
    std::string header;
    const auto rows = parse_csv(s.out, header);
    CHECK(header == "t,B");
    REQUIRE(rows.size() == 129);
    CHECK(rows.front()[0] == 0.0);
    CHECK(rows.front()[1] == 0.0);
    CHECK(rows.back()[0] == Approx(1.0));
    CHECK(s.out == run({"simulate", "--H", "0.5", "--n", "64", "--seed", "9"}).out);

    const auto e = run({"estimate", "--stdin"}, s.out);
    REQUIRE(e.code == 0);
    const auto j = json::parse(e.out);
    for (const char* k : {"h_raw", "h_hat", "h_star", "h_med", "v_n", "v_2n", "n", "clamped", "config"})
        CHECK(j.contains(k));
    CHECK(j["n"] == 64);

    const auto path = temp_file("series.csv", s.out);
    const auto f = run({"estimate", "--input", path.string()});
    REQUIRE(f.code == 0);
    CHECK(json::parse(f.out)["h_raw"] == j["h_raw"]);
    CHECK(run({"estimate", "--input", path.string(), "--stdin"}).code == 1);

    const auto bad = run({"estimate", "--stdin"}, "B\n1\n2\nx\n4\n5\n");
    CHECK(bad.code == 1);
    CHECK(bad.err.find("row 4") != std::string::npos);
    CHECK(run({"estimate", "--stdin"}, "1\n1\n1\n1\n1\n").code == 1);
}

TEST_CASE("mc output is deterministic and matches the schema", "[cli]")
{
    const std::vector<std::string> args{"mc", "--H", "0.4", "--n", "16", "--reps", "500", "--seed", "5",
                                        "--bootstrap", "10"};
    const auto a = run(args);
    REQUIRE(a.code == 0);
    auto w = args;
    w.insert(w.end(), {"--workers", "3"});
    CHECK(a.out == run(w).out);

    std::ifstream sf(HURST_SCHEMA_PATH);
    REQUIRE(sf);
    const auto schema = json::parse(sf);
    const auto doc = json::parse(a.out);
    const auto errs = validate(doc, schema);
    for (const auto& e : errs) INFO(e);
    CHECK(errs.empty());

    // The validator does reject malformed reports.
    auto broken = doc;
    broken.erase("hist");
    broken["atom0"] = -1.0;
    broken["config"]["method"] = "magic";
    CHECK(validate(broken, schema).size() == 3);

    const auto none = run({"mc", "--H", "0.4", "--n", "16", "--reps", "200", "--bootstrap", "0", "--variants", "none"});
    REQUIRE(none.code == 0);
    CHECK(validate(json::parse(none.out), schema).empty());
    CHECK_FALSE(json::parse(none.out)["variants"].contains("b_star"));
}

TEST_CASE("mc side files", "[cli]")
{
    const auto dir = std::filesystem::temp_directory_path();
    const auto svg = dir / "hurst_cli_test.svg";
    const auto csv = dir / "hurst_cli_test.csv";
    const auto r = run({"mc", "--H", "0.5", "--n", "16", "--reps", "300", "--bootstrap", "0", "--bins", "21",
                        "--svg", svg.string(), "--csv", csv.string()});
    REQUIRE(r.code == 0);
    std::ifstream s(svg), c(csv);
    std::stringstream ss, cs;
    ss << s.rdbuf();
    cs << c.rdbuf();
    CHECK(ss.str().rfind("<svg", 0) == 0);
    std::string header;
    CHECK(parse_csv(cs.str(), header).size() == 21);
    CHECK(header == "z,empirical,phi,p_n");
    CHECK(run({"mc", "--H", "0.5", "--n", "16", "--reps", "300", "--bins", "20"}).code == 1);
    CHECK(run({"mc", "--H", "0.5", "--n", "16", "--reps", "300", "--variants", "odd"}).code == 1);
}

TEST_CASE("config files supply defaults that flags override", "[cli]")
{
    const auto cfg = temp_file("config.json", R"({"H": 0.7, "n": 32, "steps": 11, "range": 2.0})");
    const auto a = run({"expand", "--config", cfg.string()});
    REQUIRE(a.code == 0);
    std::string header;
    auto rows = parse_csv(a.out, header);
    REQUIRE(rows.size() == 11);
    CHECK(rows.front()[0] == Approx(-2.0));
    CHECK(a.err.find("\"H\":0.7") != std::string::npos);

    const auto b = run({"expand", "--config", cfg.string(), "--steps", "5", "--H", "0.3"});
    REQUIRE(b.code == 0);
    rows = parse_csv(b.out, header);
    CHECK(rows.size() == 5);
    CHECK(b.err.find("\"H\":0.3") != std::string::npos);

    const auto unknown = temp_file("unknown.json", R"({"H": 0.5, "frobnicate": 3})");
    CHECK(run({"coeffs", "--config", unknown.string()}).code == 1);
    const auto garbage = temp_file("garbage.json", "{not json");
    CHECK(run({"coeffs", "--config", garbage.string()}).code == 1);
    CHECK(run({"coeffs", "--config", "/nonexistent/config.json"}).code == 1);

    const auto list = temp_file("list.json", R"({"H": 0.5, "n": 16, "reps": 200, "bootstrap": 0, "variants": ["b_star"]})");
    const auto m = run({"mc", "--config", list.string()});
    REQUIRE(m.code == 0);
    const auto j = json::parse(m.out);
    CHECK(j["variants"].contains("b_star"));
    CHECK_FALSE(j["variants"].contains("b_star_star"));
}

TEST_CASE("diag reports chain averages", "[cli]")
{
    const auto r = run({"diag", "--H", "0.5"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    for (const auto& row : j["a_n"]) {
        const double n = row["n"].get<double>();
        const double exact = row["k"] == 2 ? 6.0 - 2.0 / n : 20.0 - 12.0 / n;
        CHECK(row["a_n"].get<double>() == Approx(exact).epsilon(1e-12));
    }
}
