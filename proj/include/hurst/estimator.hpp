// SPDX-License-Identifier: Apache-2.0
//
// Second-order variation estimator of the Hurst coefficient and its
// bias- and median-corrected variants, plus CSV ingestion of observed
// series.
#pragma once

#include "hurst/detail/accumulator.hpp"
#include "hurst/error.hpp"
#include "hurst/expansion.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hurst {

struct VStatistics {
    double v_n = 0.0;  // coarse grid, from the even-index subsample
    double v_2n = 0.0; // fine grid, from all samples
};

struct EstimateResult {
    long n = 0;
    double v_n = 0.0;
    double v_2n = 0.0;
    double h_raw = 0.0;
    double h_hat = 0.0;
    std::optional<double> h_b;   // mean-corrected (b*) or custom correction
    std::optional<double> h_med; // median-corrected (b**)
    bool clamped = false;
};

// Sums of squared second differences on both grids of 2n + 1 samples.
inline VStatistics v2_statistic(std::span<const double> x)
{
    if (x.size() < 5 || x.size() % 2 == 0)
        throw DomainError("sample array must have odd length >= 5, got " + std::to_string(x.size()));
    detail::CompensatedSum<double> fine, coarse;
    for (std::size_t j = 1; j + 1 < x.size(); ++j) {
        const double d = x[j + 1] - 2.0 * x[j] + x[j - 1];
        fine += d * d;
    }
    for (std::size_t j = 2; j + 2 < x.size(); j += 2) {
        const double d = x[j + 2] - 2.0 * x[j] + x[j - 2];
        coarse += d * d;
    }
    return {coarse.value(), fine.value()};
}

inline EstimateResult estimate_h(std::span<const double> x)
{
    const auto v = v2_statistic(x);
    if (!(v.v_n > 0.0) || !(v.v_2n > 0.0))
        throw DegenerateDataError("second-order variation vanishes (constant or linear input)");
    EstimateResult r;
    r.n = static_cast<long>((x.size() - 1) / 2);
    r.v_n = v.v_n;
    r.v_2n = v.v_2n;
    r.h_raw = 0.5 - std::log(v.v_2n / v.v_n) / (2.0 * std::numbers::ln2);
    r.clamped = !(r.h_raw >= 0.0 && r.h_raw <= 1.0);
    r.h_hat = std::clamp(r.h_raw, 0.0, 1.0);
    return r;
}

// H^ - b(H^)/n clamped to [0,1]; at a clamp endpoint the correction is
// skipped because b is only defined on the open interval.
inline double apply_correction(const EstimateResult& r, double b_at_hat)
{
    if (r.clamped) return r.h_hat;
    return std::clamp(r.h_hat - b_at_hat / static_cast<double>(r.n), 0.0, 1.0);
}

// b*(H) and b**(H) tabulated on 17 equispaced points of [0.1, 0.9] and
// interpolated by the cubic through the four nearest nodes. Arguments
// outside the grid are clamped to it.
class CorrectionTable {
public:
    static constexpr int nodes = 17;
    static constexpr double h_min = 0.1;
    static constexpr double h_max = 0.9;

    explicit CorrectionTable(const SeriesOptions& opts = {}, Convention conv = Convention::derived)
    {
        for (int i = 0; i < nodes; ++i) {
            const double H = node(i);
            const auto m = build_expansion(H, opts, conv);
            bstar_[static_cast<std::size_t>(i)] = m.b_star;
            bstar2_[static_cast<std::size_t>(i)] = m.b_star_star;
        }
    }

    static double node(int i) { return h_min + (h_max - h_min) * i / (nodes - 1); }

    double b_star(double H) const { return interp(bstar_, H); }
    double b_star_star(double H) const { return interp(bstar2_, H); }

private:
    static double interp(const std::array<double, nodes>& y, double H)
    {
        const double h = (h_max - h_min) / (nodes - 1);
        const double t = (std::clamp(H, h_min, h_max) - h_min) / h;
        int i0 = static_cast<int>(std::floor(t)) - 1;
        i0 = std::clamp(i0, 0, nodes - 4);
        double sum = 0.0;
        for (int a = 0; a < 4; ++a) {
            double w = 1.0;
            for (int b = 0; b < 4; ++b)
                if (b != a) w *= (t - (i0 + b)) / static_cast<double>(a - b);
            sum += w * y[static_cast<std::size_t>(i0 + a)];
        }
        return sum;
    }

    std::array<double, nodes> bstar_{};
    std::array<double, nodes> bstar2_{};
};

// Applies an arbitrary correction function b(.) evaluated at H^; the
// result goes to h_b.
inline EstimateResult estimate_h_corrected(std::span<const double> x, const std::function<double(double)>& b)
{
    auto r = estimate_h(x);
    r.h_b = apply_correction(r, r.clamped ? 0.0 : b(r.h_hat));
    return r;
}

// Both corrections: h_b uses b*, h_med uses b**.
inline EstimateResult estimate_h_corrected(std::span<const double> x, const CorrectionTable& table)
{
    auto r = estimate_h(x);
    r.h_b = apply_correction(r, r.clamped ? 0.0 : table.b_star(r.h_hat));
    r.h_med = apply_correction(r, r.clamped ? 0.0 : table.b_star_star(r.h_hat));
    return r;
}

inline nlohmann::json to_json(const EstimateResult& r)
{
    nlohmann::json j{{"n", r.n},         {"v_n", r.v_n},       {"v_2n", r.v_2n},
                     {"h_raw", r.h_raw}, {"h_hat", r.h_hat},   {"clamped", r.clamped}};
    j["h_star"] = r.h_b ? nlohmann::json(*r.h_b) : nlohmann::json(nullptr);
    j["h_med"] = r.h_med ? nlohmann::json(*r.h_med) : nlohmann::json(nullptr);
    return j;
}

// ---------------------------------------------------------------------
// CSV ingestion: one numeric column, or several of which the last is the
// series (a leading time column is ignored). A first row containing a
// non-numeric cell is treated as a header.

struct SeriesData {
    std::vector<double> samples;
    long n = 0;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

inline std::optional<double> parse_double(std::string_view s)
{
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

} // namespace detail

inline SeriesData ingest_series(std::istream& in)
{
    SeriesData out;
    std::string line;
    long row = 0;
    std::size_t columns = 0;
    while (std::getline(in, line)) {
        ++row;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto cells = detail::split_csv(t);
        if (out.samples.empty() && columns == 0) {
            bool numeric = true;
            for (auto c : cells) numeric = numeric && detail::parse_double(c).has_value();
            columns = cells.size();
            if (!numeric) continue; // header row
        }
        if (cells.size() != columns)
            throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(columns) +
                             " columns, found " + std::to_string(cells.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto v = detail::parse_double(cells[c]);
            if (!v)
                throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(c + 1) +
                                 ": cannot parse '" + std::string(cells[c]) + "' as a number");
            if (c + 1 == cells.size()) out.samples.push_back(*v);
        }
    }
    if (out.samples.size() < 5)
        throw ParseError("series too short: need at least 5 samples (2n+1 with n >= 2), got " +
                         std::to_string(out.samples.size()));
    if (out.samples.size() % 2 == 0) {
        out.samples.pop_back();
        out.warnings.push_back("even number of samples; dropped the last row to obtain 2n+1 = " +
                               std::to_string(out.samples.size()));
    }
    out.n = static_cast<long>((out.samples.size() - 1) / 2);
    return out;
}

inline SeriesData ingest_series_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open input file '" + path + "'");
    return ingest_series(in);
}

} // namespace hurst
