// SPDX-License-Identifier: Apache-2.0
//
// Serialization of Monte Carlo reports: JSON document, CSV density table
// and a static SVG overlay of the histogram and the two model curves.
// Numbers are written in shortest round-trip form with a '.' separator.
#pragma once

#include "hurst/montecarlo.hpp"

#include <json.hpp>

#include <locale>
#include <sstream>
#include <string>

namespace hurst {

inline nlohmann::json to_json(const McConfig& c)
{
    nlohmann::json variants = nlohmann::json::array({"plain"});
    if (c.variant_b_star) variants.push_back("b_star");
    if (c.variant_b_star_star) variants.push_back("b_star_star");
    return {{"H", c.H},
            {"T", c.T},
            {"n", c.n},
            {"reps", c.reps},
            {"seed", c.seed},
            {"bins", c.bins},
            {"z_range", c.z_range},
            {"variants", variants},
            {"bootstrap", c.bootstrap},
            {"tol", c.series.tol},
            {"max_radius", c.series.max_radius},
            {"convention", convention_name(c.convention)},
            {"method", method_name(c.method)}};
}

inline nlohmann::json to_json(const Estimate& e) { return {{"value", e.value}, {"se", e.se}}; }

inline nlohmann::json to_json(const VariantSummary& s)
{
    return {{"mean_z", to_json(s.mean_z)}, {"p_at_most_h", to_json(s.p_at_most_h)}};
}

// Rows of the density table: bin centre, empirical density (frequency per
// unit z), phi(.;0,v) and p_n at the centre.
struct DensityRow {
    double z, empirical, phi, p_n;
};

inline std::vector<DensityRow> density_rows(const McReport& r)
{
    std::vector<DensityRow> rows;
    const auto& h = r.hist;
    const double w = h.width();
    for (int i = 0; i < h.bins(); ++i) {
        const double z = h.center(i);
        rows.push_back({z, h.counts[static_cast<std::size_t>(i)] / (h.total * w), normal_pdf(z, r.model.v),
                        density_pn(r.model, r.config.n, z)});
    }
    return rows;
}

inline nlohmann::json to_json(const McReport& r)
{
    nlohmann::json j;
    j["config"] = to_json(r.config);
    j["model"] = to_json(r.model);
    j["atom0"] = r.atom0;
    j["atom1"] = r.atom1;
    nlohmann::json hist;
    hist["lo"] = r.hist.lo;
    hist["hi"] = r.hist.hi;
    hist["width"] = r.hist.width();
    nlohmann::json freq = nlohmann::json::array();
    for (double c : r.hist.counts) freq.push_back(c / r.hist.total);
    hist["freq"] = freq;
    hist["underflow"] = r.hist.underflow / r.hist.total;
    hist["overflow"] = r.hist.overflow / r.hist.total;
    hist["interior_first"] = r.distances.interior_first;
    hist["interior_last"] = r.distances.interior_last;
    j["hist"] = hist;
    nlohmann::json dens = nlohmann::json::array();
    for (const auto& row : density_rows(r))
        dens.push_back({{"z", row.z}, {"empirical", row.empirical}, {"phi", row.phi}, {"p_n", row.p_n}});
    j["density"] = dens;
    j["distances"] = {{"l1_normal", r.distances.l1_normal},
                      {"l1_expansion", r.distances.l1_expansion},
                      {"ks_normal", r.distances.ks_normal},
                      {"ks_expansion", r.distances.ks_expansion},
                      {"l1_normal_se", r.l1_normal_boot.se},
                      {"l1_expansion_se", r.l1_expansion_boot.se},
                      {"l1_gap_se", r.l1_gap_boot.se},
                      {"ks_normal_se", r.ks_normal_boot.se},
                      {"ks_expansion_se", r.ks_expansion_boot.se}};
    j["moments"] = {{"mean", to_json(r.mean)}, {"variance", to_json(r.variance)}, {"third", to_json(r.third)}};
    j["predicted"] = {{"mean", r.predicted.mean}, {"variance", r.predicted.variance}, {"third", r.predicted.third}};
    nlohmann::json var;
    var["plain"] = to_json(r.plain);
    if (r.b_star) var["b_star"] = to_json(*r.b_star);
    if (r.b_star_star) var["b_star_star"] = to_json(*r.b_star_star);
    j["variants"] = var;
    return j;
}

inline std::string density_csv(const McReport& r)
{
    std::string s = "z,empirical,phi,p_n\n";
    for (const auto& row : density_rows(r))
        s += shortest_repr(row.z) + ',' + shortest_repr(row.empirical) + ',' + shortest_repr(row.phi) + ',' +
             shortest_repr(row.p_n) + '\n';
    return s;
}

// Minimal figure: axes, histogram bars, phi (dashed) and p_n (solid).
inline std::string render_svg(const McReport& r, int width = 640, int height = 400)
{
    const auto rows = density_rows(r);
    const double margin = 40.0;
    double ymax = 0.0;
    for (const auto& row : rows) ymax = std::max({ymax, row.empirical, row.phi, row.p_n});
    if (!(ymax > 0.0)) ymax = 1.0;
    ymax *= 1.05;
    const double pw = width - 2 * margin, ph = height - 2 * margin;
    auto X = [&](double z) { return margin + (z - r.hist.lo) / (r.hist.hi - r.hist.lo) * pw; };
    auto Y = [&](double y) { return height - margin - std::max(0.0, y) / ymax * ph; };
    auto f = [](double x) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, 2);
        return std::string(buf, res.ptr);
    };
    std::ostringstream o;
    o.imbue(std::locale::classic());
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << f(X(0.0)) << "\" y1=\"" << margin << "\" x2=\"" << f(X(0.0)) << "\" y2=\""
      << height - margin << "\" stroke=\"gray\"/>\n";
    const double bw = r.hist.width() / (r.hist.hi - r.hist.lo) * pw;
    for (int i = 0; i < r.hist.bins(); ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        o << "<rect x=\"" << f(X(r.hist.edge(i))) << "\" y=\"" << f(Y(row.empirical)) << "\" width=\"" << f(bw)
          << "\" height=\"" << f(height - margin - Y(row.empirical)) << "\" fill=\"#c8d7ea\" stroke=\"#7f99b8\"/>\n";
    }
    auto polyline = [&](auto get, const char* colour, const char* dash) {
        o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\"" << dash << " points=\"";
        const int steps = 400;
        for (int k = 0; k <= steps; ++k) {
            const double z = r.hist.lo + (r.hist.hi - r.hist.lo) * k / steps;
            o << f(X(z)) << ',' << f(Y(get(z))) << (k == steps ? "" : " ");
        }
        o << "\"/>\n";
    };
    polyline([&](double z) { return normal_pdf(z, r.model.v); }, "black", " stroke-dasharray=\"6,4\"");
    polyline([&](double z) { return density_pn(r.model, r.config.n, z); }, "green", "");
    o << "<text x=\"" << margin << "\" y=\"" << margin - 12 << "\" font-size=\"13\">H=" << shortest_repr(r.config.H)
      << " n=" << r.config.n << " reps=" << r.config.reps << "</text>\n";
    o << "<text x=\"" << margin << "\" y=\"" << height - 12 << "\" font-size=\"12\">" << shortest_repr(r.hist.lo)
      << "</text>\n";
    o << "<text x=\"" << width - margin - 30 << "\" y=\"" << height - 12 << "\" font-size=\"12\">"
      << shortest_repr(r.hist.hi) << "</text>\n";
    o << "</svg>\n";
    return o.str();
}

} // namespace hurst
