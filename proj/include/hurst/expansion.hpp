// SPDX-License-Identifier: Apache-2.0
//
// Second-order Edgeworth expansion of the law of sqrt(n)(H^ - H):
//   p_n(z) = (1 + n^{-1/2} q(z)) phi(z; 0, v),  q(z) = a3 z^3 + a1 z,
// together with the bias and median corrections b*, b** and the exact
// distribution function of the expansion.
#pragma once

#include "hurst/coefficients.hpp"

#include <cmath>
#include <numbers>
#include <optional>

namespace hurst {

struct EdgeworthModel {
    double H = 0.5;
    double c = 2.0 * std::numbers::ln2; // d(log ratio)/dH scale
    double v = 0.0;                     // limiting variance G_inf / c^2
    double a3 = 0.0;
    double a1 = 0.0;
    double b_star = 0.0;
    double b_star_star = 0.0;
    double g_inf = 0.0;
    double theta = 0.0;
    double tau = 0.0;

    double q(double z) const { return (a3 * z * z + a1) * z; }
};

inline double normal_pdf(double z, double var)
{
    return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

inline double normal_cdf(double z, double var)
{
    return 0.5 * std::erfc(-z / std::sqrt(2.0 * var));
}

// Closed forms from the Gaussian moments E z^4 = 3v^2, E z^2 = v and the
// half-line integrals int_0^inf z^3 e^{-z^2/2v} = 2v^2, int_0^inf z e^{-z^2/2v} = v.
inline double b_star(const EdgeworthModel& m) { return 3.0 * m.a3 * m.v * m.v + m.a1 * m.v; }
inline double b_star_star(const EdgeworthModel& m) { return 2.0 * m.a3 * m.v * m.v + m.a1 * m.v; }

// Builds the model from the limit constants. The polynomial for the
// log-ratio statistic is
//   q^Z(x) = (theta/(3G^2) + tau/(2G)) x^3 - ((2 theta + 1)/(2G) + tau) x
// and q(z) = q^Z(c z).
inline EdgeworthModel make_expansion(const ExpansionCoefficients& co)
{
    EdgeworthModel m;
    m.H = co.H;
    m.g_inf = co.g_inf;
    m.theta = co.theta;
    m.tau = co.tau;
    const double G = co.g_inf;
    const double c = m.c;
    m.v = G / (c * c);
    if (!(m.v > 0.0)) throw InternalError("non-positive expansion variance");
    m.a3 = c * c * c * (co.theta / (3.0 * G * G) + co.tau / (2.0 * G));
    m.a1 = -c * ((2.0 * co.theta + 1.0) / (2.0 * G) + co.tau);
    m.b_star = b_star(m);
    m.b_star_star = b_star_star(m);
    return m;
}

inline EdgeworthModel build_expansion(double H, const SeriesOptions& opts = {},
                                      Convention conv = Convention::derived)
{
    return make_expansion(cached_coefficients(H, opts, conv));
}

inline EdgeworthModel build_expansion(double H, double tol, Convention conv = Convention::derived)
{
    SeriesOptions o;
    o.tol = tol;
    return build_expansion(H, o, conv);
}

namespace detail {
inline void require_n(long n)
{
    if (n < 2) throw DomainError("n must be at least 2");
}
} // namespace detail

// Modified expansion with q^(b)(z) = q(z) - (b/v) z. b = 0 gives p_n.
inline double density_pn_b(const EdgeworthModel& m, long n, double b, double z)
{
    detail::require_n(n);
    const double qb = m.q(z) - (b / m.v) * z;
    return (1.0 + qb / std::sqrt(static_cast<double>(n))) * normal_pdf(z, m.v);
}

inline double density_pn(const EdgeworthModel& m, long n, double z) { return density_pn_b(m, n, 0.0, z); }

// Distribution function of the (possibly modified) expansion, from
//   int_{-inf}^z u   phi(u;0,v) du = -v phi(z)
//   int_{-inf}^z u^3 phi(u;0,v) du = -v (z^2 + 2v) phi(z).
// Not guaranteed monotone; the expansion is used as given.
inline double cdf_pn(const EdgeworthModel& m, long n, double z, std::optional<double> b = std::nullopt)
{
    detail::require_n(n);
    if (std::isinf(z)) return z > 0 ? 1.0 : 0.0;
    const double a1 = m.a1 - (b ? *b / m.v : 0.0);
    const double corr = -m.v * (m.a3 * (z * z + 2.0 * m.v) + a1) * normal_pdf(z, m.v);
    return normal_cdf(z, m.v) + corr / std::sqrt(static_cast<double>(n));
}

struct PredictedMoments {
    double mean = 0.0;
    double variance = 0.0;
    double third = 0.0; // third raw moment
};

// Moments of the expansion density. The second raw moment equals v exactly
// because z^2 q(z) phi is odd.
inline PredictedMoments predicted_moments(const EdgeworthModel& m, long n, std::optional<double> b = std::nullopt)
{
    detail::require_n(n);
    const double a1 = m.a1 - (b ? *b / m.v : 0.0);
    const double rn = std::sqrt(static_cast<double>(n));
    PredictedMoments pm;
    pm.mean = (3.0 * m.a3 * m.v * m.v + a1 * m.v) / rn;
    pm.variance = m.v - pm.mean * pm.mean;
    pm.third = (15.0 * m.a3 * m.v * m.v * m.v + 3.0 * a1 * m.v * m.v) / rn;
    return pm;
}

inline nlohmann::json to_json(const EdgeworthModel& m)
{
    return {{"H", m.H},         {"c", m.c},         {"v", m.v},
            {"a3", m.a3},       {"a1", m.a1},       {"b_star", m.b_star},
            {"b_star_star", m.b_star_star},         {"g_inf", m.g_inf},
            {"theta", m.theta}, {"tau", m.tau}};
}

} // namespace hurst
