// SPDX-License-Identifier: Apache-2.0
//
// Correlation kernels of second-order increments of fractional Brownian
// motion, grid covariances, and the truncated lattice chain-sum evaluator
// on which every limit coefficient is built.
#pragma once

#include "hurst/detail/accumulator.hpp"
#include "hurst/detail/fft.hpp"
#include "hurst/error.hpp"
#include "hurst/format.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace hurst {

inline void require_hurst(double H)
{
    if (!(H > 0.0 && H < 1.0))
        throw DomainError("Hurst coefficient must lie in (0,1), got " + shortest_repr(H));
}

// Parameters of one observation design: Hurst coefficient, horizon and
// number of coarse grid intervals. The fine grid has 2n intervals.
struct HurstModel {
    double H = 0.5;
    double T = 1.0;
    long n = 2;

    void validate() const
    {
        require_hurst(H);
        if (!(T > 0.0) || !std::isfinite(T))
            throw DomainError("horizon T must be positive");
        if (n < 2) throw DomainError("n must be at least 2");
    }
};

enum class Kernel { rho_hat, rho_tilde };

inline const char* kernel_name(Kernel k)
{
    return k == Kernel::rho_hat ? "rho_hat" : "rho_tilde";
}

namespace detail {

// Symmetric difference stencils. rho_hat is one half of the negated fourth
// central difference of |x|^{2H}; rho_tilde is the analogous cross-grid
// stencil. Both annihilate polynomials of degree three.
struct Stencil {
    int radius;
    std::array<double, 7> w; // w[k + radius] for k = -radius..radius
    long series_from;        // |j| from which the binomial series is used
};

inline const Stencil& stencil(Kernel k)
{
    static const Stencil hat{2, {-1, 4, -6, 4, -1, 0, 0}, 5};
    static const Stencil tilde{3, {-1, 2, 1, -4, 1, 2, -1}, 8};
    return k == Kernel::rho_hat ? hat : tilde;
}

inline double kernel_scale(Kernel k, double H)
{
    return k == Kernel::rho_hat ? 0.5 : std::exp2(-(2.0 * H + 1.0));
}

// sum_k w_k |x + k|^{2H} with compensated accumulation.
inline double stencil_direct(const Stencil& s, double a, long x)
{
    CompensatedSum<double> acc;
    for (int k = -s.radius; k <= s.radius; ++k) {
        const double wk = s.w[static_cast<std::size_t>(k + s.radius)];
        if (wk == 0.0) continue;
        const double arg = std::abs(static_cast<double>(x + k));
        acc += wk * (arg == 0.0 ? 0.0 : std::pow(arg, a));
    }
    return acc.value();
}

// Same quantity for x > radius via the convergent expansion
//   |x+k|^a = x^a sum_m binom(a,m) (k/x)^m,
// summed over the stencil first. Moments of order < 4 vanish, so the
// cancellation that ruins the direct form never happens here.
inline double stencil_series(const Stencil& s, double a, long x)
{
    const double u = 1.0 / static_cast<double>(x);
    std::array<double, 4> pw{1.0, 1.0, 1.0, 1.0}; // (k u)^m for k = 0..3
    double binom = 1.0;
    CompensatedSum<double> acc;
    for (int m = 1; m <= 200; ++m) {
        binom *= (a - (m - 1)) / m;
        for (int k = 1; k <= 3; ++k) pw[static_cast<std::size_t>(k)] *= k * u;
        if (m < 4 || (m & 1)) continue;
        if (binom == 0.0) break;
        double moment = 0.0;
        for (int k = 1; k <= s.radius; ++k)
            moment += 2.0 * s.w[static_cast<std::size_t>(k + s.radius)] * pw[static_cast<std::size_t>(k)];
        const double term = binom * moment;
        acc += term;
        if (std::abs(term) <= 1e-18 * std::abs(acc.value())) break;
    }
    return std::pow(static_cast<double>(x), a) * acc.value();
}

} // namespace detail

// Kernel value at integer lag j. Both kernels are even in j.
inline double kernel_value(Kernel k, double H, long j)
{
    require_hurst(H);
    const auto& s = detail::stencil(k);
    const long x = std::labs(j);
    const double a = 2.0 * H;
    const double raw = x >= s.series_from ? detail::stencil_series(s, a, x)
                                          : detail::stencil_direct(s, a, x);
    return detail::kernel_scale(k, H) * raw;
}

inline double rho_hat(double H, long j) { return kernel_value(Kernel::rho_hat, H, j); }
inline double rho_tilde(double H, long j) { return kernel_value(Kernel::rho_tilde, H, j); }

// Limit of kernel(j) / |j|^{2H-4} as |j| grows.
inline double decay_constant(double H, Kernel k)
{
    require_hurst(H);
    const double base = -H * (2 * H - 1) * (2 * H - 2) * (2 * H - 3);
    return k == Kernel::rho_hat ? base : std::exp2(2.0 - 2.0 * H) * base;
}

enum class GridLevel { coarse, fine, cross };

// Covariance of second differences on the observation grids. For the cross
// level, j indexes the coarse grid and k the fine grid.
inline double increment_covariance(const HurstModel& m, GridLevel level, long j, long k)
{
    m.validate();
    auto check = [](long i, long hi, const char* what) {
        if (i < 1 || i > hi)
            throw DomainError(std::string(what) + " index " + std::to_string(i) +
                              " outside 1.." + std::to_string(hi));
    };
    const double coarse_scale = std::pow(m.T / static_cast<double>(m.n), 2.0 * m.H);
    switch (level) {
    case GridLevel::coarse:
        check(j, m.n - 1, "coarse");
        check(k, m.n - 1, "coarse");
        return coarse_scale * rho_hat(m.H, j - k);
    case GridLevel::fine:
        check(j, 2 * m.n - 1, "fine");
        check(k, 2 * m.n - 1, "fine");
        return std::pow(m.T / (2.0 * static_cast<double>(m.n)), 2.0 * m.H) * rho_hat(m.H, j - k);
    case GridLevel::cross:
        check(j, m.n - 1, "coarse");
        check(k, 2 * m.n - 1, "fine");
        return coarse_scale * rho_tilde(m.H, k - 2 * j);
    }
    throw DomainError("unknown grid level");
}

// Immutable tabulation of both kernels on [-radius, radius].
class KernelTable {
public:
    KernelTable(double H, long radius) : H_(H), radius_(radius)
    {
        require_hurst(H);
        if (radius < 4) throw DomainError("kernel table radius must be at least 4");
        const auto len = static_cast<std::size_t>(radius + 1);
        hat_.resize(len);
        tilde_.resize(len);
        for (long j = 0; j <= radius; ++j) {
            hat_[static_cast<std::size_t>(j)] = hurst::rho_hat(H, j);
            tilde_[static_cast<std::size_t>(j)] = hurst::rho_tilde(H, j);
        }
        // Twice the integral majorant of C |j|^{2H-4} over both tails,
        // with a further factor 2 covering the subleading terms.
        const double c = std::max(std::abs(decay_constant(H, Kernel::rho_hat)),
                                  std::abs(decay_constant(H, Kernel::rho_tilde)));
        tail_bound_ = 4.0 * c * std::pow(static_cast<double>(radius), 2.0 * H - 3.0) / (3.0 - 2.0 * H);
    }

    double H() const { return H_; }
    long radius() const { return radius_; }
    double tail_bound() const { return tail_bound_; }

    double rho_hat(long j) const { return hat_.at(static_cast<std::size_t>(std::labs(j))); }
    double rho_tilde(long j) const { return tilde_.at(static_cast<std::size_t>(std::labs(j))); }
    double operator()(Kernel k, long j) const
    {
        return k == Kernel::rho_hat ? rho_hat(j) : rho_tilde(j);
    }

private:
    double H_;
    long radius_;
    double tail_bound_ = 0.0;
    std::vector<double> hat_;
    std::vector<double> tilde_;
};

// One factor kernel(left * i_{a-1} - right * i_a + offset) of a chain sum,
// where i_0 = i_k = 0 and i_1..i_{k-1} are the free summation indices.
struct ChainFactor {
    Kernel kernel = Kernel::rho_hat;
    int left = 1;
    int right = 1;
    int offset = 0;
};

struct ChainSpec {
    std::vector<ChainFactor> factors;
    std::string label;

    void validate() const
    {
        if (factors.size() < 2) throw DomainError("chain needs at least two factors");
        for (const auto& f : factors) {
            if ((f.left != 1 && f.left != 2) || (f.right != 1 && f.right != 2))
                throw DomainError("chain dilations must be 1 or 2");
            if (f.offset < -1 || f.offset > 1) throw DomainError("chain offsets must be in {-1,0,1}");
        }
    }
};

// Kernel table radius needed to evaluate a chain with free indices in [-R, R].
inline long chain_table_radius(long R) { return 4 * R + 2; }

namespace detail {

inline constexpr std::size_t direct_work_limit = std::size_t{1} << 18;

// Transfer step: w(m) = sum_i v(i) K(left*i - right*m + off) for
// |m| <= rout, where v is supported on |i| <= rv.
inline std::vector<double> chain_step(const KernelTable& tab, const ChainFactor& f,
                                      const std::vector<double>& v, long rv, long rout)
{
    const auto out_len = static_cast<std::size_t>(2 * rout + 1);
    std::vector<double> w(out_len, 0.0);
    if (v.size() * out_len <= direct_work_limit) {
        for (long m = -rout; m <= rout; ++m) {
            double s = 0.0;
            for (long i = -rv; i <= rv; ++i) {
                const double vi = v[static_cast<std::size_t>(i + rv)];
                if (vi != 0.0) s += vi * tab(f.kernel, f.left * i - f.right * m + f.offset);
            }
            w[static_cast<std::size_t>(m + rout)] = s;
        }
        return w;
    }
    // The kernel is even, so w(m) = sum_p u(p) K(t - p) with u the input
    // upsampled by `left` and t = right*m - off: a plain convolution.
    const long pmax = f.left * rv;
    std::vector<double> u(static_cast<std::size_t>(2 * pmax + 1), 0.0);
    for (long i = -rv; i <= rv; ++i)
        u[static_cast<std::size_t>(f.left * i + pmax)] = v[static_cast<std::size_t>(i + rv)];
    const long tmin = -f.right * rout - f.offset;
    const long tmax = f.right * rout - f.offset;
    const long smin = tmin - pmax;
    const long smax = tmax + pmax;
    std::vector<double> kseg(static_cast<std::size_t>(smax - smin + 1));
    for (long s = smin; s <= smax; ++s) kseg[static_cast<std::size_t>(s - smin)] = tab(f.kernel, s);
    const auto c = convolve(u, kseg);
    for (long m = -rout; m <= rout; ++m) {
        const long t = f.right * m - f.offset;
        w[static_cast<std::size_t>(m + rout)] = c[static_cast<std::size_t>(t + pmax - smin)];
    }
    return w;
}

} // namespace detail

// Exact value of the chain sum with every free index restricted to
// |i| <= R. The table must cover chain_table_radius(R).
inline double chain_sum_truncated(const KernelTable& tab, const ChainSpec& spec, long R)
{
    spec.validate();
    if (R < 0) throw DomainError("chain radius must be non-negative");
    if (tab.radius() < chain_table_radius(R)) throw DomainError("kernel table too small for chain radius");
    std::vector<double> v{1.0};
    long rv = 0;
    const std::size_t k = spec.factors.size();
    for (std::size_t a = 0; a < k; ++a) {
        const long rout = a + 1 == k ? 0 : R;
        v = detail::chain_step(tab, spec.factors[a], v, rv, rout);
        rv = rout;
    }
    return v.front();
}

struct SeriesOptions {
    double tol = 1e-10;
    long initial_radius = 1024;
    long max_radius = 1L << 20;
};

struct ChainValue {
    double value = 0.0;
    double tail_error = 0.0; // |S(R) - S(R/2)| at the accepted radius, after scaling
    long radius = 0;
};

// Evaluates several chains together by radius doubling. Each chain i is
// multiplied by scale[i]; doubling stops once every scaled value moved by
// less than opts.tol. At least one doubling is always performed, because
// the change between radii is the only available error estimate.
inline std::vector<ChainValue> chain_sums(double H, const std::vector<ChainSpec>& specs,
                                          const std::vector<double>& scale,
                                          const SeriesOptions& opts = {})
{
    require_hurst(H);
    if (scale.size() != specs.size()) throw DomainError("one scale per chain required");
    if (!(opts.tol > 0.0)) throw DomainError("tolerance must be positive");
    for (const auto& s : specs) s.validate();

    auto eval_all = [&](long R) {
        const KernelTable tab(H, chain_table_radius(R));
        std::vector<double> out(specs.size());
        for (std::size_t i = 0; i < specs.size(); ++i)
            out[i] = scale[i] * chain_sum_truncated(tab, specs[i], R);
        return out;
    };

    long R = std::max(4L, std::min(opts.initial_radius, opts.max_radius));
    auto prev = eval_all(R);
    double worst = 0.0;
    bool have_estimate = false;
    while (2 * R <= opts.max_radius) {
        R *= 2;
        auto cur = eval_all(R);
        worst = 0.0;
        for (std::size_t i = 0; i < cur.size(); ++i) worst = std::max(worst, std::abs(cur[i] - prev[i]));
        have_estimate = true;
        if (worst < opts.tol) {
            std::vector<ChainValue> res(cur.size());
            for (std::size_t i = 0; i < cur.size(); ++i)
                res[i] = {cur[i], std::abs(cur[i] - prev[i]), R};
            return res;
        }
        prev = std::move(cur);
    }
    std::string msg = "tolerance " + shortest_repr(opts.tol) + " not achieved within radius cap " +
                      std::to_string(opts.max_radius);
    if (have_estimate) msg += " (last change " + shortest_repr(worst) + ")";
    throw ToleranceError(msg);
}

inline ChainValue chain_sum(double H, const ChainSpec& spec, const SeriesOptions& opts = {})
{
    return chain_sums(H, {spec}, {1.0}, opts).front();
}

// Named chains for every series that enters the limit coefficients.
namespace presets {

inline ChainFactor hat(int left = 1, int right = 1, int offset = 0)
{
    return {Kernel::rho_hat, left, right, offset};
}
inline ChainFactor tilde(int left = 1, int right = 1, int offset = 0)
{
    return {Kernel::rho_tilde, left, right, offset};
}

// sum_i rho_hat(i)^2
inline ChainSpec hat_squares() { return {{hat(), hat()}, "sum rho_hat^2"}; }
// sum_l rho_tilde(l)^2
inline ChainSpec tilde_squares() { return {{tilde(), tilde()}, "sum rho_tilde^2"}; }

// sum rho_hat(i1) rho_hat(i1-i2) rho_hat(i2)
inline ChainSpec kappa_1_11() { return {{hat(), hat(), hat()}, "1;1,1"}; }
// sum rho_hat(i1) rho_tilde(i2-2i1) rho_tilde(i2)
inline ChainSpec kappa_2_11() { return {{hat(), tilde(2, 1), tilde()}, "2;1,1"}; }
// sum rho_hat(i1) rho_tilde(i1-i2) rho_tilde(i2)
inline ChainSpec kappa_1_22() { return {{hat(), tilde(), tilde()}, "1;2,2"}; }

// sum rho_hat(i1) rho_hat(i1-i2) rho_hat(i2-i3) rho_hat(i3)
inline ChainSpec kappa_11_11() { return {{hat(), hat(), hat(), hat()}, "1,1;1,1"}; }
// sum rho_tilde(2i1+p) rho_hat(i1-i2) rho_tilde(2i2-i3+p) rho_hat(i3), p = 0, 1
inline ChainSpec kappa_11_22(int parity)
{
    return {{tilde(1, 2, -parity), hat(), tilde(2, 1, parity), hat()},
            parity ? "1,1;2,2 odd" : "1,1;2,2 even"};
}
// sum rho_hat(i1) rho_tilde(2i1-i2) rho_tilde(i2-2i3) rho_hat(i3)
inline ChainSpec kappa_11_12() { return {{hat(), tilde(2, 1), tilde(1, 2), hat()}, "1,1;1,2"}; }
// sum rho_hat(i1) rho_hat(i1-i2) rho_tilde(i2-i3) rho_tilde(i3)
inline ChainSpec kappa_12_22() { return {{hat(), hat(), tilde(), tilde()}, "1,2;2,2"}; }
// sum rho_hat(i1) rho_tilde(2i1-i2) rho_hat(i2-i3) rho_tilde(i3)
inline ChainSpec kappa_12_12_first() { return {{hat(), tilde(2, 1), hat(), tilde()}, "1,2;1,2 first"}; }
// sum rho_tilde(2i1+p) rho_tilde(2i1-i2) rho_tilde(i2-2i3) rho_tilde(2i3+p), p = 0, 1
inline ChainSpec kappa_12_12_second(int parity)
{
    return {{tilde(1, 2, -parity), tilde(2, 1), tilde(1, 2), tilde(2, 1, parity)},
            parity ? "1,2;1,2 second odd" : "1,2;1,2 second even"};
}

} // namespace presets

// Finite-n chain average
//   A_n = nu^{-1} sum_{j_a in [1, nu_a]} r_1(j_1-j_2) ... r_k(j_k-j_1)
// evaluated exactly by summing over the lags l_a = j_a - j_{a+1} and
// counting admissible j_1 for each lag vector. Cost is O(nu^{k-1}).
inline double a_n_diagnostic(const std::vector<std::function<double(long)>>& kernels, long nu,
                             const std::vector<long>& counts)
{
    const std::size_t k = kernels.size();
    if (k < 2) throw DomainError("a_n_diagnostic needs at least two kernels");
    if (counts.size() != k) throw DomainError("one count per kernel required");
    if (nu < 1) throw DomainError("nu must be positive");
    for (long c : counts)
        if (c < 1) throw DomainError("counts must be positive");

    long maxc = *std::max_element(counts.begin(), counts.end());
    const long span_max = static_cast<long>(k) * maxc;
    std::vector<std::vector<double>> tab(k, std::vector<double>(static_cast<std::size_t>(2 * span_max + 1)));
    for (std::size_t a = 0; a < k; ++a)
        for (long d = -span_max; d <= span_max; ++d)
            tab[a][static_cast<std::size_t>(d + span_max)] = kernels[a](d);
    auto K = [&](std::size_t a, long d) { return tab[a][static_cast<std::size_t>(d + span_max)]; };

    detail::CompensatedSum<double> total;
    // j_1 ranges over [lo, hi]; s is the cumulative lag so j_{a+1} = j_1 - s.
    std::function<void(std::size_t, long, long, long, double)> rec =
        [&](std::size_t a, long s, long lo, long hi, double prod) {
            if (a + 1 == k) {
                total += prod * K(a, -s) * static_cast<double>(hi - lo + 1);
                return;
            }
            const long nxt = counts[a + 1];
            // j_{a+2} = j_1 - s - l must lie in [1, nxt]
            for (long l = lo - s - nxt; l <= hi - s - 1; ++l) {
                const long s2 = s + l;
                const long lo2 = std::max(lo, 1 + s2);
                const long hi2 = std::min(hi, nxt + s2);
                if (lo2 > hi2) continue;
                const double kv = K(a, l);
                if (kv == 0.0) continue;
                rec(a + 1, s2, lo2, hi2, prod * kv);
            }
        };
    rec(0, 0, 1, counts[0], 1.0);
    return total.value() / static_cast<double>(nu);
}

// Convenience overload on the two correlation kernels at a common H.
inline double a_n_diagnostic(double H, const std::vector<Kernel>& kernels, long nu,
                             const std::vector<long>& counts)
{
    require_hurst(H);
    if (counts.empty()) throw DomainError("counts must be non-empty");
    const long maxc = *std::max_element(counts.begin(), counts.end());
    const auto tab = std::make_shared<KernelTable>(
        H, std::max(4L, static_cast<long>(kernels.size()) * maxc));
    std::vector<std::function<double(long)>> fs;
    for (Kernel kk : kernels) fs.push_back([tab, kk](long d) { return (*tab)(kk, d); });
    return a_n_diagnostic(fs, nu, counts);
}

} // namespace hurst
