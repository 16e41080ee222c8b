// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo study of sqrt(n)(H^ - H): histogram with endpoint atoms,
// distances to the normal limit and to the Edgeworth expansion, moment
// diagnostics and corrected-estimator summaries.
#pragma once

#include "hurst/detail/accumulator.hpp"
#include "hurst/estimator.hpp"
#include "hurst/expansion.hpp"
#include "hurst/fbm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace hurst {

struct McConfig {
    double H = 0.5;
    double T = 1.0;
    long n = 64;
    long reps = 100000;
    std::uint64_t seed = 0;
    int bins = 81;
    double z_range = 0.0; // 0 selects 5 sqrt(v)
    bool variant_b_star = true;
    bool variant_b_star_star = true;
    int workers = 0; // 0 selects the hardware concurrency
    int bootstrap = 200;
    SeriesOptions series;
    Convention convention = Convention::derived;
    FbmMethod method = FbmMethod::automatic;

    void validate() const
    {
        HurstModel{H, T, n}.validate();
        if (reps < 100) throw DomainError("reps must be at least 100");
        if (bins < 1 || bins % 2 == 0) throw DomainError("bins must be a positive odd number");
        if (z_range < 0.0 || !std::isfinite(z_range)) throw DomainError("z_range must be non-negative");
        if (workers < 0) throw DomainError("workers must be non-negative");
        if (bootstrap < 0) throw DomainError("bootstrap must be non-negative");
    }
};

// Binned z values. Weights are stored as reals so that exact binned
// densities can be fed through the same comparison code.
struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> counts;
    double underflow = 0.0; // non-clamped values below lo
    double overflow = 0.0;  // non-clamped values above hi
    double atom0 = 0.0;     // replications with H^ clamped to 0
    double atom1 = 0.0;     // replications with H^ clamped to 1
    double z_atom0 = 0.0;   // location of the atoms on the z scale
    double z_atom1 = 0.0;
    double total = 0.0;

    int bins() const { return static_cast<int>(counts.size()); }
    double width() const { return (hi - lo) / static_cast<double>(counts.size()); }
    double edge(int i) const { return lo + width() * i; }
    double center(int i) const { return lo + width() * (i + 0.5); }
};

struct DensityDistances {
    double l1_normal = 0.0;
    double l1_expansion = 0.0;
    double ks_normal = 0.0;
    double ks_expansion = 0.0;
    int interior_first = 0; // bins [first, last] lie strictly inside the atoms
    int interior_last = -1;
};

// L1 over interior bins of |freq - mass of the density on the bin|; KS as
// the largest gap between the empirical CDF (atoms included at their z
// location) and the model CDF at the bin edges.
inline DensityDistances compare_densities(const Histogram& h, const EdgeworthModel& m, long n)
{
    DensityDistances d;
    if (!(h.total > 0.0)) throw DomainError("empty histogram");
    const int B = h.bins();
    d.interior_first = B;
    d.interior_last = -1;
    for (int i = 0; i < B; ++i) {
        if (h.edge(i) > h.z_atom0 && h.edge(i + 1) < h.z_atom1) {
            d.interior_first = std::min(d.interior_first, i);
            d.interior_last = std::max(d.interior_last, i);
        }
    }
    detail::CompensatedSum<double> l1n, l1e;
    for (int i = d.interior_first; i <= d.interior_last; ++i) {
        const double a = h.edge(i), b = h.edge(i + 1);
        const double f = h.counts[static_cast<std::size_t>(i)] / h.total;
        l1n += std::abs(f - (normal_cdf(b, m.v) - normal_cdf(a, m.v)));
        l1e += std::abs(f - (cdf_pn(m, n, b) - cdf_pn(m, n, a)));
    }
    d.l1_normal = l1n.value();
    d.l1_expansion = l1e.value();

    double below = h.underflow;
    double ksn = 0.0, kse = 0.0;
    for (int i = 0; i <= B; ++i) {
        if (i > 0) below += h.counts[static_cast<std::size_t>(i - 1)];
        const double e = h.edge(i);
        double mass = below;
        if (h.z_atom0 <= e) mass += h.atom0;
        if (h.z_atom1 <= e) mass += h.atom1;
        const double F = mass / h.total;
        ksn = std::max(ksn, std::abs(F - normal_cdf(e, m.v)));
        kse = std::max(kse, std::abs(F - cdf_pn(m, n, e)));
    }
    d.ks_normal = ksn;
    d.ks_expansion = kse;
    return d;
}

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

struct VariantSummary {
    Estimate mean_z;       // mean of sqrt(n)(H^v - H)
    Estimate p_at_most_h;  // P[H^v <= H]
};

struct McReport {
    McConfig config;
    EdgeworthModel model;
    Histogram hist;
    double atom0 = 0.0; // fraction of replications with H^ = 0
    double atom1 = 0.0; // fraction with H^ = 1
    DensityDistances distances;
    Estimate l1_normal_boot, l1_expansion_boot, l1_gap_boot, ks_normal_boot, ks_expansion_boot; // bootstrap SE in .se
    Estimate mean, variance, third; // sample moments of z with SE
    PredictedMoments predicted;
    VariantSummary plain;
    std::optional<VariantSummary> b_star;
    std::optional<VariantSummary> b_star_star;
    std::vector<double> h_raw; // per replication, in replication order
};

namespace detail {

inline Histogram bin_values(const McConfig& cfg, const std::vector<double>& h_raw, double z_range)
{
    Histogram h;
    h.lo = -z_range;
    h.hi = z_range;
    h.counts.assign(static_cast<std::size_t>(cfg.bins), 0.0);
    const double rn = std::sqrt(static_cast<double>(cfg.n));
    h.z_atom0 = -rn * cfg.H;
    h.z_atom1 = rn * (1.0 - cfg.H);
    const double w = h.width();
    for (double hr : h_raw) {
        if (hr < 0.0) {
            h.atom0 += 1.0;
        } else if (hr > 1.0) {
            h.atom1 += 1.0;
        } else {
            const double z = rn * (hr - cfg.H);
            if (z < h.lo) {
                h.underflow += 1.0;
            } else if (z >= h.hi) {
                h.overflow += 1.0;
            } else {
                auto i = static_cast<std::size_t>((z - h.lo) / w);
                if (i >= h.counts.size()) i = h.counts.size() - 1;
                h.counts[i] += 1.0;
            }
        }
    }
    h.total = static_cast<double>(h_raw.size());
    return h;
}

// Multinomial resample of a histogram (equivalent to resampling the
// replications, since every statistic here is a function of the bins).
inline Histogram resample(const Histogram& h, std::mt19937_64& eng)
{
    Histogram r = h;
    std::vector<double*> cells;
    cells.push_back(&r.atom0);
    cells.push_back(&r.atom1);
    cells.push_back(&r.underflow);
    cells.push_back(&r.overflow);
    for (auto& c : r.counts) cells.push_back(&c);
    std::vector<double> p;
    for (auto* c : cells) p.push_back(*c / h.total);
    auto left = static_cast<long long>(std::llround(h.total));
    double p_left = 1.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        long long k = 0;
        if (left > 0 && p[i] > 0.0) {
            if (i + 1 == cells.size() || p[i] >= p_left) {
                k = left;
            } else {
                std::binomial_distribution<long long> bin(left, std::clamp(p[i] / p_left, 0.0, 1.0));
                k = bin(eng);
            }
        }
        *cells[i] = static_cast<double>(k);
        left -= k;
        p_left -= p[i];
    }
    return r;
}

inline Estimate mean_se(const std::vector<double>& x)
{
    CompensatedSum<double> s;
    for (double v : x) s += v;
    const double mu = s.value() / static_cast<double>(x.size());
    CompensatedSum<double> s2;
    for (double v : x) s2 += (v - mu) * (v - mu);
    const double var = s2.value() / static_cast<double>(x.size() - 1);
    return {mu, std::sqrt(var / static_cast<double>(x.size()))};
}

inline Estimate stddev_of(const std::vector<double>& x)
{
    if (x.size() < 2) return {0.0, 0.0};
    const auto m = mean_se(x);
    return {m.value, m.se * std::sqrt(static_cast<double>(x.size()))};
}

} // namespace detail

// Computes H^ for every replication. The result depends only on the
// configuration: replication r always uses stream pair r/2, member r%2.
inline std::vector<double> simulate_estimates(const McConfig& cfg)
{
    cfg.validate();
    const FbmGenerator gen(HurstModel{cfg.H, cfg.T, cfg.n}, cfg.method);
    const auto reps = static_cast<std::uint64_t>(cfg.reps);
    const std::uint64_t pairs = (reps + 1) / 2;
    std::vector<double> h_raw(static_cast<std::size_t>(reps));

    unsigned workers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers) : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::min<std::uint64_t>(pairs, 1024))));

    std::atomic<std::uint64_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::uint64_t error_rep = 0;
    auto work = [&] {
        constexpr std::uint64_t chunk = 64;
        for (;;) {
            const std::uint64_t begin = next.fetch_add(chunk);
            if (begin >= pairs) return;
            const std::uint64_t end = std::min(pairs, begin + chunk);
            for (std::uint64_t p = begin; p < end; ++p) {
                std::uint64_t r = 2 * p;
                try {
                    const auto paths = gen.generate_pair(cfg.seed, p);
                    for (int m = 0; m < 2 && r < reps; ++m, ++r)
                        h_raw[static_cast<std::size_t>(r)] = estimate_h(paths[m].values).h_raw;
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error || r < error_rep) {
                        first_error = std::current_exception();
                        error_rep = r;
                    }
                    next.store(pairs);
                    return;
                }
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (first_error) {
        try {
            std::rethrow_exception(first_error);
        } catch (const std::exception& e) {
            throw std::runtime_error("replication " + std::to_string(error_rep) + ": " + e.what());
        }
    }
    return h_raw;
}

// Summaries from precomputed per-replication estimates (in order).
inline McReport summarize_mc(const McConfig& cfg, std::vector<double> h_raw)
{
    cfg.validate();
    McReport rep;
    rep.config = cfg;
    rep.model = build_expansion(cfg.H, cfg.series, cfg.convention);
    const auto& m = rep.model;
    const double z_range = cfg.z_range > 0.0 ? cfg.z_range : 5.0 * std::sqrt(m.v);
    rep.config.z_range = z_range;

    rep.hist = detail::bin_values(rep.config, h_raw, z_range);
    rep.atom0 = rep.hist.atom0 / rep.hist.total;
    rep.atom1 = rep.hist.atom1 / rep.hist.total;
    rep.distances = compare_densities(rep.hist, m, cfg.n);
    rep.predicted = predicted_moments(m, cfg.n);

    // Sample moments of z over all replications, endpoints included.
    const double rn = std::sqrt(static_cast<double>(cfg.n));
    const auto N = static_cast<double>(h_raw.size());
    std::vector<double> z(h_raw.size());
    for (std::size_t i = 0; i < h_raw.size(); ++i) z[i] = rn * (std::clamp(h_raw[i], 0.0, 1.0) - cfg.H);
    {
        detail::CompensatedSum<double> s1, s3, s6;
        for (double x : z) {
            s1 += x;
            s3 += x * x * x;
            s6 += x * x * x * x * x * x;
        }
        const double mu = s1.value() / N;
        detail::CompensatedSum<double> c2, c4;
        for (double x : z) {
            const double d = (x - mu) * (x - mu);
            c2 += d;
            c4 += d * d;
        }
        const double var = c2.value() / (N - 1.0);
        const double m4 = c4.value() / N;
        const double m3raw = s3.value() / N;
        const double m6raw = s6.value() / N;
        rep.mean = {mu, std::sqrt(var / N)};
        rep.variance = {var, std::sqrt(std::max(0.0, m4 - var * var) / N)};
        rep.third = {m3raw, std::sqrt(std::max(0.0, m6raw - m3raw * m3raw) / N)};
    }

    auto summarize_variant = [&](const std::function<double(double)>& b) {
        std::vector<double> zz(h_raw.size());
        detail::CompensatedSum<double> below;
        for (std::size_t i = 0; i < h_raw.size(); ++i) {
            EstimateResult r;
            r.n = cfg.n;
            r.h_raw = h_raw[i];
            r.clamped = !(r.h_raw >= 0.0 && r.h_raw <= 1.0);
            r.h_hat = std::clamp(r.h_raw, 0.0, 1.0);
            const double hv = b ? apply_correction(r, r.clamped ? 0.0 : b(r.h_hat)) : r.h_hat;
            zz[i] = rn * (hv - cfg.H);
            if (hv <= cfg.H) below += 1.0;
        }
        VariantSummary s;
        s.mean_z = detail::mean_se(zz);
        const double p = below.value() / N;
        s.p_at_most_h = {p, std::sqrt(p * (1.0 - p) / N)};
        return s;
    };
    rep.plain = summarize_variant(nullptr);
    if (cfg.variant_b_star || cfg.variant_b_star_star) {
        const CorrectionTable table(cfg.series, cfg.convention);
        if (cfg.variant_b_star) rep.b_star = summarize_variant([&](double h) { return table.b_star(h); });
        if (cfg.variant_b_star_star)
            rep.b_star_star = summarize_variant([&](double h) { return table.b_star_star(h); });
    }

    if (cfg.bootstrap > 1) {
        std::mt19937_64 eng(stream_key(cfg.seed, 0xb0075742ULL));
        std::vector<double> ln, le, gap, kn, ke;
        for (int b = 0; b < cfg.bootstrap; ++b) {
            const auto d = compare_densities(detail::resample(rep.hist, eng), m, cfg.n);
            ln.push_back(d.l1_normal);
            le.push_back(d.l1_expansion);
            gap.push_back(d.l1_normal - d.l1_expansion);
            kn.push_back(d.ks_normal);
            ke.push_back(d.ks_expansion);
        }
        rep.l1_normal_boot = detail::stddev_of(ln);
        rep.l1_expansion_boot = detail::stddev_of(le);
        rep.l1_gap_boot = detail::stddev_of(gap);
        rep.ks_normal_boot = detail::stddev_of(kn);
        rep.ks_expansion_boot = detail::stddev_of(ke);
    }
    rep.h_raw = std::move(h_raw);
    return rep;
}

inline McReport run_mc(const McConfig& cfg) { return summarize_mc(cfg, simulate_estimates(cfg)); }

} // namespace hurst
