// SPDX-License-Identifier: Apache-2.0
//
// Limit constants of the second-order variation statistics: the CLT
// covariances, the contraction constants kappa, the covariance matrices
// U and T of the extended CLT, and the scalars theta and tau that drive
// the cubic correction of the Edgeworth expansion.
#pragma once

#include "hurst/error.hpp"
#include "hurst/kernels.hpp"

#include <json.hpp>

#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

namespace hurst {

inline constexpr int coefficients_version = 1;

// Scaling of the pure fine-grid contractions. `derived` uses the limits of
// the defining inner products, kappa(2;2,2) = kappa(1;1,1)/4 and
// kappa(2,2;2,2) = kappa(1,1;1,1)/8. `published` uses the quoted ratios 1/8
// and 1/16, which disagree with the finite-n traces by a factor 2 and are
// kept only for comparison.
enum class Convention { derived, published };

inline const char* convention_name(Convention c)
{
    return c == Convention::derived ? "derived" : "published";
}

inline double cubic_fine_ratio(Convention c) { return c == Convention::derived ? 0.25 : 0.125; }
inline double quartic_fine_ratio(Convention c) { return c == Convention::derived ? 0.125 : 0.0625; }

struct Sigmas {
    double sigma11 = 0.0;
    double sigma12 = 0.0;
    double sigma22 = 0.0;
    double tail_error = 0.0;
};

// Cubic contraction constants kappa(a;b,b).
struct Kappa3 {
    double k1_11 = 0.0; // kappa(1;1,1)
    double k2_11 = 0.0; // kappa(2;1,1)
    double k1_22 = 0.0; // kappa(1;2,2)
    double k2_22 = 0.0; // kappa(2;2,2)
    double tail_error = 0.0;
};

// Quartic contraction constants kappa(a,b;c,d).
struct Kappa4 {
    double k11_11 = 0.0;
    double k22_22 = 0.0;
    double k11_22 = 0.0;
    double k11_12 = 0.0;
    double k12_22 = 0.0;
    double k12_12 = 0.0;
    double k12_12_first = 0.0;  // first summand of kappa(1,2;1,2)
    double k12_12_second = 0.0; // parity-split second summand
    double tail_error = 0.0;
};

struct ExpansionCoefficients {
    double H = 0.5;
    double sigma11 = 0.0, sigma12 = 0.0, sigma22 = 0.0;
    double g_inf = 0.0;
    Kappa3 kappa3;
    Kappa4 kappa4;
    std::array<std::array<double, 3>, 3> u_mat{};
    std::array<std::array<double, 2>, 2> t_mat{};
    double theta = 0.0;
    double tau = 0.0;
    double tol = 0.0;  // largest tail estimate over all series
    long radius = 0;   // truncation radius at which the series were accepted
    Convention convention = Convention::derived;
};

namespace detail {

inline double dscale(double H) { return 4.0 - std::exp2(2.0 * H); }

// Every series that enters the coefficients, with its prefactor, so
// the doubling tolerance applies to the coefficients themselves.
enum SeriesIndex : std::size_t {
    s_hat2, s_tilde2,
    s_k1_11, s_k2_11, s_k1_22,
    s_k11_11, s_k11_22_even, s_k11_22_odd, s_k11_12, s_k12_22,
    s_k12_12_first, s_k12_12_second_even, s_k12_12_second_odd,
    s_count
};

inline std::pair<std::vector<ChainSpec>, std::vector<double>> coefficient_series(double H)
{
    using namespace presets;
    const double D = dscale(H);
    const double D2 = D * D, D3 = D2 * D, D4 = D3 * D;
    const double p = std::exp2(2.0 * H); // 2^{2H}
    std::vector<ChainSpec> specs(s_count);
    std::vector<double> scale(s_count);
    specs[s_hat2] = hat_squares();               scale[s_hat2] = 2.0 / D2;
    specs[s_tilde2] = tilde_squares();           scale[s_tilde2] = p / D2;
    specs[s_k1_11] = kappa_1_11();               scale[s_k1_11] = 1.0 / D3;
    specs[s_k2_11] = kappa_2_11();               scale[s_k2_11] = p / 2.0 / D3;
    specs[s_k1_22] = kappa_1_22();               scale[s_k1_22] = p / 4.0 / D3;
    specs[s_k11_11] = kappa_11_11();             scale[s_k11_11] = 1.0 / D4;
    specs[s_k11_22_even] = kappa_11_22(0);       scale[s_k11_22_even] = p / 4.0 / D4;
    specs[s_k11_22_odd] = kappa_11_22(1);        scale[s_k11_22_odd] = p / 4.0 / D4;
    specs[s_k11_12] = kappa_11_12();             scale[s_k11_12] = p / 2.0 / D4;
    specs[s_k12_22] = kappa_12_22();             scale[s_k12_22] = p / 8.0 / D4;
    specs[s_k12_12_first] = kappa_12_12_first(); scale[s_k12_12_first] = p / 8.0 / D4;
    specs[s_k12_12_second_even] = kappa_12_12_second(0);
    specs[s_k12_12_second_odd] = kappa_12_12_second(1);
    scale[s_k12_12_second_even] = scale[s_k12_12_second_odd] = p * p / 8.0 / D4;
    return {specs, scale};
}

inline std::vector<ChainValue> eval_series(double H, const std::vector<std::size_t>& which,
                                           const SeriesOptions& opts)
{
    auto [all_specs, all_scale] = coefficient_series(H);
    std::vector<ChainSpec> specs;
    std::vector<double> scale;
    for (auto i : which) {
        specs.push_back(all_specs[i]);
        scale.push_back(all_scale[i]);
    }
    auto vals = chain_sums(H, specs, scale, opts);
    std::vector<ChainValue> out(s_count);
    for (std::size_t j = 0; j < which.size(); ++j) out[which[j]] = vals[j];
    return out;
}

inline Sigmas sigmas_from(const std::vector<ChainValue>& v)
{
    Sigmas s;
    s.sigma11 = v[s_hat2].value;
    s.sigma12 = v[s_tilde2].value;
    s.sigma22 = s.sigma11 / 2.0;
    s.tail_error = std::max(v[s_hat2].tail_error, v[s_tilde2].tail_error);
    return s;
}

inline Kappa3 kappa3_from(const std::vector<ChainValue>& v, Convention conv)
{
    Kappa3 k;
    k.k1_11 = v[s_k1_11].value;
    k.k2_11 = v[s_k2_11].value;
    k.k1_22 = v[s_k1_22].value;
    k.k2_22 = k.k1_11 * cubic_fine_ratio(conv);
    k.tail_error = std::max({v[s_k1_11].tail_error, v[s_k2_11].tail_error, v[s_k1_22].tail_error});
    return k;
}

inline Kappa4 kappa4_from(const std::vector<ChainValue>& v, Convention conv)
{
    Kappa4 k;
    k.k11_11 = v[s_k11_11].value;
    k.k22_22 = k.k11_11 * quartic_fine_ratio(conv);
    k.k11_22 = v[s_k11_22_even].value + v[s_k11_22_odd].value;
    k.k11_12 = v[s_k11_12].value;
    k.k12_22 = v[s_k12_22].value;
    k.k12_12_first = v[s_k12_12_first].value;
    k.k12_12_second = v[s_k12_12_second_even].value + v[s_k12_12_second_odd].value;
    k.k12_12 = k.k12_12_first + k.k12_12_second;
    k.tail_error = std::max({v[s_k11_11].tail_error,
                             v[s_k11_22_even].tail_error + v[s_k11_22_odd].tail_error,
                             v[s_k11_12].tail_error, v[s_k12_22].tail_error,
                             v[s_k12_12_first].tail_error + v[s_k12_12_second_even].tail_error +
                                 v[s_k12_12_second_odd].tail_error});
    return k;
}

inline double g_inf_from(const Sigmas& s)
{
    const double g = s.sigma22 - 2.0 * s.sigma12 + s.sigma11;
    if (!(g > 0.0)) throw InternalError("non-positive limiting variance; series evaluation is broken");
    return g;
}

inline SeriesOptions with_tol(double tol)
{
    SeriesOptions o;
    o.tol = tol;
    return o;
}

} // namespace detail

inline Sigmas compute_sigmas(double H, const SeriesOptions& opts)
{
    using namespace detail;
    return sigmas_from(eval_series(H, {s_hat2, s_tilde2}, opts));
}
inline Sigmas compute_sigmas(double H, double tol = 1e-10) { return compute_sigmas(H, detail::with_tol(tol)); }

inline double compute_g_inf(double H, const SeriesOptions& opts)
{
    return detail::g_inf_from(compute_sigmas(H, opts));
}
inline double compute_g_inf(double H, double tol = 1e-10) { return compute_g_inf(H, detail::with_tol(tol)); }

inline Kappa3 compute_kappa3(double H, const SeriesOptions& opts, Convention conv = Convention::derived)
{
    using namespace detail;
    return kappa3_from(eval_series(H, {s_k1_11, s_k2_11, s_k1_22}, opts), conv);
}
inline Kappa3 compute_kappa3(double H, double tol = 1e-10, Convention conv = Convention::derived)
{
    return compute_kappa3(H, detail::with_tol(tol), conv);
}

inline Kappa4 compute_kappa4(double H, const SeriesOptions& opts, Convention conv = Convention::derived)
{
    using namespace detail;
    return kappa4_from(eval_series(H,
                                   {s_k11_11, s_k11_22_even, s_k11_22_odd, s_k11_12, s_k12_22,
                                    s_k12_12_first, s_k12_12_second_even, s_k12_12_second_odd},
                                   opts),
                       conv);
}
inline Kappa4 compute_kappa4(double H, double tol = 1e-10, Convention conv = Convention::derived)
{
    return compute_kappa4(H, detail::with_tol(tol), conv);
}

// Assembles U and T from the series values. The U_13 and U_23 entries
// involve kappa(1;1,2) and kappa(2;1,2), which are the same contraction
// limits as kappa(2;1,1) and kappa(1;2,2) respectively.
inline ExpansionCoefficients assemble_from(double H, const Sigmas& s, const Kappa3& k3, const Kappa4& k4)
{
    ExpansionCoefficients c;
    c.H = H;
    c.sigma11 = s.sigma11;
    c.sigma12 = s.sigma12;
    c.sigma22 = s.sigma22;
    c.g_inf = detail::g_inf_from(s);
    c.kappa3 = k3;
    c.kappa4 = k4;

    const double k1_12 = k3.k2_11;
    const double k2_12 = k3.k1_22;
    auto& U = c.u_mat;
    U[0][0] = s.sigma11;
    U[0][1] = U[1][0] = s.sigma12;
    U[1][1] = s.sigma22;
    U[0][2] = U[2][0] = 4.0 * k3.k1_22 - 8.0 * k1_12 + 4.0 * k3.k1_11;
    U[1][2] = U[2][1] = 4.0 * k3.k2_22 - 8.0 * k2_12 + 4.0 * k3.k2_11;
    U[2][2] = 8.0 * k4.k22_22 + 32.0 * k4.k12_12 + 8.0 * k4.k11_11 - 32.0 * k4.k12_22 +
              16.0 * k4.k11_22 - 32.0 * k4.k11_12;

    auto& Tm = c.t_mat;
    Tm[0][0] = U[0][0] - 2.0 * U[0][1] + U[1][1];
    Tm[0][1] = Tm[1][0] = U[0][2] - U[1][2];
    Tm[1][1] = U[2][2];

    c.theta = Tm[0][1] / Tm[0][0];
    c.tau = (s.sigma22 - s.sigma11) / c.g_inf;
    c.tol = std::max({s.tail_error, k3.tail_error, k4.tail_error});
    return c;
}

inline ExpansionCoefficients assemble_covariances(double H, const SeriesOptions& opts,
                                                  Convention conv = Convention::derived)
{
    using namespace detail;
    std::vector<std::size_t> all(s_count);
    for (std::size_t i = 0; i < s_count; ++i) all[i] = i;
    const auto v = eval_series(H, all, opts);
    auto c = assemble_from(H, sigmas_from(v), kappa3_from(v, conv), kappa4_from(v, conv));
    c.radius = v.front().radius;
    c.convention = conv;
    return c;
}
inline ExpansionCoefficients assemble_covariances(double H, double tol = 1e-10,
                                                  Convention conv = Convention::derived)
{
    return assemble_covariances(H, detail::with_tol(tol), conv);
}

// ---------------------------------------------------------------------
// JSON form (keys are emitted in sorted order by nlohmann::json).

inline nlohmann::json to_json(const ExpansionCoefficients& c)
{
    nlohmann::json j;
    j["H"] = c.H;
    j["sigma11"] = c.sigma11;
    j["sigma12"] = c.sigma12;
    j["sigma22"] = c.sigma22;
    j["g_inf"] = c.g_inf;
    j["kappa3"] = {{"1;1,1", c.kappa3.k1_11}, {"2;1,1", c.kappa3.k2_11},
                   {"1;2,2", c.kappa3.k1_22}, {"2;2,2", c.kappa3.k2_22}};
    j["kappa4"] = {{"1,1;1,1", c.kappa4.k11_11}, {"2,2;2,2", c.kappa4.k22_22},
                   {"1,1;2,2", c.kappa4.k11_22}, {"1,1;1,2", c.kappa4.k11_12},
                   {"1,2;2,2", c.kappa4.k12_22}, {"1,2;1,2", c.kappa4.k12_12},
                   {"1,2;1,2 first", c.kappa4.k12_12_first},
                   {"1,2;1,2 second", c.kappa4.k12_12_second}};
    j["u_mat"] = c.u_mat;
    j["t_mat"] = c.t_mat;
    j["theta"] = c.theta;
    j["tau"] = c.tau;
    j["tol"] = c.tol;
    j["radius"] = c.radius;
    j["convention"] = convention_name(c.convention);
    return j;
}

inline ExpansionCoefficients coefficients_from_json(const nlohmann::json& j)
{
    ExpansionCoefficients c;
    c.H = j.at("H").get<double>();
    c.sigma11 = j.at("sigma11").get<double>();
    c.sigma12 = j.at("sigma12").get<double>();
    c.sigma22 = j.at("sigma22").get<double>();
    c.g_inf = j.at("g_inf").get<double>();
    const auto& k3 = j.at("kappa3");
    c.kappa3.k1_11 = k3.at("1;1,1").get<double>();
    c.kappa3.k2_11 = k3.at("2;1,1").get<double>();
    c.kappa3.k1_22 = k3.at("1;2,2").get<double>();
    c.kappa3.k2_22 = k3.at("2;2,2").get<double>();
    const auto& k4 = j.at("kappa4");
    c.kappa4.k11_11 = k4.at("1,1;1,1").get<double>();
    c.kappa4.k22_22 = k4.at("2,2;2,2").get<double>();
    c.kappa4.k11_22 = k4.at("1,1;2,2").get<double>();
    c.kappa4.k11_12 = k4.at("1,1;1,2").get<double>();
    c.kappa4.k12_22 = k4.at("1,2;2,2").get<double>();
    c.kappa4.k12_12 = k4.at("1,2;1,2").get<double>();
    c.kappa4.k12_12_first = k4.at("1,2;1,2 first").get<double>();
    c.kappa4.k12_12_second = k4.at("1,2;1,2 second").get<double>();
    c.u_mat = j.at("u_mat").get<std::array<std::array<double, 3>, 3>>();
    c.t_mat = j.at("t_mat").get<std::array<std::array<double, 2>, 2>>();
    c.theta = j.at("theta").get<double>();
    c.tau = j.at("tau").get<double>();
    c.tol = j.at("tol").get<double>();
    c.radius = j.at("radius").get<long>();
    c.convention = j.value("convention", std::string("derived")) == "published" ? Convention::published
                                                                                : Convention::derived;
    c.kappa3.tail_error = c.kappa4.tail_error = c.tol;
    return c;
}

// ---------------------------------------------------------------------
// Memoization. The in-process map is guarded by a mutex; the optional
// on-disk layer writes one JSON file per (H, tol, version) key.

class CoefficientCache {
public:
    // Directory for the persistent layer; empty disables it.
    void set_directory(std::filesystem::path dir)
    {
        std::lock_guard<std::mutex> lock(mutex_);
        dir_ = std::move(dir);
    }

    std::filesystem::path directory() const
    {
        std::lock_guard<std::mutex> lock(mutex_);
        return dir_;
    }

    static std::filesystem::path file_name(double H, double tol, Convention conv = Convention::derived)
    {
        return "coeffs_H" + shortest_repr(H) + "_tol" + shortest_repr(tol) +
               (conv == Convention::published ? "_published" : "") + "_v" +
               std::to_string(coefficients_version) + ".json";
    }

    ExpansionCoefficients get(double H, const SeriesOptions& opts, Convention conv = Convention::derived)
    {
        const Key key{H, opts.tol, opts.initial_radius, opts.max_radius, static_cast<int>(conv)};
        std::filesystem::path dir;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = memo_.find(key);
            if (it != memo_.end()) return it->second;
            dir = dir_;
        }
        std::optional<ExpansionCoefficients> found;
        if (!dir.empty()) found = load(dir / file_name(H, opts.tol, conv), H, opts.tol);
        if (!found) {
            found = assemble_covariances(H, opts, conv);
            ++computed_;
            if (!dir.empty()) store(dir, file_name(H, opts.tol, conv), *found, opts.tol);
        }
        std::lock_guard<std::mutex> lock(mutex_);
        return memo_.emplace(key, *found).first->second;
    }

    void clear()
    {
        std::lock_guard<std::mutex> lock(mutex_);
        memo_.clear();
    }

    // Number of full series evaluations performed (cache misses).
    long computed() const { return computed_; }

private:
    using Key = std::tuple<double, double, long, long, int>;

    static std::optional<ExpansionCoefficients> load(const std::filesystem::path& p, double H, double tol)
    {
        std::ifstream in(p);
        if (!in) return std::nullopt;
        try {
            const auto j = nlohmann::json::parse(in);
            if (j.at("version").get<int>() != coefficients_version) return std::nullopt;
            if (j.at("H").get<double>() != H || j.at("requested_tol").get<double>() != tol)
                return std::nullopt;
            return coefficients_from_json(j);
        } catch (const std::exception&) {
            return std::nullopt; // unreadable entries are recomputed
        }
    }

    static void store(const std::filesystem::path& dir, const std::filesystem::path& name,
                      const ExpansionCoefficients& c, double tol)
    {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        auto j = to_json(c);
        j["version"] = coefficients_version;
        j["requested_tol"] = tol;
        // Write then rename so concurrent readers never see a partial file.
        const auto tmp = dir / (name.string() + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
        {
            std::ofstream out(tmp);
            if (!out) return;
            out << j.dump(2) << '\n';
        }
        std::filesystem::rename(tmp, dir / name, ec);
    }

    mutable std::mutex mutex_;
    std::filesystem::path dir_;
    std::map<Key, ExpansionCoefficients> memo_;
    std::atomic<long> computed_{0};
};

// Shared cache; its directory is initialised from HURST_CACHE_DIR.
inline CoefficientCache& coefficient_cache()
{
    static CoefficientCache cache;
    static std::once_flag once;
    std::call_once(once, [] {
        if (const char* d = std::getenv("HURST_CACHE_DIR"); d && *d) cache.set_directory(d);
    });
    return cache;
}

inline ExpansionCoefficients cached_coefficients(double H, const SeriesOptions& opts = {},
                                                 Convention conv = Convention::derived)
{
    require_hurst(H);
    return coefficient_cache().get(H, opts, conv);
}

} // namespace hurst
