// SPDX-License-Identifier: Apache-2.0
#include "hurst/coefficients.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>
#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace hurst;
using Catch::Approx;

namespace {

// Brute-force coefficient set at H = 1/2 with prefactors written out from
// the defining series, every free index in [-30, 30].
struct BruteHalf {
    double s11, s12, k111, k211, k122, k1111, k1122, k1112, k1222, k1212;
};

BruteHalf brute_half()
{
    using namespace presets;
    const double H = 0.5;
    const long R = 30;
    const double D = 4.0 - std::exp2(2.0 * H);
    const double p = std::exp2(2.0 * H);
    auto B = [&](const ChainSpec& s) { return oracle::chain_brute(H, s, R); };
    BruteHalf b;
    b.s11 = 2.0 / (D * D) * B(hat_squares());
    b.s12 = p / (D * D) * B(tilde_squares());
    b.k111 = B(kappa_1_11()) / std::pow(D, 3);
    b.k211 = p / 2.0 / std::pow(D, 3) * B(kappa_2_11());
    b.k122 = p / 4.0 / std::pow(D, 3) * B(kappa_1_22());
    b.k1111 = B(kappa_11_11()) / std::pow(D, 4);
    b.k1122 = p / 4.0 / std::pow(D, 4) * (B(kappa_11_22(0)) + B(kappa_11_22(1)));
    b.k1112 = p / 2.0 / std::pow(D, 4) * B(kappa_11_12());
    b.k1222 = p / 8.0 / std::pow(D, 4) * B(kappa_12_22());
    b.k1212 = p / 8.0 / std::pow(D, 4) * B(kappa_12_12_first()) +
              p * p / 8.0 / std::pow(D, 4) * (B(kappa_12_12_second(0)) + B(kappa_12_12_second(1)));
    return b;
}

// Finite-n normalized traces n^{k-1} tr(C_{w1 w2} ... C_{wk w1}) / prod E V_{w}
// of the second-difference covariance matrices on the two grids, with the
// kernels taken from the covariance oracle.
struct TraceOracle {
    Eigen::MatrixXd C[3][3];
    double EV[3] = {0, 0, 0};
    long n;

    TraceOracle(double H, long n_) : n(n_)
    {
        const long n1 = n - 1, n2 = 2 * n - 1;
        const double s1 = std::pow(1.0 / n, 2 * H), s2 = std::pow(0.5 / n, 2 * H);
        std::vector<double> kh(static_cast<std::size_t>(2 * n2 + 1)), kt(static_cast<std::size_t>(4 * n2 + 1));
        for (long d = -n2; d <= n2; ++d) kh[static_cast<std::size_t>(d + n2)] = oracle::rho_hat(H, d);
        for (long d = -2 * n2; d <= 2 * n2; ++d) kt[static_cast<std::size_t>(d + 2 * n2)] = oracle::rho_tilde(H, d);
        auto rh = [&](long d) { return kh[static_cast<std::size_t>(d + n2)]; };
        auto rt = [&](long d) { return kt[static_cast<std::size_t>(d + 2 * n2)]; };
        Eigen::MatrixXd C11(n1, n1), C22(n2, n2), C12(n1, n2);
        for (long a = 0; a < n1; ++a)
            for (long b = 0; b < n1; ++b) C11(a, b) = s1 * rh(a - b);
        for (long a = 0; a < n2; ++a)
            for (long b = 0; b < n2; ++b) C22(a, b) = s2 * rh(a - b);
        for (long j = 1; j <= n1; ++j)
            for (long k = 1; k <= n2; ++k) C12(j - 1, k - 1) = s1 * rt(k - 2 * j);
        C[1][1] = C11;
        C[2][2] = C22;
        C[1][2] = C12;
        C[2][1] = C12.transpose();
        EV[1] = C11.trace();
        EV[2] = C22.trace();
    }

    double word(const std::vector<int>& w) const
    {
        Eigen::MatrixXd P = C[w[0]][w[1]];
        double den = EV[w[0]];
        for (std::size_t a = 1; a < w.size(); ++a) {
            P = P * C[w[a]][w[(a + 1) % w.size()]];
            den *= EV[w[a]];
        }
        return std::pow(static_cast<double>(n), static_cast<double>(w.size()) - 1.0) * P.trace() / den;
    }
};

// Richardson extrapolation of the 1/n error from n and 2n.
double trace_limit(const TraceOracle& a, const TraceOracle& b, const std::vector<int>& w)
{
    return 2.0 * b.word(w) - a.word(w);
}

} // namespace

TEST_CASE("closed-form suite at H = 1/2", "[coefficients]")
{
    const auto b = brute_half();
    // Oracle against the finite-support closed forms.
    CHECK(b.s11 == Approx(3.0).epsilon(1e-13));
    CHECK(b.s12 == Approx(0.75).epsilon(1e-13));
    CHECK(b.k111 == Approx(2.5).epsilon(1e-13));
    CHECK(b.k211 == Approx(0.625).epsilon(1e-13));
    CHECK(b.k122 == Approx(0.1875).epsilon(1e-13));
    CHECK(b.k1111 == Approx(4.375).epsilon(1e-13));

    const auto c = assemble_covariances(0.5);
    CHECK(std::abs(c.sigma11 - b.s11) < 1e-10);
    CHECK(std::abs(c.sigma12 - b.s12) < 1e-10);
    CHECK(std::abs(c.sigma22 - 1.5) < 1e-10);
    CHECK(std::abs(c.g_inf - 3.0) < 1e-10);
    CHECK(std::abs(c.kappa3.k1_11 - b.k111) < 1e-10);
    CHECK(std::abs(c.kappa3.k2_11 - b.k211) < 1e-10);
    CHECK(std::abs(c.kappa3.k1_22 - b.k122) < 1e-10);
    CHECK(std::abs(c.kappa4.k11_11 - b.k1111) < 1e-10);
    CHECK(std::abs(c.kappa4.k11_22 - b.k1122) < 1e-10);
    CHECK(std::abs(c.kappa4.k11_12 - b.k1112) < 1e-10);
    CHECK(std::abs(c.kappa4.k12_22 - b.k1222) < 1e-10);
    CHECK(std::abs(c.kappa4.k12_12 - b.k1212) < 1e-10);
    CHECK(std::abs(c.u_mat[0][2] - 5.75) < 1e-10);
    CHECK(std::abs(c.tau + 0.5) < 1e-10);
    // Fine-grid entries under the derived ratios.
    CHECK(std::abs(c.kappa3.k2_22 - 0.625) < 1e-10);
    CHECK(std::abs(c.kappa4.k22_22 - 0.546875) < 1e-10);
    CHECK(std::abs(c.u_mat[1][2] - 3.5) < 1e-10);
    CHECK(std::abs(c.theta - 0.75) < 1e-10);
}

TEST_CASE("published convention reproduces the printed constants", "[coefficients]")
{
    const auto c = assemble_covariances(0.5, 1e-10, Convention::published);
    CHECK(c.kappa3.k2_22 == Approx(0.3125).epsilon(1e-12));
    CHECK(c.kappa4.k22_22 == Approx(0.2734375).epsilon(1e-12));
    CHECK(c.u_mat[1][2] == Approx(2.25).epsilon(1e-12));
    CHECK(c.theta == Approx(7.0 / 6.0).epsilon(1e-12));
    CHECK(c.tau == Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("series limits agree with finite-n covariance traces", "[coefficients][slow]")
{
    for (double H : {0.3, 0.7}) {
        const TraceOracle a(H, 200), b(H, 400);
        const auto c = assemble_covariances(H);
        auto lim = [&](std::vector<int> w) { return trace_limit(a, b, w); };
        INFO("H=" << H);
        const double eps = 2e-3;
        CHECK(c.sigma11 / 2.0 == Approx(lim({1, 1})).epsilon(eps));
        CHECK(c.sigma12 / 2.0 == Approx(lim({1, 2})).epsilon(eps));
        CHECK(c.sigma22 / 2.0 == Approx(lim({2, 2})).epsilon(eps));
        CHECK(c.kappa3.k1_11 == Approx(lim({1, 1, 1})).epsilon(eps));
        CHECK(c.kappa3.k2_11 == Approx(lim({2, 1, 1})).epsilon(eps));
        CHECK(c.kappa3.k1_22 == Approx(lim({1, 2, 2})).epsilon(eps));
        CHECK(c.kappa3.k2_22 == Approx(lim({2, 2, 2})).epsilon(eps));
        CHECK(c.kappa4.k11_11 == Approx(lim({1, 1, 1, 1})).epsilon(eps));
        CHECK(c.kappa4.k22_22 == Approx(lim({2, 2, 2, 2})).epsilon(eps));
        CHECK(c.kappa4.k11_22 == Approx(lim({1, 1, 2, 2})).epsilon(eps));
        CHECK(c.kappa4.k11_12 == Approx(lim({1, 1, 1, 2})).epsilon(eps));
        CHECK(c.kappa4.k12_22 == Approx(lim({1, 2, 2, 2})).epsilon(eps));
        // The symmetrized contraction averages the two cyclic orders.
        CHECK(c.kappa4.k12_12 == Approx(0.5 * (lim({1, 1, 2, 2}) + lim({1, 2, 1, 2}))).epsilon(eps));
    }
}

TEST_CASE("structural identities across the H grid", "[coefficients]")
{
    for (int i = 0; i < 17; ++i) {
        const double H = 0.1 + 0.05 * i;
        INFO("H=" << H);
        const auto c = cached_coefficients(H);
        CHECK(c.sigma22 == c.sigma11 / 2.0);
        CHECK(c.kappa3.k2_22 == c.kappa3.k1_11 / 4.0);
        CHECK(c.kappa4.k22_22 == c.kappa4.k11_11 / 8.0);
        CHECK(c.kappa4.k11_22 == Approx(2.0 * c.kappa4.k12_12_first).epsilon(1e-9));
        CHECK(c.g_inf > 0.0);
        CHECK(c.t_mat[0][0] > 0.0);
        CHECK(c.u_mat[2][2] > 0.0);
        CHECK(c.tol < 1e-10);
        for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s) CHECK(c.u_mat[r][s] == c.u_mat[s][r]);
        CHECK(c.t_mat[0][1] == c.t_mat[1][0]);
    }
}

TEST_CASE("tightening the tolerance moves values by less than the tolerance", "[coefficients]")
{
    for (double H : {0.25, 0.8}) {
        const auto loose = assemble_covariances(H, 1e-8);
        const auto tight = assemble_covariances(H, 1e-10);
        CHECK(std::abs(loose.g_inf - tight.g_inf) < 1e-8);
        CHECK(std::abs(loose.theta - tight.theta) < 1e-7);
        CHECK(std::abs(loose.kappa4.k11_11 - tight.kappa4.k11_11) < 1e-8);
        CHECK(std::abs(loose.kappa3.k2_11 - tight.kappa3.k2_11) < 1e-8);
    }
}

TEST_CASE("radius cap raises a tolerance error", "[coefficients]")
{
    SeriesOptions o;
    o.tol = 1e-14;
    o.max_radius = 2048;
    CHECK_THROWS_AS(assemble_covariances(0.8, o), ToleranceError);
    CHECK_THROWS_AS(assemble_covariances(1.2), DomainError);
}

TEST_CASE("JSON round trip and disk cache", "[coefficients]")
{
    const auto c = assemble_covariances(0.5);
    const auto back = coefficients_from_json(nlohmann::json::parse(to_json(c).dump()));
    CHECK(back.theta == c.theta);
    CHECK(back.kappa4.k12_12 == c.kappa4.k12_12);
    CHECK(back.u_mat == c.u_mat);

    const auto dir = std::filesystem::temp_directory_path() / "hurst_cache_test";
    std::filesystem::remove_all(dir);
    CoefficientCache cache;
    cache.set_directory(dir);
    SeriesOptions o;
    const auto first = cache.get(0.6, o);
    CHECK(cache.computed() == 1);
    CHECK(std::filesystem::exists(dir / CoefficientCache::file_name(0.6, o.tol)));
    cache.get(0.6, o);
    CHECK(cache.computed() == 1);

    CoefficientCache fresh;
    fresh.set_directory(dir);
    const auto loaded = fresh.get(0.6, o);
    CHECK(fresh.computed() == 0);
    CHECK(loaded.g_inf == first.g_inf);
    CHECK(loaded.theta == first.theta);
    std::filesystem::remove_all(dir);
}
