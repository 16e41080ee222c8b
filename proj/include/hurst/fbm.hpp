// SPDX-License-Identifier: Apache-2.0
//
// Exact simulation of fractional Brownian motion on the fine grid
// t_j = jT/(2n), j = 0..2n. The coarse grid is the even-index subsample,
// so both resolutions used by the estimator come from one path.
#pragma once

#include "hurst/detail/fft.hpp"
#include "hurst/error.hpp"
#include "hurst/kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

namespace hurst {

enum class FbmMethod { circulant, cholesky, automatic };

inline const char* method_name(FbmMethod m)
{
    switch (m) {
    case FbmMethod::circulant: return "circulant";
    case FbmMethod::cholesky: return "cholesky";
    default: return "auto";
    }
}

struct FbmPath {
    HurstModel model;
    std::vector<double> values; // B(jT/(2n)), j = 0..2n, values[0] = 0
    std::uint64_t seed = 0;
};

inline constexpr long cholesky_max_size = 4096;

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Key of the Gaussian stream for (seed, stream index). Each stream feeds
// its own engine, so replications can be generated in any order.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index)
{
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

// Autocovariance of fractional Gaussian noise at unit spacing.
inline double fgn_autocovariance(double H, long k)
{
    const double a = 2.0 * H;
    const double x = std::abs(static_cast<double>(k));
    return 0.5 * (std::pow(x + 1.0, a) - 2.0 * std::pow(x, a) + std::pow(std::abs(x - 1.0), a));
}

class FbmGenerator {
public:
    explicit FbmGenerator(const HurstModel& model, FbmMethod method = FbmMethod::automatic)
        : model_(model), requested_(method)
    {
        model_.validate();
        const long N = 2 * model_.n;
        scale_ = std::pow(model_.T / static_cast<double>(N), model_.H);
        if (method == FbmMethod::cholesky) {
            init_cholesky();
        } else {
            try {
                init_circulant();
            } catch (const GenerationError&) {
                if (method == FbmMethod::circulant) throw;
                init_cholesky();
            }
        }
    }

    const HurstModel& model() const { return model_; }
    FbmMethod method() const { return method_; }

    // Two independent paths from stream `index`. Circulant embedding yields
    // them from the real and imaginary parts of one transform; Cholesky
    // draws them one after the other from the same stream.
    std::array<FbmPath, 2> generate_pair(std::uint64_t seed, std::uint64_t index = 0) const
    {
        std::mt19937_64 eng(stream_key(seed, index));
        std::normal_distribution<double> gauss(0.0, 1.0);
        const auto N = static_cast<std::size_t>(2 * model_.n);
        std::array<std::vector<double>, 2> inc;
        if (method_ == FbmMethod::circulant) {
            const std::size_t M = sqrt_eig_->size();
            std::vector<std::complex<double>> w(M);
            for (std::size_t i = 0; i < M; ++i) {
                const double re = gauss(eng);
                const double im = gauss(eng);
                w[i] = (*sqrt_eig_)[i] * std::complex<double>(re, im);
            }
            detail::dft_forward(w);
            inc[0].resize(N);
            inc[1].resize(N);
            for (std::size_t i = 0; i < N; ++i) {
                inc[0][i] = w[i].real();
                inc[1][i] = w[i].imag();
            }
        } else {
            for (auto& x : inc) {
                Eigen::VectorXd g(static_cast<Eigen::Index>(N));
                for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = gauss(eng);
                const Eigen::VectorXd y = (*chol_) * g;
                x.assign(y.data(), y.data() + y.size());
            }
        }
        std::array<FbmPath, 2> out;
        for (int p = 0; p < 2; ++p) {
            out[p].model = model_;
            out[p].seed = seed;
            auto& v = out[p].values;
            v.resize(N + 1);
            v[0] = 0.0;
            for (std::size_t i = 0; i < N; ++i) v[i + 1] = v[i] + scale_ * inc[p][i];
        }
        return out;
    }

    // Path for a bare seed: first member of the pair on stream 0.
    FbmPath generate(std::uint64_t seed) const { return std::move(generate_pair(seed, 0)[0]); }

    // Replication r of a Monte Carlo run: pair r/2, member r%2.
    FbmPath replication(std::uint64_t seed, std::uint64_t r) const
    {
        return std::move(generate_pair(seed, r / 2)[r % 2]);
    }

private:
    void init_circulant()
    {
        const long N = 2 * model_.n;
        const long M = 2 * N;
        std::vector<std::complex<double>> c(static_cast<std::size_t>(M));
        for (long k = 0; k <= N; ++k) c[static_cast<std::size_t>(k)] = fgn_autocovariance(model_.H, k);
        for (long k = N + 1; k < M; ++k) c[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(M - k)];
        detail::dft_forward(c);
        double lmax = 0.0;
        for (const auto& x : c) lmax = std::max(lmax, x.real());
        auto eig = std::make_shared<std::vector<double>>(static_cast<std::size_t>(M));
        for (long k = 0; k < M; ++k) {
            double lam = c[static_cast<std::size_t>(k)].real();
            if (lam < 0.0) {
                if (lam < -1e-10 * lmax) throw GenerationError("circulant embedding is not non-negative definite");
                lam = 0.0;
            }
            (*eig)[static_cast<std::size_t>(k)] = std::sqrt(lam / static_cast<double>(M));
        }
        sqrt_eig_ = std::move(eig);
        method_ = FbmMethod::circulant;
    }

    void init_cholesky()
    {
        const long N = 2 * model_.n;
        if (N > cholesky_max_size)
            throw GenerationError("Cholesky generation limited to 2n <= " + std::to_string(cholesky_max_size));
        Eigen::MatrixXd C(N, N);
        for (long i = 0; i < N; ++i)
            for (long j = 0; j < N; ++j) C(i, j) = fgn_autocovariance(model_.H, i - j);
        Eigen::LLT<Eigen::MatrixXd> llt(C);
        if (llt.info() != Eigen::Success) throw GenerationError("fGn covariance is not positive definite");
        chol_ = std::make_shared<Eigen::MatrixXd>(llt.matrixL());
        method_ = FbmMethod::cholesky;
    }

    HurstModel model_;
    FbmMethod requested_;
    FbmMethod method_ = FbmMethod::circulant;
    double scale_ = 1.0;
    std::shared_ptr<const std::vector<double>> sqrt_eig_;
    std::shared_ptr<const Eigen::MatrixXd> chol_;
};

inline FbmPath generate_path(const HurstModel& model, std::uint64_t seed, FbmMethod method = FbmMethod::automatic)
{
    return FbmGenerator(model, method).generate(seed);
}

namespace detail {
inline std::vector<double> second_differences_strided(const std::vector<double>& x, std::size_t stride)
{
    std::vector<double> d;
    if (x.size() < 2 * stride + 1) return d;
    const std::size_t m = (x.size() - 1) / stride; // number of intervals
    d.reserve(m - 1);
    for (std::size_t j = 1; j < m; ++j)
        d.push_back(x[(j + 1) * stride] - 2.0 * x[j * stride] + x[(j - 1) * stride]);
    return d;
}
} // namespace detail

// d_j = B(t_{j+1}) - 2 B(t_j) + B(t_{j-1}) on the coarse (n - 1 values) or
// fine (2n - 1 values) grid.
inline std::vector<double> second_differences(const FbmPath& path, GridLevel level)
{
    if (path.values.size() < 3 || path.values.size() % 2 == 0)
        throw DomainError("path must have an odd number (>= 3) of samples");
    switch (level) {
    case GridLevel::fine: return detail::second_differences_strided(path.values, 1);
    case GridLevel::coarse: return detail::second_differences_strided(path.values, 2);
    default: throw DomainError("second differences are defined on the coarse or fine grid only");
    }
}

} // namespace hurst
