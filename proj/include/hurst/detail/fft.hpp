// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <utility>
#include <vector>

namespace hurst::detail {

// Owning buffer allocated with fftw_malloc so that it has the SIMD
// alignment the cached plans were created with.
template <typename T>
class FftwBuffer {
public:
    explicit FftwBuffer(std::size_t count)
        : ptr_(static_cast<T*>(fftw_malloc(sizeof(T) * (count ? count : 1)))), size_(count)
    {
        if (!ptr_) throw std::bad_alloc();
    }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    ~FftwBuffer() { fftw_free(ptr_); }

    T* data() { return ptr_; }
    const T* data() const { return ptr_; }
    std::size_t size() const { return size_; }
    T& operator[](std::size_t i) { return ptr_[i]; }
    const T& operator[](std::size_t i) const { return ptr_[i]; }

private:
    T* ptr_;
    std::size_t size_;
};

// Process-wide plan cache. The FFTW planner is not thread safe, so plan
// creation happens under a mutex; execution uses the new-array interface,
// which is safe to call concurrently on distinct buffers.
class PlanCache {
public:
    static PlanCache& instance()
    {
        static PlanCache cache;
        return cache;
    }

    fftw_plan r2c(int n) { return get(r2c_, n, Kind::r2c); }
    fftw_plan c2r(int n) { return get(c2r_, n, Kind::c2r); }
    fftw_plan forward(int n) { return get(fwd_, n, Kind::forward); }

private:
    enum class Kind { r2c, c2r, forward };

    PlanCache() = default;
    ~PlanCache()
    {
        for (auto* m : {&r2c_, &c2r_, &fwd_})
            for (auto& kv : *m) fftw_destroy_plan(kv.second);
    }

    fftw_plan get(std::map<int, fftw_plan>& m, int n, Kind kind)
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = m.find(n);
        if (it != m.end()) return it->second;
        FftwBuffer<double> real(static_cast<std::size_t>(n));
        FftwBuffer<fftw_complex> cplx(static_cast<std::size_t>(n) / 2 + 1);
        FftwBuffer<fftw_complex> a(static_cast<std::size_t>(n));
        FftwBuffer<fftw_complex> b(static_cast<std::size_t>(n));
        fftw_plan p = nullptr;
        switch (kind) {
        case Kind::r2c:
            p = fftw_plan_dft_r2c_1d(n, real.data(), cplx.data(), FFTW_ESTIMATE);
            break;
        case Kind::c2r:
            p = fftw_plan_dft_c2r_1d(n, cplx.data(), real.data(), FFTW_ESTIMATE);
            break;
        case Kind::forward:
            p = fftw_plan_dft_1d(n, a.data(), b.data(), FFTW_FORWARD, FFTW_ESTIMATE);
            break;
        }
        if (!p) throw std::bad_alloc();
        m.emplace(n, p);
        return p;
    }

    std::mutex mutex_;
    std::map<int, fftw_plan> r2c_, c2r_, fwd_;
};

inline std::size_t next_pow2(std::size_t n)
{
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Full linear convolution of two real sequences (length la + lb - 1).
inline std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.empty() || b.empty()) return {};
    const std::size_t out_len = a.size() + b.size() - 1;
    const std::size_t n = next_pow2(out_len);
    const std::size_t nc = n / 2 + 1;
    auto& cache = PlanCache::instance();
    fftw_plan fwd = cache.r2c(static_cast<int>(n));
    fftw_plan inv = cache.c2r(static_cast<int>(n));

    FftwBuffer<double> ra(n), rb(n);
    FftwBuffer<fftw_complex> ca(nc), cb(nc);
    for (std::size_t i = 0; i < n; ++i) {
        ra[i] = i < a.size() ? a[i] : 0.0;
        rb[i] = i < b.size() ? b[i] : 0.0;
    }
    fftw_execute_dft_r2c(fwd, ra.data(), ca.data());
    fftw_execute_dft_r2c(fwd, rb.data(), cb.data());
    for (std::size_t i = 0; i < nc; ++i) {
        const double re = ca[i][0] * cb[i][0] - ca[i][1] * cb[i][1];
        const double im = ca[i][0] * cb[i][1] + ca[i][1] * cb[i][0];
        ca[i][0] = re;
        ca[i][1] = im;
    }
    fftw_execute_dft_c2r(inv, ca.data(), ra.data());
    std::vector<double> out(out_len);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = ra[i] * scale;
    return out;
}

// Forward complex DFT of length data.size(), in place.
inline void dft_forward(std::vector<std::complex<double>>& data)
{
    const std::size_t n = data.size();
    fftw_plan p = PlanCache::instance().forward(static_cast<int>(n));
    FftwBuffer<fftw_complex> in(n), out(n);
    for (std::size_t i = 0; i < n; ++i) {
        in[i][0] = data[i].real();
        in[i][1] = data[i].imag();
    }
    fftw_execute_dft(p, in.data(), out.data());
    for (std::size_t i = 0; i < n; ++i) data[i] = {out[i][0], out[i][1]};
}

} // namespace hurst::detail
