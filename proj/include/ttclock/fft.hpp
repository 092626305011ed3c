#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include <fftw3.h>

namespace ttclock {

using cplx = std::complex<double>;

namespace detail {

struct FftPlans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

// Plans are created once per length with FFTW_ESTIMATE so the chosen algorithm,
// and therefore every output bit, is the same on every run. FFTW_UNALIGNED lets
// the plans run on arbitrary std::vector storage through the new-array API,
// which is safe to call concurrently.
inline const FftPlans& plans_for(std::size_t n)
{
    static std::mutex mutex;
    static std::map<std::size_t, FftPlans> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end())
        return it->second;
    std::vector<cplx> scratch(n);
    auto* data = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    FftPlans plans;
    plans.forward = fftw_plan_dft_1d(static_cast<int>(n), data, data, FFTW_FORWARD, flags);
    plans.backward = fftw_plan_dft_1d(static_cast<int>(n), data, data, FFTW_BACKWARD, flags);
    return cache.emplace(n, plans).first->second;
}

} // namespace detail

/// In-place unnormalized forward transform, sum_j a_j exp(-2 pi i jk/n).
inline void fft_forward(std::span<cplx> data)
{
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(detail::plans_for(data.size()).forward, p, p);
}

/// In-place unnormalized backward transform, sum_k a_k exp(+2 pi i jk/n).
inline void fft_backward(std::span<cplx> data)
{
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(detail::plans_for(data.size()).backward, p, p);
}

} // namespace ttclock
