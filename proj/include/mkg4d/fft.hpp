#ifndef MKG4D_FFT_HPP
#define MKG4D_FFT_HPP

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "mkg4d/grid.hpp"
#include "mkg4d/util.hpp"

namespace mkg4d::detail {

// Cached in-place c2c plans per grid size. Plans are created with
// FFTW_UNALIGNED so they can execute on any std::vector buffer; planning is
// serialized, execution is thread-safe on distinct buffers.
class FftPlans {
public:
    static FftPlans& get(int n) {
        static std::map<int, FftPlans> cache;
        static std::mutex mu;
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(n);
        if (it == cache.end()) it = cache.emplace(n, FftPlans(n)).first;
        return it->second;
    }

    void forward(cplx* data) const { fftw_execute_dft(fwd_, as_fftw(data), as_fftw(data)); }
    void backward(cplx* data) const { fftw_execute_dft(bwd_, as_fftw(data), as_fftw(data)); }

    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;
    FftPlans(FftPlans&& o) noexcept : fwd_(o.fwd_), bwd_(o.bwd_) { o.fwd_ = o.bwd_ = nullptr; }

    ~FftPlans() {
        if (fwd_) fftw_destroy_plan(fwd_);
        if (bwd_) fftw_destroy_plan(bwd_);
    }

private:
    explicit FftPlans(int n) {
        const int dims[4] = {n, n, n, n};
        std::vector<cplx> scratch(static_cast<std::size_t>(n) * n * n * n);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fwd_ = fftw_plan_dft(4, dims, as_fftw(scratch.data()), as_fftw(scratch.data()),
                             FFTW_FORWARD, flags);
        bwd_ = fftw_plan_dft(4, dims, as_fftw(scratch.data()), as_fftw(scratch.data()),
                             FFTW_BACKWARD, flags);
        if (!fwd_ || !bwd_) throw std::runtime_error("fftw planning failed");
    }

    static fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

// coefficients <- samples, with the 1/N normalization of the adopted series
inline void fft_forward(const GridSpec& g, std::vector<cplx>& v) {
    FftPlans::get(g.n_per_axis).forward(v.data());
    const double inv = 1.0 / static_cast<double>(g.total());
    for (cplx& x : v) x *= inv;
}

// samples <- coefficients (unnormalized synthesis sum)
inline void fft_backward(const GridSpec& g, std::vector<cplx>& v) {
    FftPlans::get(g.n_per_axis).backward(v.data());
}

}  // namespace mkg4d::detail

#endif
