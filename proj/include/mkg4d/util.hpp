#ifndef MKG4D_UTIL_HPP
#define MKG4D_UTIL_HPP

#include <atomic>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mkg4d {

using cplx = std::complex<double>;

struct ContractViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverFailure : std::runtime_error {
    SolverFailure(const std::string& msg, double residual_, int iterations_)
        : std::runtime_error(msg), residual(residual_), iterations(iterations_) {}
    double residual;
    int iterations;
};

// Worker count comes from MKG4D_WORKERS; results never depend on it.
inline int worker_count() {
    static const int w = [] {
        if (const char* e = std::getenv("MKG4D_WORKERS")) {
            int v = std::atoi(e);
            if (v >= 1 && v <= 256) return v;
        }
        unsigned hc = std::thread::hardware_concurrency();
        if (hc == 0) hc = 1;
        if (hc > 8) hc = 8;
        return static_cast<int>(hc);
    }();
    return w;
}

// Chunked loop over [0, count). Chunks must be independent; no reductions here.
// Thread spawn costs dominate below ~1M elements, so small loops stay serial.
inline void parallel_for(std::size_t count,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    const int w = worker_count();
    if (w <= 1 || count < (std::size_t{1} << 20)) {
        fn(0, count);
        return;
    }
    const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(w), count);
    const std::size_t chunk = (count + nw - 1) / nw;
    std::vector<std::thread> threads;
    threads.reserve(nw);
    for (std::size_t b = 0; b < count; b += chunk) {
        const std::size_t e = std::min(count, b + chunk);
        threads.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& t : threads) t.join();
}

// Coarse-grained independent items (e.g. batched transforms), dynamically
// scheduled. Items must not share mutable state.
inline void parallel_for_items(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const int w = worker_count();
    if (w <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(w), count);
    std::vector<std::thread> threads;
    threads.reserve(nw);
    for (std::size_t t = 0; t < nw; ++t)
        threads.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : threads) th.join();
}

// Fixed pairwise reduction tree; bit-identical for any worker count.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

inline cplx pairwise_sum(std::span<const cplx> v) {
    if (v.size() <= 8) {
        cplx s = 0.0;
        for (const cplx& x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

// splitmix64; identical streams on every platform, unlike <random> distributions.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }
};

}  // namespace mkg4d

#endif
