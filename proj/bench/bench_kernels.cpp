#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include <omp.h>

#include "isl/kernels.hpp"
#include "isl/random.hpp"

namespace {

using isl::kernels::Backend;

template <class F>
double best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::atoi(argv[1]) : 5;
    std::printf("threads=%d reps=%d\n", omp_get_max_threads(), reps);
    std::printf("%-10s %8s %6s %12s %12s %8s %s\n", "kernel", "P", "K", "serial_ms", "openmp_ms", "speedup", "identical");

    isl::Stream rng(42, "bench");
    for (std::size_t P : {100, 1000, 10000}) {
        for (std::size_t K : {10, 50}) {
            std::vector<double> y(P), s(P * K);
            for (auto& v : y) v = rng.normal();
            for (auto& v : s) v = rng.normal();
            const isl::kernels::SurrogateParams prm{};

            isl::kernels::SurrogateResult a, b;
            const double ts = best_of(reps, [&] { a = isl::kernels::surrogate_loss(y, s, K, prm, true, Backend::Serial); });
            const double tp = best_of(reps, [&] { b = isl::kernels::surrogate_loss(y, s, K, prm, true, Backend::OpenMP); });
            const bool same = a.loss == b.loss && a.d_samples == b.d_samples && a.q == b.q;
            std::printf("%-10s %8zu %6zu %12.3f %12.3f %8.2f %s\n", "surrogate", P, K, ts, tp, ts / tp, same ? "yes" : "NO");

            std::vector<int> ra, rb;
            const double rs = best_of(reps, [&] { ra = isl::kernels::rank_statistics(y, s, K, Backend::Serial); });
            const double rp = best_of(reps, [&] { rb = isl::kernels::rank_statistics(y, s, K, Backend::OpenMP); });
            std::printf("%-10s %8zu %6zu %12.3f %12.3f %8.2f %s\n", "ranks", P, K, rs, rp, rs / rp, ra == rb ? "yes" : "NO");
        }
    }
    return 0;
}
