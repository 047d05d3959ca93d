#pragma once

// Data-parallel kernels. Each kernel has a serial reference and an OpenMP
// version; tests hold the two against each other and bench/ times them.
//
// map_indexed writes result i from fn(i) alone, so both versions are bit
// identical. accumulate_pairs merges fixed-size chunks in chunk order: the
// parallel result does not depend on the thread count, but it may differ
// from the one-pass serial result in the last bits.

#include <cstddef>
#include <exception>
#include <limits>
#include <span>
#include <type_traits>
#include <vector>

namespace etz {

enum class Execution { serial, parallel };

namespace kernels {

/// Running (count, means, centred cross-products) of (x, y) pairs.
struct PairAccumulator {
    double count = 0.0;
    double mean_x = 0.0;
    double mean_y = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;

    void push(double x, double y) noexcept {
        count += 1.0;
        const double dx = x - mean_x;
        mean_x += dx / count;
        const double dy = y - mean_y;
        mean_y += dy / count;
        sxx += dx * (x - mean_x);
        syy += dy * (y - mean_y);
        sxy += dx * (y - mean_y);
    }

    // Chan, Golub & LeVeque pairwise update.
    void merge(const PairAccumulator& o) noexcept {
        if (o.count == 0.0) return;
        if (count == 0.0) {
            *this = o;
            return;
        }
        const double n = count + o.count;
        const double dx = o.mean_x - mean_x;
        const double dy = o.mean_y - mean_y;
        const double w = count * o.count / n;
        sxx += o.sxx + dx * dx * w;
        syy += o.syy + dy * dy * w;
        sxy += o.sxy + dx * dy * w;
        mean_x += dx * o.count / n;
        mean_y += dy * o.count / n;
        count = n;
    }
};

inline constexpr std::size_t kAccumulateChunk = 4096;

namespace serial {
std::vector<PairAccumulator> accumulate_pairs(std::span<const double> x,
                                              std::span<const double> y,
                                              std::span<const int> group, int n_groups);
}  // namespace serial

namespace omp {
std::vector<PairAccumulator> accumulate_pairs(std::span<const double> x,
                                              std::span<const double> y,
                                              std::span<const int> group, int n_groups);
}  // namespace omp

/// Per-group accumulators of (x[i], y[i]) with group[i] in [0, n_groups).
std::vector<PairAccumulator> accumulate_pairs(std::span<const double> x,
                                              std::span<const double> y,
                                              std::span<const int> group, int n_groups,
                                              Execution exec);

/// results[i] = fn(i) for i in [0, count). If any call throws, the exception
/// from the lowest index is rethrown after the loop.
template <class Fn>
auto map_indexed(std::size_t count, Fn&& fn, Execution exec)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
    using Result = std::invoke_result_t<Fn&, std::size_t>;
    std::vector<Result> results(count);
    if (exec == Execution::serial) {
        for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
        return results;
    }
    std::exception_ptr first_error;
    std::size_t first_index = std::numeric_limits<std::size_t>::max();
    const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) {
        try {
            results[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(etz_map_indexed_error)
            {
                if (static_cast<std::size_t>(i) < first_index) {
                    first_index = static_cast<std::size_t>(i);
                    first_error = std::current_exception();
                }
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

}  // namespace kernels
}  // namespace etz
