#include "etz/kernels.hpp"

#include "etz/error.hpp"

#include <algorithm>

namespace etz::kernels {
namespace {

void check_shapes(std::span<const double> x, std::span<const double> y,
                  std::span<const int> group, int n_groups) {
    if (x.size() != y.size() || x.size() != group.size() || n_groups < 1) {
        throw Error(ErrorCode::invalid_argument, "accumulate_pairs: mismatched input lengths");
    }
    for (const int g : group) {
        if (g < 0 || g >= n_groups) {
            throw Error(ErrorCode::invalid_argument, "accumulate_pairs: group index out of range");
        }
    }
}

}  // namespace

namespace serial {

std::vector<PairAccumulator> accumulate_pairs(std::span<const double> x,
                                              std::span<const double> y,
                                              std::span<const int> group, int n_groups) {
    check_shapes(x, y, group, n_groups);
    std::vector<PairAccumulator> acc(static_cast<std::size_t>(n_groups));
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc[static_cast<std::size_t>(group[i])].push(x[i], y[i]);
    }
    return acc;
}

}  // namespace serial

namespace omp {

std::vector<PairAccumulator> accumulate_pairs(std::span<const double> x,
                                              std::span<const double> y,
                                              std::span<const int> group, int n_groups) {
    check_shapes(x, y, group, n_groups);
    const std::size_t groups = static_cast<std::size_t>(n_groups);
    const std::size_t n_chunks = (x.size() + kAccumulateChunk - 1) / kAccumulateChunk;
    std::vector<PairAccumulator> partial(n_chunks * groups);

    const auto chunks = static_cast<long long>(n_chunks);
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < chunks; ++c) {
        const std::size_t begin = static_cast<std::size_t>(c) * kAccumulateChunk;
        const std::size_t end = std::min(x.size(), begin + kAccumulateChunk);
        PairAccumulator* local = partial.data() + static_cast<std::size_t>(c) * groups;
        for (std::size_t i = begin; i < end; ++i) {
            local[group[i]].push(x[i], y[i]);
        }
    }

    std::vector<PairAccumulator> acc(groups);
    for (std::size_t c = 0; c < n_chunks; ++c) {
        for (std::size_t g = 0; g < groups; ++g) acc[g].merge(partial[c * groups + g]);
    }
    return acc;
}

}  // namespace omp

std::vector<PairAccumulator> accumulate_pairs(std::span<const double> x,
                                              std::span<const double> y,
                                              std::span<const int> group, int n_groups,
                                              Execution exec) {
    return exec == Execution::serial ? serial::accumulate_pairs(x, y, group, n_groups)
                                     : omp::accumulate_pairs(x, y, group, n_groups);
}

}  // namespace etz::kernels
