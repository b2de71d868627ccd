#pragma once

#include <cstdint>
#include <random>

namespace qdlab {

/// Independent normal stream for one path, keyed by (seed, path index).
///
/// Streams depend only on the key, so results do not change with the number of worker threads.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path_index);

    [[nodiscard]] double normal() { return normal_(engine_); }
    [[nodiscard]] double uniform() { return uniform_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace qdlab
