#include "qdlab/random.hpp"

namespace qdlab {

namespace {

std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t path) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), 0x9e3779b9u};
    return std::mt19937_64(seq);
}

}  // namespace

PathRng::PathRng(std::uint64_t seed, std::uint64_t path_index) : engine_(keyed_engine(seed, path_index)) {}

}  // namespace qdlab
