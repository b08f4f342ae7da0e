#include "core/random.hpp"

#include <cmath>

namespace nnas {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

RandomSource RandomSource::derive(std::uint64_t stream) const {
    return RandomSource(splitmix64(seed_ ^ splitmix64(stream + 1)));
}

Vec gaussian(RandomSource& rng, std::size_t n) {
    require(n >= 1, ErrorKind::InvalidArgument, "gaussian: draw count must be at least 1");
    Vec out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = rng.gaussian();
    }
    return out;
}

} // namespace nnas
