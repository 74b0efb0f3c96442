#include "looaudit/rng.hpp"

#include <cmath>

namespace looaudit {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

}  // namespace

Rng Rng::derive(std::uint64_t seed, std::uint64_t stream_id) {
    // Finalize the seed, then offset by the finalized stream id. Distinct
    // stream ids land the counter in far-apart, decorrelated positions.
    std::uint64_t base = mix(seed + kGolden);
    std::uint64_t offset = mix(stream_id + 0x1F123BB5159A55E5ull);
    return Rng(base ^ offset);
}

Rng Rng::derive(std::uint64_t seed, Stream stream, std::uint64_t sub) {
    std::uint64_t combined = static_cast<std::uint64_t>(stream) * 0x100000000ull + sub;
    return derive(seed, combined);
}

std::uint64_t Rng::next_u64() {
    state_ += kGolden;
    return mix(state_);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    if (n <= 1) {
        return 0;
    }
    // Rejection below the largest multiple of n, so every residue is equally
    // likely and the draw sequence is platform-independent.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) {
        x = next_u64();
    }
    return x % n;
}

double Rng::next_gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller on (0,1] x [0,1); u1 > 0 guaranteed by the +1 ulp shift.
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

double Rng::next_laplace(double scale) {
    double u = next_double() - 0.5;
    double mag = u < 0.0 ? -u : u;
    double draw = -scale * std::log1p(-2.0 * mag);
    return u < 0.0 ? -draw : draw;
}

}  // namespace looaudit
