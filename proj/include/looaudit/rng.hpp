#pragma once

#include <cstdint>

namespace looaudit {

// Named substreams. Deriving every random decision from (seed, stream)
// keeps the removal of one training point from perturbing unrelated draws:
// initialization, batch shuffling, smoothing noise and attack starts each
// consume their own stream.
enum class Stream : std::uint64_t {
    init = 0,
    shuffle = 1,
    noise = 2,
    attack = 3,
    split = 4,
    synth = 5,
    labels = 6,
    trial_base = 1000,
};

// Counter-based splitmix64 generator. The state is a plain counter pushed
// through a finalizer, so identical (seed, stream, call sequence) gives the
// identical output sequence on every platform. No global state anywhere.
class Rng {
public:
    Rng() : state_(0) {}
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Pure substream derivation: a function of (seed, stream_id) only.
    static Rng derive(std::uint64_t seed, std::uint64_t stream_id);
    static Rng derive(std::uint64_t seed, Stream stream) {
        return derive(seed, static_cast<std::uint64_t>(stream));
    }
    // Two-level derivation, e.g. per-trial streams inside a randomized audit.
    static Rng derive(std::uint64_t seed, Stream stream, std::uint64_t sub);

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 random bits.
    double next_double();

    // Uniform in [lo, hi).
    double next_uniform(double lo, double hi);

    // Unbiased integer in [0, n), n >= 1, by rejection sampling.
    std::uint64_t next_below(std::uint64_t n);

    // Standard normal via Box-Muller; both values of a pair are consumed.
    double next_gaussian();

    // Laplace(0, scale) by inverse CDF.
    double next_laplace(double scale);

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace looaudit
