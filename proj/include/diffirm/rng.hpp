#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace diffirm {

// Deterministic random source. All randomness in the artifact flows through
// named streams split off a master seed, so independent concerns (batch
// order, diffusion noise, parameter init) consume independent sequences and
// adding a consumer never perturbs the others.
//
// Normal draws use Box-Muller on the raw engine output instead of
// std::normal_distribution, whose algorithm is implementation-defined.
class Rng {
public:
    Rng() : engine_(0) {}
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Derive an independent stream from (seed, label). The label is hashed
    // with FNV-1a so stream identities are stable across runs and versions.
    static Rng stream(std::uint64_t master_seed, const std::string& label);

    // Derive the k-th substream (e.g. one per augmentation draw).
    Rng split(std::uint64_t k) const;

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform();

    // Uniform in [lo, hi).
    double uniform(double lo, double hi);

    // Standard normal draw. Stateless beyond the engine: the Box-Muller
    // spare is discarded so serialization needs only the engine state.
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    // Engine state as text, for checkpoints.
    std::string save_state() const;
    void load_state(const std::string& text);

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t base_seed_ = 0; // seed this stream was constructed from

    friend struct RngAccess;
};

// FNV-1a 64-bit hash, also used for config hashing.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(const std::string& text, std::uint64_t seed = 0xcbf29ce484222325ULL);

} // namespace diffirm
