#include "diffirm/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "diffirm/errors.hpp"

namespace diffirm {

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& text, std::uint64_t seed) {
    return fnv1a64(text.data(), text.size(), seed);
}

Rng Rng::stream(std::uint64_t master_seed, const std::string& label) {
    std::uint64_t h = fnv1a64(label);
    h = fnv1a64(&master_seed, sizeof(master_seed), h);
    Rng r(h);
    r.base_seed_ = h;
    return r;
}

Rng Rng::split(std::uint64_t k) const {
    std::uint64_t h = fnv1a64(&k, sizeof(k), base_seed_ ^ 0x9e3779b97f4a7c15ULL);
    Rng r(h);
    r.base_seed_ = h;
    return r;
}

double Rng::uniform() {
    // 53-bit mantissa construction, uniform in [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    // Box-Muller; u1 in (0, 1] so the log is finite
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw contract_error("Rng::below: n must be positive");
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
}

std::string Rng::save_state() const {
    std::ostringstream os;
    os << base_seed_ << ' ' << engine_;
    return os.str();
}

void Rng::load_state(const std::string& text) {
    std::istringstream is(text);
    is >> base_seed_ >> engine_;
    if (!is) throw parse_error("Rng::load_state: malformed state string");
}

} // namespace diffirm
