#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace leafnet {

// ---------------------------------------------------------------------------
// Error kinds
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/layer shape disagreements; message names the offending axes.
struct DimensionError : Error {
    using Error::Error;
};

// Out-of-range argument values (rates, labels, factors, window bounds).
struct ParameterError : Error {
    using Error::Error;
};

// Operation called in the wrong order (missing cache, untrained network).
struct StateError : Error {
    using Error::Error;
};

// Malformed textual input; message carries the character position.
struct ParseError : Error {
    using Error::Error;
};

// Invalid declarative configuration (network shape chain, run config keys).
struct ConfigError : Error {
    using Error::Error;
};

// A split spec asks for more images than a class holds.
struct CapacityError : Error {
    using Error::Error;
};

// Bounding-box search found no non-background pixel.
struct NoForegroundError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct CheckpointError : Error {
    using Error::Error;
};
struct VersionError : CheckpointError {
    using CheckpointError::CheckpointError;
};
struct DigestError : CheckpointError {
    using CheckpointError::CheckpointError;
};
struct TruncationError : CheckpointError {
    using CheckpointError::CheckpointError;
};

// Non-classifier tensor mismatch during partial weight restoration.
struct TransferError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// FNV-1a 64-bit — config digests and file checksums.
// ---------------------------------------------------------------------------

inline constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ull;

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = kFnvOffset) {
    return fnv1a64(s.data(), s.size(), h);
}

// ---------------------------------------------------------------------------
// Deterministic RNG
//
// Every consumer of randomness owns a named stream derived from
// (base seed, stream name, stream index).  Batch and transform workers use
// their worker index as the stream index, so a single-worker run and worker 0
// of a multi-worker run draw identical sequences.
// ---------------------------------------------------------------------------

class Rng {
public:
    Rng() : state_(0x9e3779b97f4a7c15ull) {}
    explicit Rng(uint64_t seed) : state_(seed) {
        // avoid the all-zero fixed point and decorrelate small seeds
        next_u64();
        next_u64();
    }

    static Rng stream(uint64_t seed, std::string_view name, uint64_t index = 0) {
        uint64_t h = fnv1a64(name);
        h = fnv1a64(&seed, sizeof(seed), h);
        h = fnv1a64(&index, sizeof(index), h);
        return Rng(h);
    }

    // splitmix64 step
    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // uniform integer in [lo, hi], both inclusive; unbiased
    int64_t uniform_int(int64_t lo, int64_t hi) {
        uint64_t span = uint64_t(hi - lo) + 1;
        if (span == 0) return int64_t(next_u64());  // full range
        uint64_t limit = ~uint64_t(0) - ~uint64_t(0) % span;
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return lo + int64_t(x % span);
    }

    bool bernoulli(double p) { return next_double() < p; }

    // standard normal via Box-Muller; stateless (spare discarded)
    double normal() {
        double u1, u2;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    uint64_t state_;
};

// ---------------------------------------------------------------------------
// Little-endian encoding for the checkpoint container
// ---------------------------------------------------------------------------

template <typename T>
inline void store_le(unsigned char* out, T v) {
    static_assert(std::is_integral_v<T>);
    for (size_t i = 0; i < sizeof(T); ++i) out[i] = (unsigned char)(uint64_t(v) >> (8 * i));
}

template <typename T>
inline T load_le(const unsigned char* in) {
    static_assert(std::is_integral_v<T>);
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= uint64_t(in[i]) << (8 * i);
    return T(v);
}

inline uint32_t float_bits(float f) {
    uint32_t u;
    std::memcpy(&u, &f, 4);
    return u;
}

inline float bits_float(uint32_t u) {
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

}  // namespace leafnet
