#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace swipt {

inline constexpr const char* kToolVersion = "0.1.0";

/// Thrown when an iterative numerical procedure fails to converge or
/// produces values outside its validity range.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a Markov model violates the unichain/ergodicity assumption.
class ergodicity_error : public std::runtime_error {
public:
    explicit ergodicity_error(const std::string& what) : std::runtime_error(what) {}
};

/**
 * Deterministic 64-bit RNG (splitmix64 core) with portable uniform and
 * Gaussian draws. std::normal_distribution is implementation-defined, so the
 * Gaussian uses an explicit polar Box-Muller to keep seeded runs
 * reproducible across standard libraries.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed + 0x9E3779B97F4A7C15ULL) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via polar Box-Muller.
    double gaussian();

    /// Samples an index from unnormalized nonnegative weights; ties and
    /// rounding resolve to the lowest admissible index.
    std::size_t sample_index(const std::vector<double>& weights);

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Runs fn(i) for i in [0, n). Uses up to `workers` threads (default: the
/// SWIPT_WORKERS environment variable, falling back to hardware concurrency).
/// fn must be safe to call concurrently for distinct i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int workers = 0);

/// FNV-1a 64-bit hash of a byte string; stable across platforms.
std::uint64_t fnv1a(const std::string& bytes);

std::string hex_u64(std::uint64_t v);

/// Writes content to path atomically (temp file in the same directory,
/// then rename). Throws std::runtime_error on I/O failure.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// Formats v with 9 significant digits (shortest form, no locale).
std::string format_sig9(double v);

}  // namespace swipt
