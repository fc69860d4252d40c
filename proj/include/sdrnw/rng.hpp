#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace sdrnw {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stream id from an ordered tuple, e.g. (base_seed, n, rep, stage).
constexpr std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (std::uint64_t part : parts) h = mix64(h ^ mix64(part + 0x9e3779b97f4a7c15ULL));
    return h;
}

/// Counter-based generator: output i is mix64(key + i * golden). Any stream
/// is reproducible from its key alone, independent of other streams or of
/// scheduling. Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Stage tags for stream_key.
enum class Stage : std::uint64_t {
    data = 1,
    test_points = 2,
    model2_s = 3,
    estimator = 4,
    equivalence = 5,
    coverage = 6,
    sup_norm = 7,
    fixture = 8,
};

constexpr std::uint64_t tag(Stage s) { return static_cast<std::uint64_t>(s); }

}  // namespace sdrnw
