#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace tdcg {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// One SplitMix64 step from `state`: advance by the golden gamma, then mix.
constexpr std::uint64_t splitmix64_step(std::uint64_t state) { return mix64(state + kGolden); }

/// Seed for path `k` of an ensemble.
constexpr std::uint64_t path_seed(std::uint64_t master_seed, std::uint64_t k)
{
    return splitmix64_step(master_seed + k);
}

/// Counter-based normal variates: the draw for (step, lane) depends only on
/// the key and the counter pair, so any iteration order or thread count
/// yields the same numbers.
class CounterNormal
{
public:
    explicit CounterNormal(std::uint64_t key) : key_(mix64(key ^ 0x5851f42d4c957f2dULL)) {}

    double operator()(std::uint64_t step, std::uint64_t lane) const
    {
        const std::uint64_t h1 = mix64(key_ + kGolden * (2 * step + 1) + mix64(lane + 0x2545f4914f6cdd1dULL));
        const std::uint64_t h2 = mix64(h1 + kGolden);
        // (0, 1] and [0, 1)
        const double u1 = (static_cast<double>(h1 >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t key_;
};

}  // namespace tdcg
