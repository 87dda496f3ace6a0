#pragma once

#include <array>
#include <cmath>
#include <span>

namespace tdcg {

enum class Boundary { Open, Periodic };

/// Simulation box; for dim < 3 only the leading lengths are used.
struct SimBox
{
    std::array<double, 3> lengths{1.0, 1.0, 1.0};
    Boundary boundary = Boundary::Open;

    static SimBox open() { return {}; }
    static SimBox cubic(double length, Boundary b = Boundary::Periodic) { return {{length, length, length}, b}; }

    bool periodic() const { return boundary == Boundary::Periodic; }
    double volume(int dim = 3) const;
    double min_length(int dim = 3) const;
    void validate() const;

    /// Minimum-image displacement component along `axis`.
    double wrap_delta(double dx, int axis) const
    {
        if (boundary == Boundary::Periodic) {
            const double L = lengths[static_cast<std::size_t>(axis)];
            if (dx > 0.5 * L) {
                dx -= dx <= L ? L : L * std::nearbyint(dx / L);
            } else if (dx < -0.5 * L) {
                dx += dx >= -L ? L : -L * std::nearbyint(dx / L);
            }
        }
        return dx;
    }
    /// Maps a coordinate into [0, L) along `axis` (no-op for open boxes).
    double wrap_position(double x, int axis) const
    {
        if (boundary == Boundary::Periodic) {
            const double L = lengths[static_cast<std::size_t>(axis)];
            x -= L * std::floor(x / L);
            if (x >= L)
                x -= L;
        }
        return x;
    }
};

/// Displacement a - b (minimum image) in `dim` dimensions, returns |a - b|.
inline double pair_delta(const SimBox& box, int dim, std::span<const double> a, std::span<const double> b,
                         std::array<double, 3>& delta)
{
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        delta[kk] = box.wrap_delta(a[kk] - b[kk], k);
        r2 += delta[kk] * delta[kk];
    }
    return std::sqrt(r2);
}

}  // namespace tdcg
