#pragma once

#include <functional>
#include <span>

namespace tdcg {

/// Configuration-space force F(Q, t) on all D*M coordinates.
class ForceModel
{
public:
    virtual ~ForceModel() = default;
    /// Writes forces for `positions` at time t; both spans have length D*M.
    virtual void evaluate(std::span<const double> positions, double t, std::span<double> forces) const = 0;
};

class ZeroForce final : public ForceModel
{
public:
    void evaluate(std::span<const double>, double, std::span<double> forces) const override
    {
        for (double& f : forces)
            f = 0.0;
    }
};

/// Applies a scalar law f(q, t) to every coordinate independently; used for
/// the one-dimensional benchmark models.
class ScalarForce final : public ForceModel
{
public:
    using Law = std::function<double(double q, double t)>;
    explicit ScalarForce(Law law) : law_(std::move(law)) {}

    void evaluate(std::span<const double> positions, double t, std::span<double> forces) const override
    {
        for (std::size_t i = 0; i < positions.size(); ++i)
            forces[i] = law_(positions[i], t);
    }

private:
    Law law_;
};

}  // namespace tdcg
