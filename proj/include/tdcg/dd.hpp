#pragma once

#include <cmath>

namespace tdcg {

/// Unevaluated sum hi + lo carrying roughly twice the double precision.
/// Requires the compiler not to contract a*b+c into fma on its own.
struct DD
{
    double hi = 0.0;
    double lo = 0.0;

    double value() const { return hi + lo; }
};

inline void two_sum(double a, double b, double& s, double& e)
{
    s = a + b;
    const double bb = s - a;
    e = (a - (s - bb)) + (b - bb);
}

inline DD dd_add(DD a, DD b)
{
    double s, e;
    two_sum(a.hi, b.hi, s, e);
    e += a.lo + b.lo;
    const double hi = s + e;
    return {hi, e - (hi - s)};
}

/// a + x * y with the product formed exactly.
inline DD dd_add_prod(DD a, double x, double y)
{
    const double p = x * y;
    const double pe = std::fma(x, y, -p);
    double s, e;
    two_sum(a.hi, p, s, e);
    e += a.lo + pe;
    const double hi = s + e;
    return {hi, e - (hi - s)};
}

inline DD dd_mul(DD a, double x)
{
    const double p = a.hi * x;
    const double pe = std::fma(a.hi, x, -p) + a.lo * x;
    const double hi = p + pe;
    return {hi, pe - (hi - p)};
}

inline DD dd_neg(DD a) { return {-a.hi, -a.lo}; }

}  // namespace tdcg
