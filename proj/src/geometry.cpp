#include "tdcg/geometry.hpp"

#include <algorithm>

#include "tdcg/errors.hpp"

namespace tdcg {

double SimBox::volume(int dim) const
{
    double v = 1.0;
    for (int k = 0; k < dim; ++k)
        v *= lengths[static_cast<std::size_t>(k)];
    return v;
}

double SimBox::min_length(int dim) const
{
    return *std::min_element(lengths.begin(), lengths.begin() + dim);
}

void SimBox::validate() const
{
    for (double L : lengths)
        if (!(L > 0.0) || !std::isfinite(L))
            throw ArgumentError("box lengths must be positive and finite");
}

}  // namespace tdcg
