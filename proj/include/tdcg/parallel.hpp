#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tdcg {

/// Threads used by subsequent parallel regions; 0 restores the runtime default.
inline void set_num_threads(int n)
{
#ifdef _OPENMP
    static const int default_threads = omp_get_max_threads();
    omp_set_num_threads(n > 0 ? n : default_threads);
#else
    (void)n;
#endif
}

inline int max_threads()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace tdcg
