// Extended-precision real used by verification code. Quad precision when the
// build provides libquadmath (TAILSITTER_HAS_QUADMATH), long double otherwise.
#pragma once

#include <cmath>

#if defined(TAILSITTER_HAS_QUADMATH)
#include <quadmath.h>
#endif

namespace tailsitter {

#if defined(TAILSITTER_HAS_QUADMATH)
using ExtendedReal = __float128;
#else
using ExtendedReal = long double;
#endif

namespace math {

template <typename Real>
Real tanh(Real x) {
    return std::tanh(x);
}

template <typename Real>
Real cosh(Real x) {
    return std::cosh(x);
}

#if defined(TAILSITTER_HAS_QUADMATH)
inline __float128 tanh(__float128 x) { return tanhq(x); }
inline __float128 cosh(__float128 x) { return coshq(x); }
#endif

} // namespace math
} // namespace tailsitter
