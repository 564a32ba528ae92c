#pragma once

// Numeric precision of the differentiable engine.
//
// The production library is built with 32-bit floats. Defining
// SGC_REAL_DOUBLE yields a 64-bit build of the same sources, used by the
// finite-difference gradient checks. The two builds live in different inline
// namespaces so they can be linked into one executable.

#ifdef SGC_REAL_DOUBLE
#define SGC_PRECISION_TAG f64
#else
#define SGC_PRECISION_TAG f32
#endif

namespace sgc::inline SGC_PRECISION_TAG {

#ifdef SGC_REAL_DOUBLE
using Real = double;
#else
using Real = float;
#endif

}  // namespace sgc::inline SGC_PRECISION_TAG
