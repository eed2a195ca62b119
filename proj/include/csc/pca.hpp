#pragma once

#include "csc/matrix.hpp"

namespace csc {

// Centers the rows and projects them onto the top `dims` principal axes.
// Axis signs are fixed so the largest-magnitude loading is positive, which
// makes the projection deterministic. When dims >= cols the centered data
// is returned unrotated.
Matrix pca_project(const Matrix& x, int dims);

}  // namespace csc
