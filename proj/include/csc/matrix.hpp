#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace csc {

// Dense row-major matrix with value semantics.
template <class T>
struct BasicMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  BasicMatrix() = default;
  BasicMatrix(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const BasicMatrix&) const = default;
};

using Matrix = BasicMatrix<float>;
using MatrixD = BasicMatrix<double>;

// Rows are samples, columns are penultimate-layer activations.
using FeatureMatrix = Matrix;

}  // namespace csc
