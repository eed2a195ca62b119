#include "csc/pca.hpp"

#include <Eigen/Dense>

#include "csc/errors.hpp"

namespace csc {

Matrix pca_project(const Matrix& x, int dims) {
  if (dims < 1) throw ConfigError("PCA needs at least one output dimension");
  const auto n = static_cast<Eigen::Index>(x.rows);
  const auto d = static_cast<Eigen::Index>(x.cols);
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = x(i, j);
  const Eigen::RowVectorXd mean = n > 0 ? Eigen::RowVectorXd(m.colwise().mean()) : Eigen::RowVectorXd::Zero(d);
  m.rowwise() -= mean;

  Matrix out;
  if (dims >= d) {
    out = Matrix(x.rows, x.cols);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j) out(i, j) = static_cast<float>(m(i, j));
    return out;
  }

  const Eigen::MatrixXd cov = (m.transpose() * m) / std::max<double>(1.0, static_cast<double>(n - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // Eigenvalues are ascending; take the last `dims` columns in reverse.
  Eigen::MatrixXd axes(d, dims);
  for (int k = 0; k < dims; ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    axes.col(k) = v;
  }
  const Eigen::MatrixXd proj = m * axes;
  out = Matrix(x.rows, static_cast<std::size_t>(dims));
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k < dims; ++k) out(i, k) = static_cast<float>(proj(i, k));
  return out;
}

}  // namespace csc
