#pragma once

// Independent dense reference computations used as test oracles.

#include "gsnr/linop.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace oracle {

using gsnr::Index;
using gsnr::Matrix;
using gsnr::Vector;

inline Matrix denseOf(const gsnr::LinearMap& H) {
  Matrix M(H.rows(), H.cols());
  Vector e = Vector::Zero(H.cols());
  for (Index j = 0; j < H.cols(); ++j) {
    e(j) = 1.0;
    M.col(j) = H.apply(e);
    e(j) = 0.0;
  }
  return M;
}

// Range projector from an SVD with a relative cutoff.
inline Matrix rangeProjector(const Matrix& H, double rel = 1e-10) {
  Eigen::JacobiSVD<Matrix> svd(H, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Index r = 0;
  while (r < s.size() && s(r) > rel * s(0)) ++r;
  const Matrix V = svd.matrixV().leftCols(r);
  return V * V.transpose();
}

inline Vector randn(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline Matrix randn(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = normal(rng);
  return m;
}

// Largest principal angle between the column spans of orthonormal A and B.
inline double principalAngle(const Matrix& A, const Matrix& B) {
  Eigen::JacobiSVD<Matrix> svd(A.transpose() * B);
  const double c = std::min(1.0, svd.singularValues().minCoeff());
  return std::acos(c);
}

// Grid Laplacian built by enumerating edges, row-major pixel order.
inline Matrix gridLaplacian(Index h, Index w, bool diagonals) {
  const Index n = h * w;
  Matrix L = Matrix::Zero(n, n);
  auto edge = [&](Index a, Index b, double wt) {
    L(a, b) -= wt;
    L(b, a) -= wt;
    L(a, a) += wt;
    L(b, b) += wt;
  };
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      const Index i = r * w + c;
      if (c + 1 < w) edge(i, i + 1, 1.0);
      if (r + 1 < h) edge(i, i + w, 1.0);
      if (diagonals && r + 1 < h && c + 1 < w) edge(i, i + w + 1, 1.0 / std::sqrt(2.0));
      if (diagonals && r + 1 < h && c > 0) edge(i, i + w - 1, 1.0 / std::sqrt(2.0));
    }
  }
  return L;
}

// Smallest c >= want with a spectral gap after mode c (ascending mu), capped at mu.size().
inline Index clusterCut(const Vector& mu, Index want, double gap = 1e-6) {
  Index c = want;
  while (c < mu.size() && mu(c) - mu(c - 1) <= gap * std::max(1.0, std::abs(mu(c)))) ++c;
  return c;
}

// Null-space basis from the SVD and the restricted Laplacian spectrum N^T L N.
struct RestrictedEig {
  Vector mu;
  Matrix vectors;
};

inline RestrictedEig restrictedEig(const Matrix& H, const Matrix& L) {
  Eigen::JacobiSVD<Matrix> svd(H, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Index r = 0;
  while (r < s.size() && s(r) > 1e-10 * s(0)) ++r;
  const Matrix N = svd.matrixV().rightCols(H.cols() - r);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(N.transpose() * L * N);
  return {eig.eigenvalues(), N * eig.eigenvectors()};
}

}  // namespace oracle
