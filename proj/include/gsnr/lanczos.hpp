#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace gsnr {

template <typename Scalar>
struct LanczosOptions {
  Scalar tol = Scalar(1e-10);
  Eigen::Index maxRestarts = 0;  // 0 = 50 per requested pair
  Eigen::Index krylovDim = 0;    // 0 = automatic
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

template <typename Scalar>
struct LanczosResult {
  using VectorS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixS = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  MatrixS vectors;  // columns, ordered by decreasing eigenvalue
  VectorS values;
  VectorS residuals;
  Eigen::Index cycles = 0;
  Eigen::Index applies = 0;
  bool converged = false;
};

/// Largest k eigenpairs of a symmetric operator restricted to an invariant
/// subspace of dimension spaceDim.
///
/// Restarted Lanczos with full reorthogonalization and locking. `project` maps
/// a vector onto the subspace and is applied to every Krylov vector. After k
/// pairs are locked, fresh random cycles deflated against the locked set check
/// for missed copies of degenerate eigenvalues.
template <typename Scalar, typename Op, typename Project>
LanczosResult<Scalar> lanczosLargest(Op&& op, Project&& project, Eigen::Index n, Eigen::Index spaceDim,
                                     Eigen::Index k, const LanczosOptions<Scalar>& options = {}) {
  using Index = Eigen::Index;
  using VectorS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixS = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  LanczosResult<Scalar> result;
  k = std::min(k, spaceDim);
  if (k <= 0) {
    result.vectors.resize(n, 0);
    result.converged = true;
    return result;
  }

  const Scalar tol = options.tol;
  const Index maxCycles = options.maxRestarts > 0 ? options.maxRestarts : 50 * k;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;

  MatrixS locked(n, std::min(spaceDim, 2 * k + 8));
  VectorS lockedValues(locked.cols());
  VectorS lockedResiduals(locked.cols());
  Index nl = 0;

  auto orthogonalize = [&](VectorS& v, const MatrixS& basis, Index cols) {
    for (int pass = 0; pass < 2; ++pass) {
      if (nl > 0) v.noalias() -= locked.leftCols(nl) * (locked.leftCols(nl).transpose() * v);
      if (cols > 0) v.noalias() -= basis.leftCols(cols) * (basis.leftCols(cols).transpose() * v);
    }
  };

  auto randomStart = [&]() {
    VectorS v(n);
    for (int attempt = 0; attempt < 8; ++attempt) {
      for (Index i = 0; i < n; ++i) v(i) = static_cast<Scalar>(normal(rng));
      v = project(v);
      orthogonalize(v, locked, 0);
      const Scalar norm = v.norm();
      if (norm > Scalar(1e-8)) return VectorS(v / norm);
    }
    return VectorS(VectorS::Zero(n));
  };

  auto lock = [&](const VectorS& y, Scalar theta, Scalar residual) {
    if (nl == locked.cols()) {
      const Index grow = std::min(spaceDim, std::max<Index>(2 * locked.cols(), nl + 1));
      locked.conservativeResize(Eigen::NoChange, grow);
      lockedValues.conservativeResize(grow);
      lockedResiduals.conservativeResize(grow);
    }
    locked.col(nl) = y;
    lockedValues(nl) = theta;
    lockedResiduals(nl) = residual;
    ++nl;
  };

  // k-th largest locked value, valid once nl >= k.
  auto kthLocked = [&]() {
    std::vector<Scalar> vals(lockedValues.data(), lockedValues.data() + nl);
    std::nth_element(vals.begin(), vals.begin() + (k - 1), vals.end(), std::greater<Scalar>());
    return vals[static_cast<std::size_t>(k - 1)];
  };

  const Index autoDim = std::max<Index>(2 * k + 20, 60);
  VectorS start = randomStart();
  bool verifying = false;
  Scalar normEstimate = 0;

  for (Index cycle = 0; cycle < maxCycles; ++cycle) {
    const Index remaining = spaceDim - nl;
    if (remaining <= 0 || start.norm() == Scalar(0)) {
      result.converged = nl >= k;
      break;
    }
    ++result.cycles;
    const Index m = std::min(options.krylovDim > 0 ? options.krylovDim : autoDim, remaining);
    const Index needed = std::max<Index>(k - nl, 1);

    MatrixS V(n, m);
    VectorS alpha(m), beta(m);
    V.col(0) = start;
    Index steps = 0;
    Index nextCheck = std::min(m, std::max<Index>(needed, 10));
    bool breakdown = false;

    for (Index j = 0; j < m; ++j) {
      VectorS w = project(op(V.col(j)));
      ++result.applies;
      alpha(j) = V.col(j).dot(w);
      w -= alpha(j) * V.col(j);
      if (j > 0) w -= beta(j - 1) * V.col(j - 1);
      orthogonalize(w, V, j + 1);
      beta(j) = w.norm();
      steps = j + 1;
      normEstimate = std::max(normEstimate, std::abs(alpha(j)) + beta(j));
      breakdown = beta(j) <= Scalar(1e-12) * std::max(normEstimate, Scalar(1));
      if (breakdown || steps == m) break;
      if (steps == nextCheck) {
        Eigen::SelfAdjointEigenSolver<MatrixS> tri;
        tri.computeFromTridiagonal(alpha.head(steps), beta.head(steps - 1), Eigen::ComputeEigenvectors);
        Index good = 0;
        for (Index i = steps - 1; i >= 0 && good < needed; --i, ++good) {
          if (std::abs(beta(j) * tri.eigenvectors()(steps - 1, i)) > tol / 10) break;
        }
        if (good >= std::min(needed, steps)) break;
        nextCheck = std::min(m, steps + std::max<Index>(10, steps / 2));
      }
      V.col(j + 1) = w / beta(j);
    }

    Eigen::SelfAdjointEigenSolver<MatrixS> tri;
    if (steps > 1) {
      tri.computeFromTridiagonal(alpha.head(steps), beta.head(steps - 1), Eigen::ComputeEigenvectors);
    } else {
      MatrixS one(1, 1);
      one(0, 0) = alpha(0);
      tri.compute(one);
    }
    const Scalar topRitz = tri.eigenvalues()(steps - 1);

    if (verifying && topRitz <= kthLocked() + Scalar(10) * tol) {
      result.converged = true;
      break;
    }

    // Lock the converged Ritz pairs contiguous from the top.
    VectorS nextStart;
    Scalar nextValue = -std::numeric_limits<Scalar>::infinity();
    const Index lockedBefore = nl;
    for (Index i = steps - 1; i >= 0; --i) {
      VectorS y = V.leftCols(steps) * tri.eigenvectors().col(i);
      orthogonalize(y, V, 0);
      y = project(y);
      y.normalize();
      VectorS By = project(op(y));
      ++result.applies;
      const Scalar theta = y.dot(By);
      const Scalar residual = (By - theta * y).norm();
      if (residual <= tol && nl < spaceDim) {
        lock(y, theta, residual);
      } else {
        nextStart = y;
        nextValue = tri.eigenvalues()(i);
        break;
      }
    }

    // Breakdown without a lock: the candidate's residual sits inside the locked span,
    // where deflation cannot reach it. Rayleigh-Ritz over locked + candidate.
    if (breakdown && nl == lockedBefore && nl > 0 && nextStart.size() > 0) {
      const Index w = nl + 1;
      MatrixS W(n, w);
      W.leftCols(nl) = locked.leftCols(nl);
      orthogonalize(nextStart, V, 0);
      W.col(nl) = nextStart.normalized();
      MatrixS BW(n, w);
      for (Index c = 0; c < w; ++c) BW.col(c) = project(op(W.col(c)));
      result.applies += w;
      MatrixS G = W.transpose() * BW;
      G = (G + G.transpose()).eval() / Scalar(2);
      Eigen::SelfAdjointEigenSolver<MatrixS> rr(G);
      const MatrixS Z = W * rr.eigenvectors();
      const MatrixS R = BW * rr.eigenvectors() - Z * rr.eigenvalues().asDiagonal();
      // Keep the top nl as the locked set; the smallest pair becomes the candidate.
      nl = 0;
      for (Index c = w - 1; c >= 1; --c) lock(Z.col(c), rr.eigenvalues()(c), R.col(c).norm());
      const Scalar candidateResidual = R.col(0).norm();
      if (candidateResidual <= tol && nl < spaceDim) {
        lock(Z.col(0), rr.eigenvalues()(0), candidateResidual);
        nextStart.resize(0);
      } else {
        nextStart = Z.col(0);
        nextValue = rr.eigenvalues()(0);
      }
    }

    if (nl >= k) {
      const Scalar kth = kthLocked();
      if (nextStart.size() > 0 && nextValue > kth + Scalar(10) * tol) {
        orthogonalize(nextStart, V, 0);
        start = nextStart / nextStart.norm();
        verifying = false;
      } else {
        start = randomStart();
        verifying = true;
      }
    } else if (nextStart.size() > 0) {
      orthogonalize(nextStart, V, 0);
      const Scalar norm = nextStart.norm();
      start = norm > Scalar(1e-8) ? VectorS(nextStart / norm) : randomStart();
      verifying = false;
    } else {
      start = randomStart();
      verifying = false;
    }
  }
  if (nl >= k && spaceDim - nl <= 0) result.converged = true;

  std::vector<Index> order(static_cast<std::size_t>(nl));
  for (Index i = 0; i < nl; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return lockedValues(a) > lockedValues(b); });
  const Index out = std::min(nl, k);
  result.vectors.resize(n, out);
  result.values.resize(out);
  result.residuals.resize(out);
  for (Index i = 0; i < out; ++i) {
    const Index src = order[static_cast<std::size_t>(i)];
    result.vectors.col(i) = locked.col(src);
    result.values(i) = lockedValues(src);
    result.residuals(i) = lockedResiduals(src);
  }
  if (out < k || (out > 0 && result.residuals.maxCoeff() > tol)) result.converged = false;
  return result;
}

}  // namespace gsnr
