#pragma once

#include "gsnr/gmrf.hpp"

#include <string>
#include <vector>

namespace gsnr {

enum class PredictorKind { Wiener, Ridge };
std::string toString(PredictorKind kind);

/// Linear map from measurements to null-space coefficients, a_hat = W y.
struct CoeffPredictor {
  Matrix weights;  // p x m
  PredictorKind kind = PredictorKind::Wiener;
  double beta = 0.0;
  Index trainingSamples = 0;
  std::string trainingRecord;
};

/// W = Cov(a, y) Cov(y)^{-1} under the GMRF prior.
CoeffPredictor wienerPredictor(const GmrfPrior& prior, const LinearMap& H, const NullSpectralBasis& basis,
                               double sigma2);

/// Columns of Y are measurements, columns of A the matching coefficient vectors.
/// beta <= 0 selects 1e-3 tr(Y Y^T) / m.
CoeffPredictor trainRidge(const Matrix& Y, const Matrix& A, double beta = 0.0);

Vector predictCoeffs(const CoeffPredictor& G, const Eigen::Ref<const Vector>& y);

/// 1 - sum |G(y) - a|^2 / sum |a|^2 over the columns of Y and A.
double r2Score(const CoeffPredictor& G, const Matrix& Y, const Matrix& A);

/// Header "kind,beta,p,m" with values, then p rows of m weights.
void writePredictorCsv(const CoeffPredictor& G, const std::string& path);

}  // namespace gsnr
