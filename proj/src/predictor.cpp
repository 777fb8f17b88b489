#include "gsnr/predictor.hpp"

#include "gsnr/csv.hpp"

#include <Eigen/Cholesky>

namespace gsnr {

std::string toString(PredictorKind kind) { return kind == PredictorKind::Wiener ? "Wiener" : "Ridge"; }

CoeffPredictor wienerPredictor(const GmrfPrior& prior, const LinearMap& H, const NullSpectralBasis& basis,
                               double sigma2) {
  const PredictiveMoments mom = predictiveMoments(prior, H, basis, sigma2);
  Eigen::LDLT<Matrix> cy(mom.cy);
  if (cy.info() != Eigen::Success || cy.rcond() < 1e-14) throw NumericalError("measurement covariance C_y is singular");
  CoeffPredictor G;
  G.kind = PredictorKind::Wiener;
  G.weights = cy.solve(mom.cay.transpose()).transpose();
  G.trainingRecord = "gmrf alpha=" + formatNumber(prior.alpha) + " eps=" + formatNumber(prior.epsilon) + " " +
                     toString(prior.laplacian.topology) + " sigma2=" + formatNumber(sigma2);
  return G;
}

CoeffPredictor trainRidge(const Matrix& Y, const Matrix& A, double beta) {
  if (Y.cols() != A.cols()) throw DimensionError("trainRidge: Y and A have different sample counts");
  if (Y.cols() < 2) throw InvalidArgument("trainRidge needs at least 2 training pairs");
  const Index m = Y.rows();
  Matrix gram = Y * Y.transpose();
  if (beta <= 0.0) beta = 1e-3 * gram.trace() / static_cast<double>(m);
  if (!(beta > 0.0)) throw InvalidArgument("ridge strength must be positive");
  gram.diagonal().array() += beta;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericalError("ridge normal equations are not positive definite");
  CoeffPredictor G;
  G.kind = PredictorKind::Ridge;
  G.beta = beta;
  G.trainingSamples = Y.cols();
  G.weights = llt.solve(Y * A.transpose()).transpose();
  G.trainingRecord = "ridge samples=" + std::to_string(Y.cols());
  return G;
}

Vector predictCoeffs(const CoeffPredictor& G, const Eigen::Ref<const Vector>& y) {
  requireSize(y.size(), G.weights.cols(), "predictCoeffs");
  return G.weights * y;
}

double r2Score(const CoeffPredictor& G, const Matrix& Y, const Matrix& A) {
  if (Y.cols() != A.cols() || Y.cols() == 0) throw InvalidArgument("r2Score needs matching nonempty test sets");
  requireSize(Y.rows(), G.weights.cols(), "r2Score measurements");
  requireSize(A.rows(), G.weights.rows(), "r2Score coefficients");
  const double denom = A.squaredNorm();
  if (!(denom > 0.0)) throw NumericalError("r2Score: all target coefficients are zero");
  return 1.0 - (G.weights * Y - A).squaredNorm() / denom;
}

void writePredictorCsv(const CoeffPredictor& G, const std::string& path) {
  std::string out = "kind,beta,p,m\n";
  out += toString(G.kind) + "," + formatNumber(G.beta) + "," + std::to_string(G.weights.rows()) + "," +
         std::to_string(G.weights.cols()) + "\n";
  for (Index i = 0; i < G.weights.rows(); ++i) {
    for (Index j = 0; j < G.weights.cols(); ++j) {
      if (j) out += ',';
      out += formatNumber(G.weights(i, j));
    }
    out += '\n';
  }
  writeTextFile(path, out);
}

}  // namespace gsnr
