#include "gsnr/gmrf.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace gsnr {

GmrfPrior GmrfPrior::make(GraphLaplacian laplacian, double alpha, double epsilon) {
  if (!(alpha >= 0.0) || !(epsilon > 0.0)) throw InvalidArgument("GMRF prior needs alpha >= 0 and epsilon > 0");
  GmrfPrior prior;
  prior.laplacian = symmetrized(laplacian);
  prior.alpha = alpha;
  prior.epsilon = epsilon;
  return prior;
}

SparseMatrix GmrfPrior::precision() const {
  SparseMatrix eye(laplacian.nodes(), laplacian.nodes());
  eye.setIdentity();
  SparseMatrix Q = alpha * laplacian.matrix + epsilon * eye;
  Q.makeCompressed();
  return Q;
}

Matrix GmrfPrior::covariance() const {
  const Index n = laplacian.nodes();
  if (n > kDenseCap) throw InvalidArgument("dense GMRF covariance is capped at n = " + std::to_string(kDenseCap));
  const Matrix Q = precision();
  Eigen::LLT<Matrix> llt(Q);
  if (llt.info() != Eigen::Success) throw NumericalError("GMRF precision is not positive definite");
  Matrix C = llt.solve(Matrix::Identity(n, n));
  return 0.5 * (C + C.transpose());
}

Vector priorSpectrum(const GmrfPrior& prior, const NullSpectralBasis& basis) {
  return (1.0 / (prior.alpha * basis.eigenvalues.array() + prior.epsilon)).matrix();
}

std::vector<ImageSignal> sampleGmrf(const GmrfPrior& prior, Index count, std::uint64_t seed) {
  if (count < 0) throw InvalidArgument("sample count must be nonnegative");
  const Index n = prior.laplacian.nodes();
  if (n > kDenseCap) throw InvalidArgument("dense GMRF sampling is capped at n = " + std::to_string(kDenseCap));
  Eigen::LLT<Matrix> llt(Matrix(prior.precision()));
  if (llt.info() != Eigen::Success) throw NumericalError("Cholesky of the GMRF precision failed");
  const Matrix U = llt.matrixU();  // Q = U^T U

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<ImageSignal> out;
  out.reserve(static_cast<std::size_t>(count));
  Vector z(n);
  for (Index s = 0; s < count; ++s) {
    for (Index i = 0; i < n; ++i) z(i) = normal(rng);
    Vector x = U.triangularView<Eigen::Upper>().solve(z);
    out.push_back(ImageSignal{prior.shape(), std::move(x)});
  }
  return out;
}

std::string toString(CoverageMode mode) {
  switch (mode) {
    case CoverageMode::ClosedForm: return "ClosedForm";
    case CoverageMode::Empirical: return "Empirical";
    case CoverageMode::Marginal: return "Marginal";
  }
  return "?";
}

CoverageCurve coverageFromSpectrum(const Vector& lambda) {
  if (lambda.size() == 0) throw InvalidArgument("coverage needs a nonempty spectrum");
  CoverageCurve curve;
  curve.q = lambda.size();
  curve.mode = CoverageMode::ClosedForm;
  curve.values.resize(lambda.size());
  const double total = lambda.sum();
  double acc = 0.0;
  for (Index i = 0; i < lambda.size(); ++i) {
    acc += lambda(i);
    curve.values(i) = acc / total;
  }
  return curve;
}

CoverageCurve closedFormCoverage(const GmrfPrior& prior, const NullSpectralBasis& basis) {
  if (basis.size() != basis.nullDim) {
    throw InvalidArgument("closed-form coverage needs all " + std::to_string(basis.nullDim) + " null modes, basis has " +
                          std::to_string(basis.size()));
  }
  return coverageFromSpectrum(priorSpectrum(prior, basis));
}

namespace {

CoverageCurve cumulativeRatio(const Vector& perMode, double total, Index q, CoverageMode mode) {
  if (!(total > 0.0)) throw NumericalError("null-space covariance has zero trace");
  CoverageCurve curve;
  curve.q = q;
  curve.mode = mode;
  curve.values.resize(perMode.size());
  double acc = 0.0;
  for (Index i = 0; i < perMode.size(); ++i) {
    acc += perMode(i);
    curve.values(i) = acc / total;
  }
  return curve;
}

}  // namespace

CoverageCurve empiricalCoverage(const std::vector<ImageSignal>& samples, const LinearMap& H,
                                const NullSpectralBasis& basis) {
  if (samples.empty()) throw InvalidArgument("empirical coverage needs at least one sample");
  const Index n = H.cols();
  Vector mean = Vector::Zero(n);
  for (const auto& s : samples) {
    requireSize(s.data.size(), n, "coverage sample");
    mean += s.data;
  }
  mean /= static_cast<double>(samples.size());

  Vector perMode = Vector::Zero(basis.size());
  double total = 0.0;
  for (const auto& s : samples) {
    const Vector xn = H.projectNull(s.data - mean);
    total += xn.squaredNorm();
    perMode += (basis.vectors.transpose() * xn).cwiseAbs2();
  }
  const double N = static_cast<double>(samples.size());
  return cumulativeRatio(perMode / N, total / N, basis.nullDim, CoverageMode::Empirical);
}

CoverageCurve marginalCoverage(const GmrfPrior& prior, const LinearMap& H, const NullSpectralBasis& basis) {
  const Matrix C = prior.covariance();
  const Index n = C.rows();
  Matrix PnC(n, n);
  for (Index j = 0; j < n; ++j) PnC.col(j) = H.projectNull(C.col(j));
  // tr(P_n C P_n) = tr(P_n C) since P_n is a projector.
  const double total = PnC.trace();
  const Vector perMode = (basis.vectors.transpose() * C * basis.vectors).diagonal();
  return cumulativeRatio(perMode, total, basis.nullDim, CoverageMode::Marginal);
}

Vector coverageLowerBound(const Vector& lambda) {
  const Index q = lambda.size();
  Vector out(q);
  for (Index p = 1; p <= q; ++p) {
    const double next = p < q ? lambda(p) : 0.0;
    const double lp = static_cast<double>(p);
    out(p - 1) = lp * lambda(p - 1) / (lp * lambda(0) + static_cast<double>(q - p) * next);
  }
  return out;
}

Index selectP(const CoverageCurve& curve, const SelectPOptions& options) {
  const Index q = curve.values.size();
  if (q == 0) throw InvalidArgument("selectP needs a nonempty coverage curve");
  if (options.plateau < 1) throw InvalidArgument("plateau length must be positive");
  Vector gain(q);
  for (Index p = 0; p < q; ++p) gain(p) = curve.values(p) - (p > 0 ? curve.values(p - 1) : 0.0);
  for (Index p = 1; p <= q; ++p) {
    if (curve.values(p - 1) < options.kappa) continue;
    // Increments C(p+1)-C(p), ..., up to plateau of them.
    const Index last = std::min(p + options.plateau, q);
    if (last == p || gain.segment(p, last - p).maxCoeff() <= options.delta) return p;
  }
  return q;
}

MinimaxResult minimaxBound(const NullSpectralBasis& basis, Index p, double tau) {
  if (p < 0 || p >= basis.size()) {
    throw InvalidArgument("minimax bound needs p < " + std::to_string(basis.size()) + ", got " + std::to_string(p));
  }
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  const double mu = basis.eigenvalues(p);
  if (!(mu > 0.0)) throw NumericalError("mu_{p+1} = 0: the minimax bound is infinite");
  MinimaxResult r;
  r.bound = tau / mu;
  r.witness = std::sqrt(tau / mu) * basis.vectors.col(p);
  r.witnessEnergy = (tau / mu) * mu;
  r.witnessResidual = subspaceResidual(basis, p, r.witness);
  return r;
}

double subspaceResidual(const NullSpectralBasis& basis, Index p, const Eigen::Ref<const Vector>& x) {
  const auto Vp = basis.vectors.leftCols(p);
  return (x - Vp * (Vp.transpose() * x)).squaredNorm();
}

Matrix sampleEllipsoid(const NullSpectralBasis& basis, double tau, Index count, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Index k = basis.size();
  Matrix out(basis.dim(), count);
  Vector a(k);
  for (Index s = 0; s < count; ++s) {
    double energy = 0.0;
    do {
      for (Index j = 0; j < k; ++j) a(j) = normal(rng);
      energy = (basis.eigenvalues.array() * a.array().square()).sum();
    } while (!(energy > 0.0));
    // Radius drawn uniformly in energy, then scaled onto that level set.
    a *= std::sqrt(tau * uniform(rng) / energy);
    out.col(s) = basis.vectors * a;
  }
  return out;
}

namespace {

Matrix denseProjector(const LinearMap& H, bool null) {
  const Index n = H.cols();
  if (n > kDenseCap) throw InvalidArgument("dense block algebra is capped at n = " + std::to_string(kDenseCap));
  Matrix P(n, n);
  Vector e = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    e(j) = 1.0;
    P.col(j) = null ? H.projectNull(e) : H.projectRange(e);
    e(j) = 0.0;
  }
  return 0.5 * (P + P.transpose());
}

Matrix orthonormalColumns(const Matrix& A) {
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  qr.setThreshold(1e-8);
  const Index r = qr.rank();
  Matrix Qf = qr.householderQ() * Matrix::Identity(A.rows(), r);
  return Qf;
}

}  // namespace

BlockBases blockBases(const LinearMap& H) {
  return {orthonormalColumns(denseProjector(H, false)), orthonormalColumns(denseProjector(H, true))};
}

PredictiveMoments predictiveMoments(const GmrfPrior& prior, const LinearMap& H, const NullSpectralBasis& basis,
                                    double sigma2) {
  if (sigma2 < 0.0) throw InvalidArgument("noise variance must be nonnegative");
  requireSize(prior.laplacian.nodes(), H.cols(), "prior nodes");
  const Matrix C = prior.covariance();
  const Matrix Pr = denseProjector(H, false);
  const Matrix Hd = H.toDense();
  const Matrix HPr = Hd * Pr;
  const Matrix CHt = C * HPr.transpose();  // n x m
  PredictiveMoments mom;
  // a = V^T x lives in Null(H), so V^T C P_r = V^T C_nr in ambient coordinates.
  mom.cay = basis.vectors.transpose() * CHt;
  mom.cy = HPr * CHt + sigma2 * Matrix::Identity(H.rows(), H.rows());
  mom.cy = 0.5 * (mom.cy + mom.cy.transpose()).eval();
  mom.varA = (basis.vectors.transpose() * C * basis.vectors).diagonal();
  return mom;
}

PredictabilityReport perModePredictability(const GmrfPrior& prior, const LinearMap& H, const NullSpectralBasis& basis,
                                           double sigma2) {
  const PredictiveMoments mom = predictiveMoments(prior, H, basis, sigma2);
  Eigen::LDLT<Matrix> cy(mom.cy);
  if (cy.info() != Eigen::Success || cy.rcond() < 1e-14) throw NumericalError("measurement covariance C_y is singular");

  const Matrix Q = Matrix(prior.precision());
  const BlockBases bases = blockBases(H);
  const Matrix& Ur = bases.range;
  const Matrix& Un = bases.null;
  const Matrix C = prior.covariance();
  const Matrix Crr = Ur.transpose() * C * Ur;
  const Matrix Qnr = Un.transpose() * Q * Ur;
  const Matrix Qnn = Un.transpose() * Q * Un;
  const Matrix W = Un.transpose() * basis.vectors;  // null-block coordinates of each mode
  const Matrix QnrW = Qnr.transpose() * W;          // Q_rn w_j

  const Index p = basis.size();
  PredictabilityReport rep;
  rep.mu = basis.eigenvalues;
  rep.rho2.resize(p);
  rep.bound.resize(p);
  rep.c.resize(p);
  rep.qnn.resize(p);
  const Matrix solved = cy.solve(mom.cay.transpose());  // m x p
  for (Index j = 0; j < p; ++j) {
    const double explained = mom.cay.row(j).dot(solved.col(j));
    rep.rho2(j) = mom.varA(j) > 0.0 ? explained / mom.varA(j) : 0.0;
    rep.c(j) = std::max(0.0, QnrW.col(j).dot(Crr * QnrW.col(j)));
    rep.qnn(j) = W.col(j).dot(Qnn * W.col(j));
    rep.bound(j) = rep.c(j) / (rep.c(j) + rep.qnn(j));
  }
  return rep;
}

BlockIdentityReport blockIdentityCheck(const Matrix& Q, const Matrix& H) {
  const Index n = Q.cols();
  requireSize(H.cols(), n, "blockIdentityCheck H columns");
  Eigen::ColPivHouseholderQR<Matrix> qr(H.transpose());
  qr.setThreshold(1e-10);
  const Index r = qr.rank();
  const Matrix full = qr.householderQ();
  const Matrix Ur = full.leftCols(r);
  const Matrix Un = full.rightCols(n - r);

  Eigen::LLT<Matrix> llt(Q);
  if (llt.info() != Eigen::Success) throw NumericalError("Q is not positive definite");
  const Matrix C = llt.solve(Matrix::Identity(n, n));
  const Matrix Qnn = Un.transpose() * Q * Un;
  const Matrix Qnr = Un.transpose() * Q * Ur;
  const Matrix Crr = Ur.transpose() * C * Ur;
  const Matrix Cnr = Un.transpose() * C * Ur;
  const Matrix Cnn = Un.transpose() * C * Un;
  Eigen::LLT<Matrix> qnn(Qnn);
  const Matrix QnnInv = qnn.solve(Matrix::Identity(n - r, n - r));

  auto rel = [](const Matrix& diff, const Matrix& ref) {
    const double scale = ref.norm();
    return scale > 0.0 ? diff.norm() / scale : diff.norm();
  };
  BlockIdentityReport rep;
  rep.nrResidual = rel(Cnr + QnnInv * Qnr * Crr, Cnr);
  rep.nnResidual = rel(Cnn - QnnInv - QnnInv * Qnr * Crr * Qnr.transpose() * QnnInv, Cnn);
  return rep;
}

BlockIdentityReport blockIdentityCheck(const GmrfPrior& prior, const LinearMap& H) {
  if (H.cols() > kDenseCap) throw InvalidArgument("dense block algebra is capped at n = " + std::to_string(kDenseCap));
  return blockIdentityCheck(Matrix(prior.precision()), H.toDense());
}

}  // namespace gsnr
