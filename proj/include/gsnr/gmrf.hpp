#pragma once

#include "gsnr/graph.hpp"
#include "gsnr/image.hpp"
#include "gsnr/linop.hpp"
#include "gsnr/spectral.hpp"

#include <random>
#include <vector>

namespace gsnr {

/// Zero-mean Gaussian with precision Q = alpha L + eps I.
struct GmrfPrior {
  GraphLaplacian laplacian;
  double alpha = 1.0;
  double epsilon = 0.01;

  static GmrfPrior make(GraphLaplacian laplacian, double alpha = 1.0, double epsilon = 0.01);

  ImageShape shape() const { return {laplacian.channels, laplacian.height, laplacian.width}; }
  SparseMatrix precision() const;
  /// Dense Q^{-1}; capped at kDenseCap.
  Matrix covariance() const;
};

/// lambda_i = 1 / (alpha mu_i + eps).
Vector priorSpectrum(const GmrfPrior& prior, const NullSpectralBasis& basis);

/// x = R^{-T} z with Q = R^T R, z standard normal.
std::vector<ImageSignal> sampleGmrf(const GmrfPrior& prior, Index count, std::uint64_t seed);

enum class CoverageMode { ClosedForm, Empirical, Marginal };
std::string toString(CoverageMode mode);

struct CoverageCurve {
  Vector values;  // C(1..size)
  Index q = 0;
  CoverageMode mode = CoverageMode::ClosedForm;
};

/// Cumulative lambda ratio; the basis must hold all q null modes.
CoverageCurve closedFormCoverage(const GmrfPrior& prior, const NullSpectralBasis& basis);
/// Same ratio from an explicit spectrum (nonincreasing lambda).
CoverageCurve coverageFromSpectrum(const Vector& lambda);
/// tr(S Cov S^T) / tr(Cov) with x_n = P_n(x - mean), Cov = (1/N) sum x_n x_n^T.
CoverageCurve empiricalCoverage(const std::vector<ImageSignal>& samples, const LinearMap& H,
                                const NullSpectralBasis& basis);
/// Exact population coverage using Cov(x_n) = P_n Q^{-1} P_n.
CoverageCurve marginalCoverage(const GmrfPrior& prior, const LinearMap& H, const NullSpectralBasis& basis);

/// p lambda_p / (p lambda_1 + (q - p) lambda_{p+1}) for p = 1..q.
Vector coverageLowerBound(const Vector& lambda);

struct SelectPOptions {
  double kappa = 0.95;
  double delta = 1e-3;
  Index plateau = 10;
};

/// Smallest p with C(p) >= kappa whose next `plateau` increments are all <= delta; q otherwise.
Index selectP(const CoverageCurve& curve, const SelectPOptions& options = {});

struct MinimaxResult {
  double bound = 0.0;
  Vector witness;
  double witnessEnergy = 0.0;
  double witnessResidual = 0.0;
};

/// tau / mu_{p+1} and the extremal element sqrt(tau/mu_{p+1}) v_{p+1}.
MinimaxResult minimaxBound(const NullSpectralBasis& basis, Index p, double tau);

/// ||(I - P_{V_p}) x||^2 with P_{V_p} = V_p V_p^T.
double subspaceResidual(const NullSpectralBasis& basis, Index p, const Eigen::Ref<const Vector>& x);

/// Random members of {x in span(basis) : x^T T x <= tau}; column per sample.
Matrix sampleEllipsoid(const NullSpectralBasis& basis, double tau, Index count, std::mt19937_64& rng);

struct PredictabilityReport {
  Vector mu;
  Vector rho2;
  Vector bound;
  Vector c;
  Vector qnn;  // v_j^T Q_nn v_j = alpha mu_j + eps
};

/// Orthonormal bases of Range(H^T) and Null(H) via column-pivoting QR of the dense projectors.
struct BlockBases {
  Matrix range;
  Matrix null;
};
BlockBases blockBases(const LinearMap& H);

/// Second moments of the null coefficients a = S x and the measurement y = H x + w,
/// with x_r = P_r x driving y as in the block model.
struct PredictiveMoments {
  Matrix cay;   // Cov(a, y), p x m
  Matrix cy;    // Cov(y), m x m
  Vector varA;  // Var(a_j)
};
PredictiveMoments predictiveMoments(const GmrfPrior& prior, const LinearMap& H, const NullSpectralBasis& basis,
                                    double sigma2);

PredictabilityReport perModePredictability(const GmrfPrior& prior, const LinearMap& H, const NullSpectralBasis& basis,
                                           double sigma2);

struct BlockIdentityReport {
  double nrResidual = 0.0;  // |C_nr + Q_nn^{-1} Q_nr C_rr| / |C_nr|
  double nnResidual = 0.0;  // |C_nn - Q_nn^{-1} - Q_nn^{-1} Q_nr C_rr Q_rn Q_nn^{-1}| / |C_nn|
};

BlockIdentityReport blockIdentityCheck(const GmrfPrior& prior, const LinearMap& H);
BlockIdentityReport blockIdentityCheck(const Matrix& Q, const Matrix& H);

}  // namespace gsnr
