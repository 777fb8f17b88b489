#pragma once

#include "gsnr/graph.hpp"
#include "gsnr/linop.hpp"
#include "gsnr/spectral.hpp"
#include "gsnr/wavelet.hpp"

#include <string>

namespace gsnr {

enum class DenoiserKind { Identity, WaveletSoft, TvProx };
std::string toString(DenoiserKind kind);
DenoiserKind parseDenoiserKind(const std::string& name);

struct DenoiserConfig {
  DenoiserKind kind = DenoiserKind::Identity;
  WaveletFilter filter = WaveletFilter::Haar;
  Index levels = 3;
  double threshold = 0.05;
  double tvWeight = 0.05;
  Index tvIterations = 50;
};

struct SolverConfig {
  double step = 0.0;  // <= 0 selects the automatic step
  double gamma = 1.0;
  double gammaG = 0.0;
  double lambda = 1.0;  // scales the denoiser strength
  Index iterations = 100;
  DenoiserConfig denoiser;
  double delta = 0.0;
  bool initPinv = false;
  bool trackObjective = true;
};

/// Divergence guard on the iterate (or error) norm.
inline constexpr double kDivergenceLimit = 1e6;
/// Iterations skipped before measuring contraction.
inline constexpr Index kContractionBurnIn = 5;

/// Inputs of one reconstruction: y, the null basis S (possibly empty), the
/// predicted coefficients G(y) and the Laplacian inside T.
struct GsnrProblem {
  const LinearMap& H;
  const Vector& y;
  const NullSpectralBasis& basis;
  const Vector& prediction;
  const GraphLaplacian& laplacian;
};

struct RunTrace {
  Vector objective;  // K + 1 entries, initialization included
  Vector psnr;       // NaN when no reference is given
  Vector errorNorm;  // NaN when no reference is given
  ImageSignal reconstruction;
  double step = 0.0;
};

/// 1/2 |Hx - y|^2 + gamma/2 |G(y) - Sx|^2 + gamma_g/2 x^T T x.
double gsnrObjective(const GsnrProblem& problem, const SolverConfig& config, const Eigen::Ref<const Vector>& x);

/// H^T(Hx - y) + gamma S^T(Sx - G(y)) + gamma_g T x.
Vector gsnrGradient(const GsnrProblem& problem, const SolverConfig& config, const Eigen::Ref<const Vector>& x);

/// lambda_max of H^T H + gamma S^T S + gamma_g T by power iteration (50 steps, tol 1e-8).
double largestCurvature(const GsnrProblem& problem, const SolverConfig& config);

ImageSignal applyDenoiser(const DenoiserConfig& config, double lambda, const ImageSignal& x);

/// Isotropic TV proximal map, Chambolle's dual projection.
ImageSignal tvProx(const ImageSignal& x, double weight, Index iterations);

/// Algorithm: x0 = H^T y + S^T G(y); x <- D(x - step * gradient(x)).
RunTrace runGsnrPgd(const GsnrProblem& problem, const SolverConfig& config, const Vector* reference = nullptr);

struct StepAnalysis {
  double alpha = 0.0;  // 2 / (lambda_min + lambda_max)
  double lambdaMin = 0.0;
  double lambdaMax = 0.0;
  double kappa = 0.0;
  double rho = 0.0;  // (1 + delta)(kappa - 1)/(kappa + 1)
  /// lambda_max over the smallest eigenvalue above 1e-10 lambda_max.
  double positiveKappa = 0.0;
  bool singular = false;
};

/// Dense extremes of A = H^T H + gamma_g T.
StepAnalysis spectralStepSize(const LinearMap& H, const GraphLaplacian& L, double gammaG, double delta = 0.0);

struct ContractionSummary {
  Vector ratios;  // |x_{k+1} - x*| / |x_k - x*|, NaN where skipped
  double maxAfterBurnIn = 0.0;
};

/// Ratios of successive error norms; steps whose error has reached the
/// roundoff floor (1e-10 of the initial error) are skipped.
ContractionSummary contractionRate(const RunTrace& trace, Index burnIn = kContractionBurnIn);

/// 10 log10(peak^2 / MSE); +Inf for identical signals.
double psnr(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& reference, double peak = 1.0);

/// Binary PGM (1 channel) or PPM (3 channels), values clipped to [0, 1].
void writePnm(const ImageSignal& image, const std::string& path);

}  // namespace gsnr
