#include "gsnr/solver.hpp"

#include "gsnr/csv.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace gsnr {

std::string toString(DenoiserKind kind) {
  switch (kind) {
    case DenoiserKind::Identity: return "identity";
    case DenoiserKind::WaveletSoft: return "wavelet";
    case DenoiserKind::TvProx: return "tv";
  }
  return "?";
}

DenoiserKind parseDenoiserKind(const std::string& name) {
  for (auto k : {DenoiserKind::Identity, DenoiserKind::WaveletSoft, DenoiserKind::TvProx}) {
    if (toString(k) == name) return k;
  }
  throw InvalidArgument("unknown denoiser '" + name + "'");
}

namespace {

void checkProblem(const GsnrProblem& pr) {
  requireSize(pr.y.size(), pr.H.rows(), "measurement");
  if (pr.basis.size() > 0) requireSize(pr.basis.dim(), pr.H.cols(), "basis");
  requireSize(pr.prediction.size(), pr.basis.size(), "predicted coefficients");
}

bool hasBasis(const GsnrProblem& pr) { return pr.basis.size() > 0; }

}  // namespace

double gsnrObjective(const GsnrProblem& pr, const SolverConfig& config, const Eigen::Ref<const Vector>& x) {
  checkProblem(pr);
  double value = 0.5 * (pr.H.apply(x) - pr.y).squaredNorm();
  if (config.gamma != 0.0 && hasBasis(pr)) {
    value += 0.5 * config.gamma * (pr.prediction - pr.basis.vectors.transpose() * x).squaredNorm();
  }
  if (config.gammaG != 0.0) value += 0.5 * config.gammaG * x.dot(applyNullRestricted(pr.H, pr.laplacian, x));
  return value;
}

Vector gsnrGradient(const GsnrProblem& pr, const SolverConfig& config, const Eigen::Ref<const Vector>& x) {
  checkProblem(pr);
  Vector g = pr.H.adjoint(pr.H.apply(x) - pr.y);
  if (config.gamma != 0.0 && hasBasis(pr)) {
    g.noalias() += config.gamma * (pr.basis.vectors * (pr.basis.vectors.transpose() * x - pr.prediction));
  }
  if (config.gammaG != 0.0) g += config.gammaG * applyNullRestricted(pr.H, pr.laplacian, x);
  return g;
}

double largestCurvature(const GsnrProblem& pr, const SolverConfig& config) {
  checkProblem(pr);
  const Index n = pr.H.cols();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    Vector w = pr.H.adjoint(pr.H.apply(v));
    if (config.gamma != 0.0 && hasBasis(pr)) {
      w.noalias() += config.gamma * (pr.basis.vectors * (pr.basis.vectors.transpose() * v));
    }
    if (config.gammaG != 0.0) w += config.gammaG * applyNullRestricted(pr.H, pr.laplacian, v);
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const bool done = std::abs(next - lambda) <= 1e-8 * std::abs(next);
    lambda = next;
    if (done) break;
  }
  return lambda;
}

ImageSignal tvProx(const ImageSignal& x, double weight, Index iterations) {
  if (weight < 0.0) throw InvalidArgument("TV weight must be nonnegative");
  if (weight == 0.0 || iterations <= 0) return x;
  const auto& s = x.shape;
  const Index h = s.height, w = s.width, P = s.pixels();
  const double tau = 0.125;
  ImageSignal out{s, Vector(x.data.size())};
  Vector px(P), py(P), d(P);
  auto divergence = [&](Vector& div) {
    for (Index r = 0; r < h; ++r) {
      for (Index c = 0; c < w; ++c) {
        const Index i = r * w + c;
        double v = 0.0;
        if (c < w - 1) v += px(i);
        if (c > 0) v -= px(i - 1);
        if (r < h - 1) v += py(i);
        if (r > 0) v -= py(i - w);
        div(i) = v;
      }
    }
  };
  for (Index ch = 0; ch < s.channels; ++ch) {
    const auto v = x.data.segment(ch * P, P);
    px.setZero();
    py.setZero();
    for (Index it = 0; it < iterations; ++it) {
      divergence(d);
      d -= v / weight;
      for (Index r = 0; r < h; ++r) {
        for (Index c = 0; c < w; ++c) {
          const Index i = r * w + c;
          const double gx = c < w - 1 ? d(i + 1) - d(i) : 0.0;
          const double gy = r < h - 1 ? d(i + w) - d(i) : 0.0;
          const double scale = 1.0 + tau * std::sqrt(gx * gx + gy * gy);
          px(i) = (px(i) + tau * gx) / scale;
          py(i) = (py(i) + tau * gy) / scale;
        }
      }
    }
    divergence(d);
    out.data.segment(ch * P, P) = v - weight * d;
  }
  return out;
}

ImageSignal applyDenoiser(const DenoiserConfig& config, double lambda, const ImageSignal& x) {
  switch (config.kind) {
    case DenoiserKind::Identity: return x;
    case DenoiserKind::WaveletSoft:
      return denoiseWaveletSoft(x, config.filter, config.levels, lambda * config.threshold);
    case DenoiserKind::TvProx: return tvProx(x, lambda * config.tvWeight, config.tvIterations);
  }
  return x;
}

RunTrace runGsnrPgd(const GsnrProblem& pr, const SolverConfig& config, const Vector* reference) {
  checkProblem(pr);
  if (config.iterations < 1) throw InvalidArgument("solver needs at least one iteration");
  if (config.gamma < 0.0 || config.gammaG < 0.0) throw InvalidArgument("gamma and gamma_g must be nonnegative");
  if (reference) requireSize(reference->size(), pr.H.cols(), "reference image");

  RunTrace trace;
  trace.step = config.step > 0.0 ? config.step : 1.0 / largestCurvature(pr, config);
  if (!std::isfinite(trace.step) || trace.step <= 0.0) throw NumericalError("automatic step size is not finite");

  const Index K = config.iterations;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  trace.objective = Vector::Constant(K + 1, nan);
  trace.psnr = Vector::Constant(K + 1, nan);
  trace.errorNorm = Vector::Constant(K + 1, nan);

  ImageSignal x{pr.H.shape(), config.initPinv ? pr.H.pinvApply(pr.y) : pr.H.adjoint(pr.y)};
  if (hasBasis(pr)) x.data += pr.basis.vectors * pr.prediction;

  auto record = [&](Index k) {
    if (config.trackObjective) trace.objective(k) = gsnrObjective(pr, config, x.data);
    double monitored = x.data.norm();
    if (reference) {
      trace.errorNorm(k) = (x.data - *reference).norm();
      trace.psnr(k) = psnr(x.data, *reference);
      monitored = trace.errorNorm(k);
    }
    if (!std::isfinite(monitored) || monitored > kDivergenceLimit) {
      std::ostringstream os;
      os << "solver diverged at iteration " << k << ": norm " << monitored << " exceeds " << kDivergenceLimit
         << " (step " << trace.step << ")";
      throw NumericalError(os.str());
    }
  };

  record(0);
  for (Index k = 1; k <= K; ++k) {
    x.data -= trace.step * gsnrGradient(pr, config, x.data);
    x = applyDenoiser(config.denoiser, config.lambda, x);
    record(k);
  }
  trace.reconstruction = std::move(x);
  return trace;
}

StepAnalysis spectralStepSize(const LinearMap& H, const GraphLaplacian& L, double gammaG, double delta) {
  const Index n = H.cols();
  if (n > kDenseCap) throw InvalidArgument("dense step analysis is capped at n = " + std::to_string(kDenseCap));
  Matrix A(n, n);
  Vector e = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    e(j) = 1.0;
    A.col(j) = H.adjoint(H.apply(e));
    if (gammaG != 0.0) A.col(j) += gammaG * applyNullRestricted(H, L, e);
    e(j) = 0.0;
  }
  A = 0.5 * (A + A.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigenvalues of H^T H + gamma_g T failed");
  const Vector& ev = eig.eigenvalues();

  StepAnalysis s;
  s.lambdaMax = ev(n - 1);
  s.lambdaMin = ev(0);
  const double floor = 1e-10 * s.lambdaMax;
  s.singular = s.lambdaMin <= floor;
  if (s.singular) s.lambdaMin = std::max(s.lambdaMin, 0.0);
  s.alpha = 2.0 / (s.lambdaMin + s.lambdaMax);
  s.kappa = s.singular ? std::numeric_limits<double>::infinity() : s.lambdaMax / s.lambdaMin;
  s.rho = s.singular ? 1.0 + delta : (1.0 + delta) * (s.kappa - 1.0) / (s.kappa + 1.0);
  s.positiveKappa = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    if (ev(i) > floor) {
      s.positiveKappa = s.lambdaMax / ev(i);
      break;
    }
  }
  return s;
}

ContractionSummary contractionRate(const RunTrace& trace, Index burnIn) {
  const Vector& e = trace.errorNorm;
  if (e.size() == 0 || std::isnan(e(0))) throw InvalidArgument("contraction rate needs a reference solution");
  ContractionSummary out;
  const Index K = e.size() - 1;
  out.ratios = Vector::Constant(K, std::numeric_limits<double>::quiet_NaN());
  const double floor = 1e-10 * e(0);
  out.maxAfterBurnIn = 0.0;
  for (Index k = 0; k < K; ++k) {
    if (!(e(k) > floor)) continue;
    out.ratios(k) = e(k + 1) / e(k);
    if (k >= burnIn) out.maxAfterBurnIn = std::max(out.maxAfterBurnIn, out.ratios(k));
  }
  return out;
}

double psnr(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& reference, double peak) {
  requireSize(x.size(), reference.size(), "psnr");
  if (!(peak > 0.0)) throw InvalidArgument("PSNR peak must be positive");
  const double mse = (x - reference).squaredNorm() / static_cast<double>(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

void writePnm(const ImageSignal& image, const std::string& path) {
  const auto& s = image.shape;
  if (s.channels != 1 && s.channels != 3) throw InvalidArgument("PNM output needs 1 or 3 channels");
  std::string out = (s.channels == 1 ? "P5\n" : "P6\n") + std::to_string(s.width) + " " + std::to_string(s.height) +
                    "\n255\n";
  for (Index r = 0; r < s.height; ++r) {
    for (Index c = 0; c < s.width; ++c) {
      for (Index ch = 0; ch < s.channels; ++ch) {
        const double v = std::clamp(image.data(s.index(ch, r, c)), 0.0, 1.0);
        out += static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
    }
  }
  writeTextFile(path, out);
}

}  // namespace gsnr
