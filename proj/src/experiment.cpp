#include "gsnr/experiment.hpp"

#include "gsnr/corpus.hpp"
#include "gsnr/csv.hpp"
#include "gsnr/gmrf.hpp"
#include "gsnr/predictor.hpp"
#include "gsnr/solver.hpp"
#include "gsnr/spectral.hpp"
#include "gsnr/svg.hpp"

#include <Eigen/Cholesky>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <random>

namespace gsnr {

namespace fs = std::filesystem;

LinearMap buildOperatorFromSpec(const OperatorSpec& spec) {
  if (spec.kind == OperatorKind::ExplicitDense) return denseOperator(readDenseCsv(spec.matrixFile), spec.shape);
  return buildOperator(spec.kind, spec.shape, spec.params);
}

LinearMap perturbOperator(const LinearMap& H, double xiSigma, std::uint64_t seed) {
  if (xiSigma < 0.0) throw InvalidArgument("perturbation std must be nonnegative");
  if (H.cols() > kDenseCap) throw InvalidArgument("operator perturbation is capped at n = " + std::to_string(kDenseCap));
  Matrix dense = H.toDense();
  if (xiSigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, xiSigma);
    for (Index j = 0; j < dense.cols(); ++j)
      for (Index i = 0; i < dense.rows(); ++i) dense(i, j) += normal(rng);
  }
  return denseOperator(std::move(dense), H.shape());
}

std::uint64_t streamSeed(std::uint64_t seed, const std::string& label) {
  Fnv1a h;
  h.value(seed);
  h.text(label);
  return h.digest();
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string basisCacheKey(const LinearMap& H, Topology topology, Index k) {
  return hex(H.hash()) + "_" + toString(topology) + "_" + std::to_string(H.cols()) + "_" + std::to_string(k) + ".csv";
}

namespace {

struct Context {
  const ExperimentConfig& cfg;
  fs::path out;
  ExperimentResult result;
  nlohmann::ordered_json cache = nlohmann::ordered_json::array();

  void write(const CsvTable& table, const std::string& name) {
    table.write((out / name).string());
    result.files.push_back(name);
  }
  void write(const SvgChart& chart, const std::string& name) {
    writeSvg(chart, (out / name).string());
    result.files.push_back(name);
  }
  void write(const ImageSignal& image, const std::string& stem) {
    const std::string name = stem + (image.shape.channels == 1 ? ".pgm" : ".ppm");
    writePnm(image, (out / name).string());
    result.files.push_back(name);
  }
};

std::string fileTag(Topology t) { return toString(t); }

Index resolveK(const Context& ctx, const LinearMap& H) {
  const Index q = H.nullDim();
  if (q < 1) throw InvalidArgument("operator has a trivial null space");
  const Index k = ctx.cfg.k == 0 ? q : ctx.cfg.k;
  if (k > q) throw InvalidArgument("spectral.k = " + std::to_string(k) + " exceeds the null dimension " + std::to_string(q));
  return k;
}

NullSpectralBasis obtainBasis(Context& ctx, const LinearMap& H, const GraphLaplacian& L, Index k) {
  const std::string key = basisCacheKey(H, L.topology, k);
  const fs::path dir = ctx.out / "basis_cache";
  const fs::path file = dir / key;
  ctx.result.cacheKeys.push_back(key);
  if (ctx.cfg.useCache && fs::exists(file)) {
    NullSpectralBasis basis = readBasisCsv(file.string());
    if (basis.dim() == H.cols() && basis.size() == k && basis.nullDim == H.nullDim() && basis.topology == L.topology) {
      basis.operatorHash = H.hash();
      basis.tolerance = ctx.cfg.tol;
      basis.residuals.resize(k);
      for (Index i = 0; i < k; ++i) {
        basis.residuals(i) =
            (applyNullRestricted(H, L, basis.vectors.col(i)) - basis.eigenvalues(i) * basis.vectors.col(i)).norm();
      }
      ctx.cache.push_back({{"key", key}, {"hit", true}});
      return basis;
    }
  }
  EigOptions opt;
  opt.tol = ctx.cfg.tol;
  opt.seed = streamSeed(ctx.cfg.seed, "lanczos");
  NullSpectralBasis basis = ctx.cfg.denseEigensolver ? eigDenseNull(H, L, k) : eigSmallestNull(H, L, k, opt);
  if (ctx.cfg.useCache) {
    fs::create_directories(dir);
    writeBasisCsv(basis, file.string());
  }
  ctx.cache.push_back({{"key", key}, {"hit", false}});
  return basis;
}

GmrfPrior priorFor(const ExperimentConfig& cfg, Topology t) {
  return GmrfPrior::make(laplacianFor(t, cfg.op.shape), cfg.alpha, cfg.epsilon);
}

std::vector<double> toStd(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::vector<double> indexRange(Index count, Index start = 1) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = static_cast<double>(start + i);
  return out;
}

// ---------------------------------------------------------------------------

void runSpectrum(Context& ctx, const LinearMap& H) {
  SvgChart chart{"Null-restricted Laplacian spectrum", "mode index i", "mu_i / mu_max", {}};
  const Index k = resolveK(ctx, H);
  for (Topology t : ctx.cfg.topologies) {
    const GraphLaplacian L = laplacianFor(t, H.shape());
    const NullSpectralBasis basis = obtainBasis(ctx, H, L, k);
    const double muMax = basis.eigenvalues.maxCoeff();
    CsvTable table({"index", "mu", "mu_normalized", "residual"});
    std::vector<double> normalized;
    for (Index i = 0; i < basis.size(); ++i) {
      const double norm = muMax > 0.0 ? basis.eigenvalues(i) / muMax : 0.0;
      normalized.push_back(norm);
      table.addRow({static_cast<double>(i + 1), basis.eigenvalues(i), norm, basis.residuals(i)});
    }
    ctx.write(table, "spectrum_" + fileTag(t) + ".csv");
    chart.series.push_back({toString(t), indexRange(basis.size()), normalized});
  }
  ctx.write(chart, "spectrum.svg");
}

void runCoverage(Context& ctx, const LinearMap& H) {
  const Index q = H.nullDim();
  const Index k = resolveK(ctx, H);
  if (k != q) throw InvalidArgument("coverage needs spectral.k = 0 (all null modes)");
  SvgChart chart{"Null-space spectral coverage", "p", "C(p)", {}};
  CsvTable summary({"topology", "q", "max_gap_empirical", "max_gap_marginal", "min_margin_over_linear"});
  for (Topology t : ctx.cfg.topologies) {
    const GmrfPrior prior = priorFor(ctx.cfg, t);
    const NullSpectralBasis basis = obtainBasis(ctx, H, prior.laplacian, k);
    const CoverageCurve closed = closedFormCoverage(prior, basis);
    const auto samples = sampleGmrf(prior, ctx.cfg.samples, streamSeed(ctx.cfg.seed, "coverage/" + toString(t)));
    const CoverageCurve empirical = empiricalCoverage(samples, H, basis);
    const bool dense = H.cols() <= kDenseCap;
    const Vector marginal = dense ? marginalCoverage(prior, H, basis).values
                                  : Vector::Constant(q, std::numeric_limits<double>::quiet_NaN());
    const Vector bound = coverageLowerBound(priorSpectrum(prior, basis));
    CsvTable table({"p", "C", "C_empirical", "C_marginal", "lower_bound", "linear"});
    double gapEmp = 0.0, gapMar = 0.0, margin = std::numeric_limits<double>::infinity();
    for (Index p = 1; p <= q; ++p) {
      const double linear = static_cast<double>(p) / static_cast<double>(q);
      const double c = closed.values(p - 1);
      table.addRow({static_cast<double>(p), c, empirical.values(p - 1), marginal(p - 1), bound(p - 1), linear});
      gapEmp = std::max(gapEmp, std::abs(empirical.values(p - 1) - c));
      if (dense) gapMar = std::max(gapMar, std::abs(marginal(p - 1) - c));
      margin = std::min(margin, c - linear);
    }
    ctx.write(table, "coverage_" + fileTag(t) + ".csv");
    summary.addRow({toString(t), std::to_string(q), formatNumber(gapEmp),
                    dense ? formatNumber(gapMar) : std::string("nan"), formatNumber(margin)});
    chart.series.push_back({toString(t), indexRange(q), toStd(closed.values)});
  }
  ctx.write(summary, "coverage_summary.csv");
  ctx.write(chart, "coverage.svg");
}

void runPredictability(Context& ctx, const LinearMap& H) {
  const Index k = resolveK(ctx, H);
  SvgChart rhoChart{"Per-mode predictability", "null mode index j", "rho_j^2", {}};
  SvgChart r2Chart{"Wiener predictor R^2", "p", "R^2", {}};
  CsvTable summary({"topology", "modes", "modes_rho2_above_0.01", "max_bound_violation", "mean_rho2"});
  for (Topology t : ctx.cfg.topologies) {
    const GmrfPrior prior = priorFor(ctx.cfg, t);
    const NullSpectralBasis basis = obtainBasis(ctx, H, prior.laplacian, k);
    const PredictabilityReport rep = perModePredictability(prior, H, basis, ctx.cfg.sigma2);
    CsvTable table({"mode_index", "mu", "rho2", "bound", "c"});
    Index above = 0;
    double violation = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < basis.size(); ++j) {
      table.addRow({static_cast<double>(j + 1), rep.mu(j), rep.rho2(j), rep.bound(j), rep.c(j)});
      above += rep.rho2(j) > 0.01 ? 1 : 0;
      violation = std::max(violation, rep.rho2(j) - rep.bound(j));
    }
    ctx.write(table, "predictability_" + fileTag(t) + ".csv");
    summary.addRow({toString(t), std::to_string(basis.size()), std::to_string(above), formatNumber(violation),
                    formatNumber(rep.rho2.mean())});
    rhoChart.series.push_back({toString(t), indexRange(basis.size()), toStd(rep.rho2)});

    // R^2 of the p-mode Wiener predictor; its rows do not depend on p.
    const CoeffPredictor G = wienerPredictor(prior, H, basis, ctx.cfg.sigma2);
    const auto test = sampleGmrf(prior, ctx.cfg.samples, streamSeed(ctx.cfg.seed, "predictability/" + toString(t)));
    std::mt19937_64 noise(streamSeed(ctx.cfg.seed, "predictability-noise/" + toString(t)));
    Matrix Y(H.rows(), static_cast<Index>(test.size()));
    Matrix A(basis.size(), static_cast<Index>(test.size()));
    for (std::size_t s = 0; s < test.size(); ++s) {
      Y.col(static_cast<Index>(s)) = measure(H, test[s].data, ctx.cfg.sigma2, noise);
      A.col(static_cast<Index>(s)) = projectS(basis, test[s].data);
    }
    CsvTable r2({"p", "r2"});
    std::vector<double> ps, rs;
    const Index points = std::min<Index>(8, basis.size());
    for (Index i = 1; i <= points; ++i) {
      const Index p = std::max<Index>(1, (basis.size() * i) / points);
      CoeffPredictor Gp = G;
      Gp.weights = G.weights.topRows(p);
      const double score = r2Score(Gp, Y, A.topRows(p));
      r2.addRow({static_cast<double>(p), score});
      ps.push_back(static_cast<double>(p));
      rs.push_back(score);
    }
    ctx.write(r2, "r2_" + fileTag(t) + ".csv");
    r2Chart.series.push_back({toString(t), ps, rs});
  }
  ctx.write(summary, "predictability_summary.csv");
  ctx.write(rhoChart, "predictability.svg");
  ctx.write(r2Chart, "r2.svg");
}

void runSelectP(Context& ctx, const LinearMap& H) {
  const Index q = H.nullDim();
  const Index k = resolveK(ctx, H);
  if (k != q) throw InvalidArgument("select-p needs spectral.k = 0 (all null modes)");
  CsvTable table({"topology", "q", "p_star", "coverage_at_p_star", "kappa", "delta", "plateau"});
  SvgChart chart{"Coverage and selected p", "p", "C(p)", {}};
  for (Topology t : ctx.cfg.topologies) {
    const GmrfPrior prior = priorFor(ctx.cfg, t);
    const NullSpectralBasis basis = obtainBasis(ctx, H, prior.laplacian, k);
    const CoverageCurve curve = closedFormCoverage(prior, basis);
    const Index p = selectP(curve, ctx.cfg.select);
    table.addRow({toString(t), std::to_string(q), std::to_string(p), formatNumber(curve.values(p - 1)),
                  formatNumber(ctx.cfg.select.kappa), formatNumber(ctx.cfg.select.delta),
                  std::to_string(ctx.cfg.select.plateau)});
    chart.series.push_back({toString(t), indexRange(q), toStd(curve.values)});
    chart.series.push_back({toString(t) + " p*", {static_cast<double>(p)}, {curve.values(p - 1)}});
  }
  ctx.write(table, "select_p.csv");
  ctx.write(chart, "select_p.svg");
}

void runMinimax(Context& ctx, const LinearMap& H) {
  const Index k = resolveK(ctx, H);
  Index p = ctx.cfg.p > 0 ? ctx.cfg.p : static_cast<Index>(std::llround(ctx.cfg.pFraction * static_cast<double>(H.cols())));
  if (p >= k) throw InvalidArgument("minimax needs p < k (p = " + std::to_string(p) + ", k = " + std::to_string(k) + ")");
  CsvTable table({"topology", "p", "tau", "mu_p1", "bound", "witness_residual", "witness_energy", "max_sampled_residual"});
  SvgChart chart{"Minimax width tau / mu_{p+1}", "p", "bound", {}};
  for (Topology t : ctx.cfg.topologies) {
    const GraphLaplacian L = laplacianFor(t, H.shape());
    const NullSpectralBasis basis = obtainBasis(ctx, H, L, k);
    const MinimaxResult mm = minimaxBound(basis, p, ctx.cfg.tau);
    const double energy = mm.witness.dot(applyNullRestricted(H, L, mm.witness));
    std::mt19937_64 rng(streamSeed(ctx.cfg.seed, "minimax/" + toString(t)));
    const Matrix members = sampleEllipsoid(basis, ctx.cfg.tau, ctx.cfg.ellipsoidSamples, rng);
    double worst = 0.0;
    for (Index s = 0; s < members.cols(); ++s) worst = std::max(worst, subspaceResidual(basis, p, members.col(s)));
    table.addRow({toString(t), std::to_string(p), formatNumber(ctx.cfg.tau), formatNumber(basis.eigenvalues(p)),
                  formatNumber(mm.bound), formatNumber(mm.witnessResidual), formatNumber(energy), formatNumber(worst)});

    CsvTable sweep({"p", "bound"});
    std::vector<double> xs, ys;
    for (Index j = 0; j < basis.size(); ++j) {
      const double mu = basis.eigenvalues(j);
      const double b = mu > 0.0 ? ctx.cfg.tau / mu : std::numeric_limits<double>::infinity();
      sweep.addRow({static_cast<double>(j), b});
      xs.push_back(static_cast<double>(j));
      ys.push_back(b);
    }
    ctx.write(sweep, "minimax_sweep_" + fileTag(t) + ".csv");
    chart.series.push_back({toString(t), xs, ys});
  }
  ctx.write(table, "minimax.csv");
  ctx.write(chart, "minimax.svg");
}

// ---------------------------------------------------------------------------
// Reconstruction experiments

struct Method {
  std::string name;
  Topology topology = Topology::Identity;
  GraphLaplacian laplacian;
  NullSpectralBasis basis;  // empty for the baseline
  CoeffPredictor predictor;
  Index p = 0;
  SolverConfig solver;
};

// Variance multiplier matching the prior's mean marginal variance to the corpus.
double momentScale(const GmrfPrior& prior, const std::vector<ImageSignal>& train) {
  double pixelVar = 0.0;
  for (const auto& img : train) {
    const double mean = img.data.mean();
    pixelVar += (img.data.array() - mean).square().mean();
  }
  pixelVar /= static_cast<double>(train.size());
  const double priorVar = prior.covariance().diagonal().mean();
  return pixelVar / priorVar;
}

Method baselineMethod(const ExperimentConfig& cfg, const LinearMap& H) {
  Method m;
  m.name = "baseline";
  m.laplacian = laplacianFor(Topology::Identity, H.shape());
  m.basis.vectors.resize(H.cols(), 0);
  m.basis.eigenvalues.resize(0);
  m.predictor.weights.resize(0, H.rows());
  m.solver = cfg.solver;
  m.solver.gamma = 0.0;
  m.solver.gammaG = 0.0;
  return m;
}

Method gsnrMethod(Context& ctx, const LinearMap& H, Topology t, const std::vector<ImageSignal>& train) {
  const ExperimentConfig& cfg = ctx.cfg;
  Method m;
  m.name = "gsnr_" + toString(t);
  m.topology = t;
  const GmrfPrior prior = priorFor(cfg, t);
  m.laplacian = prior.laplacian;
  const Index k = resolveK(ctx, H);
  const NullSpectralBasis full = obtainBasis(ctx, H, m.laplacian, k);
  if (cfg.p > 0) {
    if (cfg.p > k) throw InvalidArgument("selection.p exceeds the number of computed modes");
    m.p = cfg.p;
  } else {
    if (k != H.nullDim()) throw InvalidArgument("automatic p needs spectral.k = 0 (all null modes)");
    m.p = selectP(closedFormCoverage(prior, full), cfg.select);
  }
  m.basis = buildS(full, m.p);
  if (cfg.predictor == PredictorKind::Wiener) {
    GmrfPrior scaled = prior;
    if (cfg.momentMatch) {
      const double s2 = momentScale(prior, train);
      scaled = GmrfPrior::make(prior.laplacian, prior.alpha / s2, prior.epsilon / s2);
    }
    m.predictor = wienerPredictor(scaled, H, m.basis, cfg.sigma2);
  } else {
    std::mt19937_64 noise(streamSeed(cfg.seed, "ridge-noise/" + toString(t)));
    Matrix Y(H.rows(), static_cast<Index>(train.size()));
    Matrix A(m.p, static_cast<Index>(train.size()));
    for (std::size_t s = 0; s < train.size(); ++s) {
      Y.col(static_cast<Index>(s)) = measure(H, train[s].data, cfg.sigma2, noise);
      A.col(static_cast<Index>(s)) = projectS(m.basis, train[s].data);
    }
    m.predictor = trainRidge(Y, A, cfg.ridgeBeta);
  }
  m.solver = cfg.solver;
  return m;
}

struct Outcome {
  Vector curve;  // PSNR per iteration
  double finalPsnr = 0.0;
  ImageSignal reconstruction;
  double step = 0.0;
};

Outcome solve(const Method& m, const LinearMap& H, const Vector& y, const Vector& truth) {
  const Vector g = m.basis.size() > 0 ? predictCoeffs(m.predictor, y) : Vector();
  SolverConfig sc = m.solver;
  sc.trackObjective = false;
  const RunTrace trace = runGsnrPgd(GsnrProblem{H, y, m.basis, g, m.laplacian}, sc, &truth);
  Outcome o;
  o.curve = trace.psnr;
  o.finalPsnr = trace.psnr(trace.psnr.size() - 1);
  o.reconstruction = trace.reconstruction;
  o.step = trace.step;
  return o;
}

// First iteration after which the curve stays within tol dB of its final value.
Index settleIteration(const Vector& curve, double tol = 0.1) {
  const double last = curve(curve.size() - 1);
  Index k = curve.size() - 1;
  while (k > 0 && std::abs(curve(k - 1) - last) <= tol) --k;
  return k;
}

struct TrialStats {
  std::vector<Outcome> first;  // outcomes of trial 0, one per method
  Matrix curveSum;             // (K+1) x methods
  Matrix finals;               // trials x methods
  Vector steps;
};

TrialStats runTrials(Context& ctx, const std::vector<Method>& methods, const LinearMap& Hsolve,
                     const LinearMap& Hmeasure, const std::vector<ImageSignal>& test, const std::string& label) {
  const Index trials = static_cast<Index>(test.size());
  const Index K = ctx.cfg.solver.iterations;
  const Index nm = static_cast<Index>(methods.size());
  TrialStats stats;
  stats.curveSum = Matrix::Zero(K + 1, nm);
  stats.finals = Matrix::Zero(trials, nm);
  stats.steps = Vector::Zero(nm);
  std::mt19937_64 noise(streamSeed(ctx.cfg.seed, label + "/noise"));
  for (Index t = 0; t < trials; ++t) {
    const Vector& truth = test[static_cast<std::size_t>(t)].data;
    const Vector y = measure(Hmeasure, truth, ctx.cfg.sigma2, noise);
    for (Index j = 0; j < nm; ++j) {
      Outcome o = solve(methods[static_cast<std::size_t>(j)], Hsolve, y, truth);
      stats.curveSum.col(j) += o.curve;
      stats.finals(t, j) = o.finalPsnr;
      stats.steps(j) = o.step;
      if (t == 0) stats.first.push_back(std::move(o));
    }
  }
  return stats;
}

double stddev(const Vector& v) {
  if (v.size() < 2) return 0.0;
  return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

struct Corpora {
  std::vector<ImageSignal> train;
  std::vector<ImageSignal> test;
};

Corpora makeCorpora(const ExperimentConfig& cfg) {
  Corpora c;
  c.train = generateCorpus(cfg.corpus, cfg.op.shape, cfg.trainSamples, streamSeed(cfg.seed, "train"), cfg.alpha,
                           cfg.epsilon)
                .images;
  c.test = generateCorpus(cfg.corpus, cfg.op.shape, cfg.trials, streamSeed(cfg.seed, "test"), cfg.alpha, cfg.epsilon)
               .images;
  return c;
}

void writeCurves(Context& ctx, const std::vector<std::string>& names, const Matrix& mean, const std::string& stem,
                 const std::string& title) {
  std::vector<std::string> header{"iteration"};
  header.insert(header.end(), names.begin(), names.end());
  CsvTable curves(header);
  for (Index k = 0; k < mean.rows(); ++k) {
    std::vector<double> row{static_cast<double>(k)};
    for (Index j = 0; j < mean.cols(); ++j) row.push_back(mean(k, j));
    curves.addRow(row);
  }
  ctx.write(curves, stem + "_curves.csv");
  SvgChart chart{title, "iteration", "mean PSNR (dB)", {}};
  for (Index j = 0; j < mean.cols(); ++j) {
    chart.series.push_back({names[static_cast<std::size_t>(j)], indexRange(mean.rows(), 0), toStd(mean.col(j))});
  }
  ctx.write(chart, stem + ".svg");
}

void runReconstruct(Context& ctx, const LinearMap& H) {
  const Corpora data = makeCorpora(ctx.cfg);
  std::vector<Method> methods{baselineMethod(ctx.cfg, H)};
  for (Topology t : ctx.cfg.topologies) methods.push_back(gsnrMethod(ctx, H, t, data.train));
  const TrialStats stats = runTrials(ctx, methods, H, H, data.test, "reconstruct");
  const Index trials = static_cast<Index>(data.test.size());
  const Matrix mean = stats.curveSum / static_cast<double>(trials);

  std::vector<std::string> names;
  for (const auto& m : methods) names.push_back(m.name);
  CsvTable perTrial({"trial", "method", "final_psnr"});
  for (Index t = 0; t < trials; ++t) {
    for (std::size_t j = 0; j < methods.size(); ++j) {
      perTrial.addRow({std::to_string(t), names[j], formatNumber(stats.finals(t, static_cast<Index>(j)))});
    }
  }
  ctx.write(perTrial, "reconstruct_trials.csv");

  CsvTable summary({"method", "p", "step", "gamma", "gamma_g", "mean_final_psnr", "std_final_psnr", "iterations_to_0.1dB"});
  for (std::size_t j = 0; j < methods.size(); ++j) {
    const Index col = static_cast<Index>(j);
    const Vector finals = stats.finals.col(col);
    summary.addRow({names[j], std::to_string(methods[j].p), formatNumber(stats.steps(col)),
                    formatNumber(methods[j].solver.gamma), formatNumber(methods[j].solver.gammaG),
                    formatNumber(finals.mean()), formatNumber(stddev(finals)),
                    std::to_string(settleIteration(mean.col(col)))});
  }
  ctx.write(summary, "reconstruct_summary.csv");
  writeCurves(ctx, names, mean, "reconstruct", "Reconstruction PSNR");

  ctx.write(data.test.front(), "truth_trial0");
  for (std::size_t j = 0; j < methods.size(); ++j) ctx.write(stats.first[j].reconstruction, names[j] + "_trial0");
}

void runConvergenceAblation(Context& ctx, const LinearMap& H) {
  const Corpora data = makeCorpora(ctx.cfg);
  const Topology t = ctx.cfg.topologies.front();
  const Method base = gsnrMethod(ctx, H, t, data.train);
  std::vector<Method> methods;
  std::vector<std::string> names;
  for (double gg : ctx.cfg.gammaGValues) {
    Method m = base;
    m.solver.gammaG = gg;
    m.name = "gamma_g=" + formatNumber(gg);
    names.push_back(m.name);
    methods.push_back(std::move(m));
  }
  const TrialStats stats = runTrials(ctx, methods, H, H, data.test, "ablation");
  const Matrix mean = stats.curveSum / static_cast<double>(data.test.size());

  const bool dense = H.cols() <= kDenseCap;
  CsvTable summary({"gamma_g", "mean_final_psnr", "std_final_psnr", "iterations_to_0.1dB", "lambda_min", "lambda_max",
                    "kappa", "positive_kappa", "alpha_star", "rho_star", "measured_contraction"});
  for (std::size_t j = 0; j < methods.size(); ++j) {
    const Index col = static_cast<Index>(j);
    const double gg = methods[j].solver.gammaG;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    StepAnalysis sa;
    sa.lambdaMin = sa.lambdaMax = sa.kappa = sa.positiveKappa = sa.alpha = sa.rho = nan;
    double measured = nan;
    if (dense) {
      sa = spectralStepSize(H, methods[j].laplacian, gg, ctx.cfg.solver.delta);
      if (!sa.singular) {
        // Identity denoiser at alpha*, noiseless data: the error contracts toward the exact minimizer.
        const Vector& truth = data.test.front().data;
        const Vector y = H.apply(truth);
        Matrix A(H.cols(), H.cols());
        Vector e = Vector::Zero(H.cols());
        for (Index c = 0; c < H.cols(); ++c) {
          e(c) = 1.0;
          A.col(c) = H.adjoint(H.apply(e)) + gg * applyNullRestricted(H, methods[j].laplacian, e);
          e(c) = 0.0;
        }
        const Vector xStar = A.ldlt().solve(H.adjoint(y));
        SolverConfig sc;
        sc.step = sa.alpha;
        sc.gamma = 0.0;
        sc.gammaG = gg;
        sc.iterations = ctx.cfg.solver.iterations;
        sc.trackObjective = false;
        const NullSpectralBasis none;
        const Vector g;
        const RunTrace tr = runGsnrPgd(GsnrProblem{H, y, none, g, methods[j].laplacian}, sc, &xStar);
        measured = contractionRate(tr).maxAfterBurnIn;
      }
    }
    const Vector finals = stats.finals.col(col);
    summary.addRow({gg, finals.mean(), stddev(finals), static_cast<double>(settleIteration(mean.col(col))), sa.lambdaMin,
                    sa.lambdaMax, sa.kappa, sa.positiveKappa, sa.alpha, sa.rho, measured});
  }
  ctx.write(summary, "convergence_summary.csv");
  writeCurves(ctx, names, mean, "convergence", "Convergence ablation (" + toString(t) + ")");
}

void runPerturbed(Context& ctx, const LinearMap& H) {
  const Corpora data = makeCorpora(ctx.cfg);
  const LinearMap Hp = perturbOperator(H, ctx.cfg.xiSigma, streamSeed(ctx.cfg.seed, "perturb"));
  std::vector<Method> methods{baselineMethod(ctx.cfg, H), gsnrMethod(ctx, H, ctx.cfg.topologies.front(), data.train)};
  const TrialStats stats = runTrials(ctx, methods, H, Hp, data.test, "perturb");
  const Index trials = static_cast<Index>(data.test.size());

  CsvTable perTrial({"trial", "baseline_psnr", "gsnr_psnr", "gap"});
  Index positive = 0;
  for (Index t = 0; t < trials; ++t) {
    const double gap = stats.finals(t, 1) - stats.finals(t, 0);
    positive += gap > 0.0 ? 1 : 0;
    perTrial.addRow({static_cast<double>(t), stats.finals(t, 0), stats.finals(t, 1), gap});
  }
  ctx.write(perTrial, "perturb_trials.csv");
  const Vector gaps = stats.finals.col(1) - stats.finals.col(0);
  CsvTable summary({"xi_sigma", "trials", "method", "mean_baseline_psnr", "mean_gsnr_psnr", "mean_gap", "min_gap",
                    "positive_trials"});
  summary.addRow({formatNumber(ctx.cfg.xiSigma), std::to_string(trials), methods[1].name,
                  formatNumber(stats.finals.col(0).mean()), formatNumber(stats.finals.col(1).mean()),
                  formatNumber(gaps.mean()), formatNumber(gaps.minCoeff()), std::to_string(positive)});
  ctx.write(summary, "perturb_summary.csv");
  writeCurves(ctx, {"baseline", methods[1].name}, stats.curveSum / static_cast<double>(trials), "perturb",
              "Inexact operator, xi_sigma = " + formatNumber(ctx.cfg.xiSigma));
}

}  // namespace

ExperimentResult runExperiment(const ExperimentConfig& config, const std::string& outDir) {
  if (!config.kind) throw ConfigError("experiment kind is not set");
  if (config.topologies.empty()) throw ConfigError("laplacian.topologies must not be empty");
  const auto started = std::chrono::steady_clock::now();
  fs::create_directories(outDir);
  Context ctx{config, fs::path(outDir), {}};
  const LinearMap H = buildOperatorFromSpec(config.op);

  switch (*config.kind) {
    case ExperimentKind::Spectrum: runSpectrum(ctx, H); break;
    case ExperimentKind::Coverage: runCoverage(ctx, H); break;
    case ExperimentKind::Predictability: runPredictability(ctx, H); break;
    case ExperimentKind::SelectP: runSelectP(ctx, H); break;
    case ExperimentKind::MinimaxBound: runMinimax(ctx, H); break;
    case ExperimentKind::Reconstruct: runReconstruct(ctx, H); break;
    case ExperimentKind::ConvergenceAblation: runConvergenceAblation(ctx, H); break;
    case ExperimentKind::PerturbedOperator: runPerturbed(ctx, H); break;
  }

  ctx.result.wallSeconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  Fnv1a h;
  h.text(config.canonical());
  nlohmann::ordered_json manifest;
  manifest["kind"] = toString(*config.kind);
  manifest["seed"] = config.seed;
  manifest["config_hash"] = hex(h.digest());
  manifest["operator"] = H.describe();
  manifest["operator_hash"] = hex(H.hash());
  manifest["basis_cache"] = ctx.cache;
  manifest["outputs"] = ctx.result.files;
  manifest["wall_time_seconds"] = ctx.result.wallSeconds;
  writeTextFile((ctx.out / "manifest.json").string(), manifest.dump(2) + "\n");
  ctx.result.files.push_back("manifest.json");
  return ctx.result;
}

}  // namespace gsnr
