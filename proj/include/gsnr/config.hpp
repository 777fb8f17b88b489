#pragma once

#include "gsnr/predictor.hpp"
#include "gsnr/linop.hpp"
#include "gsnr/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gsnr {

/// Malformed or incomplete configuration.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class ExperimentKind {
  Spectrum,
  Coverage,
  Predictability,
  SelectP,
  MinimaxBound,
  Reconstruct,
  ConvergenceAblation,
  PerturbedOperator
};

std::string toString(ExperimentKind kind);
ExperimentKind parseExperimentKind(const std::string& name);
/// CLI subcommand name, e.g. "select-p".
std::string subcommandName(ExperimentKind kind);
std::optional<ExperimentKind> kindFromSubcommand(const std::string& name);

enum class CorpusKind { GmrfSample, PiecewiseSmooth };
std::string toString(CorpusKind kind);

struct OperatorSpec {
  OperatorKind kind = OperatorKind::BlockAverageSR;
  ImageShape shape{1, 16, 16};
  OperatorParams params;
  std::string matrixFile;
};

struct ExperimentConfig {
  std::optional<ExperimentKind> kind;
  std::uint64_t seed = 0;
  OperatorSpec op;
  std::vector<Topology> topologies{Topology::Grid4NN};
  double alpha = 1.0;
  double epsilon = 0.01;
  double sigma2 = 0.05;

  // spectral
  Index k = 0;  // 0 = all null modes
  double tol = 1e-10;
  bool denseEigensolver = false;
  bool useCache = true;

  // selection; p = 0 runs the coverage selection
  Index p = 0;
  SelectPOptions select;

  // minimax
  double tau = 1.0;
  double pFraction = 0.1;
  Index ellipsoidSamples = 1000;

  // data and trials
  CorpusKind corpus = CorpusKind::GmrfSample;
  Index samples = 5000;
  Index trainSamples = 200;
  Index trials = 20;
  bool momentMatch = true;
  PredictorKind predictor = PredictorKind::Wiener;
  double ridgeBeta = 0.0;

  SolverConfig solver;
  std::vector<double> gammaGValues{0.0, 0.1};
  double xiSigma = 0.005;

  /// Canonical "key=value" listing of every field, used for hashing.
  std::string canonical() const;
};

/// Line-oriented "key = value" text with [section] headers; '#' starts a comment.
ExperimentConfig parseConfig(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig loadConfig(const std::string& path);

/// Every recognised "section.key" name with a short description.
std::vector<std::pair<std::string, std::string>> configKeys();

}  // namespace gsnr
