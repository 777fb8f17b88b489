#pragma once

#include "gsnr/config.hpp"
#include "gsnr/linop.hpp"

#include <string>
#include <vector>

namespace gsnr {

struct ExperimentResult {
  std::vector<std::string> files;  // relative to the output directory, in write order
  std::vector<std::string> cacheKeys;
  double wallSeconds = 0.0;
};

/// Builds the configured operator (loading the dense matrix file if needed).
LinearMap buildOperatorFromSpec(const OperatorSpec& spec);

/// H + H_xi with i.i.d. N(0, xi_sigma^2) entries, as an ExplicitDense operator.
LinearMap perturbOperator(const LinearMap& H, double xiSigma, std::uint64_t seed);

/// Derives an independent stream seed from the experiment seed and a label.
std::uint64_t streamSeed(std::uint64_t seed, const std::string& label);

/// Cache file name for a basis: <operator hash>_<topology>_<n>_<k>.csv.
std::string basisCacheKey(const LinearMap& H, Topology topology, Index k);

/// Runs the experiment named by config.kind, writing CSV/SVG/PNM files and
/// finally manifest.json into outDir.
ExperimentResult runExperiment(const ExperimentConfig& config, const std::string& outDir);

}  // namespace gsnr
