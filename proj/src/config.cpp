#include "gsnr/config.hpp"

#include "gsnr/csv.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace gsnr {

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
  const char* subcommand;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::Spectrum, "Spectrum", "spectrum"},
    {ExperimentKind::Coverage, "Coverage", "coverage"},
    {ExperimentKind::Predictability, "Predictability", "predictability"},
    {ExperimentKind::SelectP, "SelectP", "select-p"},
    {ExperimentKind::MinimaxBound, "MinimaxBound", "minimax"},
    {ExperimentKind::Reconstruct, "Reconstruct", "reconstruct"},
    {ExperimentKind::ConvergenceAblation, "ConvergenceAblation", "ablate-convergence"},
    {ExperimentKind::PerturbedOperator, "PerturbedOperator", "perturb"},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double toDouble(const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError("expected a number, got '" + v + "'");
  return out;
}

Index toIndex(const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected an integer, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError("expected an integer, got '" + v + "'");
  return static_cast<Index>(out);
}

Index toPositive(const std::string& v) {
  const Index out = toIndex(v);
  if (out < 1) throw ConfigError("expected a positive integer, got '" + v + "'");
  return out;
}

bool toBool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected true/false, got '" + v + "'");
}

std::vector<std::string> toList(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ConfigError("expected a non-empty comma-separated list");
  return out;
}

template <typename F>
auto rethrowAsConfig(F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

struct KeySpec {
  std::string description;
  Setter set;
};

const std::map<std::string, KeySpec>& keyTable() {
  static const std::map<std::string, KeySpec> table = {
      {"kind", {"experiment kind (Spectrum, Coverage, ...)", [](auto& c, const auto& v) {
                  c.kind = rethrowAsConfig([&] { return parseExperimentKind(v); });
                }}},
      {"seed", {"random seed (required)", [](auto& c, const auto& v) {
                  try {
                    std::size_t used = 0;
                    c.seed = std::stoull(v, &used);
                    if (used != v.size() || v.find('-') != std::string::npos) throw ConfigError("");
                  } catch (const std::exception&) {
                    throw ConfigError("seed must be an unsigned integer, got '" + v + "'");
                  }
                }}},
      {"operator.kind", {"HadamardCS | BlockAverageSR | BayerMosaic | GaussianBlur | ExplicitDense",
                         [](auto& c, const auto& v) { c.op.kind = rethrowAsConfig([&] { return parseOperatorKind(v); }); }}},
      {"operator.channels", {"image channels", [](auto& c, const auto& v) { c.op.shape.channels = toPositive(v); }}},
      {"operator.height", {"image height", [](auto& c, const auto& v) { c.op.shape.height = toPositive(v); }}},
      {"operator.width", {"image width", [](auto& c, const auto& v) { c.op.shape.width = toPositive(v); }}},
      {"operator.rows", {"HadamardCS row count (0 = use row_fraction)",
                         [](auto& c, const auto& v) { c.op.params.rows = toIndex(v); }}},
      {"operator.row_fraction", {"HadamardCS m/n", [](auto& c, const auto& v) { c.op.params.rowFraction = toDouble(v); }}},
      {"operator.factor", {"BlockAverageSR factor", [](auto& c, const auto& v) { c.op.params.factor = toPositive(v); }}},
      {"operator.bayer", {"BayerMosaic pattern", [](auto& c, const auto& v) {
                            c.op.params.bayer = rethrowAsConfig([&] { return parseBayerPattern(v); });
                          }}},
      {"operator.blur_sigma", {"GaussianBlur bandwidth", [](auto& c, const auto& v) { c.op.params.blurSigma = toDouble(v); }}},
      {"operator.svd_threshold", {"GaussianBlur relative SVD cutoff",
                                  [](auto& c, const auto& v) { c.op.params.svdThreshold = toDouble(v); }}},
      {"operator.matrix_file", {"ExplicitDense CSV matrix", [](auto& c, const auto& v) { c.op.matrixFile = v; }}},
      {"laplacian.topologies", {"comma-separated Laplacian topologies", [](auto& c, const auto& v) {
                                  c.topologies.clear();
                                  for (const auto& t : toList(v)) {
                                    c.topologies.push_back(rethrowAsConfig([&] { return parseTopology(t); }));
                                  }
                                }}},
      {"prior.alpha", {"GMRF alpha", [](auto& c, const auto& v) { c.alpha = toDouble(v); }}},
      {"prior.epsilon", {"GMRF epsilon", [](auto& c, const auto& v) { c.epsilon = toDouble(v); }}},
      {"noise.sigma2", {"measurement noise variance", [](auto& c, const auto& v) { c.sigma2 = toDouble(v); }}},
      {"spectral.k", {"number of modes (0 = all null modes)", [](auto& c, const auto& v) { c.k = toIndex(v); }}},
      {"spectral.tol", {"eigen-residual tolerance", [](auto& c, const auto& v) { c.tol = toDouble(v); }}},
      {"spectral.eigensolver", {"lanczos | dense", [](auto& c, const auto& v) {
                                  if (v == "lanczos") {
                                    c.denseEigensolver = false;
                                  } else if (v == "dense") {
                                    c.denseEigensolver = true;
                                  } else {
                                    throw ConfigError("eigensolver must be lanczos or dense, got '" + v + "'");
                                  }
                                }}},
      {"spectral.cache", {"reuse cached bases under <out>/basis_cache", [](auto& c, const auto& v) { c.useCache = toBool(v); }}},
      {"selection.p", {"number of GSNR modes, or auto", [](auto& c, const auto& v) {
                         c.p = v == "auto" ? 0 : toPositive(v);
                       }}},
      {"selection.kappa", {"coverage target", [](auto& c, const auto& v) { c.select.kappa = toDouble(v); }}},
      {"selection.delta", {"plateau slope tolerance", [](auto& c, const auto& v) { c.select.delta = toDouble(v); }}},
      {"selection.plateau", {"plateau length", [](auto& c, const auto& v) { c.select.plateau = toPositive(v); }}},
      {"minimax.tau", {"graph-energy budget", [](auto& c, const auto& v) { c.tau = toDouble(v); }}},
      {"minimax.p_fraction", {"p as a fraction of n", [](auto& c, const auto& v) { c.pFraction = toDouble(v); }}},
      {"minimax.samples", {"ellipsoid samples", [](auto& c, const auto& v) { c.ellipsoidSamples = toPositive(v); }}},
      {"data.corpus", {"gmrf | piecewise", [](auto& c, const auto& v) {
                         if (v == "gmrf") {
                           c.corpus = CorpusKind::GmrfSample;
                         } else if (v == "piecewise") {
                           c.corpus = CorpusKind::PiecewiseSmooth;
                         } else {
                           throw ConfigError("corpus must be gmrf or piecewise, got '" + v + "'");
                         }
                       }}},
      {"data.samples", {"GMRF samples for coverage/predictability", [](auto& c, const auto& v) { c.samples = toPositive(v); }}},
      {"data.train_samples", {"training images for predictor scaling or ridge",
                              [](auto& c, const auto& v) { c.trainSamples = toPositive(v); }}},
      {"data.trials", {"reconstruction trials", [](auto& c, const auto& v) { c.trials = toPositive(v); }}},
      {"data.moment_match", {"rescale the Wiener prior to the training corpus variance",
                             [](auto& c, const auto& v) { c.momentMatch = toBool(v); }}},
      {"predictor.kind", {"wiener | ridge", [](auto& c, const auto& v) {
                            if (v == "wiener") {
                              c.predictor = PredictorKind::Wiener;
                            } else if (v == "ridge") {
                              c.predictor = PredictorKind::Ridge;
                            } else {
                              throw ConfigError("predictor must be wiener or ridge, got '" + v + "'");
                            }
                          }}},
      {"predictor.beta", {"ridge strength (0 = automatic)", [](auto& c, const auto& v) { c.ridgeBeta = toDouble(v); }}},
      {"solver.step", {"step size, or auto", [](auto& c, const auto& v) { c.solver.step = v == "auto" ? 0.0 : toDouble(v); }}},
      {"solver.gamma", {"GSNR weight", [](auto& c, const auto& v) { c.solver.gamma = toDouble(v); }}},
      {"solver.gamma_g", {"null-graph weight", [](auto& c, const auto& v) { c.solver.gammaG = toDouble(v); }}},
      {"solver.lambda", {"denoiser strength multiplier", [](auto& c, const auto& v) { c.solver.lambda = toDouble(v); }}},
      {"solver.iterations", {"iterations K", [](auto& c, const auto& v) { c.solver.iterations = toPositive(v); }}},
      {"solver.delta", {"denoiser expansion bound", [](auto& c, const auto& v) { c.solver.delta = toDouble(v); }}},
      {"solver.init_pinv", {"initialize with the pseudoinverse", [](auto& c, const auto& v) { c.solver.initPinv = toBool(v); }}},
      {"solver.denoiser", {"identity | wavelet | tv", [](auto& c, const auto& v) {
                             c.solver.denoiser.kind = rethrowAsConfig([&] { return parseDenoiserKind(v); });
                           }}},
      {"solver.wavelet", {"haar | db2 | db4 | db8", [](auto& c, const auto& v) {
                            c.solver.denoiser.filter = rethrowAsConfig([&] { return parseWaveletFilter(v); });
                          }}},
      {"solver.levels", {"wavelet levels", [](auto& c, const auto& v) { c.solver.denoiser.levels = toPositive(v); }}},
      {"solver.threshold", {"wavelet soft threshold", [](auto& c, const auto& v) { c.solver.denoiser.threshold = toDouble(v); }}},
      {"solver.tv_weight", {"TV weight", [](auto& c, const auto& v) { c.solver.denoiser.tvWeight = toDouble(v); }}},
      {"solver.tv_iterations", {"TV inner iterations",
                                [](auto& c, const auto& v) { c.solver.denoiser.tvIterations = toPositive(v); }}},
      {"ablation.gamma_g", {"comma-separated gamma_g values", [](auto& c, const auto& v) {
                              c.gammaGValues.clear();
                              for (const auto& t : toList(v)) c.gammaGValues.push_back(toDouble(t));
                            }}},
      {"perturb.xi_sigma", {"std of the operator perturbation", [](auto& c, const auto& v) { c.xiSigma = toDouble(v); }}},
  };
  return table;
}

void validate(const ExperimentConfig& c) {
  if (!(c.alpha >= 0.0) || !(c.epsilon > 0.0)) throw ConfigError("prior needs alpha >= 0 and epsilon > 0");
  if (!(c.sigma2 >= 0.0)) throw ConfigError("noise.sigma2 must be nonnegative");
  if (!(c.tol > 0.0)) throw ConfigError("spectral.tol must be positive");
  if (c.k < 0) throw ConfigError("spectral.k must be nonnegative");
  if (!(c.select.kappa > 0.0 && c.select.kappa < 1.0)) throw ConfigError("selection.kappa must lie in (0, 1)");
  if (!(c.select.delta > 0.0)) throw ConfigError("selection.delta must be positive");
  if (!(c.tau > 0.0)) throw ConfigError("minimax.tau must be positive");
  if (!(c.pFraction > 0.0 && c.pFraction < 1.0)) throw ConfigError("minimax.p_fraction must lie in (0, 1)");
  if (c.solver.gamma < 0.0 || c.solver.gammaG < 0.0) throw ConfigError("solver gammas must be nonnegative");
  if (c.xiSigma < 0.0) throw ConfigError("perturb.xi_sigma must be nonnegative");
  if (c.op.kind == OperatorKind::ExplicitDense && c.op.matrixFile.empty()) {
    throw ConfigError("operator.matrix_file is required for ExplicitDense");
  }
}

}  // namespace

std::string toString(ExperimentKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "?";
}

ExperimentKind parseExperimentKind(const std::string& name) {
  for (const auto& k : kKinds) {
    if (name == k.name) return k.kind;
  }
  throw ConfigError("unknown experiment kind '" + name + "'");
}

std::string subcommandName(ExperimentKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.subcommand;
  }
  return "?";
}

std::optional<ExperimentKind> kindFromSubcommand(const std::string& name) {
  for (const auto& k : kKinds) {
    if (name == k.subcommand) return k.kind;
  }
  return std::nullopt;
}

std::string toString(CorpusKind kind) { return kind == CorpusKind::GmrfSample ? "GmrfSample" : "PiecewiseSmooth"; }

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  auto put = [&os](const char* key, const std::string& value) { os << key << '=' << value << '\n'; };
  auto f = [](double v) { return formatNumber(v, 17); };
  put("kind", kind ? toString(*kind) : "");
  put("seed", std::to_string(seed));
  put("operator.kind", toString(op.kind));
  put("operator.shape", std::to_string(op.shape.channels) + "x" + std::to_string(op.shape.height) + "x" +
                            std::to_string(op.shape.width));
  put("operator.rows", std::to_string(op.params.rows));
  put("operator.row_fraction", f(op.params.rowFraction));
  put("operator.factor", std::to_string(op.params.factor));
  put("operator.bayer", std::to_string(static_cast<int>(op.params.bayer)));
  put("operator.blur_sigma", f(op.params.blurSigma));
  put("operator.svd_threshold", f(op.params.svdThreshold));
  put("operator.matrix_file", op.matrixFile);
  std::string topo;
  for (auto t : topologies) topo += toString(t) + ",";
  put("laplacian.topologies", topo);
  put("prior", f(alpha) + "," + f(epsilon));
  put("noise.sigma2", f(sigma2));
  put("spectral", std::to_string(k) + "," + f(tol) + "," + (denseEigensolver ? "dense" : "lanczos"));
  put("selection", std::to_string(p) + "," + f(select.kappa) + "," + f(select.delta) + "," +
                       std::to_string(select.plateau));
  put("minimax", f(tau) + "," + f(pFraction) + "," + std::to_string(ellipsoidSamples));
  put("data", toString(corpus) + "," + std::to_string(samples) + "," + std::to_string(trainSamples) + "," +
                  std::to_string(trials) + "," + (momentMatch ? "1" : "0"));
  put("predictor", toString(predictor) + "," + f(ridgeBeta));
  const auto& s = solver;
  put("solver", f(s.step) + "," + f(s.gamma) + "," + f(s.gammaG) + "," + f(s.lambda) + "," +
                    std::to_string(s.iterations) + "," + f(s.delta) + "," + (s.initPinv ? "1" : "0"));
  put("denoiser", toString(s.denoiser.kind) + "," + toString(s.denoiser.filter) + "," +
                      std::to_string(s.denoiser.levels) + "," + f(s.denoiser.threshold) + "," +
                      f(s.denoiser.tvWeight) + "," + std::to_string(s.denoiser.tvIterations));
  std::string gg;
  for (double v : gammaGValues) gg += f(v) + ",";
  put("ablation.gamma_g", gg);
  put("perturb.xi_sigma", f(xiSigma));
  return os.str();
}

ExperimentConfig parseConfig(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineNo = 0;
  const auto& table = keyTable();
  while (std::getline(in, raw)) {
    ++lineNo;
    const std::string where = origin + ":" + std::to_string(lineNo) + ": ";
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = table.find(full);
    if (it == table.end()) throw ConfigError(where + "unknown key '" + full + "'");
    if (!seen.insert(full).second) throw ConfigError(where + "duplicate key '" + full + "'");
    if (value.empty()) throw ConfigError(where + "empty value for '" + full + "'");
    try {
      it->second.set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + full + ": " + e.what());
    }
  }
  if (!seen.count("seed")) throw ConfigError(origin + ": seed required");
  validate(cfg);
  return cfg;
}

ExperimentConfig loadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parseConfig(buffer.str(), path);
}

std::vector<std::pair<std::string, std::string>> configKeys() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, spec] : keyTable()) out.emplace_back(key, spec.description);
  return out;
}

}  // namespace gsnr
