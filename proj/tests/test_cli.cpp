#include "gsnr/config.hpp"
#include "gsnr/corpus.hpp"
#include "gsnr/csv.hpp"
#include "gsnr/experiment.hpp"
#include "gsnr/graph.hpp"
#include "gsnr/svg.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace gsnr;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gsnr_test_" + name);
  fs::remove_all(dir);
  return dir;
}

SvgChart fixtureChart() {
  return {"Fixture & <chart>", "x", "y",
          {{"rising", {0, 1, 2, 3}, {0.0, 0.5, 0.75, 1.0}}, {"single", {1.5}, {0.25}}}};
}

}  // namespace

TEST_CASE("minimal config gets the documented defaults") {
  const ExperimentConfig c = parseConfig("kind = Coverage\nseed = 3\n");
  REQUIRE(c.kind.has_value());
  CHECK((*c.kind == ExperimentKind::Coverage));
  CHECK(c.seed == 3);
  CHECK(c.alpha == 1.0);
  CHECK(c.epsilon == 0.01);
  CHECK(c.select.kappa == 0.95);
  CHECK(c.select.delta == 1e-3);
  CHECK(c.select.plateau == 10);
  CHECK(c.sigma2 == 0.05);
  CHECK(c.xiSigma == 0.005);
}

TEST_CASE("config sections and values") {
  const ExperimentConfig c = parseConfig(
      "seed = 1  # trailing comment\n"
      "[operator]\nkind = HadamardCS\nheight = 16\nwidth = 16\nrow_fraction = 0.25\n"
      "[laplacian]\ntopologies = Grid4NN, Grid8NN, Identity\n"
      "[selection]\np = 12\n"
      "[solver]\nstep = auto\ndenoiser = wavelet\nwavelet = db8\n"
      "[ablation]\ngamma_g = 0, 0.1, 1\n");
  CHECK_FALSE(c.kind.has_value());
  CHECK((c.op.kind == OperatorKind::HadamardCS));
  CHECK(c.op.params.rowFraction == 0.25);
  CHECK(c.topologies.size() == 3);
  CHECK((c.topologies[2] == Topology::Identity));
  CHECK(c.p == 12);
  CHECK(c.solver.step <= 0.0);
  CHECK((c.solver.denoiser.kind == DenoiserKind::WaveletSoft));
  CHECK((c.solver.denoiser.filter == WaveletFilter::Db8));
  CHECK(c.gammaGValues.size() == 3);
}

TEST_CASE("config errors") {
  CHECK_THROWS_WITH_AS(parseConfig("kind = Coverage\n", "cfg"), doctest::Contains("seed required"), ConfigError);
  CHECK_THROWS_WITH_AS(parseConfig("seed = 1\nseed = 2\n", "cfg"), doctest::Contains("duplicate key 'seed'"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parseConfig("seed = 1\n[prior]\nbeta = 2\n", "cfg"), doctest::Contains("cfg:3:"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parseConfig("seed = 1\n[prior]\nbeta = 2\n", "cfg"), doctest::Contains("unknown key"),
                       ConfigError);
  CHECK_THROWS_AS(parseConfig("seed = -4\n"), ConfigError);
  CHECK_THROWS_AS(parseConfig("seed = 1\n[prior]\nalpha = abc\n"), ConfigError);
  CHECK_THROWS_AS(parseConfig("seed = 1\n[prior]\nepsilon = 0\n"), ConfigError);
  CHECK_THROWS_AS(parseConfig("seed = 1\n[laplacian]\ntopologies = Ring\n"), ConfigError);
  CHECK_THROWS_AS(parseConfig("seed = 1\n[operator\n"), ConfigError);
  CHECK_THROWS_AS(parseConfig("seed = 1\njust words\n"), ConfigError);
  CHECK_THROWS_AS(loadConfig("/nonexistent/gsnr.ini"), ConfigError);
}

TEST_CASE("experiment kinds and subcommands") {
  for (auto k : {ExperimentKind::Spectrum, ExperimentKind::Coverage, ExperimentKind::Predictability,
                 ExperimentKind::SelectP, ExperimentKind::MinimaxBound, ExperimentKind::Reconstruct,
                 ExperimentKind::ConvergenceAblation, ExperimentKind::PerturbedOperator}) {
    CHECK((parseExperimentKind(toString(k)) == k));
    CHECK((kindFromSubcommand(subcommandName(k)) == k));
  }
  CHECK((subcommandName(ExperimentKind::SelectP) == "select-p"));
  CHECK((subcommandName(ExperimentKind::ConvergenceAblation) == "ablate-convergence"));
  CHECK_FALSE(kindFromSubcommand("train").has_value());
}

TEST_CASE("csv formatting and round trip") {
  CHECK(formatNumber(0.1) == "0.1");
  CHECK(formatNumber(1.0 / 3.0) == "0.333333333");
  CHECK(formatNumber(0.0) == "0");
  CHECK(formatNumber(-0.0) == "0");
  CHECK(formatNumber(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(formatNumber(123456789012.0) == "1.23456789e+11");

  CsvTable t({"a", "b"});
  t.addRow({1.5, 2.0 / 3.0});
  t.addRow(std::vector<std::string>{"x", "7"});
  CHECK(t.str() == "a,b\n1.5,0.666666667\nx,7\n");
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  t.write((dir / "t.csv").string());
  const CsvTable r = CsvTable::read((dir / "t.csv").string());
  CHECK(r.header() == t.header());
  CHECK(r.rows() == t.rows());
  CHECK(r.number(0, "b") == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(t.addRow(std::vector<std::string>{"only"}), DimensionError);
  fs::remove_all(dir);
}

TEST_CASE("svg rendering is deterministic and matches the committed fixture") {
  const std::string a = renderSvg(fixtureChart());
  CHECK(a == renderSvg(fixtureChart()));
  CHECK(a.find("version=\"1.1\"") != std::string::npos);
  CHECK(a.find("Fixture &amp; &lt;chart&gt;") != std::string::npos);
  CHECK(a.find("<circle") != std::string::npos);
  CHECK(a.find("<polyline") != std::string::npos);
  CHECK(a == slurp(fs::path(GSNR_TEST_DATA) / "golden_chart.svg"));
  CHECK_THROWS_AS(renderSvg(SvgChart{"empty", "x", "y", {}}), InvalidArgument);
}

TEST_CASE("synthetic corpora") {
  const ImageShape s{1, 16, 16};
  CHECK(generateCorpus(CorpusKind::PiecewiseSmooth, s, 0, 1).images.empty());
  const auto a = generateCorpus(CorpusKind::PiecewiseSmooth, s, 100, 5);
  const auto b = generateCorpus(CorpusKind::PiecewiseSmooth, s, 100, 5);
  const auto g = generateCorpus(CorpusKind::GmrfSample, s, 10, 5);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(g.images[i].data.minCoeff() == doctest::Approx(0.0));
    CHECK(g.images[i].data.maxCoeff() == doctest::Approx(1.0));
  }
  const GraphLaplacian L = buildLaplacian(Topology::Grid4NN, 16, 16);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> uni;
  double smooth = 0.0, noisy = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    const Vector& x = a.images[i].data;
    CHECK((x - b.images[i].data).norm() == 0.0);
    CHECK(x.minCoeff() >= 0.0);
    CHECK(x.maxCoeff() <= 1.0);
    const double sd = std::sqrt((x.array() - x.mean()).square().mean());
    Vector u(256);
    for (Index k = 0; k < 256; ++k) u(k) = uni(rng);
    u = (u.array() - u.mean()) / std::sqrt((u.array() - u.mean()).square().mean()) * sd;
    smooth += dirichletEnergy(L, x);
    noisy += dirichletEnergy(L, u);
  }
  CHECK(smooth < noisy);
}

TEST_CASE("operator perturbation") {
  OperatorParams op;
  op.factor = 4;
  const LinearMap H = buildOperator(OperatorKind::BlockAverageSR, {1, 16, 16}, op);
  const LinearMap same = perturbOperator(H, 0.0, 1);
  CHECK((same.toDense() - H.toDense()).norm() == 0.0);

  OperatorParams big;
  big.factor = 2;
  const LinearMap H2 = buildOperator(OperatorKind::BlockAverageSR, {1, 32, 32}, big);
  const Matrix diff = perturbOperator(H2, 0.005, 2).toDense() - H2.toDense();
  REQUIRE(diff.size() >= 100000);
  const double sd = std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
  CHECK(sd == doctest::Approx(0.005).epsilon(0.05));
  CHECK(perturbOperator(H, 0.005, 3).hash() != H.hash());
}

TEST_CASE("experiments are deterministic and the basis cache is reused") {
  ExperimentConfig c = parseConfig(
      "kind = Coverage\nseed = 4\n[operator]\nheight = 8\nwidth = 8\nfactor = 2\n"
      "[laplacian]\ntopologies = Identity, Grid4NN, Grid8NN\n[data]\nsamples = 500\n");
  const fs::path d1 = scratch("exp1"), d2 = scratch("exp2");
  const ExperimentResult r1 = runExperiment(c, d1.string());
  const ExperimentResult r2 = runExperiment(c, d2.string());
  REQUIRE(r1.files == r2.files);
  for (const auto& f : r1.files) {
    if (f == "manifest.json") continue;
    CHECK_MESSAGE(slurp(d1 / f) == slurp(d2 / f), f);
  }
  CHECK(r1.cacheKeys.size() == 3);
  for (const auto& k : r1.cacheKeys) CHECK(fs::exists(d1 / "basis_cache" / k));

  // Monotone curves; graph priors dominate the identity prior pointwise.
  const CsvTable ident = CsvTable::read((d1 / "coverage_Identity.csv").string());
  for (const char* t : {"Grid4NN", "Grid8NN"}) {
    const CsvTable g = CsvTable::read((d1 / (std::string("coverage_") + t + ".csv")).string());
    for (std::size_t r = 0; r < g.rows().size(); ++r) {
      CHECK(g.number(r, "C") >= ident.number(r, "C") - 1e-10);
      if (r > 0) CHECK(g.number(r, "C") >= g.number(r - 1, "C"));
    }
  }

  // Rerunning into the same directory reads the cache and reproduces the outputs.
  const std::string before = slurp(d1 / "coverage_Grid4NN.csv");
  runExperiment(c, d1.string());
  CHECK(slurp(d1 / "coverage_Grid4NN.csv") == before);
  const std::string manifest = slurp(d1 / "manifest.json");
  CHECK(manifest.find("\"hit\": true") != std::string::npos);
  CHECK(manifest.find("config_hash") != std::string::npos);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("cached basis agrees with a fresh eigensolve") {
  ExperimentConfig c = parseConfig(
      "kind = Spectrum\nseed = 2\n[operator]\nheight = 16\nwidth = 16\nfactor = 4\n[spectral]\nk = 20\n");
  const fs::path d = scratch("cache");
  runExperiment(c, d.string());
  const std::string fresh = slurp(d / "spectrum_Grid4NN.csv");
  runExperiment(c, d.string());
  const CsvTable a = CsvTable::read((d / "spectrum_Grid4NN.csv").string());
  fs::path tmp = d / "fresh.csv";
  writeTextFile(tmp.string(), fresh);
  const CsvTable b = CsvTable::read(tmp.string());
  for (std::size_t r = 0; r < a.rows().size(); ++r) {
    CHECK(std::abs(a.number(r, "mu") - b.number(r, "mu")) <= 1e-10);
    CHECK(a.number(r, "residual") <= 1e-8);
  }
  fs::remove_all(d);
}

TEST_CASE("experiment errors surface as typed exceptions") {
  ExperimentConfig c = parseConfig("kind = Coverage\nseed = 1\n[spectral]\nk = 5\n");
  CHECK_THROWS_AS(runExperiment(c, scratch("err").string()), InvalidArgument);
  ExperimentConfig none = parseConfig("seed = 1\n");
  CHECK_THROWS_AS(runExperiment(none, scratch("err").string()), ConfigError);
  fs::remove_all(scratch("err"));
}

TEST_CASE("cli exit codes") {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(GSNR_CLI) + " " + args + " > " + (dir / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  writeTextFile((dir / "ok.ini").string(),
                "kind = SelectP\nseed = 1\n[operator]\nheight = 8\nwidth = 8\nfactor = 2\n");
  writeTextFile((dir / "bad.ini").string(), "kind = SelectP\n[operator]\nheight = 8\n");
  writeTextFile((dir / "nodata.ini").string(),
                "seed = 1\n[operator]\nkind = ExplicitDense\nheight = 2\nwidth = 2\nmatrix_file = " +
                    (dir / "rank1.csv").string() + "\n");
  writeTextFile((dir / "rank1.csv").string(), "2,4\n1,1,0,0\n2,2,0,0\n");
  const std::string out = " --out " + (dir / "out").string();

  CHECK(run("select-p --config " + (dir / "ok.ini").string() + out) == 0);
  CHECK(fs::exists(dir / "out" / "select_p.csv"));
  CHECK(run("select-p --config " + (dir / "ok.ini").string() + out + " --seed 99") == 0);
  CHECK(slurp(dir / "out" / "manifest.json").find("\"seed\": 99") != std::string::npos);
  CHECK(run("select-p --config " + (dir / "bad.ini").string() + out) == 2);
  CHECK(run("coverage --config " + (dir / "ok.ini").string() + out) == 2);  // kind mismatch
  CHECK(run("select-p" + out) == 2);
  CHECK(run("frobnicate --config x") == 2);
  CHECK(run("spectrum --config " + (dir / "nodata.ini").string() + out) == 3);
  fs::remove_all(dir);
}
