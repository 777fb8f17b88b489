#include "gsnr/gmrf.hpp"
#include "gsnr/predictor.hpp"
#include "gsnr/solver.hpp"
#include "gsnr/spectral.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <filesystem>
#include <fstream>

using namespace gsnr;

namespace {

struct Fixture {
  LinearMap H;
  GraphLaplacian L;
  NullSpectralBasis S;
  Vector y;
  Vector g;
  Vector truth;
};

Fixture fixture(Index side = 8, Index f = 2, Index p = 10, std::uint64_t seed = 1) {
  OperatorParams op;
  op.factor = f;
  LinearMap H = buildOperator(OperatorKind::BlockAverageSR, {1, side, side}, op);
  GraphLaplacian L = laplacianFor(Topology::Grid4NN, H.shape());
  NullSpectralBasis S = eigDenseNull(H, L, p);
  std::mt19937_64 rng(seed);
  Vector truth = oracle::randn(H.cols(), rng);
  Vector y = H.apply(truth);
  Vector g = projectS(S, truth) + 0.1 * oracle::randn(p, rng);
  return {H, L, S, y, g, truth};
}

}  // namespace

TEST_CASE("objective terms") {
  Fixture fx = fixture();
  SolverConfig cfg;
  cfg.gamma = 0.0;
  cfg.gammaG = 0.0;
  GsnrProblem pr{fx.H, fx.y, fx.S, fx.g, fx.L};
  CHECK(gsnrObjective(pr, cfg, fx.truth) == doctest::Approx(0.0).scale(1.0));

  cfg.gammaG = 0.3;
  const double dir = dirichletEnergy(fx.L, fx.H.projectNull(fx.truth));
  CHECK(gsnrObjective(pr, cfg, fx.truth) == doctest::Approx(0.15 * dir));
}

TEST_CASE("gradient matches central differences") {
  Fixture fx = fixture();
  SolverConfig cfg;
  cfg.gamma = 0.7;
  cfg.gammaG = 0.2;
  GsnrProblem pr{fx.H, fx.y, fx.S, fx.g, fx.L};
  std::mt19937_64 rng(5);
  for (int probe = 0; probe < 20; ++probe) {
    const Vector x = oracle::randn(fx.H.cols(), rng);
    const Vector d = oracle::randn(fx.H.cols(), rng).normalized();
    const double h = 1e-5;
    const double fd = (gsnrObjective(pr, cfg, x + h * d) - gsnrObjective(pr, cfg, x - h * d)) / (2 * h);
    const double an = gsnrGradient(pr, cfg, x).dot(d);
    CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
  }
}

TEST_CASE("plain gradient descent reduces the data residual monotonically") {
  Fixture fx = fixture();
  SolverConfig cfg;
  cfg.gamma = 0.0;
  cfg.gammaG = 0.0;
  cfg.iterations = 40;
  const Matrix D = oracle::denseOf(fx.H);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(D.transpose() * D, Eigen::EigenvaluesOnly);
  cfg.step = 1.5 / eig.eigenvalues().maxCoeff();
  const NullSpectralBasis none;
  const Vector empty;
  GsnrProblem pr{fx.H, fx.y, none, empty, fx.L};
  const RunTrace tr = runGsnrPgd(pr, cfg);
  REQUIRE(tr.objective.size() == 41);
  for (Index k = 1; k < tr.objective.size(); ++k) CHECK(tr.objective(k) <= tr.objective(k - 1) + 1e-15);
  CHECK(std::isnan(tr.psnr(0)));
}

TEST_CASE("automatic step is the inverse largest curvature") {
  Fixture fx = fixture();
  SolverConfig cfg;
  cfg.gamma = 1.0;
  cfg.gammaG = 0.1;
  cfg.iterations = 1;
  GsnrProblem pr{fx.H, fx.y, fx.S, fx.g, fx.L};
  const Matrix D = oracle::denseOf(fx.H);
  const Matrix Pn = Matrix::Identity(64, 64) - oracle::rangeProjector(D);
  const Matrix A = D.transpose() * D + fx.S.vectors * fx.S.vectors.transpose() + 0.1 * Pn * Matrix(fx.L.matrix) * Pn;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  const double est = largestCurvature(pr, cfg);
  // A Rayleigh quotient never overshoots; 50 power steps get within a few percent here.
  CHECK(est <= top * (1.0 + 1e-12));
  CHECK(est >= 0.95 * top);
  const double step = runGsnrPgd(pr, cfg).step;
  CHECK(step == doctest::Approx(1.0 / est));
  CHECK(step < 2.0 / top);
}

TEST_CASE("spectral step analysis") {
  OperatorParams op;
  op.factor = 4;
  const LinearMap H = buildOperator(OperatorKind::BlockAverageSR, {1, 16, 16}, op);
  const GraphLaplacian L = laplacianFor(Topology::Grid4NN, H.shape());
  const StepAnalysis s0 = spectralStepSize(H, L, 0.0);
  CHECK(s0.singular);
  CHECK(s0.lambdaMin == doctest::Approx(0.0).scale(1.0));
  CHECK(s0.positiveKappa == doctest::Approx(1.0));
  CHECK(std::isinf(s0.kappa));

  const StepAnalysis s1 = spectralStepSize(H, L, 0.1);
  CHECK_FALSE(s1.singular);
  CHECK(s1.lambdaMin > 0.0);
  CHECK(s1.alpha == doctest::Approx(2.0 / (s1.lambdaMin + s1.lambdaMax)));
  CHECK(s1.rho == doctest::Approx((s1.kappa - 1.0) / (s1.kappa + 1.0)));
  const StepAnalysis sd = spectralStepSize(H, L, 0.1, 0.5);
  CHECK(sd.rho == doctest::Approx(1.5 * s1.rho));
}

TEST_CASE("identity-denoiser iteration contracts at the predicted rate") {
  Fixture fx = fixture(16, 4, 1);
  const StepAnalysis sa = spectralStepSize(fx.H, fx.L, 0.1);
  const Matrix D = oracle::denseOf(fx.H);
  const Matrix Pn = Matrix::Identity(256, 256) - oracle::rangeProjector(D);
  const Matrix A = D.transpose() * D + 0.1 * Pn * Matrix(fx.L.matrix) * Pn;
  const Vector xStar = A.ldlt().solve(D.transpose() * fx.y);
  SolverConfig cfg;
  cfg.step = sa.alpha;
  cfg.gamma = 0.0;
  cfg.gammaG = 0.1;
  cfg.iterations = 60;
  const NullSpectralBasis none;
  const Vector empty;
  const RunTrace tr = runGsnrPgd(GsnrProblem{fx.H, fx.y, none, empty, fx.L}, cfg, &xStar);
  const ContractionSummary cs = contractionRate(tr);
  CHECK(cs.maxAfterBurnIn <= sa.rho + 1e-6);
  CHECK(cs.ratios.size() == 60);
}

TEST_CASE("divergence is detected") {
  Fixture fx = fixture();
  SolverConfig cfg;
  cfg.gamma = 0.0;
  cfg.step = 100.0;
  cfg.iterations = 200;
  const NullSpectralBasis none;
  const Vector empty;
  CHECK_THROWS_AS(runGsnrPgd(GsnrProblem{fx.H, fx.y, none, empty, fx.L}, cfg), NumericalError);
}

TEST_CASE("solver is deterministic and psnr conventions hold") {
  Fixture fx = fixture();
  SolverConfig cfg;
  cfg.iterations = 15;
  cfg.gammaG = 0.1;
  cfg.denoiser.kind = DenoiserKind::WaveletSoft;
  cfg.denoiser.levels = 2;
  GsnrProblem pr{fx.H, fx.y, fx.S, fx.g, fx.L};
  const RunTrace a = runGsnrPgd(pr, cfg, &fx.truth);
  const RunTrace b = runGsnrPgd(pr, cfg, &fx.truth);
  CHECK((a.reconstruction.data - b.reconstruction.data).norm() == 0.0);
  CHECK((a.psnr - b.psnr).norm() == 0.0);

  const Vector x = Vector::Constant(4, 0.5);
  CHECK(std::isinf(psnr(x, x)));
  CHECK(psnr(x, Vector::Constant(4, 0.6)) == doctest::Approx(20.0));
}

TEST_CASE("tv proximal step") {
  const ImageShape s{1, 8, 8};
  const ImageSignal c = ImageSignal::make(s, Vector::Constant(64, 0.4));
  CHECK((tvProx(c, 0.2, 50).data - c.data).cwiseAbs().maxCoeff() < 1e-12);
  std::mt19937_64 rng(7);
  const ImageSignal x = ImageSignal::make(s, oracle::randn(64, rng));
  CHECK((tvProx(x, 0.0, 50).data - x.data).norm() == 0.0);
  const ImageSignal d = tvProx(x, 0.3, 100);
  auto tv = [&](const Vector& v) {
    double t = 0.0;
    for (Index r = 0; r < 8; ++r)
      for (Index col = 0; col < 8; ++col) {
        const double gx = col < 7 ? v(r * 8 + col + 1) - v(r * 8 + col) : 0.0;
        const double gy = r < 7 ? v((r + 1) * 8 + col) - v(r * 8 + col) : 0.0;
        t += std::sqrt(gx * gx + gy * gy);
      }
    return t;
  };
  CHECK(tv(d.data) < tv(x.data));
  CHECK(d.data.mean() == doctest::Approx(x.data.mean()).epsilon(1e-9));
}

TEST_CASE("pnm output") {
  const auto path = std::filesystem::temp_directory_path() / "gsnr_test.pgm";
  Vector v(4);
  v << 0.0, 0.5, 1.0, 2.0;
  writePnm(ImageSignal::make({1, 2, 2}, v), path.string());
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  Index w, h, maxv;
  in >> magic >> w >> h >> maxv;
  in.get();
  unsigned char px[4];
  in.read(reinterpret_cast<char*>(px), 4);
  CHECK(magic == "P5");
  CHECK(w == 2);
  CHECK(maxv == 255);
  CHECK(px[0] == 0);
  CHECK(px[3] == 255);
  std::filesystem::remove(path);
}
