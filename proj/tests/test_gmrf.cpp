#include "gsnr/gmrf.hpp"
#include "gsnr/spectral.hpp"
#include "oracle.hpp"

#include <doctest.h>

using namespace gsnr;

namespace {

LinearMap sr(Index side, Index f) {
  OperatorParams p;
  p.factor = f;
  return buildOperator(OperatorKind::BlockAverageSR, {1, side, side}, p);
}

GmrfPrior prior(Topology t, const ImageShape& s, double alpha = 1.0, double eps = 0.01) {
  return GmrfPrior::make(laplacianFor(t, s), alpha, eps);
}

}  // namespace

TEST_CASE("prior spectrum") {
  const LinearMap H = sr(8, 2);
  const GmrfPrior pI = prior(Topology::Identity, H.shape());
  const NullSpectralBasis bI = eigDenseNull(H, pI.laplacian, H.nullDim());
  const Vector lI = priorSpectrum(pI, bI);
  CHECK((lI.array() - 1.0 / 1.01).abs().maxCoeff() < 1e-12);

  const GmrfPrior p4 = prior(Topology::Grid4NN, H.shape());
  const NullSpectralBasis b4 = eigDenseNull(H, p4.laplacian, H.nullDim());
  const Vector l4 = priorSpectrum(p4, b4);
  for (Index i = 0; i < l4.size(); ++i) CHECK(l4(i) == doctest::Approx(1.0 / (b4.eigenvalues(i) + 0.01)));
  for (Index i = 1; i < l4.size(); ++i) CHECK(l4(i) <= l4(i - 1));

  NullSpectralBasis zero = b4;
  zero.eigenvalues.setZero();
  CHECK(priorSpectrum(p4, zero)(0) == doctest::Approx(100.0));
  CHECK_THROWS_AS(GmrfPrior::make(laplacianFor(Topology::Grid4NN, H.shape()), 1.0, 0.0), InvalidArgument);
}

TEST_CASE("gmrf samples have covariance Q^-1") {
  const GmrfPrior p = prior(Topology::Grid4NN, {1, 4, 4}, 1.0, 0.5);
  const auto samples = sampleGmrf(p, 20000, 17);
  Matrix X(16, 20000);
  for (Index s = 0; s < 20000; ++s) X.col(s) = samples[static_cast<std::size_t>(s)].data;
  const Matrix emp = X * X.transpose() / 20000.0;
  const Matrix C = Matrix(p.precision()).inverse();
  // Five standard errors of a Gaussian sample covariance entry.
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j) {
      const double se = std::sqrt((C(i, i) * C(j, j) + C(i, j) * C(i, j)) / 20000.0);
      CHECK(std::abs(emp(i, j) - C(i, j)) <= 5.0 * se);
    }
  CHECK((p.covariance() - C).norm() < 1e-10);

  const auto again = sampleGmrf(p, 3, 17);
  for (std::size_t s = 0; s < 3; ++s) CHECK((again[s].data - samples[s].data).norm() == 0.0);
}

TEST_CASE("isotropic prior has variance 1/eps") {
  const GmrfPrior p = prior(Topology::Grid4NN, {1, 4, 4}, 0.0, 4.0);
  const auto samples = sampleGmrf(p, 5000, 3);
  double acc = 0.0;
  for (const auto& s : samples) acc += s.data.squaredNorm();
  CHECK(acc / (5000.0 * 16.0) == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("coverage curves") {
  const LinearMap H = sr(8, 2);
  const GmrfPrior pI = prior(Topology::Identity, H.shape());
  const CoverageCurve cI = closedFormCoverage(pI, eigDenseNull(H, pI.laplacian, H.nullDim()));
  const Index q = H.nullDim();
  for (Index p = 1; p <= q; ++p) CHECK(std::abs(cI.values(p - 1) - static_cast<double>(p) / q) < 1e-12);

  for (Topology t : {Topology::Grid4NN, Topology::Grid8NN, Topology::SymNormalized}) {
    INFO(toString(t));
    const GmrfPrior pr = prior(t, H.shape());
    const NullSpectralBasis b = eigDenseNull(H, pr.laplacian, q);
    const CoverageCurve c = closedFormCoverage(pr, b);
    const Vector lb = coverageLowerBound(priorSpectrum(pr, b));
    for (Index p = 1; p <= q; ++p) {
      CHECK(c.values(p - 1) >= static_cast<double>(p) / q - 1e-10);
      CHECK(lb(p - 1) <= c.values(p - 1) + 1e-12);
    }
    CHECK(c.values(q - 1) == doctest::Approx(1.0));
  }

  Vector lam(4);
  lam << 4, 3, 2, 1;
  const CoverageCurve c = coverageFromSpectrum(lam);
  CHECK(c.values(0) == doctest::Approx(0.4));
  CHECK(c.values(1) == doctest::Approx(0.7));
  for (Index p = 1; p < 4; ++p) CHECK(c.values(p - 1) > static_cast<double>(p) / 4.0);
}

TEST_CASE("coverage lower bound on a 16x16 problem") {
  const LinearMap H = sr(16, 4);
  const GmrfPrior pr = prior(Topology::Grid4NN, H.shape());
  const NullSpectralBasis b = eigDenseNull(H, pr.laplacian, H.nullDim());
  const Vector lam = priorSpectrum(pr, b);
  const Vector lb = coverageLowerBound(lam);
  const CoverageCurve c = closedFormCoverage(pr, b);
  CHECK((lb - c.values).maxCoeff() <= 1e-12);
}

TEST_CASE("empirical and marginal coverage") {
  const LinearMap H = sr(8, 2);
  const GmrfPrior pr = prior(Topology::Grid4NN, H.shape());
  const NullSpectralBasis b = eigDenseNull(H, pr.laplacian, H.nullDim());
  const auto samples = sampleGmrf(pr, 5000, 8);
  const CoverageCurve emp = empiricalCoverage(samples, H, b);
  const CoverageCurve mar = marginalCoverage(pr, H, b);
  // Empirical coverage estimates the marginal (population) curve.
  CHECK((emp.values - mar.values).cwiseAbs().maxCoeff() < 0.02);
  CHECK(emp.values(b.size() - 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(empiricalCoverage({}, H, b), InvalidArgument);

  // Identity prior: P_n C P_n is isotropic on Null(H) so every form is linear.
  const GmrfPrior pI = prior(Topology::Identity, H.shape());
  const NullSpectralBasis bI = eigDenseNull(H, pI.laplacian, H.nullDim());
  const CoverageCurve mI = marginalCoverage(pI, H, bI);
  for (Index p = 1; p <= bI.size(); ++p) CHECK(mI.values(p - 1) == doctest::Approx(double(p) / bI.size()));
}

TEST_CASE("p selection on crafted spectra") {
  const SelectPOptions opt;  // kappa 0.95, delta 1e-3, plateau 10
  CHECK(selectP(coverageFromSpectrum(Vector::Ones(50)), opt) == 50);

  Vector hot = Vector::Zero(30);
  hot(0) = 1.0;
  CHECK(selectP(coverageFromSpectrum(hot), opt) == 1);

  // C(1)=0.5, C(2)=0.8, C(3)=0.96, then 400 increments of 1e-4.
  Vector crafted(403);
  crafted << 0.5, 0.3, 0.16, Vector::Constant(400, 1e-4);
  const CoverageCurve c = coverageFromSpectrum(crafted);
  REQUIRE(c.values(2) == doctest::Approx(0.96));
  CHECK(selectP(c, opt) == 3);

  // Above kappa but not yet flat: increments of 2e-3 for five more modes first.
  Vector late(48);
  late << 0.5, 0.3, 0.16, Vector::Constant(5, 2e-3), Vector::Constant(40, 7.5e-4);
  late /= late.sum();
  const CoverageCurve cl = coverageFromSpectrum(late);
  Index expected = 0;
  for (Index p = 1; p <= 48 && expected == 0; ++p) {
    if (cl.values(p - 1) < 0.95) continue;
    double worst = 0.0;
    for (Index j = p + 1; j <= std::min<Index>(p + 10, 48); ++j) worst = std::max(worst, cl.values(j - 1) - cl.values(j - 2));
    if (worst <= 1e-3) expected = p;
  }
  CHECK(expected == 8);
  CHECK(selectP(cl, opt) == expected);
}

TEST_CASE("minimax bound and witness") {
  const LinearMap H = sr(16, 4);
  const GraphLaplacian L = laplacianFor(Topology::Grid4NN, H.shape());
  const NullSpectralBasis b = eigDenseNull(H, L, 60);
  const Index p = 26;
  const MinimaxResult mm = minimaxBound(b, p, 1.0);
  CHECK(mm.bound == doctest::Approx(1.0 / b.eigenvalues(p)));
  CHECK(std::abs(mm.witnessResidual - mm.bound) <= 1e-8);
  CHECK(mm.witness.dot(applyNullRestricted(H, L, mm.witness)) == doctest::Approx(1.0));
  CHECK(H.apply(mm.witness).norm() < 1e-10);

  std::mt19937_64 rng(12);
  const Matrix members = sampleEllipsoid(b, 1.0, 1000, rng);
  for (Index s = 0; s < members.cols(); ++s) {
    const Vector x = members.col(s);
    CHECK(x.dot(applyNullRestricted(H, L, x)) <= 1.0 + 1e-10);
    CHECK(subspaceResidual(b, p, x) <= mm.bound + 1e-8);
  }

  const GraphLaplacian I = laplacianFor(Topology::Identity, H.shape());
  const NullSpectralBasis bI = eigDenseNull(H, I, 40);
  for (Index pp : {1, 10, 30}) CHECK(minimaxBound(bI, pp, 2.5).bound == doctest::Approx(2.5));
  CHECK_THROWS_AS(minimaxBound(b, 60, 1.0), InvalidArgument);
}

TEST_CASE("per-mode predictability") {
  const LinearMap H = sr(8, 2);
  const Index q = H.nullDim();
  for (Topology t : {Topology::Grid4NN, Topology::Grid8NN, Topology::SymNormalized}) {
    INFO(toString(t));
    const GmrfPrior pr = prior(t, H.shape());
    const NullSpectralBasis b = eigDenseNull(H, pr.laplacian, q);
    for (double s2 : {0.0, 0.05}) {
      const PredictabilityReport rep = perModePredictability(pr, H, b, s2);
      CHECK((rep.rho2 - rep.bound).maxCoeff() <= 1e-8);
      CHECK(rep.rho2.minCoeff() >= -1e-12);
    }
  }
  const GmrfPrior pI = prior(Topology::Identity, H.shape());
  const PredictabilityReport rI = perModePredictability(pI, H, eigDenseNull(H, pI.laplacian, q), 0.05);
  CHECK(rI.rho2.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(rI.c.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("predictability equality for full-row-rank H without noise") {
  // H = I leaves no null space; the equality case is exercised with a full-row-rank H, sigma2 = 0.
  std::mt19937_64 rng(4);
  const Matrix M = oracle::randn(24, 36, rng);
  const LinearMap H = denseOperator(M, {1, 6, 6});
  const GmrfPrior pr = prior(Topology::Grid4NN, H.shape());
  const NullSpectralBasis b = eigDenseNull(H, pr.laplacian, H.nullDim());
  const PredictabilityReport rep = perModePredictability(pr, H, b, 0.0);
  CHECK((rep.rho2 - rep.bound).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("grid4 is predictable in more modes than grid8") {
  const LinearMap H = sr(16, 4);
  Index counts[2] = {0, 0};
  int i = 0;
  for (Topology t : {Topology::Grid4NN, Topology::Grid8NN}) {
    const GmrfPrior pr = prior(t, H.shape());
    const PredictabilityReport rep =
        perModePredictability(pr, H, eigDenseNull(H, pr.laplacian, H.nullDim()), 0.05);
    counts[i++] = (rep.rho2.array() > 0.01).count();
  }
  MESSAGE("modes with rho^2 > 0.01: Grid4NN " << counts[0] << ", Grid8NN " << counts[1]);
  CHECK(counts[0] > counts[1]);
}

TEST_CASE("block covariance identities") {
  std::mt19937_64 rng(6);
  const Matrix A = oracle::randn(8, 8, rng);
  const Matrix Q = A * A.transpose() + 0.5 * Matrix::Identity(8, 8);
  const Matrix H = oracle::randn(4, 8, rng);
  const BlockIdentityReport r = blockIdentityCheck(Q, H);
  CHECK(r.nrResidual <= 1e-8);
  CHECK(r.nnResidual <= 1e-8);

  const BlockIdentityReport d = blockIdentityCheck(Matrix(Vector::LinSpaced(8, 1, 2).asDiagonal()), H);
  CHECK(d.nnResidual <= 1e-8);

  const GmrfPrior iso = prior(Topology::Grid4NN, {1, 4, 4}, 0.0, 2.0);
  const LinearMap Hs = sr(4, 2);
  CHECK(blockIdentityCheck(iso, Hs).nnResidual <= 1e-10);
  const BlockBases bb = blockBases(Hs);
  const Matrix C = iso.covariance();
  CHECK((bb.null.transpose() * C * bb.range).norm() < 1e-12);
}
