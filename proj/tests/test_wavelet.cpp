#include "gsnr/wavelet.hpp"
#include "oracle.hpp"

#include <doctest.h>

using namespace gsnr;

namespace {

const WaveletFilter kFilters[] = {WaveletFilter::Haar, WaveletFilter::Db2, WaveletFilter::Db4, WaveletFilter::Db8};

}  // namespace

TEST_CASE("lowpass filters are orthonormal") {
  for (WaveletFilter f : kFilters) {
    INFO(toString(f));
    const auto g = lowpassFilter(f);
    double sum = 0.0, sq = 0.0;
    for (double v : g) {
      sum += v;
      sq += v * v;
    }
    CHECK(sum == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(sq == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t shift = 2; shift < g.size(); shift += 2) {
      double acc = 0.0;
      for (std::size_t k = 0; k + shift < g.size(); ++k) acc += g[k] * g[k + shift];
      CHECK(std::abs(acc) < 1e-12);
    }
    CHECK((parseWaveletFilter(toString(f)) == f));
  }
  CHECK((lowpassFilter(WaveletFilter::Db8).size() == 16));
  CHECK_THROWS_AS(parseWaveletFilter("sym4"), InvalidArgument);
}

TEST_CASE("dwt2 is orthogonal and invertible") {
  std::mt19937_64 rng(1);
  for (WaveletFilter f : kFilters) {
    INFO(toString(f));
    Matrix plane = oracle::randn(32, 16, rng);
    const Matrix original = plane;
    dwt2(plane, f, 3);
    CHECK(plane.squaredNorm() == doctest::Approx(original.squaredNorm()).epsilon(1e-12));
    idwt2(plane, f, 3);
    CHECK((plane - original).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("haar analysis of a short signal") {
  Matrix plane(2, 2);
  plane << 1, 3, 5, 7;
  dwt2(plane, WaveletFilter::Haar, 1);
  CHECK(plane(0, 0) == doctest::Approx(8.0));  // (1+3+5+7)/2
  CHECK(std::abs(plane(0, 1)) == doctest::Approx(2.0));  // ((1-3)+(5-7))/2
  CHECK(std::abs(plane(1, 0)) == doctest::Approx(4.0));  // ((1+3)-(5+7))/2
  CHECK(plane(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("soft-threshold denoiser") {
  std::mt19937_64 rng(2);
  const ImageShape s{2, 16, 16};
  const ImageSignal x = ImageSignal::make(s, oracle::randn(s.size(), rng));
  for (WaveletFilter f : kFilters) {
    INFO(toString(f));
    CHECK((denoiseWaveletSoft(x, f, 2, 0.0).data - x.data).cwiseAbs().maxCoeff() < 1e-10);
    const ImageSignal c = ImageSignal::make(s, Vector::Constant(s.size(), 0.37));
    CHECK((denoiseWaveletSoft(c, f, 3, 0.5).data - c.data).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(denoiseWaveletSoft(ImageSignal::zeros({1, 12, 16}), WaveletFilter::Haar, 3, 0.1), InvalidArgument);
}

TEST_CASE("soft-threshold denoiser is nonexpansive") {
  std::mt19937_64 rng(3);
  const ImageShape s{1, 16, 16};
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const WaveletFilter f = kFilters[t % 4];
    const ImageSignal u = ImageSignal::make(s, oracle::randn(s.size(), rng));
    const ImageSignal v = ImageSignal::make(s, u.data + 0.3 * oracle::randn(s.size(), rng));
    const double du = (denoiseWaveletSoft(u, f, 3, 0.4).data - denoiseWaveletSoft(v, f, 3, 0.4).data).norm();
    worst = std::max(worst, du / (u.data - v.data).norm());
  }
  CHECK(worst <= 1.0 + 1e-12);
}
