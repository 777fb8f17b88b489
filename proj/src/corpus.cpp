#include "gsnr/corpus.hpp"

#include "gsnr/gmrf.hpp"
#include "gsnr/spectral.hpp"

#include <algorithm>
#include <random>

namespace gsnr {

namespace {

void rescaleUnit(Vector& x) {
  const double lo = x.minCoeff(), hi = x.maxCoeff();
  if (hi > lo) {
    x = (x.array() - lo) / (hi - lo);
  } else {
    x.setConstant(0.5);
  }
}

ImageSignal piecewiseSmooth(const ImageShape& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> rectCount(2, 5);
  ImageSignal img = ImageSignal::zeros(s);
  const double h = static_cast<double>(s.height), w = static_cast<double>(s.width);
  for (Index c = 0; c < s.channels; ++c) {
    const double base = 0.2 + 0.6 * u(rng), gy = 0.4 * (u(rng) - 0.5), gx = 0.4 * (u(rng) - 0.5);
    for (Index r = 0; r < s.height; ++r) {
      for (Index col = 0; col < s.width; ++col) {
        img.data(s.index(c, r, col)) = base + gy * (static_cast<double>(r) / h) + gx * (static_cast<double>(col) / w);
      }
    }
  }
  const int rects = rectCount(rng);
  for (int k = 0; k < rects; ++k) {
    const Index r0 = static_cast<Index>(u(rng) * h), c0 = static_cast<Index>(u(rng) * w);
    const Index rh = 1 + static_cast<Index>(u(rng) * h / 2), cw = 1 + static_cast<Index>(u(rng) * w / 2);
    for (Index c = 0; c < s.channels; ++c) {
      const double level = u(rng), slope = 0.2 * (u(rng) - 0.5);
      for (Index r = r0; r < std::min(s.height, r0 + rh); ++r) {
        for (Index col = c0; col < std::min(s.width, c0 + cw); ++col) {
          img.data(s.index(c, r, col)) = level + slope * static_cast<double>(col - c0) / w;
        }
      }
    }
  }
  img.data = img.data.cwiseMax(0.0).cwiseMin(1.0);
  return img;
}

}  // namespace

SyntheticCorpus generateCorpus(CorpusKind kind, const ImageShape& shape, Index count, std::uint64_t seed,
                               double alpha, double epsilon) {
  if (shape.channels < 1 || shape.height < 1 || shape.width < 1) throw InvalidArgument("corpus shape must be positive");
  if (count < 0) throw InvalidArgument("corpus count must be nonnegative");
  SyntheticCorpus corpus;
  corpus.generator = kind;
  corpus.seed = seed;
  if (count == 0) return corpus;
  if (kind == CorpusKind::GmrfSample) {
    const auto prior = GmrfPrior::make(laplacianFor(Topology::Grid4NN, shape), alpha, epsilon);
    corpus.images = sampleGmrf(prior, count, seed);
    for (auto& img : corpus.images) rescaleUnit(img.data);
  } else {
    std::mt19937_64 rng(seed);
    corpus.images.reserve(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) corpus.images.push_back(piecewiseSmooth(shape, rng));
  }
  return corpus;
}

}  // namespace gsnr
