#pragma once

#include "gsnr/config.hpp"
#include "gsnr/image.hpp"

#include <vector>

namespace gsnr {

struct SyntheticCorpus {
  std::vector<ImageSignal> images;
  CorpusKind generator = CorpusKind::GmrfSample;
  std::uint64_t seed = 0;
};

/// GmrfSample: Grid4NN GMRF draws (alpha, epsilon), each rescaled to [0, 1].
/// PiecewiseSmooth: 2-5 constant rectangles over smooth gradients, clipped to [0, 1].
SyntheticCorpus generateCorpus(CorpusKind kind, const ImageShape& shape, Index count, std::uint64_t seed,
                               double alpha = 1.0, double epsilon = 0.01);

}  // namespace gsnr
