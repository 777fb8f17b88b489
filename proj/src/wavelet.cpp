#include "gsnr/wavelet.hpp"

#include <array>
#include <cmath>

namespace gsnr {

namespace {

// Reconstruction lowpass (reversed decomposition lowpass).
constexpr std::array<double, 2> kHaar = {0.70710678118654752, 0.70710678118654752};
constexpr std::array<double, 4> kDb2 = {0.48296291314453416, 0.83651630373780794, 0.22414386804201339,
                                        -0.12940952255126037};
constexpr std::array<double, 8> kDb4 = {0.23037781330889651,  0.71484657055291567, 0.63088076792985892,
                                        -0.027983769416859854, -0.18703481171909309, 0.030841381835560764,
                                        0.032883011666885197, -0.010597401785069032};
constexpr std::array<double, 16> kDb8 = {
    0.054415842243104008,   0.31287159091429995,   0.67563073629728976,   0.58535468365420673,
    -0.015829105256349306,  -0.28401554296154691,  0.00047248457391328279, 0.12874742662047847,
    -0.017369301001807547,  -0.044088253930794755, 0.013981027917398282,  0.0087460940474057766,
    -0.0048703529934515741, -0.00039174037337694705, 0.00067544940645056933, -0.00011747678412476953};

}  // namespace

std::string toString(WaveletFilter filter) {
  switch (filter) {
    case WaveletFilter::Haar: return "haar";
    case WaveletFilter::Db2: return "db2";
    case WaveletFilter::Db4: return "db4";
    case WaveletFilter::Db8: return "db8";
  }
  return "?";
}

WaveletFilter parseWaveletFilter(const std::string& name) {
  for (auto f : {WaveletFilter::Haar, WaveletFilter::Db2, WaveletFilter::Db4, WaveletFilter::Db8}) {
    if (toString(f) == name) return f;
  }
  throw InvalidArgument("unknown wavelet filter '" + name + "'");
}

std::span<const double> lowpassFilter(WaveletFilter filter) {
  switch (filter) {
    case WaveletFilter::Haar: return kHaar;
    case WaveletFilter::Db2: return kDb2;
    case WaveletFilter::Db4: return kDb4;
    case WaveletFilter::Db8: return kDb8;
  }
  return kHaar;
}

ImageSignal denoiseWaveletSoft(const ImageSignal& x, WaveletFilter filter, Index levels, double threshold) {
  const auto& s = x.shape;
  if (levels < 0) throw InvalidArgument("wavelet levels must be nonnegative");
  const Index block = Index(1) << levels;
  if (s.height % block != 0 || s.width % block != 0) {
    throw InvalidArgument("wavelet denoiser needs height and width divisible by 2^levels = " + std::to_string(block));
  }
  if (threshold < 0.0) throw InvalidArgument("wavelet threshold must be nonnegative");
  ImageSignal out{s, Vector(x.data.size())};
  const Index ah = s.height / block, aw = s.width / block;
  for (Index c = 0; c < s.channels; ++c) {
    // Row-major pixels map to a column-major (width x height) plane; the
    // transform is separable so the orientation does not matter.
    Eigen::Map<const Matrix> src(x.data.data() + c * s.pixels(), s.width, s.height);
    Matrix plane = src;
    dwt2(plane, filter, levels);
    for (Index j = 0; j < plane.cols(); ++j) {
      for (Index i = 0; i < plane.rows(); ++i) {
        if (i < aw && j < ah) continue;
        const double v = plane(i, j);
        plane(i, j) = std::copysign(std::max(std::abs(v) - threshold, 0.0), v);
      }
    }
    idwt2(plane, filter, levels);
    Eigen::Map<Matrix>(out.data.data() + c * s.pixels(), s.width, s.height) = plane;
  }
  return out;
}

}  // namespace gsnr
