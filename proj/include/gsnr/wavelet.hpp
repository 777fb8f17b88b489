#pragma once

#include "gsnr/image.hpp"

#include <span>
#include <string>

namespace gsnr {

/// Orthogonal Daubechies filters named by vanishing moments (db2 has 4 taps).
enum class WaveletFilter { Haar, Db2, Db4, Db8 };

std::string toString(WaveletFilter filter);
WaveletFilter parseWaveletFilter(const std::string& name);

/// Reconstruction lowpass filter, normalized to unit l2 norm.
std::span<const double> lowpassFilter(WaveletFilter filter);

namespace detail {

// One periodic analysis step along a strided line of length len (even).
template <typename Scalar>
void analyzeLine(Scalar* data, Index stride, Index len, std::span<const double> g, Scalar* scratch) {
  const Index half = len / 2;
  const Index taps = static_cast<Index>(g.size());
  for (Index i = 0; i < half; ++i) {
    Scalar a(0), d(0);
    for (Index k = 0; k < taps; ++k) {
      const Scalar x = data[((2 * i + k) % len) * stride];
      const double hk = (k % 2 == 0 ? 1.0 : -1.0) * g[static_cast<std::size_t>(taps - 1 - k)];
      a += static_cast<Scalar>(g[static_cast<std::size_t>(k)]) * x;
      d += static_cast<Scalar>(hk) * x;
    }
    scratch[i] = a;
    scratch[half + i] = d;
  }
  for (Index i = 0; i < len; ++i) data[i * stride] = scratch[i];
}

template <typename Scalar>
void synthesizeLine(Scalar* data, Index stride, Index len, std::span<const double> g, Scalar* scratch) {
  const Index half = len / 2;
  const Index taps = static_cast<Index>(g.size());
  for (Index i = 0; i < len; ++i) scratch[i] = Scalar(0);
  for (Index i = 0; i < half; ++i) {
    const Scalar a = data[i * stride];
    const Scalar d = data[(half + i) * stride];
    for (Index k = 0; k < taps; ++k) {
      const double hk = (k % 2 == 0 ? 1.0 : -1.0) * g[static_cast<std::size_t>(taps - 1 - k)];
      scratch[(2 * i + k) % len] += static_cast<Scalar>(g[static_cast<std::size_t>(k)]) * a + static_cast<Scalar>(hk) * d;
    }
  }
  for (Index i = 0; i < len; ++i) data[i * stride] = scratch[i];
}

}  // namespace detail

/// In-place multilevel periodic 2-D DWT of a column-major h x w plane.
/// Level l transforms the leading (h / 2^l) x (w / 2^l) block.
template <typename Derived>
void dwt2(Eigen::MatrixBase<Derived>& plane, WaveletFilter filter, Index levels) {
  using Scalar = typename Derived::Scalar;
  const auto g = lowpassFilter(filter);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> scratch(std::max(plane.rows(), plane.cols()));
  Index h = plane.rows(), w = plane.cols();
  for (Index l = 0; l < levels; ++l, h /= 2, w /= 2) {
    for (Index c = 0; c < w; ++c) detail::analyzeLine(&plane(0, c), Index(1), h, g, scratch.data());
    for (Index r = 0; r < h; ++r) detail::analyzeLine(&plane(r, 0), plane.outerStride(), w, g, scratch.data());
  }
}

template <typename Derived>
void idwt2(Eigen::MatrixBase<Derived>& plane, WaveletFilter filter, Index levels) {
  using Scalar = typename Derived::Scalar;
  const auto g = lowpassFilter(filter);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> scratch(std::max(plane.rows(), plane.cols()));
  for (Index l = levels - 1; l >= 0; --l) {
    const Index h = plane.rows() >> l, w = plane.cols() >> l;
    for (Index r = 0; r < h; ++r) detail::synthesizeLine(&plane(r, 0), plane.outerStride(), w, g, scratch.data());
    for (Index c = 0; c < w; ++c) detail::synthesizeLine(&plane(0, c), Index(1), h, g, scratch.data());
  }
}

/// Soft-thresholds every detail coefficient of each channel, leaving the
/// coarsest approximation band untouched. Spatial dims must be divisible by 2^levels.
ImageSignal denoiseWaveletSoft(const ImageSignal& x, WaveletFilter filter, Index levels, double threshold);

}  // namespace gsnr
