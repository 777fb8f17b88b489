#pragma once

#include "gsnr/types.hpp"

namespace gsnr {

/// Channel-major image layout: index = (c * height + row) * width + col.
struct ImageShape {
  Index channels = 1;
  Index height = 1;
  Index width = 1;

  Index pixels() const { return height * width; }
  Index size() const { return channels * height * width; }
  Index index(Index c, Index row, Index col) const { return (c * height + row) * width + col; }
  bool operator==(const ImageShape&) const = default;
};

struct ImageSignal {
  ImageShape shape;
  Vector data;

  /// Validates size and finiteness.
  static ImageSignal make(ImageShape shape, Vector data);
  static ImageSignal zeros(ImageShape shape) { return {shape, Vector::Zero(shape.size())}; }
};

inline ImageSignal ImageSignal::make(ImageShape shape, Vector data) {
  if (shape.channels < 1 || shape.height < 1 || shape.width < 1) {
    throw InvalidArgument("image shape must be positive");
  }
  requireSize(data.size(), shape.size(), "ImageSignal");
  if (!data.allFinite()) throw InvalidArgument("ImageSignal contains non-finite entries");
  return {shape, std::move(data)};
}

}  // namespace gsnr
