#pragma once

#include "gsnr/image.hpp"

#include <memory>
#include <random>
#include <string>

namespace gsnr {

enum class OperatorKind { HadamardCS, BlockAverageSR, BayerMosaic, GaussianBlur, ExplicitDense };

enum class BayerPattern { RGGB, GRBG, GBRG, BGGR };

std::string toString(OperatorKind kind);
OperatorKind parseOperatorKind(const std::string& name);
BayerPattern parseBayerPattern(const std::string& name);

struct OperatorParams {
  // HadamardCS: explicit row count wins over the fraction when nonzero.
  Index rows = 0;
  double rowFraction = 0.1;
  // BlockAverageSR
  Index factor = 4;
  // BayerMosaic
  BayerPattern bayer = BayerPattern::RGGB;
  // GaussianBlur
  double blurSigma = 1.0;
  double svdThreshold = 1e-3;
  // ExplicitDense
  Matrix dense;
};

namespace detail {
class OperatorImpl;
}

/// An m x n sensing operator with its pseudoinverse and range/null projectors.
///
/// Immutable once built; copies share the implementation. Every method is
/// const and safe to call concurrently.
class LinearMap {
 public:
  explicit LinearMap(std::shared_ptr<const detail::OperatorImpl> impl);

  OperatorKind kind() const;
  const ImageShape& shape() const;
  Index rows() const;
  Index cols() const;

  Vector apply(const Eigen::Ref<const Vector>& x) const;
  Vector adjoint(const Eigen::Ref<const Vector>& z) const;
  /// H^+ z = H^T (H H^T)^{-1} z, or the thresholded SVD inverse for blur.
  Vector pinvApply(const Eigen::Ref<const Vector>& z) const;
  Vector projectRange(const Eigen::Ref<const Vector>& x) const;
  Vector projectNull(const Eigen::Ref<const Vector>& x) const;

  /// n - m for the exact kinds; count of discarded singular directions for blur.
  Index nullDim() const;
  bool exactNullSpace() const;
  /// Largest singular value of H.
  double sigmaMax() const;
  /// Smallest singular value kept by the pseudoinverse (blur), or sigmaMax for exact kinds.
  double svdCutoff() const;

  Matrix toDense() const;
  std::uint64_t hash() const;
  std::string describe() const;

 private:
  std::shared_ptr<const detail::OperatorImpl> impl_;
};

struct RnsdSplit {
  ImageSignal rangePart;
  ImageSignal nullPart;
};

LinearMap buildOperator(OperatorKind kind, const ImageShape& shape, const OperatorParams& params = {});
LinearMap denseOperator(Matrix matrix, const ImageShape& shape);

/// Reads a row-major matrix whose first line is "rows,cols".
Matrix readDenseCsv(const std::string& path);

RnsdSplit rnsdSplit(const LinearMap& op, const ImageSignal& x);

/// y = Hx + w with w ~ N(0, sigma2 I).
Vector measure(const LinearMap& op, const Eigen::Ref<const Vector>& x, double sigma2, std::mt19937_64& rng);

/// Sylvester-ordered fast Walsh-Hadamard transform, in place; size must be a power of two.
template <typename Derived>
void fwht(Eigen::MatrixBase<Derived>& v) {
  const Index n = v.size();
  for (Index h = 1; h < n; h *= 2) {
    for (Index i = 0; i < n; i += 2 * h) {
      for (Index j = i; j < i + h; ++j) {
        const auto a = v(j);
        const auto b = v(j + h);
        v(j) = a + b;
        v(j + h) = a - b;
      }
    }
  }
}

}  // namespace gsnr
