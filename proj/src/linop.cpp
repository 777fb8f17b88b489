#include "gsnr/linop.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gsnr {

std::string toString(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::HadamardCS: return "HadamardCS";
    case OperatorKind::BlockAverageSR: return "BlockAverageSR";
    case OperatorKind::BayerMosaic: return "BayerMosaic";
    case OperatorKind::GaussianBlur: return "GaussianBlur";
    case OperatorKind::ExplicitDense: return "ExplicitDense";
  }
  return "?";
}

OperatorKind parseOperatorKind(const std::string& name) {
  for (auto k : {OperatorKind::HadamardCS, OperatorKind::BlockAverageSR, OperatorKind::BayerMosaic,
                 OperatorKind::GaussianBlur, OperatorKind::ExplicitDense}) {
    if (toString(k) == name) return k;
  }
  throw InvalidArgument("unknown operator kind '" + name + "'");
}

BayerPattern parseBayerPattern(const std::string& name) {
  if (name == "RGGB") return BayerPattern::RGGB;
  if (name == "GRBG") return BayerPattern::GRBG;
  if (name == "GBRG") return BayerPattern::GBRG;
  if (name == "BGGR") return BayerPattern::BGGR;
  throw InvalidArgument("unknown Bayer pattern '" + name + "'");
}

namespace detail {

class OperatorImpl {
 public:
  OperatorImpl(OperatorKind kind, ImageShape shape, Index rows)
      : kind_(kind), shape_(shape), rows_(rows) {}
  virtual ~OperatorImpl() = default;

  virtual Vector apply(const Eigen::Ref<const Vector>& x) const = 0;
  virtual Vector adjoint(const Eigen::Ref<const Vector>& z) const = 0;
  virtual Vector pinvApply(const Eigen::Ref<const Vector>& z) const = 0;
  virtual Vector projectRange(const Eigen::Ref<const Vector>& x) const { return pinvApply(apply(x)); }
  virtual Index nullDim() const { return shape_.size() - rows_; }
  virtual bool exact() const { return true; }
  virtual double sigmaMax() const = 0;
  virtual double svdCutoff() const { return sigmaMax(); }
  virtual void hashParams(Fnv1a& h) const = 0;
  virtual std::string params() const = 0;

  OperatorKind kind() const { return kind_; }
  const ImageShape& shape() const { return shape_; }
  Index rows() const { return rows_; }
  Index cols() const { return shape_.size(); }

 private:
  OperatorKind kind_;
  ImageShape shape_;
  Index rows_;
};

namespace {

class HadamardImpl final : public OperatorImpl {
 public:
  HadamardImpl(ImageShape shape, Index rows) : OperatorImpl(OperatorKind::HadamardCS, shape, rows) {}

  Vector apply(const Eigen::Ref<const Vector>& x) const override {
    Vector full = x;
    fwht(full);
    return full.head(rows());
  }
  Vector adjoint(const Eigen::Ref<const Vector>& z) const override {
    Vector full = Vector::Zero(cols());
    full.head(rows()) = z;
    fwht(full);
    return full;
  }
  // H H^T = n I for Sylvester rows.
  Vector pinvApply(const Eigen::Ref<const Vector>& z) const override {
    return adjoint(z) / static_cast<double>(cols());
  }
  double sigmaMax() const override { return std::sqrt(static_cast<double>(cols())); }
  void hashParams(Fnv1a&) const override {}
  std::string params() const override { return "rows=" + std::to_string(rows()); }
};

class BlockAverageImpl final : public OperatorImpl {
 public:
  BlockAverageImpl(ImageShape shape, Index factor)
      : OperatorImpl(OperatorKind::BlockAverageSR, shape,
                     shape.channels * (shape.height / factor) * (shape.width / factor)),
        factor_(factor) {}

  Vector apply(const Eigen::Ref<const Vector>& x) const override {
    const auto& s = shape();
    const Index lh = s.height / factor_, lw = s.width / factor_;
    const double w = 1.0 / static_cast<double>(factor_ * factor_);
    Vector y = Vector::Zero(rows());
    for (Index c = 0; c < s.channels; ++c)
      for (Index r = 0; r < s.height; ++r)
        for (Index col = 0; col < s.width; ++col)
          y((c * lh + r / factor_) * lw + col / factor_) += w * x(s.index(c, r, col));
    return y;
  }
  Vector adjoint(const Eigen::Ref<const Vector>& z) const override {
    const auto& s = shape();
    const Index lh = s.height / factor_, lw = s.width / factor_;
    const double w = 1.0 / static_cast<double>(factor_ * factor_);
    Vector x(cols());
    for (Index c = 0; c < s.channels; ++c)
      for (Index r = 0; r < s.height; ++r)
        for (Index col = 0; col < s.width; ++col)
          x(s.index(c, r, col)) = w * z((c * lh + r / factor_) * lw + col / factor_);
    return x;
  }
  // H H^T = I / f^2.
  Vector pinvApply(const Eigen::Ref<const Vector>& z) const override {
    return adjoint(z) * static_cast<double>(factor_ * factor_);
  }
  double sigmaMax() const override { return 1.0 / static_cast<double>(factor_); }
  void hashParams(Fnv1a& h) const override { h.value(factor_); }
  std::string params() const override { return "factor=" + std::to_string(factor_); }

 private:
  Index factor_;
};

class BayerImpl final : public OperatorImpl {
 public:
  BayerImpl(ImageShape shape, BayerPattern pattern)
      : OperatorImpl(OperatorKind::BayerMosaic, shape, shape.pixels()), pattern_(pattern) {}

  // Channel sampled at (row, col); 0 = R, 1 = G, 2 = B.
  Index channelAt(Index row, Index col) const {
    static constexpr Index table[4][4] = {
        {0, 1, 1, 2},  // RGGB
        {1, 0, 2, 1},  // GRBG
        {1, 2, 0, 1},  // GBRG
        {2, 1, 1, 0},  // BGGR
    };
    return table[static_cast<int>(pattern_)][(row % 2) * 2 + (col % 2)];
  }

  Vector apply(const Eigen::Ref<const Vector>& x) const override {
    const auto& s = shape();
    Vector y(rows());
    for (Index r = 0; r < s.height; ++r)
      for (Index c = 0; c < s.width; ++c) y(r * s.width + c) = x(s.index(channelAt(r, c), r, c));
    return y;
  }
  Vector adjoint(const Eigen::Ref<const Vector>& z) const override {
    const auto& s = shape();
    Vector x = Vector::Zero(cols());
    for (Index r = 0; r < s.height; ++r)
      for (Index c = 0; c < s.width; ++c) x(s.index(channelAt(r, c), r, c)) = z(r * s.width + c);
    return x;
  }
  Vector pinvApply(const Eigen::Ref<const Vector>& z) const override { return adjoint(z); }
  double sigmaMax() const override { return 1.0; }
  void hashParams(Fnv1a& h) const override { h.value(pattern_); }
  std::string params() const override { return "pattern=" + std::to_string(static_cast<int>(pattern_)); }

 private:
  BayerPattern pattern_;
};

class GaussianBlurImpl final : public OperatorImpl {
 public:
  GaussianBlurImpl(ImageShape shape, double sigma, double threshold)
      : OperatorImpl(OperatorKind::GaussianBlur, shape, shape.size()), sigma_(sigma), threshold_(threshold) {
    const Index h = shape.height, w = shape.width;
    const Index radius = static_cast<Index>(std::ceil(3.0 * sigma));
    kernel_ = Matrix::Zero(h, w);
    double total = 0.0;
    for (Index dy = -radius; dy <= radius; ++dy) {
      for (Index dx = -radius; dx <= radius; ++dx) {
        const double v = std::exp(-static_cast<double>(dy * dy + dx * dx) / (2.0 * sigma * sigma));
        kernel_(((dy % h) + h) % h, ((dx % w) + w) % w) += v;
        total += v;
      }
    }
    kernel_ /= total;

    const Index p = shape.pixels();
    Matrix dense(p, p);
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < p; ++j) {
        const Index dr = ((i / w - j / w) % h + h) % h;
        const Index dc = ((i % w - j % w) % w + w) % w;
        dense(i, j) = kernel_(dr, dc);
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (dense + dense.transpose()));
    if (eig.info() != Eigen::Success) throw NumericalError("blur eigendecomposition failed");
    const Vector& lam = eig.eigenvalues();
    sigmaMax_ = lam.cwiseAbs().maxCoeff();
    const double cut = threshold_ * sigmaMax_;
    Index kept = 0;
    for (Index i = 0; i < p; ++i) kept += std::abs(lam(i)) >= cut ? 1 : 0;
    keptVectors_.resize(p, kept);
    keptValues_.resize(kept);
    cutoff_ = sigmaMax_;
    for (Index i = 0, k = 0; i < p; ++i) {
      if (std::abs(lam(i)) >= cut) {
        keptVectors_.col(k) = eig.eigenvectors().col(i);
        keptValues_(k) = lam(i);
        cutoff_ = std::min(cutoff_, std::abs(lam(i)));
        ++k;
      }
    }
    nullPerChannel_ = p - kept;
  }

  Vector apply(const Eigen::Ref<const Vector>& x) const override { return convolve(x, false); }
  Vector adjoint(const Eigen::Ref<const Vector>& z) const override { return convolve(z, true); }

  Vector pinvApply(const Eigen::Ref<const Vector>& z) const override {
    return perChannel(z, [&](const auto& block) -> Vector {
      Vector coeff = keptVectors_.transpose() * block;
      coeff.array() /= keptValues_.array();
      return keptVectors_ * coeff;
    });
  }
  Vector projectRange(const Eigen::Ref<const Vector>& x) const override {
    return perChannel(x, [&](const auto& block) -> Vector {
      return keptVectors_ * (keptVectors_.transpose() * block);
    });
  }
  Index nullDim() const override { return shape().channels * nullPerChannel_; }
  bool exact() const override { return false; }
  double sigmaMax() const override { return sigmaMax_; }
  double svdCutoff() const override { return cutoff_; }
  void hashParams(Fnv1a& h) const override {
    h.value(sigma_);
    h.value(threshold_);
  }
  std::string params() const override {
    std::ostringstream os;
    os << "sigma=" << sigma_ << ",svd_threshold=" << threshold_;
    return os.str();
  }

 private:
  template <typename F>
  Vector perChannel(const Eigen::Ref<const Vector>& v, F&& f) const {
    const Index p = shape().pixels();
    Vector out(v.size());
    for (Index c = 0; c < shape().channels; ++c) out.segment(c * p, p) = f(v.segment(c * p, p));
    return out;
  }

  Vector convolve(const Eigen::Ref<const Vector>& x, bool transpose) const {
    const Index h = shape().height, w = shape().width;
    Vector out = Vector::Zero(x.size());
    for (Index c = 0; c < shape().channels; ++c) {
      const Index base = c * h * w;
      for (Index dy = 0; dy < h; ++dy) {
        for (Index dx = 0; dx < w; ++dx) {
          const double k = kernel_(dy, dx);
          if (k == 0.0) continue;
          const Index sy = transpose ? dy : (h - dy) % h;
          const Index sx = transpose ? dx : (w - dx) % w;
          for (Index r = 0; r < h; ++r) {
            const Index rr = (r + sy) % h;
            for (Index col = 0; col < w; ++col) {
              out(base + r * w + col) += k * x(base + rr * w + (col + sx) % w);
            }
          }
        }
      }
    }
    return out;
  }

  double sigma_;
  double threshold_;
  Matrix kernel_;
  Matrix keptVectors_;
  Vector keptValues_;
  double sigmaMax_ = 0.0;
  double cutoff_ = 0.0;
  Index nullPerChannel_ = 0;
};

class DenseImpl final : public OperatorImpl {
 public:
  DenseImpl(ImageShape shape, Matrix matrix)
      : OperatorImpl(OperatorKind::ExplicitDense, shape, matrix.rows()), matrix_(std::move(matrix)) {
    const Matrix gram = matrix_ * matrix_.transpose();
    gram_.compute(gram);
    if (gram_.info() != Eigen::Success || gram_.rcond() < 1e-13) {
      throw NumericalError("ExplicitDense operator has a singular Gram matrix H H^T");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    sigmaMax_ = std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
  }

  Vector apply(const Eigen::Ref<const Vector>& x) const override { return matrix_ * x; }
  Vector adjoint(const Eigen::Ref<const Vector>& z) const override { return matrix_.transpose() * z; }
  Vector pinvApply(const Eigen::Ref<const Vector>& z) const override {
    return matrix_.transpose() * gram_.solve(z);
  }
  double sigmaMax() const override { return sigmaMax_; }
  void hashParams(Fnv1a& h) const override {
    h.value(matrix_.rows());
    h.value(matrix_.cols());
    h.bytes(matrix_.data(), sizeof(double) * static_cast<std::size_t>(matrix_.size()));
  }
  std::string params() const override { return "dense " + std::to_string(rows()) + "x" + std::to_string(cols()); }

 private:
  Matrix matrix_;
  Eigen::LLT<Matrix> gram_;
  double sigmaMax_ = 0.0;
};

void validateShape(const ImageShape& s) {
  if (s.channels < 1 || s.height < 1 || s.width < 1) throw InvalidArgument("image shape must be positive");
}

}  // namespace
}  // namespace detail

LinearMap::LinearMap(std::shared_ptr<const detail::OperatorImpl> impl) : impl_(std::move(impl)) {}

OperatorKind LinearMap::kind() const { return impl_->kind(); }
const ImageShape& LinearMap::shape() const { return impl_->shape(); }
Index LinearMap::rows() const { return impl_->rows(); }
Index LinearMap::cols() const { return impl_->cols(); }

Vector LinearMap::apply(const Eigen::Ref<const Vector>& x) const {
  requireSize(x.size(), cols(), "apply");
  return impl_->apply(x);
}

Vector LinearMap::adjoint(const Eigen::Ref<const Vector>& z) const {
  requireSize(z.size(), rows(), "adjoint");
  return impl_->adjoint(z);
}

Vector LinearMap::pinvApply(const Eigen::Ref<const Vector>& z) const {
  requireSize(z.size(), rows(), "pinvApply");
  return impl_->pinvApply(z);
}

Vector LinearMap::projectRange(const Eigen::Ref<const Vector>& x) const {
  requireSize(x.size(), cols(), "projectRange");
  return impl_->projectRange(x);
}

Vector LinearMap::projectNull(const Eigen::Ref<const Vector>& x) const {
  requireSize(x.size(), cols(), "projectNull");
  return x - impl_->projectRange(x);
}

Index LinearMap::nullDim() const { return impl_->nullDim(); }
bool LinearMap::exactNullSpace() const { return impl_->exact(); }
double LinearMap::sigmaMax() const { return impl_->sigmaMax(); }
double LinearMap::svdCutoff() const { return impl_->svdCutoff(); }

Matrix LinearMap::toDense() const {
  if (cols() > kDenseCap) throw InvalidArgument("operator too large to materialize densely");
  Matrix out(rows(), cols());
  Vector e = Vector::Zero(cols());
  for (Index j = 0; j < cols(); ++j) {
    e(j) = 1.0;
    out.col(j) = impl_->apply(e);
    e(j) = 0.0;
  }
  return out;
}

std::uint64_t LinearMap::hash() const {
  Fnv1a h;
  h.value(impl_->kind());
  h.value(shape().channels);
  h.value(shape().height);
  h.value(shape().width);
  h.value(rows());
  impl_->hashParams(h);
  return h.digest();
}

std::string LinearMap::describe() const {
  std::ostringstream os;
  os << toString(kind()) << "[" << shape().channels << "x" << shape().height << "x" << shape().width
     << ", m=" << rows() << ", " << impl_->params() << "]";
  return os.str();
}

LinearMap buildOperator(OperatorKind kind, const ImageShape& shape, const OperatorParams& params) {
  detail::validateShape(shape);
  const Index n = shape.size();
  switch (kind) {
    case OperatorKind::HadamardCS: {
      if (!std::has_single_bit(static_cast<std::uint64_t>(n))) {
        throw InvalidArgument("HadamardCS requires n to be a power of two, got " + std::to_string(n));
      }
      Index m = params.rows;
      if (m == 0) m = static_cast<Index>(std::llround(params.rowFraction * static_cast<double>(n)));
      if (m < 1 || m > n) throw InvalidArgument("HadamardCS requires 1 <= m <= n");
      return LinearMap(std::make_shared<detail::HadamardImpl>(shape, m));
    }
    case OperatorKind::BlockAverageSR: {
      const Index f = params.factor;
      if (f < 1 || shape.height % f != 0 || shape.width % f != 0) {
        throw InvalidArgument("BlockAverageSR requires height and width divisible by the factor");
      }
      return LinearMap(std::make_shared<detail::BlockAverageImpl>(shape, f));
    }
    case OperatorKind::BayerMosaic: {
      if (shape.channels != 3) throw InvalidArgument("BayerMosaic requires 3 channels");
      if (shape.height % 2 != 0 || shape.width % 2 != 0) {
        throw InvalidArgument("BayerMosaic requires even height and width");
      }
      return LinearMap(std::make_shared<detail::BayerImpl>(shape, params.bayer));
    }
    case OperatorKind::GaussianBlur: {
      if (shape.pixels() > kDenseCap) {
        throw InvalidArgument("GaussianBlur dense SVD is capped at " + std::to_string(kDenseCap) +
                              " pixels per channel");
      }
      if (!(params.blurSigma > 0.0) || !(params.svdThreshold >= 0.0)) {
        throw InvalidArgument("GaussianBlur requires sigma > 0 and svd_threshold >= 0");
      }
      return LinearMap(std::make_shared<detail::GaussianBlurImpl>(shape, params.blurSigma, params.svdThreshold));
    }
    case OperatorKind::ExplicitDense:
      return denseOperator(params.dense, shape);
  }
  throw InvalidArgument("unknown operator kind");
}

LinearMap denseOperator(Matrix matrix, const ImageShape& shape) {
  detail::validateShape(shape);
  requireSize(matrix.cols(), shape.size(), "ExplicitDense columns");
  if (matrix.rows() < 1 || matrix.rows() > matrix.cols()) {
    throw InvalidArgument("ExplicitDense requires 1 <= m <= n");
  }
  if (!matrix.allFinite()) throw InvalidArgument("ExplicitDense matrix has non-finite entries");
  return LinearMap(std::make_shared<detail::DenseImpl>(shape, std::move(matrix)));
}

Matrix readDenseCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open matrix file " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument(path + ": empty matrix file");
  Index rows = 0, cols = 0;
  {
    std::istringstream hs(line);
    char comma = 0;
    if (!(hs >> rows >> comma >> cols) || comma != ',' || rows < 1 || cols < 1) {
      throw InvalidArgument(path + ":1: header must be 'rows,cols'");
    }
  }
  Matrix out(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw InvalidArgument(path + ": missing row " + std::to_string(r + 1));
    std::istringstream ls(line);
    std::string cell;
    Index c = 0;
    while (std::getline(ls, cell, ',')) {
      if (c >= cols) throw InvalidArgument(path + ":" + std::to_string(r + 2) + ": too many columns");
      try {
        out(r, c++) = std::stod(cell);
      } catch (const std::exception&) {
        throw InvalidArgument(path + ":" + std::to_string(r + 2) + ": bad number '" + cell + "'");
      }
    }
    if (c != cols) throw InvalidArgument(path + ":" + std::to_string(r + 2) + ": too few columns");
  }
  return out;
}

RnsdSplit rnsdSplit(const LinearMap& op, const ImageSignal& x) {
  if (!(x.shape == op.shape())) throw DimensionError("rnsdSplit: image shape does not match operator");
  Vector range = op.projectRange(x.data);
  Vector null = x.data - range;
  return {ImageSignal{x.shape, std::move(range)}, ImageSignal{x.shape, std::move(null)}};
}

Vector measure(const LinearMap& op, const Eigen::Ref<const Vector>& x, double sigma2, std::mt19937_64& rng) {
  if (sigma2 < 0.0) throw InvalidArgument("noise variance must be nonnegative");
  Vector y = op.apply(x);
  if (sigma2 > 0.0) {
    std::normal_distribution<double> normal(0.0, std::sqrt(sigma2));
    for (Index i = 0; i < y.size(); ++i) y(i) += normal(rng);
  }
  return y;
}

}  // namespace gsnr
