#include "gsnr/spectral.hpp"

#include "gsnr/csv.hpp"
#include "gsnr/lanczos.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace gsnr {

GraphLaplacian laplacianFor(Topology topology, const ImageShape& shape) {
  return symmetrized(channelLift(buildLaplacian(topology, shape.height, shape.width), shape.channels));
}

Vector applyNullRestricted(const LinearMap& H, const GraphLaplacian& L, const Eigen::Ref<const Vector>& x) {
  requireSize(x.size(), H.cols(), "applyNullRestricted");
  requireSize(L.nodes(), H.cols(), "Laplacian nodes");
  const Vector xn = H.projectNull(x);
  Vector Lx = L.matrix * xn;
  if (!L.symmetric) Lx = 0.5 * (Lx + L.matrix.transpose() * xn);
  return H.projectNull(Lx);
}

void applySignConvention(Matrix& vectors) {
  for (Index j = 0; j < vectors.cols(); ++j) {
    for (Index i = 0; i < vectors.rows(); ++i) {
      if (std::abs(vectors(i, j)) > 1e-12) {
        if (vectors(i, j) < 0) vectors.col(j) *= -1.0;
        break;
      }
    }
  }
}

namespace {

void checkK(const LinearMap& H, Index k) {
  if (k < 0 || k > H.nullDim()) {
    throw InvalidArgument("requested " + std::to_string(k) + " modes but Null(H) has dimension " +
                          std::to_string(H.nullDim()));
  }
}

Vector residualsOf(const LinearMap& H, const GraphLaplacian& L, const Matrix& V, const Vector& mu) {
  Vector r(V.cols());
  for (Index i = 0; i < V.cols(); ++i) r(i) = (applyNullRestricted(H, L, V.col(i)) - mu(i) * V.col(i)).norm();
  return r;
}

}  // namespace

NullSpectralBasis eigSmallestNull(const LinearMap& H, const GraphLaplacian& L, Index k, const EigOptions& options) {
  checkK(H, k);
  requireSize(L.nodes(), H.cols(), "Laplacian nodes");
  const GraphLaplacian Ls = symmetrized(L);
  const double c = spectralBound(Ls) + 1.0;

  auto op = [&](const Vector& v) -> Vector { return c * v - applyNullRestricted(H, Ls, v); };
  auto project = [&](const Vector& v) -> Vector { return H.projectNull(v); };

  LanczosOptions<double> lo;
  lo.tol = options.tol;
  lo.maxRestarts = options.maxRestarts;
  lo.krylovDim = options.krylovDim;
  lo.seed = options.seed;
  auto res = lanczosLargest<double>(op, project, H.cols(), H.nullDim(), k, lo);
  if (!res.converged) {
    std::ostringstream os;
    os << "Lanczos did not converge: " << res.values.size() << " of " << k << " pairs after " << res.cycles
       << " cycles";
    if (res.residuals.size() > 0) os << ", worst residual " << res.residuals.maxCoeff();
    throw NumericalError(os.str());
  }

  NullSpectralBasis basis;
  basis.vectors = std::move(res.vectors);
  basis.flippedValues = res.values;
  basis.eigenvalues = (c - res.values.array()).matrix();
  applySignConvention(basis.vectors);
  basis.nullDim = H.nullDim();
  basis.topology = L.topology;
  basis.operatorHash = H.hash();
  basis.tolerance = options.tol;
  basis.flipShift = c;
  basis.residuals = residualsOf(H, Ls, basis.vectors, basis.eigenvalues);
  return basis;
}

NullSpectralBasis eigDenseNull(const LinearMap& H, const GraphLaplacian& L, Index k, Index* discarded) {
  checkK(H, k);
  const Index n = H.cols();
  if (n > kDenseCap) throw InvalidArgument("dense eigensolver is capped at n = " + std::to_string(kDenseCap));
  requireSize(L.nodes(), n, "Laplacian nodes");
  const GraphLaplacian Ls = symmetrized(L);

  Matrix Pn(n, n);
  Vector e = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    e(j) = 1.0;
    Pn.col(j) = H.projectNull(e);
    e(j) = 0.0;
  }
  Pn = 0.5 * (Pn + Pn.transpose()).eval();
  const Matrix Ld = Matrix(Ls.matrix);
  const double shift = spectralBound(Ls) + 1.0;
  // Range eigenvectors of T share mu = 0 with smooth null modes; shifting the
  // range block to c separates them cleanly.
  Matrix M = Pn * Ld * Pn + shift * (Matrix::Identity(n, n) - Pn);
  M = 0.5 * (M + M.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
  if (eig.info() != Eigen::Success) throw NumericalError("dense eigendecomposition of T failed");

  std::vector<Index> keep;
  for (Index i = 0; i < n; ++i) {
    const auto v = eig.eigenvectors().col(i);
    if ((Pn * v - v).norm() <= 1e-8) keep.push_back(i);
  }
  if (discarded) *discarded = n - static_cast<Index>(keep.size());
  if (static_cast<Index>(keep.size()) < k) {
    throw NumericalError("dense eigensolver found only " + std::to_string(keep.size()) + " null-space modes");
  }

  NullSpectralBasis basis;
  basis.vectors.resize(n, k);
  basis.eigenvalues.resize(k);
  for (Index j = 0; j < k; ++j) {
    basis.vectors.col(j) = eig.eigenvectors().col(keep[static_cast<std::size_t>(j)]);
    basis.eigenvalues(j) = eig.eigenvalues()(keep[static_cast<std::size_t>(j)]);
  }
  applySignConvention(basis.vectors);
  basis.nullDim = H.nullDim();
  basis.topology = L.topology;
  basis.operatorHash = H.hash();
  basis.tolerance = 1e-8;
  basis.flipShift = shift;
  basis.flippedValues = (shift - basis.eigenvalues.array()).matrix();
  basis.residuals = residualsOf(H, Ls, basis.vectors, basis.eigenvalues);
  return basis;
}

NullSpectralBasis buildS(const NullSpectralBasis& basis, Index p) {
  if (p < 0 || p > basis.size()) {
    throw InvalidArgument("p = " + std::to_string(p) + " outside [0, " + std::to_string(basis.size()) + "]");
  }
  NullSpectralBasis out = basis;
  out.vectors = basis.vectors.leftCols(p);
  out.eigenvalues = basis.eigenvalues.head(p);
  if (basis.flippedValues.size() >= p) out.flippedValues = basis.flippedValues.head(p);
  if (basis.residuals.size() >= p) out.residuals = basis.residuals.head(p);
  applySignConvention(out.vectors);
  return out;
}

Vector projectS(const NullSpectralBasis& basis, const Eigen::Ref<const Vector>& x) {
  requireSize(x.size(), basis.dim(), "projectS");
  return basis.vectors.transpose() * x;
}

Vector liftS(const NullSpectralBasis& basis, const Eigen::Ref<const Vector>& a) {
  requireSize(a.size(), basis.size(), "liftS");
  return basis.vectors * a;
}

void writeBasisCsv(const NullSpectralBasis& basis, const std::string& path) {
  std::string out = "n,p,q,topology\n";
  out += std::to_string(basis.dim()) + "," + std::to_string(basis.size()) + "," + std::to_string(basis.nullDim) +
         "," + toString(basis.topology) + "\n";
  for (Index j = 0; j < basis.size(); ++j) {
    out += formatNumber(basis.eigenvalues(j), 17);
    for (Index i = 0; i < basis.dim(); ++i) {
      out += ',';
      out += formatNumber(basis.vectors(i, j), 17);
    }
    out += '\n';
  }
  writeTextFile(path, out);
}

NullSpectralBasis readBasisCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open basis file " + path);
  std::string line;
  if (!std::getline(in, line) || line != "n,p,q,topology") throw Error(path + ":1: bad basis header");
  if (!std::getline(in, line)) throw Error(path + ":2: missing basis dimensions");
  NullSpectralBasis basis;
  Index n = 0, p = 0;
  {
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) throw Error(path + ":2: expected n,p,q,topology");
    n = std::stoll(cells[0]);
    p = std::stoll(cells[1]);
    basis.nullDim = std::stoll(cells[2]);
    basis.topology = parseTopology(cells[3]);
  }
  basis.vectors.resize(n, p);
  basis.eigenvalues.resize(p);
  for (Index j = 0; j < p; ++j) {
    if (!std::getline(in, line)) throw Error(path + ": missing mode " + std::to_string(j + 1));
    std::istringstream ss(line);
    std::string cell;
    Index i = -1;
    while (std::getline(ss, cell, ',')) {
      if (i >= n) throw Error(path + ":" + std::to_string(j + 3) + ": too many entries");
      const double v = std::stod(cell);
      if (i < 0) {
        basis.eigenvalues(j) = v;
      } else {
        basis.vectors(i, j) = v;
      }
      ++i;
    }
    if (i != n) throw Error(path + ":" + std::to_string(j + 3) + ": expected " + std::to_string(n + 1) + " entries");
  }
  return basis;
}

}  // namespace gsnr
