#pragma once

#include "gsnr/graph.hpp"
#include "gsnr/image.hpp"
#include "gsnr/linop.hpp"

#include <string>

namespace gsnr {

/// The p smoothest eigenvectors of T = P_n L P_n inside Null(H).
///
/// Column i of `vectors` is v_{i+1}; S = vectors^T.
struct NullSpectralBasis {
  Matrix vectors;
  Vector eigenvalues;  // ascending
  Index nullDim = 0;
  Topology topology = Topology::Grid4NN;
  std::uint64_t operatorHash = 0;
  double tolerance = 0.0;
  // Eigensolver record: shift c of B = cI - T, eigenvalues of B, residuals |T v - mu v|.
  double flipShift = 0.0;
  Vector flippedValues;
  Vector residuals;

  Index size() const { return vectors.cols(); }
  Index dim() const { return vectors.rows(); }
};

/// Builds the Laplacian for an image shape: pixel grid, channel lift, and
/// symmetrization of asymmetric variants.
GraphLaplacian laplacianFor(Topology topology, const ImageShape& shape);

/// P_n L P_n x; asymmetric L acts through (L + L^T)/2.
Vector applyNullRestricted(const LinearMap& H, const GraphLaplacian& L, const Eigen::Ref<const Vector>& x);

struct EigOptions {
  double tol = 1e-10;
  Index maxRestarts = 0;  // 0 = 50 per mode
  Index krylovDim = 0;    // 0 = automatic
  std::uint64_t seed = 0x5eed5eedULL;
};

/// k smallest eigenpairs of T on Null(H) by projected Lanczos on cI - T.
NullSpectralBasis eigSmallestNull(const LinearMap& H, const GraphLaplacian& L, Index k, const EigOptions& options = {});

/// Dense oracle: EVD of T + c P_r, keeping eigenvectors that lie in Null(H).
/// `discarded` receives the number of range-space eigenvectors dropped.
NullSpectralBasis eigDenseNull(const LinearMap& H, const GraphLaplacian& L, Index k, Index* discarded = nullptr);

/// First p modes with the sign convention applied.
NullSpectralBasis buildS(const NullSpectralBasis& basis, Index p);

/// Flips each column so that its first entry above 1e-12 in magnitude is positive.
void applySignConvention(Matrix& vectors);

Vector projectS(const NullSpectralBasis& basis, const Eigen::Ref<const Vector>& x);
Vector liftS(const NullSpectralBasis& basis, const Eigen::Ref<const Vector>& a);

/// Header "n,p,q,topology", then one row per mode: mu followed by the n vector entries.
void writeBasisCsv(const NullSpectralBasis& basis, const std::string& path);
NullSpectralBasis readBasisCsv(const std::string& path);

}  // namespace gsnr
