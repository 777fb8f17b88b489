#pragma once

#include "gsnr/types.hpp"

#include <string>

namespace gsnr {

enum class Topology { Grid4NN, Grid8NN, RandomWalk, SymNormalized, Identity };

std::string toString(Topology topology);
Topology parseTopology(const std::string& name);

/// Sparse graph Laplacian on an open height x width pixel grid, optionally
/// replicated over channels (I_C kron L).
struct GraphLaplacian {
  Topology topology = Topology::Grid4NN;
  Index height = 0;
  Index width = 0;
  Index channels = 1;
  bool symmetric = true;
  SparseMatrix matrix;

  Index nodes() const { return matrix.rows(); }
  Vector apply(const Eigen::Ref<const Vector>& x) const;
};

GraphLaplacian buildLaplacian(Topology topology, Index height, Index width);

/// x^T L x; rejects asymmetric Laplacians.
double dirichletEnergy(const GraphLaplacian& L, const Eigen::Ref<const Vector>& x);

GraphLaplacian channelLift(const GraphLaplacian& L, Index channels);

/// (L + L^T)/2; a no-op for symmetric inputs.
GraphLaplacian symmetrized(const GraphLaplacian& L);

/// max_i (L_ii + max(L_ii, sum_{j != i} |L_ij|)), an upper bound on lambda_max.
double spectralBound(const GraphLaplacian& L);

/// Writes "i,j,value" lines (header included) for every stored entry.
void writeTriplets(const GraphLaplacian& L, const std::string& path);

}  // namespace gsnr
