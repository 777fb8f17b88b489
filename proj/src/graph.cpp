#include "gsnr/graph.hpp"

#include "gsnr/csv.hpp"

#include <cmath>
#include <vector>

namespace gsnr {

std::string toString(Topology topology) {
  switch (topology) {
    case Topology::Grid4NN: return "Grid4NN";
    case Topology::Grid8NN: return "Grid8NN";
    case Topology::RandomWalk: return "RandomWalk";
    case Topology::SymNormalized: return "SymNormalized";
    case Topology::Identity: return "Identity";
  }
  return "?";
}

Topology parseTopology(const std::string& name) {
  for (auto t : {Topology::Grid4NN, Topology::Grid8NN, Topology::RandomWalk, Topology::SymNormalized,
                 Topology::Identity}) {
    if (toString(t) == name) return t;
  }
  throw InvalidArgument("unknown Laplacian topology '" + name + "'");
}

Vector GraphLaplacian::apply(const Eigen::Ref<const Vector>& x) const {
  requireSize(x.size(), nodes(), "Laplacian apply");
  return matrix * x;
}

namespace {

using Triplet = Eigen::Triplet<double>;

// Weighted adjacency of the open grid as a triplet list (both directions).
std::vector<Triplet> gridEdges(Index h, Index w, bool diagonals) {
  std::vector<Triplet> edges;
  const double wd = 1.0 / std::sqrt(2.0);
  auto link = [&](Index r0, Index c0, Index r1, Index c1, double weight) {
    if (r1 < 0 || r1 >= h || c1 < 0 || c1 >= w) return;
    edges.emplace_back(r0 * w + c0, r1 * w + c1, weight);
    edges.emplace_back(r1 * w + c1, r0 * w + c0, weight);
  };
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      link(r, c, r, c + 1, 1.0);
      link(r, c, r + 1, c, 1.0);
      if (diagonals) {
        link(r, c, r + 1, c + 1, wd);
        link(r, c, r + 1, c - 1, wd);
      }
    }
  }
  return edges;
}

}  // namespace

GraphLaplacian buildLaplacian(Topology topology, Index height, Index width) {
  if (height < 1 || width < 1) throw InvalidArgument("Laplacian grid must be non-empty");
  const Index n = height * width;
  GraphLaplacian L;
  L.topology = topology;
  L.height = height;
  L.width = width;
  L.matrix.resize(n, n);

  if (topology == Topology::Identity) {
    L.matrix.setIdentity();
    return L;
  }

  const auto edges = gridEdges(height, width, topology == Topology::Grid8NN);
  Vector degree = Vector::Zero(n);
  for (const auto& e : edges) degree(e.row()) += e.value();

  std::vector<Triplet> entries;
  entries.reserve(edges.size() + static_cast<std::size_t>(n));
  switch (topology) {
    case Topology::Grid4NN:
    case Topology::Grid8NN:
      for (Index i = 0; i < n; ++i) entries.emplace_back(i, i, degree(i));
      for (const auto& e : edges) entries.emplace_back(e.row(), e.col(), -e.value());
      break;
    case Topology::RandomWalk:
      for (Index i = 0; i < n; ++i) entries.emplace_back(i, i, degree(i) > 0 ? 1.0 : 0.0);
      for (const auto& e : edges) entries.emplace_back(e.row(), e.col(), -e.value() / degree(e.row()));
      L.symmetric = false;
      break;
    case Topology::SymNormalized:
      for (Index i = 0; i < n; ++i) entries.emplace_back(i, i, degree(i) > 0 ? 1.0 : 0.0);
      for (const auto& e : edges) {
        entries.emplace_back(e.row(), e.col(), -e.value() / std::sqrt(degree(e.row()) * degree(e.col())));
      }
      break;
    case Topology::Identity:
      break;
  }
  L.matrix.setFromTriplets(entries.begin(), entries.end());
  L.matrix.makeCompressed();
  return L;
}

double dirichletEnergy(const GraphLaplacian& L, const Eigen::Ref<const Vector>& x) {
  if (!L.symmetric) throw InvalidArgument("Dirichlet energy needs a symmetric Laplacian");
  return x.dot(L.apply(x));
}

GraphLaplacian channelLift(const GraphLaplacian& L, Index channels) {
  if (channels < 1) throw InvalidArgument("channel count must be positive");
  if (channels == 1) return L;
  GraphLaplacian out = L;
  const Index n = L.nodes();
  out.channels = L.channels * channels;
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(L.matrix.nonZeros() * channels));
  for (Index c = 0; c < channels; ++c) {
    for (Index i = 0; i < n; ++i) {
      for (SparseMatrix::InnerIterator it(L.matrix, i); it; ++it) {
        entries.emplace_back(c * n + i, c * n + it.col(), it.value());
      }
    }
  }
  out.matrix.resize(n * channels, n * channels);
  out.matrix.setFromTriplets(entries.begin(), entries.end());
  out.matrix.makeCompressed();
  return out;
}

GraphLaplacian symmetrized(const GraphLaplacian& L) {
  if (L.symmetric) return L;
  GraphLaplacian out = L;
  SparseMatrix transposed = L.matrix.transpose();
  out.matrix = 0.5 * (L.matrix + transposed);
  out.matrix.makeCompressed();
  out.symmetric = true;
  return out;
}

double spectralBound(const GraphLaplacian& L) {
  if (!L.symmetric) throw InvalidArgument("spectral bound needs a symmetric Laplacian");
  double bound = 0.0;
  for (Index i = 0; i < L.nodes(); ++i) {
    double diag = 0.0, off = 0.0;
    for (SparseMatrix::InnerIterator it(L.matrix, i); it; ++it) {
      if (it.col() == i) {
        diag += it.value();
      } else {
        off += std::abs(it.value());
      }
    }
    bound = std::max(bound, diag + std::max(diag, off));
  }
  return bound;
}

void writeTriplets(const GraphLaplacian& L, const std::string& path) {
  CsvTable table({"i", "j", "value"});
  for (Index i = 0; i < L.nodes(); ++i) {
    for (SparseMatrix::InnerIterator it(L.matrix, i); it; ++it) {
      table.addRow({static_cast<double>(i), static_cast<double>(it.col()), it.value()});
    }
  }
  table.write(path);
}

}  // namespace gsnr
