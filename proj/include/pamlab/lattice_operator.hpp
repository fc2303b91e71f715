#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstddef>
#include <string>
#include <vector>

#include "pamlab/lattice.hpp"

namespace pamlab {

/// neumann: graph Laplacian of the box itself (degree = in-box neighbours).
/// dirichlet: couplings leaving the box dropped, full degree 2d kept.
/// torus: periodic wrap.
enum class OperatorBoundary { neumann, dirichlet, torus };

std::string to_string(OperatorBoundary b);
OperatorBoundary operator_boundary_from_string(const std::string& name);

/// diffusion * Laplacian + diag(potential) on the cube [-L, L]^d, indexed as
/// BoxDomain. Immutable after construction.
class LatticeOperator {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  LatticeOperator(int dim, std::int64_t half_width, OperatorBoundary boundary, double diffusion,
                  std::vector<double> potential = {});

  const BoxDomain& box() const { return box_; }
  OperatorBoundary boundary() const { return boundary_; }
  double diffusion() const { return diffusion_; }
  const std::vector<double>& potential() const { return potential_; }
  std::size_t size() const { return box_.size(); }

  const Sparse& matrix() const { return matrix_; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix_); }
  void apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const { out = matrix_ * v; }

  /// Largest absolute row sum.
  double norm_inf() const;
  /// Smallest diagonal entry.
  double min_diagonal() const;

 private:
  BoxDomain box_;
  OperatorBoundary boundary_;
  double diffusion_;
  std::vector<double> potential_;
  Sparse matrix_;
};

/// Operator on an arbitrary finite site set with Neumann (graph) Laplacian
/// of the induced nearest-neighbour graph.
LatticeOperator::Sparse neumann_on_sites(const std::vector<Coord>& sites, int dim,
                                         double diffusion,
                                         const std::vector<double>& potential = {});

}  // namespace pamlab
