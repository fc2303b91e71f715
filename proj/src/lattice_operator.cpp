#include "pamlab/lattice_operator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pamlab {

std::string to_string(OperatorBoundary b) {
  switch (b) {
    case OperatorBoundary::neumann: return "neumann";
    case OperatorBoundary::dirichlet: return "dirichlet";
    case OperatorBoundary::torus: return "torus";
  }
  return "unknown";
}

OperatorBoundary operator_boundary_from_string(const std::string& name) {
  for (auto b : {OperatorBoundary::neumann, OperatorBoundary::dirichlet, OperatorBoundary::torus})
    if (to_string(b) == name) return b;
  throw ConfigError("unknown boundary '" + name + "'");
}

LatticeOperator::LatticeOperator(int dim, std::int64_t half_width, OperatorBoundary boundary,
                                 double diffusion, std::vector<double> potential)
    : box_(dim, half_width,
           boundary == OperatorBoundary::torus ? Boundary::torus : Boundary::dirichlet),
      boundary_(boundary),
      diffusion_(diffusion),
      potential_(std::move(potential)) {
  const std::size_t n = box_.size();
  if (potential_.empty()) potential_.assign(n, 0.0);
  if (potential_.size() != n) throw ContractError("potential length does not match the box");
  if (boundary == OperatorBoundary::torus && half_width < 1)
    throw ParameterError("a torus needs half-width >= 1");
  for (double v : potential_)
    if (!std::isfinite(v)) throw ContractError("potential values must be finite");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n * static_cast<std::size_t>(2 * dim + 1));
  std::vector<std::size_t> nbrs;
  for (std::size_t i = 0; i < n; ++i) {
    box_.neighbours(i, nbrs);
    for (std::size_t j : nbrs) triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), diffusion);
    const double degree =
        boundary == OperatorBoundary::neumann ? static_cast<double>(nbrs.size()) : 2.0 * dim;
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), -diffusion * degree + potential_[i]);
  }
  matrix_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();
}

double LatticeOperator::norm_inf() const {
  double m = 0.0;
  for (Eigen::Index r = 0; r < matrix_.outerSize(); ++r) {
    double s = 0.0;
    for (Sparse::InnerIterator it(matrix_, r); it; ++it) s += std::abs(it.value());
    m = std::max(m, s);
  }
  return m;
}

double LatticeOperator::min_diagonal() const {
  return matrix_.diagonal().minCoeff();
}

LatticeOperator::Sparse neumann_on_sites(const std::vector<Coord>& sites, int dim,
                                         double diffusion, const std::vector<double>& potential) {
  const std::size_t n = sites.size();
  if (!potential.empty() && potential.size() != n)
    throw ContractError("potential length does not match the site set");
  std::map<Coord, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i)
    if (!index.emplace(sites[i], i).second) throw ContractError("duplicate site in site set");
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (int j = 0; j < dim; ++j) {
      for (int s : {-1, 1}) {
        Coord y = sites[i];
        y[j] += s;
        auto it = index.find(y);
        if (it == index.end()) continue;
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(it->second), diffusion);
        degree += 1.0;
      }
    }
    const double v = potential.empty() ? 0.0 : potential[i];
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), -diffusion * degree + v);
  }
  LatticeOperator::Sparse m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace pamlab
