#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pamlab/errors.hpp"

namespace pamlab {

inline constexpr int kMaxDim = 4;

/// A point of Z^d, d <= kMaxDim. Unused trailing coordinates stay zero so
/// that equality and ordering ignore the dimension.
struct Coord {
  std::array<std::int64_t, kMaxDim> v{};

  std::int64_t& operator[](int j) { return v[static_cast<std::size_t>(j)]; }
  std::int64_t operator[](int j) const { return v[static_cast<std::size_t>(j)]; }
  friend bool operator==(const Coord&, const Coord&) = default;
  friend auto operator<=>(const Coord&, const Coord&) = default;

  static Coord origin() { return Coord{}; }
  static Coord on_axis(int j, std::int64_t value) {
    Coord c;
    c[j] = value;
    return c;
  }
};

std::int64_t l1_distance(const Coord& a, const Coord& b, int dim);
std::int64_t linf_norm(const Coord& a, int dim);
std::string to_string(const Coord& c, int dim);

/// Indexing for the cube [-L, L]^d, either as an absorbing (Dirichlet) box or
/// as a torus of side 2L+1. Index of x is sum_j (x_j + L) * side^j; index()
/// and coord() are mutually inverse on the cube.
enum class Boundary { dirichlet, torus };

class BoxDomain {
 public:
  BoxDomain(int dim, std::int64_t half_width, Boundary boundary);

  int dim() const { return dim_; }
  std::int64_t half_width() const { return half_width_; }
  std::int64_t side() const { return 2 * half_width_ + 1; }
  Boundary boundary() const { return boundary_; }
  std::size_t size() const { return size_; }

  bool contains(const Coord& x) const;
  /// Reduce each coordinate into [-L, L] modulo the side length.
  Coord wrap(const Coord& x) const;
  /// Index of x; x must lie in the cube (wrap first for torus semantics).
  std::size_t index(const Coord& x) const;
  Coord coord(std::size_t index) const;

  /// Neighbour indices of site i: torus wraps, Dirichlet drops off-box ones.
  void neighbours(std::size_t i, std::vector<std::size_t>& out) const;

 private:
  int dim_;
  std::int64_t half_width_;
  Boundary boundary_;
  std::size_t size_;
};

}  // namespace pamlab
