#include "pamlab/lattice.hpp"

#include <cstdlib>
#include <limits>
#include <sstream>

namespace pamlab {

std::int64_t l1_distance(const Coord& a, const Coord& b, int dim) {
  std::int64_t s = 0;
  for (int j = 0; j < dim; ++j) s += std::llabs(a[j] - b[j]);
  return s;
}

std::int64_t linf_norm(const Coord& a, int dim) {
  std::int64_t m = 0;
  for (int j = 0; j < dim; ++j) m = std::max<std::int64_t>(m, std::llabs(a[j]));
  return m;
}

std::string to_string(const Coord& c, int dim) {
  std::ostringstream os;
  for (int j = 0; j < dim; ++j) {
    if (j) os << ' ';
    os << c[j];
  }
  return os.str();
}

BoxDomain::BoxDomain(int dim, std::int64_t half_width, Boundary boundary)
    : dim_(dim), half_width_(half_width), boundary_(boundary), size_(1) {
  if (dim < 1 || dim > kMaxDim)
    throw ParameterError("dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  if (half_width < 0) throw ParameterError("box half-width must be non-negative");
  const auto s = static_cast<std::size_t>(side());
  for (int j = 0; j < dim; ++j) {
    if (size_ > std::numeric_limits<std::size_t>::max() / s)
      throw ResourceError("box site count overflows");
    size_ *= s;
  }
}

bool BoxDomain::contains(const Coord& x) const {
  for (int j = 0; j < dim_; ++j)
    if (x[j] < -half_width_ || x[j] > half_width_) return false;
  return true;
}

Coord BoxDomain::wrap(const Coord& x) const {
  Coord r;
  const std::int64_t s = side();
  for (int j = 0; j < dim_; ++j) {
    std::int64_t v = (x[j] + half_width_) % s;
    if (v < 0) v += s;
    r[j] = v - half_width_;
  }
  return r;
}

std::size_t BoxDomain::index(const Coord& x) const {
  std::size_t idx = 0;
  std::size_t stride = 1;
  const auto s = static_cast<std::size_t>(side());
  for (int j = 0; j < dim_; ++j) {
    idx += static_cast<std::size_t>(x[j] + half_width_) * stride;
    stride *= s;
  }
  return idx;
}

Coord BoxDomain::coord(std::size_t index) const {
  Coord c;
  const auto s = static_cast<std::size_t>(side());
  for (int j = 0; j < dim_; ++j) {
    c[j] = static_cast<std::int64_t>(index % s) - half_width_;
    index /= s;
  }
  return c;
}

void BoxDomain::neighbours(std::size_t i, std::vector<std::size_t>& out) const {
  out.clear();
  const Coord c = coord(i);
  for (int j = 0; j < dim_; ++j) {
    for (int sgn : {1, -1}) {
      Coord n = c;
      n[j] += sgn;
      if (contains(n)) {
        out.push_back(index(n));
      } else if (boundary_ == Boundary::torus) {
        out.push_back(index(wrap(n)));
      }
    }
  }
}

}  // namespace pamlab
