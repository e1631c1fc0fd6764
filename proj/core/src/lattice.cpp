#include "bosecone/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace bosecone {

std::uint64_t binomial(int n, int k) {
  if (n < 0 || k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    // r * num / i is exact at every step; guard the multiply.
    if (r > UINT64_MAX / num) throw ValidationError("binomial: 64-bit overflow");
    r = r * num / i;
  }
  return r;
}

std::uint64_t isqrt(std::uint64_t v) {
  if (v == 0) return 0;
  std::uint64_t r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(v)));
  while (r > 0 && r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

Region::Region(std::initializer_list<int> s) : sites(s) {
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
}

Region::Region(std::vector<int> s) : sites(std::move(s)) {
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
}

bool Region::contains(int site) const {
  return std::binary_search(sites.begin(), sites.end(), site);
}

bool regions_disjoint(const Region& a, const Region& b) {
  for (int s : a.sites)
    if (b.contains(s)) return false;
  return true;
}

LatticeGeometry LatticeGeometry::hypercubic(int dimension, const std::vector<int>& extents,
                                            std::size_t site_cap) {
  if (dimension < 1) throw ValidationError("lattice: dimension must be >= 1");
  if (static_cast<int>(extents.size()) != dimension)
    throw ValidationError("lattice: extents size must equal dimension");
  std::size_t total = 1;
  for (int e : extents) {
    if (e < 1) throw ValidationError("lattice: every extent must be >= 1");
    total *= static_cast<std::size_t>(e);
    if (total > site_cap) {
      std::ostringstream os;
      os << "lattice: site count exceeds cap " << site_cap;
      throw ValidationError(os.str());
    }
  }

  LatticeGeometry g;
  g.dimension_ = dimension;
  g.extents_ = extents;
  g.strides_.assign(dimension, 1);
  for (int d = dimension - 2; d >= 0; --d) g.strides_[d] = g.strides_[d + 1] * extents[d + 1];

  g.coords_.resize(total);
  std::vector<int> c(dimension, 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    g.coords_[idx] = c;
    for (int d = dimension - 1; d >= 0; --d) {
      if (++c[d] < extents[d]) break;
      c[d] = 0;
    }
  }
  return g;
}

LatticeGeometry LatticeGeometry::chain(int n_sites) {
  return hypercubic(1, {n_sites});
}

const std::vector<int>& LatticeGeometry::coordinates(int site) const {
  if (site < 0 || site >= n_sites()) throw ValidationError("lattice: site index out of range");
  return coords_[static_cast<std::size_t>(site)];
}

int LatticeGeometry::site_index(const std::vector<int>& coord) const {
  if (static_cast<int>(coord.size()) != dimension_)
    throw ValidationError("lattice: coordinate arity mismatch");
  int idx = 0;
  for (int d = 0; d < dimension_; ++d) {
    if (coord[d] < 0 || coord[d] >= extents_[d])
      throw ValidationError("lattice: coordinate out of range");
    idx += coord[d] * strides_[d];
  }
  return idx;
}

std::int64_t LatticeGeometry::distance_sq(int i, int j) const {
  const auto& a = coordinates(i);
  const auto& b = coordinates(j);
  std::int64_t s = 0;
  for (int d = 0; d < dimension_; ++d) {
    std::int64_t diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

double LatticeGeometry::distance(int i, int j) const {
  return std::sqrt(static_cast<double>(distance_sq(i, j)));
}

void LatticeGeometry::validate_region(const Region& x, const char* name) const {
  if (x.empty()) throw ValidationError(std::string("region ") + name + " is empty");
  for (int s : x.sites)
    if (s < 0 || s >= n_sites())
      throw ValidationError(std::string("region ") + name + " has out-of-range site");
}

double LatticeGeometry::set_distance(const Region& x, const Region& y) const {
  validate_region(x, "X");
  validate_region(y, "Y");
  if (!regions_disjoint(x, y)) throw ValidationError("set_distance: regions overlap");
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (int i : x.sites)
    for (int j : y.sites) best = std::min(best, distance_sq(i, j));
  return std::sqrt(static_cast<double>(best));
}

std::vector<int> LatticeGeometry::shell(int site, int l) const {
  if (l < 0) throw ValidationError("shell: radius must be >= 0");
  const std::int64_t lo = static_cast<std::int64_t>(l) * l;
  const std::int64_t hi = static_cast<std::int64_t>(l + 1) * (l + 1);
  std::vector<int> out;
  for (int j = 0; j < n_sites(); ++j) {
    std::int64_t d2 = distance_sq(site, j);
    if (d2 >= lo && d2 < hi) out.push_back(j);
  }
  return out;
}

Region LatticeGeometry::complement(const Region& x) const {
  validate_region(x, "X");
  std::vector<int> rest;
  for (int j = 0; j < n_sites(); ++j)
    if (!x.contains(j)) rest.push_back(j);
  return Region(std::move(rest));
}

namespace {

// Exact per-radius point counts of Z^D around the origin, out to Euclidean
// radius `cap`.  counts[l] = |{x in Z^D : l <= |x| < l+1}| decided on squared
// integers.
std::vector<std::uint64_t> annulus_counts(int dimension, int cap) {
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(cap) + 1, 0);
  const int r = cap;  // box [-r, r]^D covers every ball of radius cap
  std::vector<int> x(dimension, -r);
  while (true) {
    std::int64_t d2 = 0;
    for (int d = 0; d < dimension; ++d) d2 += static_cast<std::int64_t>(x[d]) * x[d];
    std::uint64_t l = isqrt(static_cast<std::uint64_t>(d2));
    if (l <= static_cast<std::uint64_t>(cap)) ++counts[static_cast<std::size_t>(l)];
    int d = dimension - 1;
    while (d >= 0 && x[d] == r) x[d--] = -r;
    if (d < 0) break;
    ++x[d];
  }
  return counts;
}

double gamma_from_counts(const std::vector<std::uint64_t>& counts, int dimension, int max_l) {
  double gamma = 0.0;
  for (int l = 0; l <= max_l; ++l) {
    double norm = std::pow(static_cast<double>(std::max(l, 1)), dimension - 1);
    gamma = std::max(gamma, static_cast<double>(counts[static_cast<std::size_t>(l)]) / norm);
  }
  return gamma;
}

}  // namespace

ShellConstant shell_constant(int dimension, int radius_cap) {
  if (dimension < 1) throw ValidationError("shell_constant: dimension must be >= 1");
  if (dimension == 1) return {2.0, radius_cap, false};
  if (dimension > 3)
    throw ValidationError(
        "shell_constant: infinite-lattice constant only tabulated for D <= 3; "
        "use the finite-lattice overload");
  if (radius_cap < 2) throw ValidationError("shell_constant: radius cap too small");
  auto counts = annulus_counts(dimension, radius_cap);
  // Only complete shells count: shell l is fully inside the box when l+1 <= cap.
  return {gamma_from_counts(counts, dimension, radius_cap - 1), radius_cap, false};
}

ShellConstant shell_constant(const LatticeGeometry& lattice) {
  const int n = lattice.n_sites();
  std::int64_t max_d2 = 0;
  for (int j = 0; j < n; ++j) max_d2 = std::max(max_d2, lattice.distance_sq(0, j));
  const int max_l = static_cast<int>(isqrt(static_cast<std::uint64_t>(max_d2)));
  double gamma = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l <= max_l; ++l) {
      double norm = std::pow(static_cast<double>(std::max(l, 1)), lattice.dimension() - 1);
      gamma = std::max(gamma, static_cast<double>(lattice.shell(i, l).size()) / norm);
    }
  }
  return {gamma, max_l, true};
}

CostMatrix CostMatrix::power_law(const LatticeGeometry& lattice, double alpha_eps) {
  std::vector<int> all(static_cast<std::size_t>(lattice.n_sites()));
  for (int i = 0; i < lattice.n_sites(); ++i) all[static_cast<std::size_t>(i)] = i;
  return power_law(lattice, alpha_eps, all);
}

CostMatrix CostMatrix::power_law(const LatticeGeometry& lattice, double alpha_eps,
                                 const std::vector<int>& support) {
  if (!(alpha_eps > 0.0 && alpha_eps <= 1.0))
    throw ValidationError("cost_matrix: exponent must lie in (0, 1]");
  for (int s : support)
    if (s < 0 || s >= lattice.n_sites())
      throw ValidationError("cost_matrix: support site out of range");
  const int n = static_cast<int>(support.size());
  CostMatrix m;
  m.alpha_eps_ = alpha_eps;
  m.c_.resize(n, n);
  for (int a = 0; a < n; ++a) {
    m.c_(a, a) = 0.0;
    for (int b = a + 1; b < n; ++b) {
      double v = std::pow(lattice.distance(support[static_cast<std::size_t>(a)],
                                           support[static_cast<std::size_t>(b)]),
                          alpha_eps);
      m.c_(a, b) = v;
      m.c_(b, a) = v;
    }
  }
  return m;
}

CostMatrix CostMatrix::from_table(Eigen::MatrixXd table, bool trusted) {
  if (table.rows() != table.cols()) throw ValidationError("cost_matrix: table must be square");
  if (!trusted) {
    const int n = static_cast<int>(table.rows());
    for (int i = 0; i < n; ++i) {
      if (table(i, i) != 0.0) throw ValidationError("cost_matrix: diagonal must be zero");
      for (int j = 0; j < n; ++j) {
        if (!(table(i, j) >= 0.0)) throw ValidationError("cost_matrix: entries must be >= 0");
        if (std::abs(table(i, j) - table(j, i)) > 1e-12)
          throw ValidationError("cost_matrix: table must be symmetric");
      }
    }
    if (!verify_triangle(table)) throw ValidationError("cost_matrix: triangle inequality violated");
  }
  CostMatrix m;
  m.c_ = std::move(table);
  return m;
}

bool verify_triangle(const Eigen::MatrixXd& c, double tol) {
  const int n = static_cast<int>(c.rows());
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        if (c(i, j) > c(i, k) + c(k, j) + tol) return false;
  return true;
}

}  // namespace bosecone
