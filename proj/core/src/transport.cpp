#include "bosecone/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace bosecone {

// ---------------------------------------------------------------------------
// primal: transportation simplex
// ---------------------------------------------------------------------------

namespace {

struct BasicCell {
  int i = 0;  // source (marginal x)
  int j = 0;  // sink (marginal y)
  double flow = 0.0;
};

struct Tableau {
  int n = 0;  // points per side
  std::vector<BasicCell> cells;

  // node ids: sources 0..n-1, sinks n..2n-1
  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(2 * n));
    for (int c = 0; c < static_cast<int>(cells.size()); ++c) {
      adj[static_cast<std::size_t>(cells[static_cast<std::size_t>(c)].i)].push_back(c);
      adj[static_cast<std::size_t>(n + cells[static_cast<std::size_t>(c)].j)].push_back(c);
    }
    return adj;
  }
};

void northwest_corner(const Eigen::VectorXd& a, const Eigen::VectorXd& b, Tableau& t) {
  const int n = t.n;
  int i = 0, j = 0;
  double ra = a(0), rb = b(0);
  while (true) {
    double theta = std::min(ra, rb);
    t.cells.push_back({i, j, theta});
    ra -= theta;
    rb -= theta;
    if (i == n - 1 && j == n - 1) break;
    if ((ra <= rb && i < n - 1) || j == n - 1) {
      ++i;
      ra = a(i);
    } else {
      ++j;
      rb = b(j);
    }
  }
}

// duals from the spanning tree: u_i + v_j = c_ij on basic cells, u_0 = 0
void tree_duals(const Tableau& t, const CostMatrix& cost, std::vector<double>& u,
                std::vector<double>& v) {
  const int n = t.n;
  u.assign(static_cast<std::size_t>(n), 0.0);
  v.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<char> known(static_cast<std::size_t>(2 * n), 0);
  auto adj = t.adjacency();
  std::vector<int> stack = {0};
  known[0] = 1;
  while (!stack.empty()) {
    int node = stack.back();
    stack.pop_back();
    for (int ci : adj[static_cast<std::size_t>(node)]) {
      const BasicCell& c = t.cells[static_cast<std::size_t>(ci)];
      int other = node < n ? n + c.j : c.i;
      if (known[static_cast<std::size_t>(other)]) continue;
      if (node < n)
        v[static_cast<std::size_t>(c.j)] = cost(c.i, c.j) - u[static_cast<std::size_t>(c.i)];
      else
        u[static_cast<std::size_t>(c.i)] = cost(c.i, c.j) - v[static_cast<std::size_t>(c.j)];
      known[static_cast<std::size_t>(other)] = 1;
      stack.push_back(other);
    }
  }
  for (char k : known)
    if (!k) throw NumericalError("transport: basis lost spanning-tree connectivity");
}

// tree path from source node `si` to sink node `sj`, as a list of cell indices
std::vector<int> tree_path(const Tableau& t, int si, int sj) {
  const int n = t.n;
  auto adj = t.adjacency();
  std::vector<int> parent_cell(static_cast<std::size_t>(2 * n), -1);
  std::vector<int> parent_node(static_cast<std::size_t>(2 * n), -1);
  std::vector<char> seen(static_cast<std::size_t>(2 * n), 0);
  std::vector<int> queue = {si};
  seen[static_cast<std::size_t>(si)] = 1;
  for (std::size_t qh = 0; qh < queue.size(); ++qh) {
    int node = queue[qh];
    if (node == n + sj) break;
    for (int ci : adj[static_cast<std::size_t>(node)]) {
      const BasicCell& c = t.cells[static_cast<std::size_t>(ci)];
      int other = node < n ? n + c.j : c.i;
      if (seen[static_cast<std::size_t>(other)]) continue;
      seen[static_cast<std::size_t>(other)] = 1;
      parent_cell[static_cast<std::size_t>(other)] = ci;
      parent_node[static_cast<std::size_t>(other)] = node;
      queue.push_back(other);
    }
  }
  std::vector<int> path;
  int node = n + sj;
  if (!seen[static_cast<std::size_t>(node)])
    throw NumericalError("transport: entering cell not connected to basis tree");
  while (node != si) {
    path.push_back(parent_cell[static_cast<std::size_t>(node)]);
    node = parent_node[static_cast<std::size_t>(node)];
  }
  std::reverse(path.begin(), path.end());  // now ordered from si to sj
  return path;
}

}  // namespace

PrimalSolution wasserstein_primal(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                  const CostMatrix& cost) {
  const int n = static_cast<int>(x.size());
  if (y.size() != n || cost.size() != n)
    throw ValidationError("wasserstein: marginal / cost size mismatch");
  if (n < 1) throw ValidationError("wasserstein: empty marginals");
  for (int i = 0; i < n; ++i)
    if (x(i) < -1e-15 || y(i) < -1e-15)
      throw ValidationError("wasserstein: marginals must be entrywise >= 0");
  if (std::abs(x.sum() - y.sum()) > 1e-10)
    throw ValidationError("wasserstein: marginal sums differ by more than 1e-10");

  const double mass_scale = std::max(x.sum(), 1e-30);
  const double cost_scale = std::max(1.0, cost.table().cwiseAbs().maxCoeff());
  const double tol_enter = 1e-12 * cost_scale;

  Tableau t;
  t.n = n;
  northwest_corner(x.cwiseMax(0.0), y.cwiseMax(0.0), t);

  std::vector<double> u, v;
  const long cap_dantzig = 200L * n * n + 2000;
  const long cap_total = 2000L * n * n + 20000;
  bool bland = false;
  for (long iter = 0;; ++iter) {
    if (iter > cap_dantzig) bland = true;
    if (iter > cap_total) throw NumericalError("transport: simplex iteration cap exceeded");
    tree_duals(t, cost, u, v);

    int ei = -1, ej = -1;
    double best = -tol_enter;
    bool found = false;
    for (int i = 0; i < n && !(found && bland); ++i)
      for (int j = 0; j < n; ++j) {
        double r = cost(i, j) - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)];
        if (r < best) {
          best = r;
          ei = i;
          ej = j;
          found = true;
          if (bland) break;  // first eligible in (i,j) order
        }
      }
    if (!found) break;  // optimal

    std::vector<int> path = tree_path(t, ei, ej);
    // entering cell takes +theta; path cells alternate -,+,-,... from the start
    double theta = std::numeric_limits<double>::infinity();
    int leave_pos = -1;
    for (std::size_t p = 0; p < path.size(); p += 2) {
      const BasicCell& c = t.cells[static_cast<std::size_t>(path[p])];
      if (c.flow < theta - 1e-18 ||
          (std::abs(c.flow - theta) <= 1e-18 && leave_pos >= 0 &&
           std::make_pair(c.i, c.j) < std::make_pair(t.cells[static_cast<std::size_t>(path[static_cast<std::size_t>(leave_pos)])].i,
                                                     t.cells[static_cast<std::size_t>(path[static_cast<std::size_t>(leave_pos)])].j))) {
        theta = c.flow;
        leave_pos = static_cast<int>(p);
      }
    }
    if (leave_pos < 0) throw NumericalError("transport: no leaving cell on pivot cycle");
    for (std::size_t p = 0; p < path.size(); ++p) {
      BasicCell& c = t.cells[static_cast<std::size_t>(path[p])];
      c.flow += (p % 2 == 0) ? -theta : theta;
      if (c.flow < 0.0 && c.flow > -1e-13 * mass_scale) c.flow = 0.0;
    }
    int leave_cell = path[static_cast<std::size_t>(leave_pos)];
    t.cells[static_cast<std::size_t>(leave_cell)] = {ei, ej, theta};
  }

  // optimality certificate: feasibility, nonnegativity, reduced costs,
  // complementary slackness
  PrimalSolution sol;
  Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(n), col_sum = Eigen::VectorXd::Zero(n);
  for (const BasicCell& c : t.cells) {
    if (c.flow < -1e-12 * mass_scale)
      throw NumericalError("transport: negative flow in final basis");
    row_sum(c.i) += c.flow;
    col_sum(c.j) += c.flow;
    sol.value += c.flow * cost(c.i, c.j);
    double r = cost(c.i, c.j) - u[static_cast<std::size_t>(c.i)] - v[static_cast<std::size_t>(c.j)];
    if (std::abs(c.flow * r) > 1e-9 * std::max(1.0, mass_scale) * cost_scale)
      throw NumericalError("transport: complementary slackness violated");
    if (c.flow > 0.0) sol.plan.push_back({c.j, c.i, c.flow});
  }
  for (int i = 0; i < n; ++i) {
    if (std::abs(row_sum(i) - x(i)) > 1e-9 * std::max(1.0, mass_scale) ||
        std::abs(col_sum(i) - y(i)) > 1e-9 * std::max(1.0, mass_scale))
      throw NumericalError("transport: final plan violates marginals");
    for (int j = 0; j < n; ++j)
      if (cost(i, j) - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)] <
          -1e-9 * cost_scale)
        throw NumericalError("transport: reduced-cost certificate failed");
  }
  return sol;
}

// ---------------------------------------------------------------------------
// dual: dense tableau simplex over the Lipschitz polytope
// ---------------------------------------------------------------------------

DualSolution wasserstein_dual(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              const CostMatrix& cost, int size_cap) {
  const int n = static_cast<int>(x.size());
  if (y.size() != n || cost.size() != n)
    throw ValidationError("wasserstein_dual: marginal / cost size mismatch");
  if (n > size_cap)
    throw ValidationError("wasserstein_dual: instance exceeds the dense-LP size cap");
  if (std::abs(x.sum() - y.sum()) > 1e-10)
    throw ValidationError("wasserstein_dual: marginal sums differ by more than 1e-10");
  DualSolution sol;
  sol.potential = Eigen::VectorXd::Zero(n);
  if (n == 1) return sol;

  // variables: chi_k = phi_k + c(k, n-1) >= 0 for k < n-1 (phi_{n-1} = 0 by
  // gauge; chi = 0, i.e. phi_k = -c(k,n-1), is feasible by the triangle
  // inequality).  rows: phi_i - phi_j <= c_ij over all ordered pairs.
  const int q = n - 1;
  const int rows = n * (n - 1);
  const int cols = q + rows;  // structural + slack
  Eigen::VectorXd shift(q);
  for (int k = 0; k < q; ++k) shift(k) = cost(k, n - 1);

  Eigen::MatrixXd tab = Eigen::MatrixXd::Zero(rows + 1, cols + 1);
  int r = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double rhs = cost(i, j);
      if (i < q) {
        tab(r, i) = 1.0;
        rhs += shift(i);
      }
      if (j < q) {
        tab(r, j) -= 1.0;
        rhs -= shift(j);
      }
      tab(r, q + r) = 1.0;
      tab(r, cols) = rhs;
      if (rhs < -1e-12)
        throw NumericalError("wasserstein_dual: start basis infeasible (metric violated?)");
      tab(r, cols) = std::max(rhs, 0.0);
      ++r;
    }
  // objective row (maximization): z - sum b_k chi_k = const
  Eigen::VectorXd b = x - y;
  for (int k = 0; k < q; ++k) tab(rows, k) = -b(k);

  std::vector<int> basis(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) basis[static_cast<std::size_t>(i)] = q + i;

  const long cap = 40000L + 200L * rows;
  for (long iter = 0;; ++iter) {
    if (iter > cap) throw NumericalError("wasserstein_dual: simplex iteration cap exceeded");
    // Bland: smallest-index column with negative objective-row coefficient
    int enter = -1;
    for (int c = 0; c < cols; ++c)
      if (tab(rows, c) < -1e-11) {
        enter = c;
        break;
      }
    if (enter < 0) break;
    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int rr = 0; rr < rows; ++rr) {
      double a = tab(rr, enter);
      if (a > 1e-11) {
        double ratio = tab(rr, cols) / a;
        if (ratio < best_ratio - 1e-15 ||
            (ratio <= best_ratio + 1e-15 &&
             (leave < 0 || basis[static_cast<std::size_t>(rr)] < basis[static_cast<std::size_t>(leave)])))
        {
          best_ratio = ratio;
          leave = rr;
        }
      }
    }
    if (leave < 0) throw NumericalError("wasserstein_dual: LP unbounded (duality broken)");
    double piv = tab(leave, enter);
    tab.row(leave) /= piv;
    for (int rr = 0; rr <= rows; ++rr) {
      if (rr == leave) continue;
      double f = tab(rr, enter);
      if (f != 0.0) tab.row(rr) -= f * tab.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  Eigen::VectorXd chi = Eigen::VectorXd::Zero(q);
  for (int rr = 0; rr < rows; ++rr)
    if (basis[static_cast<std::size_t>(rr)] < q) chi(basis[static_cast<std::size_t>(rr)]) = tab(rr, cols);
  for (int k = 0; k < q; ++k) sol.potential(k) = chi(k) - shift(k);
  sol.potential(n - 1) = 0.0;
  sol.value = sol.potential.dot(x - y);

  // certificate: the returned potential must actually be 1-Lipschitz under c
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (sol.potential(i) - sol.potential(j) > cost(i, j) + 1e-9)
        throw NumericalError("wasserstein_dual: returned potential violates a constraint");
  return sol;
}

double duality_gap(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const CostMatrix& cost) {
  return std::abs(wasserstein_primal(x, y, cost).value - wasserstein_dual(x, y, cost).value);
}

// ---------------------------------------------------------------------------
// region transfer bound
// ---------------------------------------------------------------------------

double region_transfer_lower_bound(const Eigen::VectorXd& x0, const Eigen::VectorXd& xt,
                                   const Region& x_region, const Region& y_region,
                                   const LatticeGeometry& lattice, double alpha_eps) {
  if (x0.size() != lattice.n_sites() || xt.size() != lattice.n_sites())
    throw ValidationError("region bound: concentration size mismatch");
  if (!(alpha_eps > 0.0 && alpha_eps <= 1.0))
    throw ValidationError("region bound: exponent must lie in (0, 1]");
  const double d = lattice.set_distance(x_region, y_region);  // validates regions
  Region xc = lattice.complement(x_region);
  double y_mass = 0.0, xc_mass = 0.0;
  for (int s : y_region.sites) y_mass += xt(s);
  for (int s : xc.sites) xc_mass += x0(s);
  double mu = y_mass - xc_mass;
  if (mu <= 0.0) return 0.0;
  return mu * std::pow(d, alpha_eps);
}

// ---------------------------------------------------------------------------
// configuration-space costs
// ---------------------------------------------------------------------------

namespace {

struct ConfigHash {
  std::size_t operator()(const Configuration& c) const {
    std::size_t h = 1469598103934665603ULL;
    for (int v : c) {
      h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL;
      h *= 1099511628211ULL;
    }
    return h;
  }
};

Eigen::MatrixXd site_cost_table(const LatticeGeometry& lattice, double alpha_eps) {
  const int s = lattice.n_sites();
  Eigen::MatrixXd c(s, s);
  for (int i = 0; i < s; ++i) {
    c(i, i) = 0.0;
    for (int j = i + 1; j < s; ++j) {
      double v = std::pow(lattice.distance(i, j), alpha_eps);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

// certified lower bound: any hop sequence from a to b is a unit flow whose
// divergence is b - a, and metric costs make the minimum such flow the
// optimal transport between the surplus and the deficit.
double surplus_deficit_bound(const Configuration& a, const Configuration& b,
                             const Eigen::MatrixXd& site_cost) {
  const int s = static_cast<int>(a.size());
  Eigen::VectorXd surplus = Eigen::VectorXd::Zero(s), deficit = Eigen::VectorXd::Zero(s);
  for (int i = 0; i < s; ++i) {
    double diff = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
    if (diff > 0)
      surplus(i) = diff;
    else
      deficit(i) = -diff;
  }
  if (surplus.sum() == 0.0) return 0.0;
  return wasserstein_primal(surplus, deficit, CostMatrix::from_table(site_cost, true)).value;
}

}  // namespace

ConfigCost config_cost(const FockBasis& basis, std::size_t a, std::size_t b,
                       const LatticeGeometry& lattice, double alpha_eps, std::size_t node_cap) {
  if (a >= basis.dim() || b >= basis.dim())
    throw ValidationError("config_cost: index out of range");
  if (!(alpha_eps > 0.0 && alpha_eps <= 1.0))
    throw ValidationError("config_cost: exponent must lie in (0, 1]");
  if (basis.n_sites() != lattice.n_sites())
    throw ValidationError("config_cost: basis and lattice disagree on site count");
  const Eigen::MatrixXd site_cost = site_cost_table(lattice, alpha_eps);
  if (a == b) return {0.0, true};

  const Configuration target = basis.config(b);
  std::unordered_map<Configuration, double, ConfigHash> dist;
  using QE = std::pair<double, Configuration>;
  std::priority_queue<QE, std::vector<QE>, std::greater<QE>> heap;
  const Configuration& start = basis.config(a);
  dist[start] = 0.0;
  heap.push({0.0, start});
  const int s = basis.n_sites();

  while (!heap.empty()) {
    auto [d, c] = heap.top();
    heap.pop();
    auto it = dist.find(c);
    if (it == dist.end() || d > it->second + 1e-15) continue;  // stale entry
    if (c == target) return {d, true};
    if (dist.size() > node_cap) break;
    for (int from = 0; from < s; ++from) {
      if (c[static_cast<std::size_t>(from)] == 0) continue;
      for (int to = 0; to < s; ++to) {
        if (to == from) continue;
        Configuration next = c;
        next[static_cast<std::size_t>(from)] -= 1;
        next[static_cast<std::size_t>(to)] += 1;
        double nd = d + site_cost(from, to);
        auto jt = dist.find(next);
        if (jt == dist.end() || nd < jt->second - 1e-15) {
          dist[next] = nd;
          heap.push({nd, std::move(next)});
        }
      }
    }
  }
  // expansion cap hit: fall back to the certified transport lower bound
  return {surplus_deficit_bound(start, target, site_cost), false};
}

Eigen::MatrixXd config_cost_matrix(const FockBasis& basis, const LatticeGeometry& lattice,
                                   double alpha_eps, std::size_t node_cap) {
  if (basis.dim() > node_cap)
    throw ValidationError("config_cost_matrix: sector exceeds the node cap");
  if (!(alpha_eps > 0.0 && alpha_eps <= 1.0))
    throw ValidationError("config_cost_matrix: exponent must lie in (0, 1]");
  const Eigen::MatrixXd site_cost = site_cost_table(lattice, alpha_eps);
  const std::size_t dim = basis.dim();
  const int s = basis.n_sites();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));

  // Dijkstra from every source over the full (small) sector
  for (std::size_t src = 0; src < dim; ++src) {
    std::vector<double> d(dim, std::numeric_limits<double>::infinity());
    using QE = std::pair<double, std::size_t>;
    std::priority_queue<QE, std::vector<QE>, std::greater<QE>> heap;
    d[src] = 0.0;
    heap.push({0.0, src});
    Configuration work;
    while (!heap.empty()) {
      auto [dd, idx] = heap.top();
      heap.pop();
      if (dd > d[idx] + 1e-15) continue;
      const Configuration& c = basis.config(idx);
      for (int from = 0; from < s; ++from) {
        if (c[static_cast<std::size_t>(from)] == 0) continue;
        for (int to = 0; to < s; ++to) {
          if (to == from) continue;
          work = c;
          work[static_cast<std::size_t>(from)] -= 1;
          work[static_cast<std::size_t>(to)] += 1;
          std::size_t nxt = basis.index_of(work);
          double nd = dd + site_cost(from, to);
          if (nd < d[nxt] - 1e-15) {
            d[nxt] = nd;
            heap.push({nd, nxt});
          }
        }
      }
    }
    for (std::size_t k = 0; k < dim; ++k) out(static_cast<Eigen::Index>(src), static_cast<Eigen::Index>(k)) = d[k];
  }
  return out;
}

double wasserstein_configs(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                           const Eigen::MatrixXd& config_costs) {
  if (p.size() != config_costs.rows() || q.size() != config_costs.rows())
    throw ValidationError("wasserstein_configs: size mismatch");
  return wasserstein_primal(p, q, CostMatrix::from_table(config_costs, true)).value;
}

}  // namespace bosecone
