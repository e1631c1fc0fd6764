#include "bosecone/fock.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace bosecone {

FockBasis FockBasis::enumerate(int n_sites, int n_bosons, std::size_t dim_cap) {
  if (n_sites < 1) throw ValidationError("fock: need at least one site");
  if (n_bosons < 0) throw ValidationError("fock: boson number must be >= 0");
  std::uint64_t dim = binomial(n_bosons + n_sites - 1, n_bosons);
  if (dim > dim_cap) {
    std::ostringstream os;
    os << "fock: sector dimension " << dim << " exceeds cap " << dim_cap;
    throw ValidationError(os.str());
  }

  FockBasis b;
  b.n_sites_ = n_sites;
  b.n_bosons_ = n_bosons;
  b.configs_.reserve(static_cast<std::size_t>(dim));

  Configuration c(static_cast<std::size_t>(n_sites), 0);
  c[0] = n_bosons;
  while (true) {
    b.configs_.push_back(c);
    // descending-lex successor: shift one boson right past the last movable site
    int k = -1;
    for (int i = n_sites - 2; i >= 0; --i)
      if (c[static_cast<std::size_t>(i)] > 0) {
        k = i;
        break;
      }
    if (k < 0) break;
    int rest = 0;
    for (int j = k + 1; j < n_sites; ++j) {
      rest += c[static_cast<std::size_t>(j)];
      c[static_cast<std::size_t>(j)] = 0;
    }
    c[static_cast<std::size_t>(k)] -= 1;
    c[static_cast<std::size_t>(k + 1)] = rest + 1;
  }
  return b;
}

std::size_t FockBasis::rank(const Configuration& c) const {
  // configs ahead of c: those whose leading occupation is larger, recursively.
  std::size_t r = 0;
  int remaining = n_bosons_;
  for (int site = 0; site < n_sites_ - 1; ++site) {
    int sites_right = n_sites_ - site - 1;
    for (int m = remaining; m > c[static_cast<std::size_t>(site)]; --m)
      r += static_cast<std::size_t>(binomial(remaining - m + sites_right - 1, sites_right - 1));
    remaining -= c[static_cast<std::size_t>(site)];
  }
  return r;
}

std::size_t FockBasis::index_of(const Configuration& c) const {
  if (static_cast<int>(c.size()) != n_sites_)
    throw ValidationError("fock: configuration arity mismatch");
  int sum = 0;
  for (int n : c) {
    if (n < 0) throw ValidationError("fock: negative occupation");
    sum += n;
  }
  if (sum != n_bosons_) throw ValidationError("fock: configuration total outside this sector");
  return rank(c);
}

std::vector<Hop> hop_neighbors(const FockBasis& basis, std::size_t idx) {
  const Configuration& c = basis.config(idx);
  const int s = basis.n_sites();
  std::vector<Hop> out;
  Configuration work = c;
  for (int from = 0; from < s; ++from) {
    if (c[static_cast<std::size_t>(from)] == 0) continue;
    for (int to = 0; to < s; ++to) {
      if (to == from) continue;
      work[static_cast<std::size_t>(from)] -= 1;
      work[static_cast<std::size_t>(to)] += 1;
      Hop h;
      h.target = basis.index_of(work);
      h.from = from;
      h.to = to;
      h.amp = std::sqrt(static_cast<double>(c[static_cast<std::size_t>(from)]) *
                        (c[static_cast<std::size_t>(to)] + 1.0));
      h.pair_total = c[static_cast<std::size_t>(from)] + c[static_cast<std::size_t>(to)];
      out.push_back(h);
      work[static_cast<std::size_t>(from)] += 1;
      work[static_cast<std::size_t>(to)] -= 1;
    }
  }
  return out;
}

int region_number(const Configuration& c, const Region& x) {
  int n = 0;
  for (int s : x.sites) {
    if (s < 0 || s >= static_cast<int>(c.size()))
      throw ValidationError("region_number: site out of range");
    n += c[static_cast<std::size_t>(s)];
  }
  return n;
}

PureState PureState::basis_state(const FockBasis& basis, const Configuration& c) {
  PureState psi;
  psi.amps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.dim()));
  psi.amps(static_cast<Eigen::Index>(basis.index_of(c))) = 1.0;
  return psi;
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
  DensityMatrix d;
  d.rho = psi.amps * psi.amps.adjoint();
  return d;
}

DensityMatrix DensityMatrix::from_ensemble(const StateEnsemble& ens) {
  if (ens.members.empty()) throw ValidationError("ensemble: empty");
  DensityMatrix d;
  const Eigen::Index n = ens.members.front().amps.size();
  d.rho = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t k = 0; k < ens.members.size(); ++k)
    d.rho += ens.weights[k] * (ens.members[k].amps * ens.members[k].amps.adjoint());
  return d;
}

double DensityMatrix::trace_defect() const {
  return std::abs(rho.trace() - std::complex<double>(1.0, 0.0));
}

std::size_t state_dim(const State& s) {
  return std::visit(
      [](const auto& v) -> std::size_t {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PureState>) return static_cast<std::size_t>(v.amps.size());
        if constexpr (std::is_same_v<T, StateEnsemble>) {
          if (v.members.empty()) throw ValidationError("ensemble: empty");
          return static_cast<std::size_t>(v.members.front().amps.size());
        }
        if constexpr (std::is_same_v<T, DensityMatrix>)
          return static_cast<std::size_t>(v.rho.rows());
      },
      s);
}

namespace {

void check_dim(std::size_t got, const FockBasis& basis, const char* who) {
  if (got != basis.dim())
    throw ValidationError(std::string(who) + ": state dimension does not match basis");
}

template <typename Fn>
void for_each_member(const State& s, Fn&& fn) {
  // fn(weight, PureState const&) for pure/ensemble; density matrices are
  // handled by the callers that need them.
  if (const auto* p = std::get_if<PureState>(&s)) {
    fn(1.0, *p);
  } else if (const auto* e = std::get_if<StateEnsemble>(&s)) {
    if (e->members.size() != e->weights.size())
      throw ValidationError("ensemble: weight/member size mismatch");
    for (std::size_t k = 0; k < e->members.size(); ++k) fn(e->weights[k], e->members[k]);
  } else {
    throw ValidationError("state: density matrix not supported on this path");
  }
}

}  // namespace

Eigen::VectorXd concentrations(const State& s, const FockBasis& basis) {
  check_dim(state_dim(s), basis, "concentrations");
  if (basis.n_bosons() == 0) throw ValidationError("concentrations: empty sector");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(basis.n_sites());
  auto add_config = [&](std::size_t idx, double p) {
    const Configuration& c = basis.config(idx);
    for (int i = 0; i < basis.n_sites(); ++i) x(i) += p * c[static_cast<std::size_t>(i)];
  };
  if (const auto* d = std::get_if<DensityMatrix>(&s)) {
    for (std::size_t idx = 0; idx < basis.dim(); ++idx)
      add_config(idx, d->rho(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(idx)).real());
  } else {
    for_each_member(s, [&](double w, const PureState& psi) {
      for (std::size_t idx = 0; idx < basis.dim(); ++idx)
        add_config(idx, w * std::norm(psi.amps(static_cast<Eigen::Index>(idx))));
    });
  }
  return x / static_cast<double>(basis.n_bosons());
}

double projector_weight(const State& s, const FockBasis& basis, const Region& x,
                        NumberPredicate pred, int n0) {
  check_dim(state_dim(s), basis, "projector_weight");
  double w = 0.0;
  for (std::size_t idx = 0; idx < basis.dim(); ++idx) {
    int n = region_number(basis.config(idx), x);
    bool in = pred == NumberPredicate::AtMost ? (n <= n0) : (n >= n0);
    if (in) w += config_probability(s, idx);
  }
  return w;
}

std::complex<double> coherence(const State& s, const FockBasis& basis, int i, int j) {
  check_dim(state_dim(s), basis, "coherence");
  if (i < 0 || i >= basis.n_sites() || j < 0 || j >= basis.n_sites())
    throw ValidationError("coherence: site out of range");
  if (i == j) {
    std::complex<double> acc = 0.0;
    for (std::size_t idx = 0; idx < basis.dim(); ++idx)
      acc += config_probability(s, idx) * static_cast<double>(basis.config(idx)[static_cast<std::size_t>(i)]);
    return acc;
  }
  // <b_i^dag b_j> couples |c> to |c'> = (move one boson j -> i in c)
  std::complex<double> acc = 0.0;
  Configuration work;
  for (std::size_t idx = 0; idx < basis.dim(); ++idx) {
    const Configuration& c = basis.config(idx);
    if (c[static_cast<std::size_t>(j)] == 0) continue;
    work = c;
    work[static_cast<std::size_t>(j)] -= 1;
    work[static_cast<std::size_t>(i)] += 1;
    std::size_t jdx = basis.index_of(work);
    double amp = std::sqrt(static_cast<double>(c[static_cast<std::size_t>(j)]) *
                           (c[static_cast<std::size_t>(i)] + 1.0));
    if (const auto* d = std::get_if<DensityMatrix>(&s)) {
      acc += amp * d->rho(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(jdx));
    } else {
      for_each_member(s, [&](double w, const PureState& psi) {
        acc += w * amp * std::conj(psi.amps(static_cast<Eigen::Index>(jdx))) *
               psi.amps(static_cast<Eigen::Index>(idx));
      });
    }
  }
  return acc;
}

double config_probability(const State& s, std::size_t idx) {
  if (const auto* d = std::get_if<DensityMatrix>(&s))
    return d->rho(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(idx)).real();
  double p = 0.0;
  for_each_member(s, [&](double w, const PureState& psi) {
    p += w * std::norm(psi.amps(static_cast<Eigen::Index>(idx)));
  });
  return p;
}

double fidelity_to_config(const State& s, const FockBasis& basis, const Configuration& target) {
  return config_probability(s, basis.index_of(target));
}

double fidelity(const PureState& a, const PureState& b) {
  if (a.amps.size() != b.amps.size()) throw ValidationError("fidelity: dimension mismatch");
  return std::norm(a.amps.dot(b.amps));
}

}  // namespace bosecone
