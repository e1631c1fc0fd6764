#include "bosecone/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace bosecone {

namespace {

constexpr double kPi = 3.14159265358979323846;

double gershgorin_radius(const Eigen::SparseMatrix<double>& h) {
  Eigen::VectorXd row_abs = Eigen::VectorXd::Zero(h.rows());
  for (int k = 0; k < h.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(h, k); it; ++it)
      row_abs(it.row()) += std::abs(it.value());
  return row_abs.size() ? row_abs.maxCoeff() : 0.0;
}

}  // namespace

StagePropagator::StagePropagator(const SparseHamiltonian& h, std::size_t dense_cutoff,
                                 double krylov_tol)
    : krylov_tol_(krylov_tol) {
  const std::size_t dim = h.dim();
  if (dim == 0) throw ValidationError("propagator: empty Hamiltonian");
  spectral_radius_ = gershgorin_radius(h.matrix());
  if (dim <= dense_cutoff) {
    dense_ = true;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense());
    if (es.info() != Eigen::Success)
      throw NumericalError("propagator: dense eigendecomposition failed");
    vecs_ = es.eigenvectors();
    vals_ = es.eigenvalues();
  } else {
    dense_ = false;
    hc_ = h.matrix().cast<std::complex<double>>();
  }
}

Eigen::VectorXcd StagePropagator::project(const Eigen::VectorXcd& psi0) const {
  if (!dense_) throw ValidationError("propagator: project is a dense-path helper");
  return vecs_.transpose() * psi0;
}

Eigen::VectorXcd StagePropagator::reconstruct(const Eigen::VectorXcd& w0, double t) const {
  if (!dense_) throw ValidationError("propagator: reconstruct is a dense-path helper");
  Eigen::VectorXcd phased(w0.size());
  for (Eigen::Index a = 0; a < w0.size(); ++a) {
    double th = -vals_(a) * t;
    phased(a) = w0(a) * std::complex<double>(std::cos(th), std::sin(th));
  }
  return vecs_ * phased;
}

Eigen::VectorXcd StagePropagator::at(const Eigen::VectorXcd& psi0, double t) const {
  if (t < 0.0) throw ValidationError("propagator: negative time");
  if (dense_) return reconstruct(project(psi0), t);
  Eigen::VectorXcd psi = psi0;
  advance(psi, t);
  return psi;
}

void StagePropagator::advance(Eigen::VectorXcd& psi, double dt) const {
  if (dt < 0.0) throw ValidationError("propagator: negative time");
  if (dt == 0.0) return;
  if (dense_) {
    psi = reconstruct(project(psi), dt);
    return;
  }
  double remaining = dt;
  double step = std::min(remaining, 1.0 / std::max(spectral_radius_, 1e-30));
  int guard = 0;
  while (remaining > 1e-15 * dt) {
    double take = std::min(step, remaining);
    krylov_step(psi, take);
    remaining -= take;
    if (++guard > 2000000) throw NumericalError("propagator: Krylov step count exploded");
  }
}

void StagePropagator::krylov_step(Eigen::VectorXcd& psi, double dt) const {
  const Eigen::Index n = psi.size();
  const int m_max = static_cast<int>(std::min<Eigen::Index>(48, n));
  const double beta0 = psi.norm();
  if (beta0 == 0.0) throw NumericalError("propagator: zero state vector");

  Eigen::MatrixXcd v(n, m_max + 1);
  Eigen::VectorXd alpha(m_max), beta(m_max);
  v.col(0) = psi / beta0;
  int m = m_max;
  bool breakdown = false;
  for (int j = 0; j < m_max; ++j) {
    Eigen::VectorXcd w = hc_ * v.col(j);
    alpha(j) = v.col(j).dot(w).real();
    w -= alpha(j) * v.col(j);
    if (j > 0) w -= beta(j - 1) * v.col(j - 1);
    // full reorthogonalization; m stays small so this is cheap and removes
    // the classic Lanczos loss-of-orthogonality failure mode
    for (int i = 0; i <= j; ++i) w -= v.col(i).dot(w) * v.col(i);
    beta(j) = w.norm();
    if (beta(j) <= 1e-14 * beta0) {
      m = j + 1;
      breakdown = true;  // invariant subspace: the small problem is exact
      break;
    }
    v.col(j + 1) = w / beta(j);
  }

  Eigen::MatrixXd t_small = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    t_small(j, j) = alpha(j);
    if (j + 1 < m) {
      t_small(j, j + 1) = beta(j);
      t_small(j + 1, j) = beta(j);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t_small);
  const Eigen::MatrixXd& q = es.eigenvectors();
  const Eigen::VectorXd& th = es.eigenvalues();

  double take = dt;
  const double coupling = breakdown ? 0.0 : beta(m - 1);
  while (true) {
    Eigen::VectorXcd y(m);
    for (int a = 0; a < m; ++a) {
      double ang = -th(a) * take;
      y(a) = std::complex<double>(std::cos(ang), std::sin(ang)) * q(0, a) * beta0;
    }
    Eigen::VectorXcd y_big = q * y;
    double err = coupling * std::abs(y_big(m - 1)) * take;
    if (err <= krylov_tol_ || take <= 1e-15 * dt) {
      psi = v.leftCols(m) * y_big;
      if (take < dt) advance(psi, dt - take);  // recurse on the remainder
      return;
    }
    take *= 0.5;
  }
}

Eigen::MatrixXcd StagePropagator::conjugate(const Eigen::MatrixXcd& rho, double t) const {
  if (!dense_)
    throw ValidationError(
        "propagator: density-matrix conjugation needs the dense path; raise dense_cutoff");
  Eigen::MatrixXcd tilde = vecs_.transpose() * rho * vecs_;
  for (Eigen::Index a = 0; a < vals_.size(); ++a)
    for (Eigen::Index b = 0; b < vals_.size(); ++b) {
      double ang = -(vals_(a) - vals_(b)) * t;
      tilde(a, b) *= std::complex<double>(std::cos(ang), std::sin(ang));
    }
  return vecs_ * tilde * vecs_.transpose();
}

// ---------------------------------------------------------------------------
// Flows and configuration currents
// ---------------------------------------------------------------------------

namespace {

// Precomputed hop structure for every coupled site pair:  <b_i^dag b_j>
// = sum over stored terms conj(psi_dst) * amp * psi_src, with the assisted
// variant weighting each term by (pair_total - 1).
struct FlowCache {
  struct Term {
    int src, dst;
    double amp;
    double assisted;  // amp * (pair_total - 1)
  };
  struct PairChannel {
    int i, j;       // i < j
    double j_ij;    // hopping amplitude
    double t_ij;    // assisted-tunneling amplitude
    std::vector<Term> terms;
  };
  std::vector<PairChannel> pairs;
  int n_sites = 0;
  int n_bosons = 0;
};

FlowCache build_flow_cache(const HamiltonianModel& model) {
  const FockBasis& basis = *model.basis;
  FlowCache cache;
  cache.n_sites = basis.n_sites();
  cache.n_bosons = basis.n_bosons();
  const bool tun = model.tunneling.has_value();
  for (int i = 0; i < basis.n_sites(); ++i)
    for (int j = i + 1; j < basis.n_sites(); ++j) {
      double jij = model.hopping.amplitude(i, j);
      double tij = tun ? model.tunneling->amplitude(i, j) : 0.0;
      if (jij == 0.0 && tij == 0.0) continue;
      FlowCache::PairChannel ch;
      ch.i = i;
      ch.j = j;
      ch.j_ij = jij;
      ch.t_ij = tij;
      Configuration work;
      for (std::size_t idx = 0; idx < basis.dim(); ++idx) {
        const Configuration& c = basis.config(idx);
        int nj = c[static_cast<std::size_t>(j)];
        if (nj == 0) continue;
        int ni = c[static_cast<std::size_t>(i)];
        work = c;
        work[static_cast<std::size_t>(j)] -= 1;
        work[static_cast<std::size_t>(i)] += 1;
        FlowCache::Term t;
        t.src = static_cast<int>(idx);
        t.dst = static_cast<int>(basis.index_of(work));
        t.amp = std::sqrt(static_cast<double>(nj) * (ni + 1.0));
        t.assisted = t.amp * (ni + nj - 1.0);
        ch.terms.push_back(t);
      }
      cache.pairs.push_back(std::move(ch));
    }
  return cache;
}

// phi matrix from one pure member, accumulated with weight w
void accumulate_flows(const FlowCache& cache, const Eigen::VectorXcd& psi, double w,
                      Eigen::MatrixXd& phi) {
  for (const auto& ch : cache.pairs) {
    std::complex<double> z_hop = 0.0, z_assist = 0.0;
    for (const auto& t : ch.terms) {
      std::complex<double> core = std::conj(psi(t.dst)) * psi(t.src);
      z_hop += t.amp * core;
      if (ch.t_ij != 0.0) z_assist += t.assisted * core;
    }
    double val = 2.0 * (ch.j_ij * z_hop.imag() + ch.t_ij * z_assist.imag()) / cache.n_bosons;
    phi(ch.i, ch.j) += w * val;
    phi(ch.j, ch.i) -= w * val;
  }
}

void accumulate_flows_dm(const FlowCache& cache, const Eigen::MatrixXcd& rho,
                         Eigen::MatrixXd& phi) {
  for (const auto& ch : cache.pairs) {
    std::complex<double> z_hop = 0.0, z_assist = 0.0;
    for (const auto& t : ch.terms) {
      std::complex<double> core = rho(t.src, t.dst);  // tr[b_i^dag b_j rho]
      z_hop += t.amp * core;
      if (ch.t_ij != 0.0) z_assist += t.assisted * core;
    }
    double val = 2.0 * (ch.j_ij * z_hop.imag() + ch.t_ij * z_assist.imag()) / cache.n_bosons;
    phi(ch.i, ch.j) += val;
    phi(ch.j, ch.i) -= val;
  }
}

Eigen::MatrixXd flows_from_cache(const FlowCache& cache, const State& s) {
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(cache.n_sites, cache.n_sites);
  if (const auto* p = std::get_if<PureState>(&s)) {
    accumulate_flows(cache, p->amps, 1.0, phi);
  } else if (const auto* e = std::get_if<StateEnsemble>(&s)) {
    for (std::size_t k = 0; k < e->members.size(); ++k)
      accumulate_flows(cache, e->members[k].amps, e->weights[k], phi);
  } else {
    accumulate_flows_dm(cache, std::get<DensityMatrix>(s).rho, phi);
  }
  return phi;
}

}  // namespace

Eigen::MatrixXd site_flows(const State& s, const HamiltonianModel& model) {
  if (state_dim(s) != model.basis->dim())
    throw ValidationError("site_flows: state dimension does not match model");
  FlowCache cache = build_flow_cache(model);
  return flows_from_cache(cache, s);
}

double velocity_term(const Eigen::MatrixXd& flows, const CostMatrix& cost) {
  if (flows.rows() != cost.size())
    throw ValidationError("velocity_term: cost matrix size does not match flows");
  double phi = 0.0;
  for (int i = 0; i < flows.rows(); ++i)
    for (int j = i + 1; j < flows.cols(); ++j) phi += cost(i, j) * std::abs(flows(i, j));
  return phi;
}

std::vector<ConfigCurrent> config_currents(const State& s, const HamiltonianModel& model) {
  if (model.has_tunneling())
    throw ValidationError(
        "config_currents: assisted tunneling breaks the configuration-current form; "
        "unsupported for this extraction");
  const FockBasis& basis = *model.basis;
  if (state_dim(s) != basis.dim())
    throw ValidationError("config_currents: state dimension does not match model");
  const DensityMatrix* dm = std::get_if<DensityMatrix>(&s);
  const PureState* pure = std::get_if<PureState>(&s);
  const StateEnsemble* ens = std::get_if<StateEnsemble>(&s);
  auto rho_entry = [&](std::size_t a, std::size_t b) -> std::complex<double> {
    if (dm) return dm->rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    if (pure)
      return pure->amps(static_cast<Eigen::Index>(a)) *
             std::conj(pure->amps(static_cast<Eigen::Index>(b)));
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < ens->members.size(); ++k)
      acc += ens->weights[k] * ens->members[k].amps(static_cast<Eigen::Index>(a)) *
             std::conj(ens->members[k].amps(static_cast<Eigen::Index>(b)));
    return acc;
  };

  std::vector<ConfigCurrent> out;
  for (std::size_t a = 0; a < basis.dim(); ++a) {
    for (const Hop& h : hop_neighbors(basis, a)) {
      double coupling = model.hopping.amplitude(h.to, h.from);
      if (coupling == 0.0) continue;
      ConfigCurrent cur;
      cur.a = a;
      cur.b = h.target;
      cur.from = h.from;
      cur.to = h.to;
      cur.value = -2.0 * coupling * h.amp * rho_entry(a, h.target).imag();
      out.push_back(cur);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

namespace {

struct Members {
  std::vector<double> w;
  std::vector<Eigen::VectorXcd> vecs;
};

Members to_members(const State& s) {
  Members m;
  if (const auto* p = std::get_if<PureState>(&s)) {
    m.w.push_back(1.0);
    m.vecs.push_back(p->amps);
  } else if (const auto* e = std::get_if<StateEnsemble>(&s)) {
    if (e->members.empty() || e->members.size() != e->weights.size())
      throw ValidationError("evolve: malformed ensemble");
    double wsum = 0.0;
    for (std::size_t k = 0; k < e->members.size(); ++k) {
      if (e->weights[k] < 0.0) throw ValidationError("evolve: negative ensemble weight");
      wsum += e->weights[k];
      m.w.push_back(e->weights[k]);
      m.vecs.push_back(e->members[k].amps);
    }
    if (std::abs(wsum - 1.0) > 1e-10)
      throw ValidationError("evolve: ensemble weights must sum to 1");
  }
  return m;
}

State members_to_state(const Members& m) {
  if (m.vecs.size() == 1) return PureState{m.vecs[0]};
  StateEnsemble e;
  e.weights = m.w;
  for (const auto& v : m.vecs) e.members.push_back(PureState{v});
  return e;
}

void validate_stages(std::span<const Stage> stages) {
  if (stages.empty()) throw ValidationError("evolve: empty stage list");
  const FockBasis* b0 = stages.front().model.basis.get();
  if (!b0) throw ValidationError("evolve: stage without basis");
  for (const Stage& st : stages) {
    if (!(st.duration > 0.0)) throw ValidationError("evolve: stage durations must be > 0");
    if (!st.model.basis || st.model.basis->dim() != b0->dim() ||
        st.model.basis->n_sites() != b0->n_sites() ||
        st.model.basis->n_bosons() != b0->n_bosons())
      throw ValidationError("evolve: stages must share one Fock sector");
  }
}

}  // namespace

Trajectory evolve(const State& initial, std::span<const Stage> stages,
                  const EvolveOptions& options) {
  validate_stages(stages);
  if (options.samples_per_stage < 1) throw ValidationError("evolve: samples_per_stage must be >= 1");
  const FockBasis& basis = *stages.front().model.basis;
  if (state_dim(initial) != basis.dim())
    throw ValidationError("evolve: state dimension does not match stage basis");

  const bool is_dm = std::holds_alternative<DensityMatrix>(initial);
  Members members;
  Eigen::MatrixXcd rho;
  if (is_dm)
    rho = std::get<DensityMatrix>(initial).rho;
  else
    members = to_members(initial);

  Trajectory traj;
  traj.n_bosons = basis.n_bosons();
  for (const Stage& st : stages) traj.tunneling_present |= st.model.has_tunneling();

  auto snapshot = [&](const Members& m, const Eigen::MatrixXcd& r) -> State {
    if (is_dm) return DensityMatrix{r};
    return members_to_state(m);
  };

  auto record = [&](double t_global, int stage_idx, const State& s,
                    const FlowCache* cache) {
    TrajectorySample sample;
    sample.t = t_global;
    sample.stage = stage_idx;
    sample.x = concentrations(s, basis);
    double xsum = sample.x.sum();
    if (std::abs(xsum - 1.0) > 1e-8) {
      std::ostringstream os;
      os << "evolve: concentrations sum drifted to " << xsum << " at t=" << t_global;
      throw NumericalError(os.str());
    }
    sample.phi = std::numeric_limits<double>::quiet_NaN();
    if (options.cost && cache) sample.phi = velocity_term(flows_from_cache(*cache, s), *options.cost);

    double defect = 0.0;
    if (is_dm) {
      defect = std::abs(std::get<DensityMatrix>(s).rho.trace() - std::complex<double>(1.0, 0.0));
    } else {
      const auto visit_norm = [&](const Eigen::VectorXcd& v) {
        defect = std::max(defect, std::abs(v.squaredNorm() - 1.0));
      };
      if (const auto* p = std::get_if<PureState>(&s)) visit_norm(p->amps);
      if (const auto* e = std::get_if<StateEnsemble>(&s))
        for (const auto& mem : e->members) visit_norm(mem.amps);
    }
    traj.norm_defect = std::max(traj.norm_defect, defect);
    if (traj.norm_defect > options.norm_abort) {
      std::ostringstream os;
      os << "evolve: norm drift " << traj.norm_defect << " exceeds abort threshold "
         << options.norm_abort << " at t=" << t_global;
      throw NumericalError(os.str());
    }
    traj.samples.push_back(std::move(sample));
    if (options.record_states) traj.states.push_back(s);
  };

  double t_global = 0.0;
  {
    FlowCache cache0;
    const FlowCache* c0 = nullptr;
    if (options.cost) {
      cache0 = build_flow_cache(stages.front().model);
      c0 = &cache0;
    }
    record(0.0, 0, snapshot(members, rho), c0);
  }

  for (std::size_t si = 0; si < stages.size(); ++si) {
    const Stage& st = stages[si];
    SparseHamiltonian h = materialize(st.model);
    StagePropagator prop(h, options.dense_cutoff, options.krylov_tol);
    FlowCache cache;
    if (options.cost) cache = build_flow_cache(st.model);

    const int n = options.samples_per_stage;
    if (is_dm) {
      Eigen::MatrixXcd rho_start = rho;
      for (int k = 1; k <= n; ++k) {
        double t_loc = st.duration * k / n;
        rho = prop.conjugate(rho_start, t_loc);
        record(t_global + t_loc, static_cast<int>(si), snapshot(members, rho),
               options.cost ? &cache : nullptr);
      }
    } else if (prop.dense()) {
      std::vector<Eigen::VectorXcd> w0;
      w0.reserve(members.vecs.size());
      for (const auto& v : members.vecs) w0.push_back(prop.project(v));
      Members cur = members;
      for (int k = 1; k <= n; ++k) {
        double t_loc = st.duration * k / n;
        for (std::size_t mi = 0; mi < cur.vecs.size(); ++mi)
          cur.vecs[mi] = prop.reconstruct(w0[mi], t_loc);
        record(t_global + t_loc, static_cast<int>(si), snapshot(cur, rho),
               options.cost ? &cache : nullptr);
      }
      members = std::move(cur);
    } else {
      double t_prev = 0.0;
      for (int k = 1; k <= n; ++k) {
        double t_loc = st.duration * k / n;
        for (auto& v : members.vecs) prop.advance(v, t_loc - t_prev);
        t_prev = t_loc;
        record(t_global + t_loc, static_cast<int>(si), snapshot(members, rho),
               options.cost ? &cache : nullptr);
      }
    }
    t_global += st.duration;
  }

  traj.duration = t_global;
  traj.final_state = snapshot(members, rho);
  return traj;
}

// ---------------------------------------------------------------------------
// time-averaged velocity term
// ---------------------------------------------------------------------------

namespace {

struct QuadAcc {
  double integral = 0.0;
  double uncertainty = 0.0;
};

// adaptive Simpson on [a,b]; fa/fm/fb are f at a, midpoint, b; whole is the
// Simpson estimate over [a,b].  Accepted panels contribute the Richardson-
// corrected value; |S2-S1|/15 is the standard local error proxy.
template <typename F>
void adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                      double whole, double tol, int depth, QuadAcc& acc) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double h6 = (b - a) / 12.0;
  double left = h6 * (fa + 4.0 * flm + fm);
  double right = h6 * (fm + 4.0 * frm + fb);
  double s2 = left + right;
  double err = (s2 - whole) / 15.0;
  if (std::abs(err) <= tol || depth >= 40 || (b - a) < 1e-14 * std::max(1.0, std::abs(b))) {
    acc.integral += s2 + err;
    acc.uncertainty += std::abs(err);
    return;
  }
  adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, acc);
  adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, acc);
}

template <typename F>
QuadAcc integrate_adaptive(const F& f, double a, double b, double tol, int base_panels) {
  QuadAcc acc;
  double h = (b - a) / base_panels;
  double panel_tol = tol / base_panels;
  for (int p = 0; p < base_panels; ++p) {
    double pa = a + p * h, pb = a + (p + 1) * h, pm = 0.5 * (pa + pb);
    double fa = f(pa), fm = f(pm), fb = f(pb);
    double whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(f, pa, pb, fa, fm, fb, whole, panel_tol, 0, acc);
  }
  return acc;
}

// level-doubling composite Simpson for the Krylov path (monotone sweeps only)
template <typename Sweep>
QuadAcc integrate_doubling(const Sweep& sweep, double duration, double rel_tol) {
  QuadAcc acc;
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int level = 5; level <= 11; ++level) {
    int segments = 1 << level;  // even count -> composite Simpson applies
    std::vector<double> vals = sweep(segments);
    double h = duration / segments;
    double s = vals.front() + vals.back();
    for (int k = 1; k < segments; ++k) s += (k % 2 ? 4.0 : 2.0) * vals[static_cast<std::size_t>(k)];
    double integral = s * h / 3.0;
    if (!std::isnan(prev)) {
      double diff = std::abs(integral - prev);
      acc.integral = integral;
      acc.uncertainty = diff;
      if (diff <= rel_tol * std::max(std::abs(integral), 1e-30)) return acc;
    }
    prev = integral;
  }
  return acc;
}

Members dm_to_members(const Eigen::MatrixXcd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
  if (es.info() != Eigen::Success) throw NumericalError("quadrature: density matrix eigensolve failed");
  Members m;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    double p = es.eigenvalues()(k);
    if (p > 1e-14) {
      m.w.push_back(p);
      m.vecs.push_back(es.eigenvectors().col(k));
    }
  }
  if (m.vecs.empty()) throw ValidationError("quadrature: density matrix has no weight");
  return m;
}

}  // namespace

AveragedVelocity average_velocity_term(const State& initial, std::span<const Stage> stages,
                                       const CostMatrix& cost, double rel_tol,
                                       const EvolveOptions& options) {
  validate_stages(stages);
  const FockBasis& basis = *stages.front().model.basis;
  if (state_dim(initial) != basis.dim())
    throw ValidationError("quadrature: state dimension does not match stage basis");
  if (cost.size() != basis.n_sites())
    throw ValidationError("quadrature: cost matrix size does not match lattice");

  Members members = std::holds_alternative<DensityMatrix>(initial)
                        ? dm_to_members(std::get<DensityMatrix>(initial).rho)
                        : to_members(initial);

  double total_time = 0.0, integral = 0.0, uncertainty = 0.0;
  for (const Stage& st : stages) {
    SparseHamiltonian h = materialize(st.model);
    StagePropagator prop(h, options.dense_cutoff, options.krylov_tol);
    FlowCache cache = build_flow_cache(st.model);
    const int n_sites = basis.n_sites();

    auto phi_of_members = [&](const Members& m) {
      Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n_sites, n_sites);
      for (std::size_t k = 0; k < m.vecs.size(); ++k)
        accumulate_flows(cache, m.vecs[k], m.w[k], phi);
      return velocity_term(phi, cost);
    };

    QuadAcc acc;
    if (prop.dense()) {
      std::vector<Eigen::VectorXcd> w0;
      for (const auto& v : members.vecs) w0.push_back(prop.project(v));
      Members scratch = members;
      auto f = [&](double t) {
        for (std::size_t k = 0; k < scratch.vecs.size(); ++k)
          scratch.vecs[k] = prop.reconstruct(w0[k], t);
        return phi_of_members(scratch);
      };
      // crude magnitude pass to convert the relative target into a panel budget
      double rough = 0.0;
      const int probe = 32;
      for (int k = 0; k <= probe; ++k) rough += f(st.duration * k / probe);
      rough *= st.duration / (probe + 1);
      double tol_abs = rel_tol * std::max(rough, 1e-30);
      int base = std::clamp(static_cast<int>(st.duration * gershgorin_radius(h.matrix()) / kPi) + 8,
                            16, 256);
      acc = integrate_adaptive(f, 0.0, st.duration, tol_abs, base);
      for (std::size_t k = 0; k < members.vecs.size(); ++k)
        members.vecs[k] = prop.reconstruct(w0[k], st.duration);
    } else {
      auto sweep = [&](int segments) {
        Members cur = members;
        std::vector<double> vals(static_cast<std::size_t>(segments) + 1);
        vals[0] = phi_of_members(cur);
        double h_step = st.duration / segments;
        for (int k = 1; k <= segments; ++k) {
          for (auto& v : cur.vecs) prop.advance(v, h_step);
          vals[static_cast<std::size_t>(k)] = phi_of_members(cur);
        }
        return vals;
      };
      acc = integrate_doubling(sweep, st.duration, rel_tol);
      for (auto& v : members.vecs) prop.advance(v, st.duration);
    }
    integral += acc.integral;
    uncertainty += acc.uncertainty;
    total_time += st.duration;
  }

  AveragedVelocity out;
  out.total_time = total_time;
  out.mean = integral / total_time;
  out.uncertainty = uncertainty / total_time;
  return out;
}

}  // namespace bosecone
