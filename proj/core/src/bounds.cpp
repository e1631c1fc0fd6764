#include "bosecone/bounds.hpp"

#include <cmath>
#include <sstream>

namespace bosecone {

double riemann_zeta(double s) {
  if (!(s > 1.0)) throw ValidationError("riemann_zeta: requires s > 1");
  // Euler-Maclaurin: partial sum to K, integral tail, trapezoid correction,
  // Bernoulli corrections B_2 .. B_16
  static const double bern[] = {1.0 / 6.0,    -1.0 / 30.0,    1.0 / 42.0,  -1.0 / 30.0,
                                5.0 / 66.0,   -691.0 / 2730.0, 7.0 / 6.0,  -3617.0 / 510.0};
  const int k_cut = 32;
  double acc = 0.0;
  for (int n = 1; n <= k_cut; ++n) acc += std::pow(n, -s);
  acc += std::pow(k_cut, 1.0 - s) / (s - 1.0);
  acc -= 0.5 * std::pow(k_cut, -s);
  // term_k = B_{2k}/(2k)! * (s)(s+1)...(s+2k-2) * K^{-s-2k+1}
  double factorial = 1.0;
  double rising = 1.0;  // (s)(s+1)...(s+2k-2), starts as s after first update
  for (int k = 1; k <= 8; ++k) {
    factorial *= (2.0 * k - 1.0) * (2.0 * k);
    if (k == 1)
      rising = s;
    else
      rising *= (s + 2.0 * k - 3.0) * (s + 2.0 * k - 2.0);
    acc += bern[k - 1] / factorial * rising * std::pow(k_cut, -s - 2.0 * k + 1.0);
  }
  return acc;
}

double riemann_zeta_direct(double s, int terms) {
  if (!(s > 1.0)) throw ValidationError("riemann_zeta_direct: requires s > 1");
  if (terms < 10) throw ValidationError("riemann_zeta_direct: too few terms");
  double acc = 0.0;
  for (int n = terms; n >= 1; --n) acc += std::pow(n, -s);  // small-to-large for accuracy
  // midpoint tail: sum_{n>K} n^-s ~ int_{K+1/2}^inf x^-s dx
  acc += std::pow(terms + 0.5, 1.0 - s) / (s - 1.0);
  return acc;
}

double BoundParams::alpha_eps() const { return std::min(1.0, alpha - dim - eps); }

double BoundParams::default_eps(double alpha, int dim) {
  if (!(alpha > dim)) throw ValidationError("default_eps: requires alpha > D");
  return alpha > dim + 1.0 ? alpha - dim - 1.0 : 0.5 * (alpha - dim);
}

void BoundParams::validate() const {
  if (dim < 1) throw ValidationError("bound params: D must be >= 1");
  if (!(j > 0.0)) throw ValidationError("bound params: J must be > 0");
  if (!(alpha > dim)) throw ValidationError("bound params: requires alpha > D");
  if (!(eps > 0.0 && eps < alpha - dim))
    throw ValidationError("bound params: requires 0 < eps < alpha - D");
  if (!(gamma > 0.0)) throw ValidationError("bound params: gamma must be > 0");
  if (!(mu > 0.0 && mu <= 1.0)) throw ValidationError("bound params: requires 0 < mu <= 1");
}

namespace {
double zeta_argument(const BoundParams& p) { return p.alpha - p.alpha_eps() - p.dim + 1.0; }
}  // namespace

double kappa1(const BoundParams& p) {
  p.validate();
  return p.mu / (p.j * p.gamma * riemann_zeta(zeta_argument(p)));
}

double kappa2(const BoundParams& p) {
  p.validate();
  return p.j * p.gamma * riemann_zeta(zeta_argument(p));
}

double min_time_bound(const BoundParams& p, double d_xy) {
  p.validate();
  if (!(d_xy >= 1.0)) throw ValidationError("min_time_bound: requires d(X,Y) >= 1");
  return kappa1(p) * std::pow(d_xy, p.alpha_eps());
}

double probability_bound(const BoundParams& p, int n_bosons, int d_n0, double tau, double d_xy) {
  p.validate();
  if (n_bosons < 1) throw ValidationError("probability_bound: need at least one boson");
  if (d_n0 < 1) throw ValidationError("probability_bound: dN0 must be >= 1");
  if (tau < 0.0) throw ValidationError("probability_bound: negative time");
  if (!(d_xy >= 1.0)) throw ValidationError("probability_bound: requires d(X,Y) >= 1");
  double raw = kappa2(p) * n_bosons * tau / (d_n0 * std::pow(d_xy, p.alpha_eps()));
  return std::clamp(raw, 0.0, 1.0);
}

double velocity_upper_bound(const BoundParams& p) {
  p.validate();
  return p.j * p.gamma * riemann_zeta(zeta_argument(p));
}

double markov_prefactor(double mu, double mu_prime, double x0) {
  if (!(x0 >= 0.0 && x0 < 1.0)) throw ValidationError("markov: requires 0 <= x0 < 1");
  if (!(mu > 0.0 && mu <= 1.0 - x0)) throw ValidationError("markov: requires 0 < mu <= 1 - x0");
  if (!(mu_prime > 0.0 && mu_prime < mu))
    throw ValidationError("markov: requires 0 < mu' < mu");
  return mu_prime * (mu - mu_prime) / (mu * (1.0 - x0 - mu_prime));
}

double markov_optimal_mu_prime(double mu, double x0) {
  if (!(x0 >= 0.0 && x0 < 1.0)) throw ValidationError("markov: requires 0 <= x0 < 1");
  if (!(mu > 0.0 && mu <= 1.0 - x0)) throw ValidationError("markov: requires 0 < mu <= 1 - x0");
  double a = 1.0 - x0;
  return a - std::sqrt(a * (a - mu));
}

double markov_time_bound(const BoundParams& p, double d_xy, double x0, double mu_prime) {
  p.validate();
  if (!(d_xy >= 1.0)) throw ValidationError("markov: requires d(X,Y) >= 1");
  return markov_prefactor(p.mu, mu_prime, x0) * kappa1(p) * std::pow(d_xy, p.alpha_eps());
}

// ---------------------------------------------------------------------------
// trajectory-level checks
// ---------------------------------------------------------------------------

BoundReport check_speed_limit(const Trajectory& traj, const AveragedVelocity& avg,
                              const CostMatrix& cost, double rel_margin) {
  if (traj.samples.empty()) throw ValidationError("speed limit: empty trajectory");
  if (cost.size() != traj.samples.front().x.size())
    throw ValidationError("speed limit: cost matrix does not match the lattice");
  BoundReport rep;
  rep.name = "speed_limit";
  rep.measured = traj.duration;

  double w = wasserstein_primal(traj.initial_concentrations(), traj.final_concentrations(), cost)
                 .value;
  if (avg.mean < 0.0) throw NumericalError("speed limit: negative averaged velocity term");
  double rhs = 0.0, unc = 0.0;
  if (avg.mean > 0.0) {
    rhs = w / avg.mean;
    unc = rhs * (avg.uncertainty / avg.mean) + 1e-12 * std::max(1.0, rhs);
  } else if (w > 1e-12) {
    // zero average flow cannot move mass; flag as a genuine violation
    rhs = std::numeric_limits<double>::infinity();
  }
  rep.bound = rhs;
  rep.uncertainty = unc;
  rep.margin = std::max(rel_margin * std::abs(rhs), unc);
  if (traj.tunneling_present) {
    rep.out_of_scope = true;
    rep.satisfied = true;
    rep.note = "assisted tunneling present: speed-limit hypotheses not met, check skipped";
    return rep;
  }
  rep.satisfied = traj.duration + rep.margin >= rhs;
  std::ostringstream os;
  os << "W=" << w << " avgPhi=" << avg.mean;
  rep.note = os.str();
  return rep;
}

BoundReport check_min_time(const Trajectory& traj, const Region& x_region,
                           const Region& y_region, const LatticeGeometry& lattice,
                           BoundParams params) {
  if (traj.samples.empty()) throw ValidationError("min time: empty trajectory");
  BoundReport rep;
  rep.name = "macroscopic_min_time";
  rep.measured = traj.duration;
  const double d = lattice.set_distance(x_region, y_region);
  Region xc = lattice.complement(x_region);
  double y_mass = 0.0, xc_mass0 = 0.0;
  for (int s : y_region.sites) y_mass += traj.final_concentrations()(s);
  for (int s : xc.sites) xc_mass0 += traj.initial_concentrations()(s);
  double mu = y_mass - xc_mass0;
  if (traj.tunneling_present) {
    rep.out_of_scope = true;
    rep.satisfied = true;
    rep.note = "assisted tunneling present: macroscopic-transport hypotheses not met";
    return rep;
  }
  if (mu <= 0.0) {
    rep.satisfied = true;
    rep.bound = 0.0;
    rep.note = "no macroscopic transport measured (mu <= 0); bound vacuous";
    return rep;
  }
  params.mu = std::min(mu, 1.0);
  rep.bound = min_time_bound(params, d);
  rep.uncertainty = 1e-12 * std::max(1.0, rep.bound);
  rep.margin = std::max(1e-9 * rep.bound, rep.uncertainty);
  rep.satisfied = traj.duration + rep.margin >= rep.bound;
  std::ostringstream os;
  os << "mu=" << mu << " d=" << d;
  rep.note = os.str();
  return rep;
}

std::vector<BoundReport> check_probability_ceiling(const Trajectory& traj,
                                                   const FockBasis& basis,
                                                   const Region& x_region,
                                                   const Region& y_region,
                                                   const LatticeGeometry& lattice,
                                                   BoundParams params, int n0, int d_n0,
                                                   double margin) {
  if (traj.states.size() != traj.samples.size())
    throw ValidationError("probability ceiling: trajectory must be recorded with states");
  if (n0 < 0 || d_n0 < 1) throw ValidationError("probability ceiling: bad N0 / dN0");
  const double d = lattice.set_distance(x_region, y_region);
  Region xc = lattice.complement(x_region);
  double h0 = projector_weight(traj.states.front(), basis, xc, NumberPredicate::AtMost, n0);
  if (std::abs(h0 - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "probability ceiling: initial state violates the support hypothesis "
          "<P_{n_Xc<=N0}> = 1 (got "
       << h0 << ")";
    throw ValidationError(os.str());
  }
  std::vector<BoundReport> out;
  out.reserve(traj.samples.size());
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    BoundReport rep;
    std::ostringstream nm;
    nm << "arrival_probability[t=" << traj.samples[k].t << "]";
    rep.name = nm.str();
    rep.measured =
        projector_weight(traj.states[k], basis, y_region, NumberPredicate::AtLeast, n0 + d_n0);
    rep.bound = probability_bound(params, basis.n_bosons(), d_n0, traj.samples[k].t, d);
    rep.uncertainty = 1e-12;
    rep.margin = margin;
    if (traj.tunneling_present) {
      rep.out_of_scope = true;
      rep.satisfied = true;
      rep.note = "assisted tunneling present: arrival-probability hypotheses not met";
    } else {
      rep.satisfied = rep.measured <= rep.bound + rep.margin;
    }
    out.push_back(std::move(rep));
  }
  return out;
}

BoundReport check_velocity_ceiling(const State& s, const HamiltonianModel& model,
                                   const CostMatrix& cost, const BoundParams& params,
                                   double margin) {
  params.validate();
  BoundReport rep;
  rep.name = "velocity_ceiling";
  // the ceiling presumes the decay certificate with these parameters
  const auto& lattice = *model.lattice;
  for (int i = 0; i < lattice.n_sites(); ++i)
    for (int j = 0; j < i; ++j) {
      double cap = params.j / std::pow(lattice.distance(i, j), params.alpha);
      if (std::abs(model.hopping.amplitude(i, j)) > cap + 1e-12)
        throw ValidationError("velocity ceiling: model violates the assumed decay certificate");
    }
  rep.measured = velocity_term(site_flows(s, model), cost);
  rep.bound = velocity_upper_bound(params);
  rep.uncertainty = 1e-14 * std::max(1.0, rep.bound);
  rep.margin = std::max(margin, rep.uncertainty);
  if (model.has_tunneling()) {
    rep.out_of_scope = true;
    rep.satisfied = true;
    rep.note = "assisted tunneling present: velocity ceiling not applicable";
    return rep;
  }
  rep.satisfied = rep.measured <= rep.bound + rep.margin;
  return rep;
}

}  // namespace bosecone
