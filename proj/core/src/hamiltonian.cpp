#include "bosecone/hamiltonian.hpp"

#include <cmath>
#include <vector>

namespace bosecone {

namespace {

Eigen::MatrixXd zero_table(const LatticeGeometry& lattice) {
  return Eigen::MatrixXd::Zero(lattice.n_sites(), lattice.n_sites());
}

void check_symmetric_zero_diag(const Eigen::MatrixXd& a, const char* who) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (a(i, i) != 0.0) throw ValidationError(std::string(who) + ": diagonal must be zero");
    for (Eigen::Index j = 0; j < i; ++j)
      if (a(i, j) != a(j, i)) throw ValidationError(std::string(who) + ": table must be symmetric");
  }
}

}  // namespace

HoppingSpec HoppingSpec::power_law(const LatticeGeometry& lattice, double strength, double alpha) {
  if (strength < 0.0) throw ValidationError("hopping: strength must be >= 0");
  if (alpha <= lattice.dimension())
    throw ValidationError("hopping: decay exponent must exceed the lattice dimension");
  HoppingSpec h;
  h.amplitude = zero_table(lattice);
  for (int i = 0; i < lattice.n_sites(); ++i)
    for (int j = 0; j < i; ++j) {
      double v = strength / std::pow(lattice.distance(i, j), alpha);
      h.amplitude(i, j) = v;
      h.amplitude(j, i) = v;
    }
  h.decay = DecayCertificate{strength, alpha};
  return h;
}

HoppingSpec HoppingSpec::nearest_neighbor(const LatticeGeometry& lattice, double strength,
                                          double alpha) {
  if (strength < 0.0) throw ValidationError("hopping: strength must be >= 0");
  HoppingSpec h;
  h.amplitude = zero_table(lattice);
  for (int i = 0; i < lattice.n_sites(); ++i)
    for (int j = 0; j < i; ++j)
      if (lattice.distance_sq(i, j) == 1) {
        h.amplitude(i, j) = strength;
        h.amplitude(j, i) = strength;
      }
  h.decay = DecayCertificate{strength, alpha};
  return h;
}

HoppingSpec HoppingSpec::pair(const LatticeGeometry& lattice, int a, int b, double strength,
                              double alpha) {
  if (a == b || a < 0 || b < 0 || a >= lattice.n_sites() || b >= lattice.n_sites())
    throw ValidationError("hopping: bad pair");
  HoppingSpec h;
  h.amplitude = zero_table(lattice);
  h.amplitude(a, b) = strength;
  h.amplitude(b, a) = strength;
  double d = lattice.distance(a, b);
  h.decay = DecayCertificate{std::abs(strength) * std::pow(d, alpha), alpha};
  return h;
}

HoppingSpec HoppingSpec::none(const LatticeGeometry& lattice) {
  HoppingSpec h;
  h.amplitude = zero_table(lattice);
  h.decay = DecayCertificate{0.0, lattice.dimension() + 1.0};
  return h;
}

InteractionSpec InteractionSpec::none() {
  InteractionSpec s;
  s.energy = [](const Configuration&) { return 0.0; };
  return s;
}

InteractionSpec InteractionSpec::bose_hubbard(double u, double mu) {
  InteractionSpec s;
  s.energy = [u, mu](const Configuration& c) {
    double e = 0.0;
    for (int n : c) e += 0.5 * u * n * (n - 1.0) - mu * n;
    return e;
  };
  return s;
}

InteractionSpec InteractionSpec::on_site(int site, double quadratic, double linear) {
  InteractionSpec s;
  s.energy = [site, quadratic, linear](const Configuration& c) {
    if (site < 0 || site >= static_cast<int>(c.size()))
      throw ValidationError("interaction: site out of range");
    double n = c[static_cast<std::size_t>(site)];
    return quadratic * n * n + linear * n;
  };
  return s;
}

InteractionSpec InteractionSpec::sum(InteractionSpec a, InteractionSpec b) {
  InteractionSpec s;
  s.energy = [fa = std::move(a.energy), fb = std::move(b.energy)](const Configuration& c) {
    return fa(c) + fb(c);
  };
  return s;
}

TunnelingSpec TunnelingSpec::pair(const LatticeGeometry& lattice, int a, int b, double strength) {
  if (lattice.dimension() != 1)
    throw ValidationError("tunneling: only 1-D chains are supported");
  if (a == b || a < 0 || b < 0 || a >= lattice.n_sites() || b >= lattice.n_sites())
    throw ValidationError("tunneling: bad pair");
  if (lattice.distance_sq(a, b) != 1)
    throw ValidationError("tunneling: pair must be nearest neighbors");
  TunnelingSpec t;
  t.amplitude = zero_table(lattice);
  t.amplitude(a, b) = strength;
  t.amplitude(b, a) = strength;
  return t;
}

bool HamiltonianModel::has_tunneling() const {
  return tunneling.has_value() && tunneling->amplitude.cwiseAbs().maxCoeff() > 0.0;
}

double hopping_decay_excess(const HamiltonianModel& model) {
  if (!model.hopping.decay) throw ValidationError("decay check: model carries no certificate");
  const auto& cert = *model.hopping.decay;
  const auto& lattice = *model.lattice;
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < lattice.n_sites(); ++i)
    for (int j = 0; j < i; ++j) {
      double cap = cert.strength / std::pow(lattice.distance(i, j), cert.alpha);
      worst = std::max(worst, std::abs(model.hopping.amplitude(i, j)) - cap);
    }
  return worst;
}

bool verify_hopping_decay(const HamiltonianModel& model, double tol) {
  if (model.lattice->n_sites() < 2) return true;
  return hopping_decay_excess(model) <= tol;
}

double SparseHamiltonian::hermiticity_defect() const {
  Eigen::SparseMatrix<double> d = Eigen::SparseMatrix<double>(h_.transpose()) - h_;
  double worst = 0.0;
  for (int k = 0; k < d.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(d, k); it; ++it)
      worst = std::max(worst, std::abs(it.value()));
  return worst;
}

SparseHamiltonian materialize(const HamiltonianModel& model) {
  if (!model.lattice || !model.basis) throw ValidationError("materialize: model missing sector");
  const auto& basis = *model.basis;
  const auto& lattice = *model.lattice;
  if (basis.n_sites() != lattice.n_sites())
    throw ValidationError("materialize: basis and lattice disagree on site count");
  check_symmetric_zero_diag(model.hopping.amplitude, "hopping");
  if (model.hopping.decay && !verify_hopping_decay(model))
    throw ValidationError("materialize: hopping decay certificate violated");
  if (model.tunneling) {
    check_symmetric_zero_diag(model.tunneling->amplitude, "tunneling");
    if (lattice.dimension() != 1)
      throw ValidationError("materialize: assisted tunneling needs a 1-D chain");
    for (int i = 0; i < lattice.n_sites(); ++i)
      for (int j = 0; j < i; ++j)
        if (model.tunneling->amplitude(i, j) != 0.0 && lattice.distance_sq(i, j) != 1)
          throw ValidationError("materialize: assisted tunneling must be nearest neighbor");
  }
  if (!model.interaction.energy) throw ValidationError("materialize: interaction not set");

  const std::size_t dim = basis.dim();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(dim * (static_cast<std::size_t>(basis.n_sites()) + 1));
  for (std::size_t idx = 0; idx < dim; ++idx) {
    double diag = model.interaction.energy(basis.config(idx));
    if (diag != 0.0)
      trip.emplace_back(static_cast<int>(idx), static_cast<int>(idx), diag);
    for (const Hop& h : hop_neighbors(basis, idx)) {
      double coeff = model.hopping.amplitude(h.to, h.from);
      if (model.tunneling)
        coeff += model.tunneling->amplitude(h.to, h.from) * (h.pair_total - 1.0);
      if (coeff == 0.0) continue;
      trip.emplace_back(static_cast<int>(h.target), static_cast<int>(idx), coeff * h.amp);
    }
  }
  Eigen::SparseMatrix<double> h(static_cast<int>(dim), static_cast<int>(dim));
  h.setFromTriplets(trip.begin(), trip.end());
  return SparseHamiltonian(std::move(h));
}

}  // namespace bosecone
