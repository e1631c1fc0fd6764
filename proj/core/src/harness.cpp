#include "bosecone/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>

namespace bosecone {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : gen_(seed), seed_(seed) {}

std::uint64_t Rng::raw() { return gen_(); }

double Rng::uniform() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) {
  if (!(lo < hi)) throw ValidationError("rng: empty uniform range");
  return lo + (hi - lo) * uniform();
}

int Rng::uniform_int(int lo, int hi) {
  if (lo > hi) throw ValidationError("rng: empty integer range");
  auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  return lo + static_cast<int>(static_cast<std::uint64_t>(uniform() * static_cast<double>(span)) %
                               span);
}

double Rng::gaussian() {
  double u1 = uniform(), u2 = uniform();
  double r = std::sqrt(-2.0 * std::log1p(-u1));  // log(1-u1), safe at u1 = 0
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::spawn(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 1)));
}

Eigen::VectorXd random_distribution(Rng& rng, int n) {
  if (n < 1) throw ValidationError("random distribution: need at least one point");
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = -std::log1p(-rng.uniform());
  double total = x.sum();
  if (!(total > 0.0)) x.setConstant(1.0), total = n;
  return x / total;
}

PureState random_pure_state(Rng& rng, const FockBasis& basis) {
  PureState psi;
  psi.amps = Eigen::VectorXcd(basis.dim());
  for (std::size_t i = 0; i < basis.dim(); ++i)
    psi.amps(static_cast<Eigen::Index>(i)) =
        std::complex<double>(rng.gaussian(), rng.gaussian());
  double norm = psi.amps.norm();
  if (!(norm > 0.0)) throw NumericalError("random state: zero draw");
  psi.amps /= norm;
  return psi;
}

PureState random_supported_state(Rng& rng, const FockBasis& basis, const Region& region,
                                 int cap) {
  std::vector<std::size_t> allowed;
  for (std::size_t i = 0; i < basis.dim(); ++i)
    if (region_number(basis.config(i), region) <= cap) allowed.push_back(i);
  if (allowed.empty())
    throw ValidationError("random supported state: no configuration satisfies the cap");
  PureState psi;
  psi.amps = Eigen::VectorXcd::Zero(basis.dim());
  for (std::size_t i : allowed)
    psi.amps(static_cast<Eigen::Index>(i)) =
        std::complex<double>(rng.gaussian(), rng.gaussian());
  double norm = psi.amps.norm();
  if (!(norm > 0.0)) throw NumericalError("random state: zero draw");
  psi.amps /= norm;
  return psi;
}

HoppingSpec random_hopping(Rng& rng, const LatticeGeometry& lattice, double j, double alpha) {
  if (!(j > 0.0)) throw ValidationError("random hopping: requires J > 0");
  if (!(alpha > lattice.dimension()))
    throw ValidationError("random hopping: requires alpha > D");
  const int n = lattice.n_sites();
  HoppingSpec spec;
  spec.amplitude = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      double cap = j / std::pow(lattice.distance(a, b), alpha);
      double mag = cap * rng.uniform();
      double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      spec.amplitude(a, b) = spec.amplitude(b, a) = sign * mag;
    }
  spec.decay = DecayCertificate{j, alpha};
  return spec;
}

std::vector<Stage> random_protocol(std::uint64_t seed,
                                   std::shared_ptr<const LatticeGeometry> lattice,
                                   std::shared_ptr<const FockBasis> basis,
                                   const RandomProtocolParams& params) {
  if (!lattice || !basis) throw ValidationError("random protocol: missing lattice/basis");
  if (params.stage_count < 1)
    throw ValidationError("random protocol: requires at least one stage");
  if (!(params.horizon > 0.0)) throw ValidationError("random protocol: requires horizon > 0");
  if (params.u_max < 0.0 || params.mu_max < 0.0)
    throw ValidationError("random protocol: negative interaction scales");
  Rng rng(seed);
  std::vector<double> weights(params.stage_count);
  double total = 0.0;
  for (double& w : weights) total += (w = 0.1 + rng.uniform());
  std::vector<Stage> stages;
  stages.reserve(params.stage_count);
  for (int k = 0; k < params.stage_count; ++k) {
    HamiltonianModel model;
    model.lattice = lattice;
    model.basis = basis;
    model.hopping = random_hopping(rng, *lattice, params.j, params.alpha);
    double u = params.u_max > 0.0 ? rng.uniform(0.0, params.u_max) : 0.0;
    double mu = params.mu_max > 0.0 ? rng.uniform(-params.mu_max, params.mu_max) : 0.0;
    model.interaction = InteractionSpec::bose_hubbard(u, mu);
    stages.push_back({std::move(model), params.horizon * weights[k] / total});
  }
  return stages;
}

OtInstance random_ot_instance(Rng& rng, int min_points, int max_points, double exponent) {
  if (min_points < 2 || max_points < min_points)
    throw ValidationError("random transport instance: bad support-size range");
  if (!(exponent > 0.0 && exponent <= 1.0))
    throw ValidationError("random transport instance: exponent must lie in (0, 1]");
  int n = rng.uniform_int(min_points, max_points);
  int dim = rng.uniform_int(1, 2);
  std::shared_ptr<LatticeGeometry> lattice;
  if (dim == 1) {
    lattice = std::make_shared<LatticeGeometry>(
        LatticeGeometry::chain(n + rng.uniform_int(0, 8)));
  } else {
    int side = 2;
    while (side * side < n) ++side;
    side += rng.uniform_int(0, 2);
    lattice = std::make_shared<LatticeGeometry>(
        LatticeGeometry::hypercubic(2, {side, side}));
  }
  std::vector<int> pool(static_cast<std::size_t>(lattice->n_sites()));
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<int>(i);
  for (int k = 0; k < n; ++k)
    std::swap(pool[k], pool[rng.uniform_int(k, static_cast<int>(pool.size()) - 1)]);
  pool.resize(static_cast<std::size_t>(n));
  return OtInstance{random_distribution(rng, n), random_distribution(rng, n),
                    CostMatrix::power_law(*lattice, exponent, pool)};
}

// ---------------------------------------------------------------------------
// config plumbing
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError(path.empty() ? "config: " + what : "config." + path + ": " + what);
}

std::string joined(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json& need(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(joined(path, key), "missing required field");
  return *it;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        ok = true;
        break;
      }
    if (!ok) fail(joined(path, item.key()), "unknown field");
  }
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

std::uint64_t as_u64(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    fail(path, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected a boolean");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

std::vector<int> as_int_array(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of integers");
  std::vector<int> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_int(v[i], path));
  return out;
}

double get_double(const json& obj, const std::string& path, const char* key, double fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return as_double(obj[key], joined(path, key));
}

int get_int(const json& obj, const std::string& path, const char* key, int fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return as_int(obj[key], joined(path, key));
}

std::shared_ptr<const LatticeGeometry> lattice_from(const json& spec, const std::string& path) {
  check_keys(spec, path, {"dimension", "extents"});
  int dim = as_int(need(spec, path, "dimension"), path + ".dimension");
  std::vector<int> extents = as_int_array(need(spec, path, "extents"), path + ".extents");
  return std::make_shared<LatticeGeometry>(LatticeGeometry::hypercubic(dim, extents));
}

Region region_from(const json& v, const std::string& path, const LatticeGeometry& lattice) {
  Region r(as_int_array(v, path));
  lattice.validate_region(r, path.c_str());
  return r;
}

Configuration config_from(const json& v, const std::string& path, const FockBasis& basis) {
  std::vector<int> occ = as_int_array(v, path);
  if (static_cast<int>(occ.size()) != basis.n_sites())
    fail(path, "occupation list does not match the lattice size");
  Configuration c(occ.begin(), occ.end());
  int total = 0;
  for (int n : occ) {
    if (n < 0) fail(path, "negative occupation");
    total += n;
  }
  if (total != basis.n_bosons()) fail(path, "total boson number does not match the sector");
  return c;
}

// non-finite doubles serialize as strings so reports stay valid JSON
json jnum(double v) {
  if (std::isfinite(v)) return json(v);
  if (std::isnan(v)) return json("nan");
  return json(v > 0 ? "inf" : "-inf");
}

json bound_report_json(const BoundReport& rep) {
  json j;
  j["bound_name"] = rep.name;
  j["measured"] = jnum(rep.measured);
  j["bound_value"] = jnum(rep.bound);
  j["margin"] = jnum(rep.margin);
  j["uncertainty"] = jnum(rep.uncertainty);
  j["pass"] = rep.satisfied;
  j["out_of_scope"] = rep.out_of_scope;
  j["note"] = rep.note;
  return j;
}

json params_json(const BoundParams& p) {
  json j;
  j["j"] = p.j;
  j["alpha"] = p.alpha;
  j["dim"] = p.dim;
  j["eps"] = p.eps;
  j["alpha_eps"] = p.alpha_eps();
  j["gamma"] = p.gamma;
  j["mu"] = p.mu;
  return j;
}

void append_check(RunReport& rep, BoundReport check) {
  if (!check.satisfied) ++rep.violations;
  rep.checks.push_back(std::move(check));
}

template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, 64);
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

double stamp(double v) { return v; }  // placeholder for symmetry in csv writer

void csv_number(std::string& line, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", stamp(v));
  line += buf;
}

BoundParams bound_params_from(const json& cfg, const std::string& path, double j, double alpha,
                              const LatticeGeometry& lattice) {
  BoundParams p;
  p.j = j;
  p.alpha = alpha;
  p.dim = lattice.dimension();
  const json empty = json::object();
  const json& b = cfg.contains("bound") ? cfg["bound"] : empty;
  if (cfg.contains("bound"))
    check_keys(b, path + ".bound", {"eps", "n0", "dn0", "gamma"});
  p.eps = get_double(b, path + ".bound", "eps", BoundParams::default_eps(alpha, p.dim));
  if (b.contains("gamma")) {
    p.gamma = as_double(b["gamma"], path + ".bound.gamma");
  } else if (p.dim <= 3) {
    p.gamma = shell_constant(p.dim).value;
  } else {
    p.gamma = shell_constant(lattice).value;
  }
  p.mu = 1.0;
  return p;
}

// ------------------------------ simulate ----------------------------------

void run_simulate(const ExperimentConfig& config, const std::string& out_dir,
                  RunReport& rep) {
  const json& cfg = config.raw;
  check_keys(cfg, "", {"kind", "seed", "lattice", "n_bosons", "model", "stages",
                       "random_stages", "initial", "cost_exponent", "samples_per_stage",
                       "target", "bound"});
  auto lattice = lattice_from(need(cfg, "", "lattice"), "lattice");
  int n_bosons = as_int(need(cfg, "", "n_bosons"), "n_bosons");
  auto basis =
      std::make_shared<FockBasis>(FockBasis::enumerate(lattice->n_sites(), n_bosons));

  const json& model_cfg = need(cfg, "", "model");
  check_keys(model_cfg, "model", {"j", "alpha", "u", "mu"});
  double j = as_double(need(model_cfg, "model", "j"), "model.j");
  double alpha = as_double(need(model_cfg, "model", "alpha"), "model.alpha");
  double u = get_double(model_cfg, "model", "u", 0.0);
  double mu = get_double(model_cfg, "model", "mu", 0.0);

  std::vector<Stage> stages;
  if (cfg.contains("stages") == cfg.contains("random_stages"))
    fail("stages", "exactly one of `stages` and `random_stages` is required");
  if (cfg.contains("stages")) {
    const json& arr = cfg["stages"];
    if (!arr.is_array() || arr.empty()) fail("stages", "expected a non-empty array");
    HamiltonianModel model;
    model.lattice = lattice;
    model.basis = basis;
    model.hopping = HoppingSpec::power_law(*lattice, j, alpha);
    model.interaction = InteractionSpec::bose_hubbard(u, mu);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "stages[" + std::to_string(i) + "]";
      check_keys(arr[i], path, {"duration"});
      stages.push_back({model, as_double(need(arr[i], path, "duration"), path + ".duration")});
    }
  } else {
    const json& rnd = cfg["random_stages"];
    check_keys(rnd, "random_stages", {"stage_count", "horizon", "u_max", "mu_max"});
    RandomProtocolParams pp;
    pp.stage_count = as_int(need(rnd, "random_stages", "stage_count"),
                            "random_stages.stage_count");
    pp.horizon = as_double(need(rnd, "random_stages", "horizon"), "random_stages.horizon");
    pp.u_max = get_double(rnd, "random_stages", "u_max", pp.u_max);
    pp.mu_max = get_double(rnd, "random_stages", "mu_max", pp.mu_max);
    pp.j = j;
    pp.alpha = alpha;
    stages = random_protocol(config.seed, lattice, basis, pp);
  }

  const json& init = need(cfg, "", "initial");
  check_keys(init, "initial", {"configuration", "random"});
  State initial;
  if (init.contains("configuration") == init.contains("random"))
    fail("initial", "exactly one of `configuration` and `random` is required");
  if (init.contains("configuration")) {
    initial = PureState::basis_state(
        *basis, config_from(init["configuration"], "initial.configuration", *basis));
  } else {
    if (!as_bool(init["random"], "initial.random")) fail("initial.random", "must be true");
    Rng rng = Rng(config.seed).spawn(0x5151);
    initial = random_pure_state(rng, *basis);
  }

  std::optional<Configuration> target;
  if (cfg.contains("target")) target = config_from(cfg["target"], "target", *basis);

  std::optional<CostMatrix> cost;
  if (cfg.contains("cost_exponent"))
    cost = CostMatrix::power_law(*lattice, as_double(cfg["cost_exponent"], "cost_exponent"));

  EvolveOptions options;
  options.samples_per_stage = get_int(cfg, "", "samples_per_stage", 32);
  options.record_states = target.has_value();
  if (cost) options.cost = &*cost;

  Trajectory traj = evolve(initial, stages, options);

  json detail;
  detail["duration"] = jnum(traj.duration);
  detail["norm_defect"] = jnum(traj.norm_defect);
  detail["stage_count"] = stages.size();
  detail["dim"] = basis->dim();
  {
    json xs = json::array();
    for (int i = 0; i < traj.final_concentrations().size(); ++i)
      xs.push_back(jnum(traj.final_concentrations()(i)));
    detail["final_concentrations"] = xs;
  }

  if (cost) {
    AveragedVelocity avg = average_velocity_term(initial, stages, *cost, 1e-7, options);
    BoundReport sl = check_speed_limit(traj, avg, *cost);
    detail["avg_velocity"] = jnum(avg.mean);
    detail["avg_velocity_uncertainty"] = jnum(avg.uncertainty);
    append_check(rep, std::move(sl));
  }

  std::vector<double> fidelity;
  if (target) {
    fidelity.reserve(traj.states.size());
    for (const State& s : traj.states)
      fidelity.push_back(fidelity_to_config(s, *basis, *target));
    detail["final_fidelity"] = jnum(fidelity.back());
  }
  rep.detail = std::move(detail);

  if (!out_dir.empty())
    write_trajectory_csv(out_dir + "/trajectory.csv", traj,
                         target ? &fidelity : nullptr);
}

// --------------------------------- ot --------------------------------------

void run_ot(const ExperimentConfig& config, RunReport& rep) {
  const json& cfg = config.raw;
  check_keys(cfg, "", {"kind", "seed", "instance", "random", "tolerance", "emit_plan"});
  double tol = get_double(cfg, "", "tolerance", 1e-9);
  if (cfg.contains("instance") == cfg.contains("random"))
    fail("instance", "exactly one of `instance` and `random` is required");

  json detail;
  if (cfg.contains("instance")) {
    const json& inst = cfg["instance"];
    check_keys(inst, "instance", {"x", "y", "cost"});
    std::vector<int> unusable;  // silence unused warnings on some compilers
    (void)unusable;
    const json& jx = need(inst, "instance", "x");
    const json& jy = need(inst, "instance", "y");
    const json& jc = need(inst, "instance", "cost");
    if (!jx.is_array() || !jy.is_array() || jx.size() != jy.size() || jx.empty())
      fail("instance", "x and y must be equal-length non-empty arrays");
    int n = static_cast<int>(jx.size());
    Eigen::VectorXd x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x(i) = as_double(jx[static_cast<std::size_t>(i)], "instance.x");
      y(i) = as_double(jy[static_cast<std::size_t>(i)], "instance.y");
    }
    if (!jc.is_array() || static_cast<int>(jc.size()) != n)
      fail("instance.cost", "expected an n x n table");
    Eigen::MatrixXd table(n, n);
    for (int r = 0; r < n; ++r) {
      const json& row = jc[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<int>(row.size()) != n)
        fail("instance.cost", "expected an n x n table");
      for (int c = 0; c < n; ++c)
        table(r, c) = as_double(row[static_cast<std::size_t>(c)], "instance.cost");
    }
    CostMatrix cost = CostMatrix::from_table(std::move(table));
    PrimalSolution primal = wasserstein_primal(x, y, cost);
    DualSolution dual = wasserstein_dual(x, y, cost);
    double gap = std::abs(primal.value - dual.value);
    detail["value_primal"] = jnum(primal.value);
    detail["value_dual"] = jnum(dual.value);
    detail["gap"] = jnum(gap);
    if (cfg.contains("emit_plan") && as_bool(cfg["emit_plan"], "emit_plan")) {
      json plan = json::array();
      for (const PlanEntry& e : primal.plan) {
        json row;
        row["from"] = e.from;
        row["to"] = e.to;
        row["mass"] = jnum(e.mass);
        plan.push_back(row);
      }
      detail["plan"] = plan;
    }
    BoundReport check;
    check.name = "kr_duality_gap";
    check.measured = gap;
    check.bound = tol * std::max(1.0, std::abs(primal.value));
    check.margin = 0.0;
    check.uncertainty = 1e-15 * std::max(1.0, std::abs(primal.value));
    check.satisfied = gap <= check.bound;
    append_check(rep, std::move(check));
  } else {
    const json& rnd = cfg["random"];
    check_keys(rnd, "random", {"instances", "min_points", "max_points", "exponents"});
    int instances = as_int(need(rnd, "random", "instances"), "random.instances");
    int min_points = get_int(rnd, "random", "min_points", 3);
    int max_points = get_int(rnd, "random", "max_points", 12);
    if (instances < 1 || min_points < 2 || max_points < min_points)
      fail("random", "bad sweep shape");
    std::vector<double> exponents{0.3, 0.7, 1.0};
    if (rnd.contains("exponents")) {
      exponents.clear();
      for (const auto& e : rnd["exponents"])
        exponents.push_back(as_double(e, "random.exponents"));
      if (exponents.empty()) fail("random.exponents", "expected a non-empty array");
      for (double e : exponents)
        if (!(e > 0.0 && e <= 1.0)) fail("random.exponents", "exponents must lie in (0, 1]");
    }
    double worst = 0.0;
    int violations = 0;
    for (int i = 0; i < instances; ++i) {
      Rng rng = Rng(config.seed).spawn(static_cast<std::uint64_t>(i));
      OtInstance draw = random_ot_instance(rng, min_points, max_points,
                                       exponents[static_cast<std::size_t>(i) % exponents.size()]);
      PrimalSolution primal = wasserstein_primal(draw.x, draw.y, draw.cost);
      DualSolution dual = wasserstein_dual(draw.x, draw.y, draw.cost);
      double gap = std::abs(primal.value - dual.value);
      double cap = tol * std::max(1.0, std::abs(primal.value));
      worst = std::max(worst, gap / std::max(cap, 1e-300));
      if (gap > cap) ++violations;
    }
    detail["instances"] = instances;
    detail["worst_gap_ratio"] = jnum(worst);
    detail["gap_violations"] = violations;
    BoundReport check;
    check.name = "kr_duality_sweep";
    check.measured = worst;
    check.bound = 1.0;  // normalized: gap / tolerance
    check.margin = 0.0;
    check.uncertainty = 0.0;
    check.satisfied = violations == 0;
    append_check(rep, std::move(check));
  }
  rep.detail = std::move(detail);
}

// ------------------------------ bound-check --------------------------------

void run_bound_check(const ExperimentConfig& config, RunReport& rep, int threads) {
  const json& cfg = config.raw;
  check_keys(cfg, "", {"kind", "seed", "seeds", "lattice", "n_bosons", "protocol",
                       "regions", "bound", "cost_exponent", "checks", "samples_per_stage"});
  auto lattice = lattice_from(need(cfg, "", "lattice"), "lattice");
  int n_bosons = as_int(need(cfg, "", "n_bosons"), "n_bosons");
  auto basis =
      std::make_shared<FockBasis>(FockBasis::enumerate(lattice->n_sites(), n_bosons));

  const json& proto = need(cfg, "", "protocol");
  check_keys(proto, "protocol", {"stage_count", "horizon", "j", "alpha", "u_max", "mu_max"});
  RandomProtocolParams pp;
  pp.stage_count = get_int(proto, "protocol", "stage_count", pp.stage_count);
  pp.horizon = get_double(proto, "protocol", "horizon", pp.horizon);
  pp.j = get_double(proto, "protocol", "j", pp.j);
  pp.alpha = as_double(need(proto, "protocol", "alpha"), "protocol.alpha");
  pp.u_max = get_double(proto, "protocol", "u_max", pp.u_max);
  pp.mu_max = get_double(proto, "protocol", "mu_max", pp.mu_max);

  const json& regions = need(cfg, "", "regions");
  check_keys(regions, "regions", {"x", "y"});
  Region region_x = region_from(need(regions, "regions", "x"), "regions.x", *lattice);
  Region region_y = region_from(need(regions, "regions", "y"), "regions.y", *lattice);
  lattice->set_distance(region_x, region_y);  // validates disjointness and range
  Region region_xc = lattice->complement(region_x);

  BoundParams params = bound_params_from(cfg, "", pp.j, pp.alpha, *lattice);
  const json empty = json::object();
  const json& bnd = cfg.contains("bound") ? cfg["bound"] : empty;
  int n0 = get_int(bnd, "bound", "n0", 0);
  int dn0 = get_int(bnd, "bound", "dn0", 1);

  std::set<std::string> selected{"speed_limit", "min_time", "probability", "velocity"};
  if (cfg.contains("checks")) {
    selected.clear();
    if (!cfg["checks"].is_array() || cfg["checks"].empty())
      fail("checks", "expected a non-empty array of check names");
    for (const auto& c : cfg["checks"]) {
      std::string name = as_string(c, "checks");
      if (name != "speed_limit" && name != "min_time" && name != "probability" &&
          name != "velocity")
        fail("checks", "unknown check `" + name + "`");
      selected.insert(name);
    }
  }

  int seeds = get_int(cfg, "", "seeds", 1);
  if (seeds < 1) fail("seeds", "must be >= 1");
  int samples_per_stage = get_int(cfg, "", "samples_per_stage", 8);

  double cost_exp = get_double(cfg, "", "cost_exponent", params.alpha_eps());
  CostMatrix cost_speed = CostMatrix::power_law(*lattice, cost_exp);
  CostMatrix cost_vel = CostMatrix::power_law(*lattice, params.alpha_eps());

  struct SeedOutcome {
    std::vector<BoundReport> failures;
    int total = 0;
    double worst_ratio = 0.0;  // measured / bound over probability checks
  };
  std::vector<SeedOutcome> outcomes(static_cast<std::size_t>(seeds));

  parallel_for(seeds, threads, [&](int k) {
    SeedOutcome& out = outcomes[static_cast<std::size_t>(k)];
    Rng rng = Rng(config.seed).spawn(static_cast<std::uint64_t>(k));
    std::uint64_t proto_seed = rng.raw();
    std::vector<Stage> stages = random_protocol(proto_seed, lattice, basis, pp);
    State initial;
    if (selected.count("probability")) {
      initial = random_supported_state(rng, *basis, region_xc, n0);
    } else {
      initial = random_pure_state(rng, *basis);
    }
    EvolveOptions options;
    options.samples_per_stage = samples_per_stage;
    options.record_states =
        selected.count("probability") > 0 || selected.count("velocity") > 0;
    Trajectory traj = evolve(initial, stages, options);

    auto take = [&](BoundReport r) {
      ++out.total;
      r.name = "seed[" + std::to_string(k) + "]." + r.name;
      if (!r.satisfied) out.failures.push_back(std::move(r));
    };

    if (selected.count("speed_limit")) {
      AveragedVelocity avg = average_velocity_term(initial, stages, cost_speed, 1e-7);
      take(check_speed_limit(traj, avg, cost_speed));
    }
    if (selected.count("min_time")) take(check_min_time(traj, region_x, region_y, *lattice, params));
    if (selected.count("probability")) {
      for (BoundReport& r :
           check_probability_ceiling(traj, *basis, region_x, region_y, *lattice, params, n0, dn0)) {
        if (r.bound > 0.0)
          out.worst_ratio = std::max(out.worst_ratio, r.measured / r.bound);
        take(std::move(r));
      }
    }
    if (selected.count("velocity")) {
      for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const HamiltonianModel& model =
            stages[static_cast<std::size_t>(traj.samples[i].stage)].model;
        take(check_velocity_ceiling(traj.states[i], model, cost_vel, params));
      }
    }
  });

  int total = 0;
  double worst_ratio = 0.0;
  for (SeedOutcome& out : outcomes) {
    total += out.total;
    worst_ratio = std::max(worst_ratio, out.worst_ratio);
    for (BoundReport& r : out.failures) append_check(rep, std::move(r));
  }
  json detail;
  detail["seeds"] = seeds;
  detail["checks_evaluated"] = total;
  detail["violations"] = rep.violations;
  detail["worst_probability_ratio"] = jnum(worst_ratio);
  detail["params"] = params_json(params);
  rep.detail = std::move(detail);

  if (rep.violations == 0) {
    BoundReport summary;
    summary.name = "bound_sweep";
    summary.measured = 0.0;
    summary.bound = 0.0;
    summary.margin = 0.0;
    summary.satisfied = true;
    summary.note = std::to_string(total) + " checks, zero violations";
    rep.checks.push_back(std::move(summary));
  }
}

// ------------------------------- protocol ----------------------------------

void run_protocol(const ExperimentConfig& config, const std::string& out_dir,
                  RunReport& rep) {
  const json& cfg = config.raw;
  check_keys(cfg, "", {"kind", "seed", "variant", "length", "n_bosons", "j", "u", "alpha",
                       "samples_per_stage", "fidelity_floor", "bound"});
  std::string variant = as_string(need(cfg, "", "variant"), "variant");
  int length = as_int(need(cfg, "", "length"), "length");
  double j = get_double(cfg, "", "j", 1.0);
  double u = get_double(cfg, "", "u", 1e5);
  double alpha = get_double(cfg, "", "alpha", 3.0);
  double floor = get_double(cfg, "", "fidelity_floor", 0.99);

  ProtocolSchedule schedule;
  if (variant == "sequential") {
    int n_bosons = as_int(need(cfg, "", "n_bosons"), "n_bosons");
    schedule = sequential_mott_transfer(length, n_bosons, j, u);
  } else if (variant == "assisted") {
    schedule = supersonic_transfer(length, j, u);
  } else if (variant == "stepwise") {
    schedule = stepwise_mott_transfer(length, j, u);
  } else {
    fail("variant", "expected `sequential`, `assisted`, or `stepwise`");
  }

  EvolveOptions options;
  options.samples_per_stage = get_int(cfg, "", "samples_per_stage", 8);
  ProtocolResult result = execute_protocol(schedule, options);

  BoundParams params = bound_params_from(cfg, "", j, alpha, *schedule.lattice);

  BoundReport fid;
  fid.name = "final_fidelity";
  fid.measured = result.fidelity;
  fid.bound = floor;
  fid.margin = 0.0;
  fid.uncertainty = 1e-12;
  fid.satisfied = result.fidelity >= floor;
  fid.note = "lower bound: measured fidelity must reach bound_value";
  append_check(rep, std::move(fid));

  if (!result.checkpoint_fidelities.empty()) {
    BoundReport cp;
    cp.name = "checkpoint_fidelity_min";
    cp.measured =
        *std::min_element(result.checkpoint_fidelities.begin(), result.checkpoint_fidelities.end());
    cp.bound = floor;
    cp.margin = 0.0;
    cp.uncertainty = 1e-12;
    cp.satisfied = cp.measured >= floor;
    cp.note = "lower bound: measured fidelity must reach bound_value";
    append_check(rep, std::move(cp));
  }

  Region region_x{0};
  Region region_y{length - 1};
  append_check(rep,
               check_min_time(result.trajectory, region_x, region_y, *schedule.lattice, params));

  CostMatrix cost = CostMatrix::power_law(*schedule.lattice, params.alpha_eps());
  AveragedVelocity avg =
      average_velocity_term(PureState::basis_state(*schedule.basis, schedule.initial),
                            schedule.stages, cost, 1e-7);
  append_check(rep, check_speed_limit(result.trajectory, avg, cost));

  json detail;
  detail["variant"] = variant;
  detail["length"] = length;
  detail["n_bosons"] = schedule.basis->n_bosons();
  detail["stage_count"] = schedule.stages.size();
  detail["analytic_total_time"] = jnum(schedule.analytic_total_time);
  detail["measured_duration"] = jnum(result.trajectory.duration);
  detail["uses_tunneling"] = schedule.uses_tunneling;
  detail["fidelity"] = jnum(result.fidelity);
  {
    json arr = json::array();
    for (double f : result.checkpoint_fidelities) arr.push_back(jnum(f));
    detail["checkpoint_fidelities"] = arr;
  }
  detail["params"] = params_json(params);
  rep.detail = std::move(detail);

  if (!out_dir.empty()) {
    std::vector<double> fidelity;
    fidelity.reserve(result.trajectory.states.size());
    for (const State& s : result.trajectory.states)
      fidelity.push_back(fidelity_to_config(s, *schedule.basis, schedule.target));
    write_trajectory_csv(out_dir + "/trajectory.csv", result.trajectory, &fidelity);
  }
}

// -------------------------------- oracle -----------------------------------

void run_oracle(const ExperimentConfig& config, RunReport& rep) {
  const json& cfg = config.raw;
  check_keys(cfg, "", {"kind", "seed", "zeta_args", "ot_instances", "markov_pairs",
                       "shell_dims"});

  std::vector<double> zeta_args{1.05, 1.1, 1.5, 2.0, 3.0, 4.0, 6.0};
  if (cfg.contains("zeta_args")) {
    zeta_args.clear();
    for (const auto& v : cfg["zeta_args"]) zeta_args.push_back(as_double(v, "zeta_args"));
  }
  for (double s : zeta_args) {
    double a = riemann_zeta(s);
    double b = riemann_zeta_direct(s, 100000);
    BoundReport check;
    char name[64];
    std::snprintf(name, sizeof name, "zeta_cross[s=%g]", s);
    check.name = name;
    check.measured = std::abs(a - b);
    check.bound = 1e-10;
    check.margin = 0.0;
    check.uncertainty = 1e-12;
    check.satisfied = check.measured <= check.bound;
    append_check(rep, std::move(check));
  }

  int ot_instances = get_int(cfg, "", "ot_instances", 50);
  if (ot_instances > 0) {
    double worst = 0.0;
    for (int i = 0; i < ot_instances; ++i) {
      Rng rng = Rng(config.seed).spawn(0xA0000 + static_cast<std::uint64_t>(i));
      OtInstance draw = random_ot_instance(rng, 3, 12, i % 2 == 0 ? 0.7 : 1.0);
      worst = std::max(worst, duality_gap(draw.x, draw.y, draw.cost));
    }
    BoundReport check;
    check.name = "ot_dual_route";
    check.measured = worst;
    check.bound = 1e-9;
    check.margin = 0.0;
    check.uncertainty = 0.0;
    check.satisfied = worst <= check.bound;
    append_check(rep, std::move(check));
  }

  int markov_pairs = get_int(cfg, "", "markov_pairs", 50);
  if (markov_pairs > 0) {
    double worst = 0.0;
    for (int i = 0; i < markov_pairs; ++i) {
      Rng rng = Rng(config.seed).spawn(0xB0000 + static_cast<std::uint64_t>(i));
      double x0 = rng.uniform(0.0, 0.7);
      double mu = rng.uniform(0.05, (1.0 - x0) * 0.95);
      double closed = markov_optimal_mu_prime(mu, x0);
      // ternary search on the strictly unimodal prefactor
      double lo = 1e-12, hi = mu - 1e-12;
      for (int it = 0; it < 240; ++it) {
        double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (markov_prefactor(mu, m1, x0) < markov_prefactor(mu, m2, x0))
          lo = m1;
        else
          hi = m2;
      }
      worst = std::max(worst, std::abs(closed - 0.5 * (lo + hi)));
    }
    BoundReport check;
    check.name = "markov_optimizer_search";
    check.measured = worst;
    check.bound = 1e-8;
    check.margin = 0.0;
    check.uncertainty = 0.0;
    check.satisfied = worst <= check.bound;
    append_check(rep, std::move(check));
  }

  std::vector<int> shell_dims{1, 2, 3};
  if (cfg.contains("shell_dims")) shell_dims = as_int_array(cfg["shell_dims"], "shell_dims");
  const double expected[] = {0.0, 2.0, 8.0, 26.0};
  for (int d : shell_dims) {
    if (d < 1 || d > 3) fail("shell_dims", "only dimensions 1..3 have reference values");
    ShellConstant sc = shell_constant(d);
    BoundReport check;
    check.name = "shell_constant[D=" + std::to_string(d) + "]";
    check.measured = sc.value;
    check.bound = expected[d];
    check.margin = 0.0;
    check.uncertainty = 0.0;
    check.satisfied = sc.value == expected[d];
    check.note = "must equal the reference annulus-count constant exactly";
    append_check(rep, std::move(check));
  }

  json detail;
  detail["zeta_points"] = zeta_args.size();
  detail["ot_instances"] = ot_instances;
  detail["markov_pairs"] = markov_pairs;
  rep.detail = std::move(detail);
}

}  // namespace

// ---------------------------------------------------------------------------
// public entry points
// ---------------------------------------------------------------------------

ExperimentConfig parse_config(const nlohmann::json& document) {
  if (!document.is_object()) throw ValidationError("config: expected a JSON object");
  ExperimentConfig cfg;
  cfg.kind = as_string(need(document, "", "kind"), "kind");
  static const char* kinds[] = {"simulate", "ot", "bound-check", "protocol", "oracle"};
  if (std::find_if(std::begin(kinds), std::end(kinds),
                   [&](const char* k) { return cfg.kind == k; }) == std::end(kinds))
    fail("kind", "expected one of simulate, ot, bound-check, protocol, oracle");
  if (document.contains("seed")) cfg.seed = as_u64(document["seed"], "seed");
  cfg.raw = document;
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config file " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

nlohmann::json report_to_json(const RunReport& report, bool canonical) {
  nlohmann::json j;
  j["kind"] = report.kind;
  j["version"] = report.version;
  j["seed"] = report.seed;
  j["all_pass"] = report.all_pass;
  j["violations"] = report.violations;
  nlohmann::json checks = nlohmann::json::array();
  for (const BoundReport& r : report.checks) checks.push_back(bound_report_json(r));
  j["checks"] = checks;
  j["detail"] = report.detail.is_null() ? nlohmann::json::object() : report.detail;
  j["config"] = report.config_echo;
  if (!canonical) j["wall_clock_ms"] = report.wall_clock_ms;
  return j;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::vector<double>* fidelity) {
  if (traj.samples.empty()) throw ValidationError("csv: empty trajectory");
  if (fidelity && fidelity->size() != traj.samples.size())
    throw ValidationError("csv: fidelity column length mismatch");
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file: " + path);
  const int n = static_cast<int>(traj.samples.front().x.size());
  std::string line = "t";
  for (int i = 0; i < n; ++i) line += ",x_" + std::to_string(i);
  line += ",Phi_t";
  if (fidelity) line += ",fidelity";
  out << line << "\n";
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    const TrajectorySample& s = traj.samples[k];
    line.clear();
    csv_number(line, s.t);
    for (int i = 0; i < n; ++i) {
      line += ',';
      csv_number(line, s.x(i));
    }
    line += ',';
    csv_number(line, s.phi);
    if (fidelity) {
      line += ',';
      csv_number(line, (*fidelity)[k]);
    }
    out << line << "\n";
  }
  if (!out) throw ValidationError("failed writing output file: " + path);
}

RunReport run(const ExperimentConfig& config, const std::string& out_dir, int threads) {
  if (threads < 1) throw ValidationError("run: threads must be >= 1");
  auto t0 = std::chrono::steady_clock::now();
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw ValidationError("cannot create output directory: " + out_dir);
  }
  RunReport rep;
  rep.kind = config.kind;
  rep.version = kVersion;
  rep.seed = config.seed;
  rep.config_echo = config.raw;

  if (config.kind == "simulate") {
    run_simulate(config, out_dir, rep);
  } else if (config.kind == "ot") {
    run_ot(config, rep);
  } else if (config.kind == "bound-check") {
    run_bound_check(config, rep, threads);
  } else if (config.kind == "protocol") {
    run_protocol(config, out_dir, rep);
  } else if (config.kind == "oracle") {
    run_oracle(config, rep);
  } else {
    throw ValidationError("config.kind: unknown experiment kind " + config.kind);
  }

  rep.all_pass = rep.violations == 0;
  rep.wall_clock_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  if (!out_dir.empty()) {
    std::ofstream out(out_dir + "/report.json");
    if (!out) throw ValidationError("cannot open report file in " + out_dir);
    out << report_to_json(rep, true).dump(2) << "\n";
    if (!out) throw ValidationError("failed writing report file in " + out_dir);
  }
  return rep;
}

}  // namespace bosecone
