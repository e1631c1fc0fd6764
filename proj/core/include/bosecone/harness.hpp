#pragma once

// Experiment orchestration: seeded deterministic randomness, adversarial
// instance generators, JSON experiment configs with explicit error paths,
// dispatch of the five experiment kinds, and canonical report emission.

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bosecone/bounds.hpp"
#include "bosecone/protocols.hpp"
#include "bosecone/transport.hpp"

namespace bosecone {

// Deterministic random stream.  The uniform mapping is fixed explicitly
// ((x >> 11) * 2^-53) so that identical seeds give identical doubles on every
// platform; distributions from <random> other than the engine itself are
// avoided for the same reason.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t raw();
  double uniform();                       // in [0, 1), 53-bit resolution
  double uniform(double lo, double hi);   // in [lo, hi)
  int uniform_int(int lo, int hi);        // inclusive bounds
  double gaussian();                      // Box-Muller from two uniforms
  Rng spawn(std::uint64_t stream) const;  // independent deterministic substream

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_ = 0;
};

// strictly positive probability vector (simplex point)
Eigen::VectorXd random_distribution(Rng& rng, int n);
// normalized complex Gaussian amplitudes over the whole sector
PureState random_pure_state(Rng& rng, const FockBasis& basis);
// same, restricted to configurations with n_region <= cap; throws
// ValidationError when no configuration qualifies
PureState random_supported_state(Rng& rng, const FockBasis& basis, const Region& region,
                                 int cap);
// symmetric hopping with |J_ij| uniform in [0, j/||i-j||^alpha] and random
// signs; carries the (j, alpha) decay certificate it satisfies by construction
HoppingSpec random_hopping(Rng& rng, const LatticeGeometry& lattice, double j, double alpha);

// random transport instance: marginals over a random subset of a random small
// lattice, with the power-law metric cost restricted to that support
struct OtInstance {
  Eigen::VectorXd x, y;
  CostMatrix cost;
};
OtInstance random_ot_instance(Rng& rng, int min_points, int max_points, double exponent);

struct RandomProtocolParams {
  int stage_count = 3;
  double horizon = 5.0;  // total duration, split randomly across stages
  double j = 1.0;
  double alpha = 2.5;
  double u_max = 2.0;   // on-site interaction strength drawn in [0, u_max]
  double mu_max = 1.0;  // chemical potential drawn in [-mu_max, mu_max]
};

// Piecewise-constant schedule of certificate-respecting long-range models
// with random on-site diagonals; identical seeds give identical schedules.
std::vector<Stage> random_protocol(std::uint64_t seed,
                                   std::shared_ptr<const LatticeGeometry> lattice,
                                   std::shared_ptr<const FockBasis> basis,
                                   const RandomProtocolParams& params);

// ---------------------------------------------------------------------------
// configuration and reports
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::string kind;        // simulate | ot | bound-check | protocol | oracle
  std::uint64_t seed = 1;  // may be overridden by the command line
  nlohmann::json raw;      // validated document, echoed into reports
};

// Throws ValidationError with a dotted path to the offending key.
ExperimentConfig parse_config(const nlohmann::json& document);
ExperimentConfig load_config_file(const std::string& path);

struct RunReport {
  std::string kind;
  std::string version;
  std::uint64_t seed = 0;
  bool all_pass = false;
  int violations = 0;           // failed checks (out-of-scope ones never count)
  std::vector<BoundReport> checks;
  nlohmann::json detail;        // kind-specific payload
  nlohmann::json config_echo;
  double wall_clock_ms = 0.0;   // excluded from canonical serialization
};

// Canonical serialization is byte-identical for identical (config, seed,
// version); wall-clock time is only present when canonical = false.
nlohmann::json report_to_json(const RunReport& report, bool canonical = true);

// Columns: t, x_0..x_{n-1}, Phi_t, and fidelity when provided (one row per
// trajectory sample).
void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::vector<double>* fidelity = nullptr);

// Executes one experiment.  Artifacts (report.json, trajectory.csv where
// applicable) are written under out_dir when it is non-empty.  threads >= 1
// controls seed-sweep fan-out; results are deterministic regardless.
RunReport run(const ExperimentConfig& config, const std::string& out_dir, int threads = 1);

}  // namespace bosecone
