#ifndef WAVEREG_HARNESS_HPP
#define WAVEREG_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wavereg/batch.hpp"
#include "wavereg/regression.hpp"

namespace wavereg {

inline constexpr const char* kVersionTag = "wavereg 0.1.0";

/// JSON-facing description of the ground-truth function.
struct TargetSpec {
  std::string kind = "step";                 // constant|step|sawtooth|dyadic_random
  double value = 0.0;                        // constant
  std::vector<double> edges = {1.0 / 3.0};   // step
  std::vector<double> levels = {0.5, -0.5};  // step
  int teeth = 3;                             // sawtooth
  double amplitude = 1.0;                    // sawtooth
  std::uint64_t seed = 1;                    // dyadic_random
  int j0 = 0;                                // dyadic_random
  int depth = 6;                             // dyadic_random
  TargetFunction::Meta meta;                 // nominal (s, p, q, B)
};

TargetFunction build_target(const TargetSpec& spec, int d);

/// One experiment: regression config + noise + target, plus harness knobs.
struct ExperimentConfig {
  RegressionConfig regression;
  NoiseModel noise;
  TargetSpec target;
  double bound_constant = 1000.0;  // declared cap for the rate-envelope check
  int risk_guard = 3;              // extra dyadic levels for risk quadrature

  void validate() const;
};

std::string experiment_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_from_json(const std::string& text);
ExperimentConfig load_experiment(const std::string& path);

/// Stable hash of the canonicalized config (sorted keys, floats at 17
/// significant digits).
std::string config_digest(const ExperimentConfig& config);

struct RunRecord {
  std::string config_digest;
  std::uint64_t seed = 0;
  std::int64_t horizon = 0;  // T
  double sigma = 0.0;
  double s = 0.0, p = 0.0, q = 0.0, besov_radius = 0.0;  // target nominal
  double risk = 0.0;                // l2 risk of the averaged predictor
  double regret = 0.0;              // cumulative empirical regret vs f
  std::int64_t experts = 0;
  std::int64_t wallclock_ms = 0;
  std::string version = kVersionTag;
  // derived diagnostics, not part of the CSV schema
  double jensen_lhs = 0.0;
  double jensen_rhs = 0.0;
  double bound_ratio = 0.0;  // (regret/T) / minimax main term
};

/// Optional per-round curves, kept only when requested.
struct RunDetail {
  std::vector<double> cumulative_regret;
  std::vector<double> per_round_risk;
};

/// One end-to-end realization: data, online run, averaging, risk.
RunRecord run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                         RunDetail* detail = nullptr);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_ = 0.0;
  double r2 = 0.0;
  int n_points = 0;
};

enum class Sweep { horizon, sigma2 };

/// Least squares of log(median risk over seeds) on the log of the swept
/// variable; needs >= 3 sweep points with >= 5 seeds each.
RateFit fit_rate(const std::vector<RunRecord>& records, Sweep sweep);

/// Minimax risk main term B^{2d/(2s+d)} sigma^{4s/(2s+d)} T^{-2s/(2s+d)}.
double minimax_main_term(double besov_radius, double sigma, double s, int d,
                         std::int64_t horizon);

/// Runs the grid x seeds product on a small thread pool (WAVEREG_THREADS
/// or hardware concurrency); records come back in deterministic order.
std::vector<RunRecord> run_sweep(const ExperimentConfig& base, Sweep sweep,
                                 const std::vector<double>& grid_values,
                                 int n_seeds, int threads = 0);

int thread_count_from_env();

/// records.csv schema:
/// config_digest,seed,T,sigma,s,p,q,B,risk,regret,experts,ms
void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records);
void append_records_csv(const std::string& path,
                        const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records_csv(const std::string& path);

std::string rates_to_json(const RateFit& fit, Sweep sweep);

/// Per-round cumulative empirical regret as CSV (t,cumulative_regret).
void write_trace_csv(std::ostream& out, const std::vector<double>& cumulative);

/// Dataset dump: t,x,y with the d = 2 coordinates quoted.
void write_dataset_csv(std::ostream& out, const std::vector<Sample>& samples,
                       int d);

}  // namespace wavereg

#endif  // WAVEREG_HARNESS_HPP
