// Benchmark CLI for the adaptive online wavelet regression library.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wavereg/aggregator.hpp"
#include "wavereg/batch.hpp"
#include "wavereg/harness.hpp"
#include "wavereg/wavelet.hpp"

namespace {

using namespace wavereg;

void print_record(const RunRecord& rec) {
  std::printf("digest=%s seed=%llu T=%lld sigma=%g risk=%.6g regret=%.6g "
              "experts=%lld ms=%lld\n",
              rec.config_digest.c_str(),
              static_cast<unsigned long long>(rec.seed),
              static_cast<long long>(rec.horizon), rec.sigma, rec.risk,
              rec.regret, static_cast<long long>(rec.experts),
              static_cast<long long>(rec.wallclock_ms));
}

int cmd_run(const std::string& config_path, std::uint64_t seed,
            const std::string& out_dir, const std::string& dump_data,
            const std::string& trace_path) {
  const ExperimentConfig config = load_experiment(config_path);

  if (!dump_data.empty()) {
    const TargetFunction target = build_target(config.target, config.regression.d);
    const auto samples = generate_sample(target, config.noise,
                                         config.regression.horizon, seed);
    std::ofstream out(dump_data);
    if (!out) {
      std::fprintf(stderr, "cannot open %s\n", dump_data.c_str());
      return 1;
    }
    write_dataset_csv(out, samples, config.regression.d);
  }

  RunDetail detail;
  const bool want_trace = !trace_path.empty();
  const RunRecord rec = run_experiment(config, seed, want_trace ? &detail : nullptr);
  print_record(rec);
  std::printf("jensen: lhs=%.12g rhs=%.12g (lhs <= rhs: %s)\n", rec.jensen_lhs,
              rec.jensen_rhs, rec.jensen_lhs <= rec.jensen_rhs + 1e-12 ? "yes" : "NO");
  std::printf("bound ratio (avg regret / minimax main term): %.4g (declared cap %g)\n",
              rec.bound_ratio, config.bound_constant);

  if (want_trace) {
    std::ofstream out(trace_path);
    if (!out) {
      std::fprintf(stderr, "cannot open %s\n", trace_path.c_str());
      return 1;
    }
    write_trace_csv(out, detail.cumulative_regret);
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    append_records_csv(out_dir + "/records.csv", {rec});
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, int seeds, const std::string& grid,
              const std::string& out_dir) {
  const ExperimentConfig base = load_experiment(config_path);
  const auto eq = grid.find('=');
  if (eq == std::string::npos) {
    std::fprintf(stderr, "grid must look like T=256,1024 or sigma=0.5,1\n");
    return 1;
  }
  const std::string var = grid.substr(0, eq);
  Sweep sweep;
  if (var == "T") {
    sweep = Sweep::horizon;
  } else if (var == "sigma") {
    sweep = Sweep::sigma2;
  } else {
    std::fprintf(stderr, "unknown sweep variable '%s'\n", var.c_str());
    return 1;
  }
  std::vector<double> values;
  std::string rest = grid.substr(eq + 1);
  std::size_t pos = 0;
  while (pos != std::string::npos) {
    const std::size_t comma = rest.find(',', pos);
    const std::string tok = rest.substr(pos, comma == std::string::npos
                                                 ? std::string::npos
                                                 : comma - pos);
    if (!tok.empty()) values.push_back(std::stod(tok));
    pos = comma == std::string::npos ? std::string::npos : comma + 1;
  }

  const auto records = run_sweep(base, sweep, values, seeds);
  double worst_ratio = 0.0;
  for (const auto& r : records) {
    print_record(r);
    worst_ratio = std::max(worst_ratio, r.bound_ratio);
  }
  std::printf("max bound ratio over sweep: %.4g (declared cap %g)\n", worst_ratio,
              base.bound_constant);
  if (worst_ratio > base.bound_constant) {
    std::fprintf(stderr, "bound ratio exceeded the declared constant\n");
    return 1;
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    append_records_csv(out_dir + "/records.csv", records);
  }
  return 0;
}

int cmd_rates(const std::string& in_dir, const std::string& sweep_name,
              const std::string& out_path) {
  const auto records = read_records_csv(in_dir + "/records.csv");
  const Sweep sweep = sweep_name == "T" ? Sweep::horizon : Sweep::sigma2;
  const RateFit fit = fit_rate(records, sweep);
  const std::string text = rates_to_json(fit, sweep);
  std::printf("%s\n", text.c_str());
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) {
      std::fprintf(stderr, "cannot open %s\n", out_path.c_str());
      return 1;
    }
    out << text << "\n";
  }
  return 0;
}

int cmd_check_basis(int d, double tolerance) {
  const HaarBasis basis = HaarBasis::make(d);
  const RegularityReport report = check_regularity(basis, tolerance);
  for (const auto& check : report.checks) {
    std::printf("%-48s residual=%.3e tol=%.1e %s\n", check.name.c_str(),
                check.residual, check.tolerance, check.pass ? "PASS" : "FAIL");
  }
  return report.all_pass ? 0 : 1;
}

int cmd_selftest() {
  int failures = 0;
  auto require = [&failures](bool ok, const char* what) {
    std::printf("%-56s %s\n", what, ok ? "PASS" : "FAIL");
    if (!ok) ++failures;
  };

  // Coordinate learner: regret certificate on random sequences.
  {
    SplitMix64 rng(7, 0);
    bool all_ok = true;
    double xi1 = 0.0;
    for (int trial = 0; trial < 50 && all_ok; ++trial) {
      CoinBettor bettor(0.0, 1.0);
      std::vector<double> grads;
      std::vector<double> preds;
      const double scale = std::pow(4.0, rng.next_double() * 3.0 - 1.0);
      for (int t = 0; t < 400; ++t) {
        const double hint = scale * (0.5 + rng.next_double());
        double g = hint * (2.0 * rng.next_double() - 1.0);
        if (trial % 3 == 1) g = hint;  // drift family
        preds.push_back(bettor.predict());
        bettor.update(g, hint);
        grads.push_back(g);
      }
      xi1 = bettor.xi1();
      for (int c_trial = 0; c_trial < 10; ++c_trial) {
        const double c = 2.0 * rng.next_double() - 1.0;
        double realized = 0.0;
        for (std::size_t t = 0; t < grads.size(); ++t) {
          realized += grads[t] * (preds[t] - c);
        }
        const auto cert = bettor.regret_certificate(c, grads);
        if (realized > cert.bound) all_ok = false;
      }
    }
    std::printf("documented bettor factors: xi1 = %.3f (state-dependent), xi2 = %.1f\n",
                xi1, CoinBettor::xi2());
    require(all_ok, "bettor regret certificate (random + drift)");
  }

  // Expert layer: second-order certificate on random gradients.
  {
    SplitMix64 rng(11, 0);
    bool all_ok = true;
    for (int trial = 0; trial < 30 && all_ok; ++trial) {
      const std::size_t k = 2 + static_cast<std::size_t>(rng.next_u64() % 6);
      ExpertWeights weights(k);
      std::vector<std::vector<double>> history;
      for (int t = 0; t < 300; ++t) {
        std::vector<double> grad(k);
        for (auto& g : grad) g = 4.0 * rng.next_double() - 2.0;
        const double mix = aggregate(weights.weights(), grad);
        std::vector<double> regrets(k);
        for (std::size_t e = 0; e < k; ++e) regrets[e] = mix - grad[e];
        weights.update(regrets);
        history.push_back(std::move(regrets));
      }
      for (std::size_t e = 0; e < k && all_ok; ++e) {
        const auto cert = weights.regret_certificate(e);
        if (weights.cumulative_regret(e) > cert.bound + 1e-9) all_ok = false;
      }
    }
    std::printf("documented aggregator factors: xi3 = %.1f, xi4 = %.1f\n",
                ExpertWeights::xi3(), ExpertWeights::xi4());
    require(all_ok, "aggregator second-order certificate");
  }

  // Wavelet layer: Parseval on random trees.
  {
    SplitMix64 rng(13, 0);
    const HaarBasis basis = HaarBasis::make(1);
    bool all_ok = true;
    for (int trial = 0; trial < 50 && all_ok; ++trial) {
      CoefficientTree tree = CoefficientTree::zeros(
          static_cast<int>(rng.next_u64() % 3), static_cast<int>(rng.next_u64() % 4),
          1);
      double sq = 0.0;
      for (auto& a : tree.alpha) {
        a = rng.next_gaussian();
        sq += a * a;
      }
      for (auto& level : tree.beta) {
        for (auto& b : level) {
          b = rng.next_gaussian();
          sq += b * b;
        }
      }
      const int level = tree.j0 + tree.depth + 2;
      const auto values = synthesize_grid(basis, tree, level);
      double grid_sq = 0.0;
      for (double v : values) grid_sq += v * v;
      grid_sq /= static_cast<double>(values.size());
      if (std::abs(grid_sq - sq) > 1e-9) all_ok = false;
    }
    require(all_ok, "wavelet Parseval identity");
  }

  // Clipping calibration at the logarithmic margin schedule.
  {
    ClipConfig config;
    config.nu = 1.0;
    config.mu = 1.0;
    config.delta = 0.05;
    const std::int64_t horizon = 2000;
    const double budget =
        std::log(1.0 / config.delta) *
        (1.0 + std::log(static_cast<double>(horizon)));
    int bad_seeds = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      SplitMix64 rng(seed, 3);
      ClippedLearner learner(4, 0.0, 1.0, config);
      std::size_t clipped = 0;
      const std::vector<double> bounds(4, 1.0);
      for (std::int64_t t = 1; t <= horizon; ++t) {
        std::vector<double> grads(4);
        for (auto& g : grads) {
          g = (2.0 * rng.next_double() - 1.0) + rng.next_gaussian();
        }
        clipped += learner.step(grads, bounds, margin_schedule(config, t));
      }
      if (static_cast<double>(clipped) > budget) ++bad_seeds;
    }
    require(bad_seeds <= 1, "clipping calibration (Gaussian noise)");
  }

  std::printf("%s\n", failures == 0 ? "selftest: all checks passed"
                                    : "selftest: FAILURES");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive online wavelet regression benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string dump_data;
  std::string trace_path;
  std::uint64_t seed = 1;

  auto* run = app.add_subcommand("run", "run one experiment");
  run->add_option("--config", config_path, "config JSON path")->required();
  run->add_option("--seed", seed, "run seed");
  run->add_option("--out", out_dir, "output directory for records.csv");
  run->add_option("--dump-data", dump_data, "write the sampled dataset as CSV");
  run->add_option("--trace", trace_path, "write per-round cumulative regret CSV");

  int seeds = 10;
  std::string grid;
  auto* sweep = app.add_subcommand("sweep", "run a T or sigma sweep");
  sweep->add_option("--config", config_path, "config JSON path")->required();
  sweep->add_option("--seeds", seeds, "seeds per grid point");
  sweep->add_option("--grid", grid, "T=256,1024,... or sigma=0.25,0.5,...")
      ->required();
  sweep->add_option("--out", out_dir, "output directory for records.csv");

  std::string in_dir;
  std::string sweep_name = "T";
  std::string rates_out;
  auto* rates = app.add_subcommand("rates", "fit the risk scaling exponent");
  rates->add_option("--in", in_dir, "directory holding records.csv")->required();
  rates->add_option("--sweep", sweep_name, "T or sigma2")
      ->check(CLI::IsMember({"T", "sigma2"}));
  rates->add_option("--out", rates_out, "write rates.json here");

  int d = 1;
  double tolerance = 1e-12;
  auto* check = app.add_subcommand("check-basis", "verify basis regularity");
  check->add_option("--d", d, "dimension (1 or 2)");
  check->add_option("--tol", tolerance, "residual tolerance");

  app.add_subcommand("selftest", "run the invariant suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, out_dir, dump_data, trace_path);
    if (sweep->parsed()) return cmd_sweep(config_path, seeds, grid, out_dir);
    if (rates->parsed()) return cmd_rates(in_dir, sweep_name, rates_out);
    if (check->parsed()) return cmd_check_basis(d, tolerance);
    return cmd_selftest();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
