#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "wavereg/harness.hpp"

using namespace wavereg;

namespace {

ExperimentConfig base_config() {
  ExperimentConfig cfg;
  cfg.regression.besov_radius = 1.0;
  cfg.regression.horizon = 256;
  cfg.regression.depth = 6;
  cfg.regression.grad_bound = 2.0;
  cfg.noise = NoiseModel::gaussian(0.5);
  cfg.target.kind = "step";
  cfg.target.edges = {1.0 / 3.0};
  cfg.target.levels = {0.5, -0.5};
  cfg.target.meta.s = 1.0;
  cfg.target.meta.p = 1.0;
  cfg.target.meta.q = std::numeric_limits<double>::infinity();
  cfg.target.meta.besov_radius = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("config digest is stable across key order and float formatting") {
  const ExperimentConfig cfg = base_config();
  const std::string digest = config_digest(cfg);
  CHECK(digest.size() == 16);

  // same content spelled differently in JSON
  const std::string text = experiment_to_json(cfg);
  const ExperimentConfig back = experiment_from_json(text);
  CHECK(config_digest(back) == digest);

  const ExperimentConfig reordered = experiment_from_json(
      R"({"noise":{"sigma":0.5,"kind":"gaussian"},
          "target":{"levels":[0.5,-0.5],"kind":"step","edges":[0.33333333333333331],
                    "B":1.0,"q":"inf","p":1.0,"s":1.0},
          "regression":{"T":256,"B":1.0,"J":6,"G":2.0}})");
  CHECK(config_digest(reordered) == digest);

  ExperimentConfig other = cfg;
  other.noise = NoiseModel::gaussian(0.25);
  CHECK(config_digest(other) != digest);
}

TEST_CASE("run_experiment: zero target with zero noise is a fixed point") {
  ExperimentConfig cfg = base_config();
  cfg.noise = NoiseModel::none();
  cfg.target.kind = "constant";
  cfg.target.value = 0.0;
  const RunRecord rec = run_experiment(cfg, 9);
  CHECK(rec.risk <= 1e-12);
  CHECK(rec.regret == 0.0);
}

TEST_CASE("run_experiment: identical (config, seed) gives identical records") {
  const ExperimentConfig cfg = base_config();
  RunDetail d1, d2;
  const RunRecord a = run_experiment(cfg, 5, &d1);
  const RunRecord b = run_experiment(cfg, 5, &d2);
  CHECK(a.risk == b.risk);
  CHECK(a.regret == b.regret);
  CHECK(a.jensen_lhs == b.jensen_lhs);
  CHECK(a.jensen_rhs == b.jensen_rhs);
  CHECK(a.config_digest == b.config_digest);
  CHECK(d1.cumulative_regret == d2.cumulative_regret);
  const RunRecord c = run_experiment(cfg, 6);
  CHECK(c.risk != a.risk);
}

TEST_CASE("run_experiment satisfies the Jensen inequality exactly") {
  ExperimentConfig cfg = base_config();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RunRecord rec = run_experiment(cfg, seed);
    CHECK(rec.jensen_lhs <= rec.jensen_rhs + 1e-12);
  }
}

TEST_CASE("regret accounting: predicting f itself has zero regret") {
  // direct check of the definition used by the harness
  ExperimentConfig cfg = base_config();
  const TargetFunction f = build_target(cfg.target, 1);
  const auto data = generate_sample(f, cfg.noise, 200, 3);
  double cum = 0.0;
  for (const auto& s : data) {
    const double lp = (f(s.x) - s.y) * (f(s.x) - s.y);
    cum += lp - lp;
  }
  CHECK(cum == 0.0);
}

TEST_CASE("cumulative regret curve is the prefix sum of round terms") {
  ExperimentConfig cfg = base_config();
  RunDetail detail;
  run_experiment(cfg, 2, &detail);
  REQUIRE(detail.cumulative_regret.size() == 256);

  // independent replay of the accounting definition
  const HaarBasis basis = HaarBasis::make(1);
  const TargetFunction f = build_target(cfg.target, 1);
  OnlineWaveletRegressor reg(cfg.regression, basis);
  const auto data = generate_sample(f, cfg.noise, cfg.regression.horizon, 2);
  double cum = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    const double yhat = reg.predict(data[t].x);
    reg.update(data[t].y);
    const double ftrue = f(data[t].x);
    cum += (yhat - data[t].y) * (yhat - data[t].y) -
           (ftrue - data[t].y) * (ftrue - data[t].y);
    CHECK(detail.cumulative_regret[t] == doctest::Approx(cum).epsilon(1e-12));
  }
}

TEST_CASE("risk decreases with the horizon on paired seeds") {
  ExperimentConfig small = base_config();
  small.regression.horizon = 256;
  ExperimentConfig large = base_config();
  large.regression.horizon = 4096;
  int improved = 0;
  const int seeds = 20;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    const double r_small = run_experiment(small, seed).risk;
    const double r_large = run_experiment(large, seed).risk;
    if (r_large < r_small) ++improved;
  }
  CHECK(improved >= 18);  // >= 90% of 20 paired seeds
}

TEST_CASE("fit_rate recovers exact synthetic exponents") {
  std::vector<RunRecord> records;
  for (std::int64_t horizon : {256, 1024, 4096}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      RunRecord r;
      r.horizon = horizon;
      r.sigma = 0.5;
      r.seed = seed;
      r.risk = 7.0 * std::pow(static_cast<double>(horizon), -2.0 / 3.0);
      records.push_back(r);
    }
  }
  const RateFit fit = fit_rate(records, Sweep::horizon);
  CHECK(fit.slope == doctest::Approx(-2.0 / 3.0).epsilon(1e-9));
  CHECK(fit.intercept == doctest::Approx(std::log(7.0)).epsilon(1e-9));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.n_points == 3);

  std::vector<RunRecord> sig;
  for (double sigma : {0.25, 0.5, 1.0, 2.0}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      RunRecord r;
      r.horizon = 1024;
      r.sigma = sigma;
      r.seed = seed;
      r.risk = 3.0 * std::pow(sigma, 4.0 / 3.0);  // (sigma^2)^{2/3}
      sig.push_back(r);
    }
  }
  const RateFit fs = fit_rate(sig, Sweep::sigma2);
  CHECK(fs.slope == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("fit_rate enforces its preconditions") {
  std::vector<RunRecord> records;
  for (std::int64_t horizon : {256, 1024}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      RunRecord r;
      r.horizon = horizon;
      r.risk = 1.0;
      records.push_back(r);
    }
  }
  CHECK_THROWS_AS(fit_rate(records, Sweep::horizon), std::invalid_argument);
  RunRecord extra;
  extra.horizon = 4096;
  extra.risk = 1.0;
  records.push_back(extra);  // 3 points but only 1 seed on the last
  CHECK_THROWS_AS(fit_rate(records, Sweep::horizon), std::invalid_argument);
}

TEST_CASE("records CSV round trip preserves the schema") {
  ExperimentConfig cfg = base_config();
  std::vector<RunRecord> records;
  records.push_back(run_experiment(cfg, 1));
  records.push_back(run_experiment(cfg, 2));

  std::ostringstream out;
  write_records_csv(out, records);
  const std::string text = out.str();
  CHECK(text.substr(0, text.find('\n')) ==
        "config_digest,seed,T,sigma,s,p,q,B,risk,regret,experts,ms");

  const auto dir = std::filesystem::temp_directory_path() / "wavereg_test_csv";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "records.csv").string();
  std::filesystem::remove(path);
  append_records_csv(path, records);
  append_records_csv(path, records);  // appends without duplicating the header
  const auto back = read_records_csv(path);
  REQUIRE(back.size() == 4);
  CHECK(back[0].config_digest == records[0].config_digest);
  CHECK(back[0].risk == records[0].risk);
  CHECK(back[0].q == records[0].q);  // "inf" survives the round trip
  CHECK(back[1].seed == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("run_sweep parallel results equal sequential results") {
  ExperimentConfig cfg = base_config();
  cfg.regression.horizon = 128;
  const std::vector<double> grid = {128, 256};
  const auto seq = run_sweep(cfg, Sweep::horizon, grid, 3, 1);
  const auto par = run_sweep(cfg, Sweep::horizon, grid, 3, 4);
  REQUIRE(seq.size() == par.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq[i].risk == par[i].risk);
    CHECK(seq[i].seed == par[i].seed);
    CHECK(seq[i].horizon == par[i].horizon);
  }
}

TEST_CASE("minimax main term and the declared bound constant") {
  const double term = minimax_main_term(1.0, 0.5, 1.0, 1, 4096);
  CHECK(term == doctest::Approx(std::pow(1.0, 2.0 / 3.0) *
                                std::pow(0.25, 2.0 / 3.0) *
                                std::pow(4096.0, -2.0 / 3.0))
                    .epsilon(1e-12));
  ExperimentConfig cfg = base_config();
  cfg.regression.horizon = 1024;
  const RunRecord rec = run_experiment(cfg, 1);
  CHECK(rec.bound_ratio >= 0.0);
  CHECK(rec.bound_ratio <= cfg.bound_constant);
}

TEST_CASE("dataset dump follows the documented CSV shape") {
  const TargetFunction f =
      TargetFunction::constant(0.5, base_config().target.meta);
  const auto samples = generate_sample(f, NoiseModel::none(), 3, 1);
  std::ostringstream out;
  write_dataset_csv(out, samples, 1);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,x,y");
  std::getline(in, line);
  CHECK(line.substr(0, 2) == "1,");

  TargetFunction::Meta meta2 = base_config().target.meta;
  meta2.p = std::numeric_limits<double>::infinity();  // d/p = 0 in d = 2
  const TargetFunction f2 = TargetFunction::constant(0.5, meta2, 2);
  const auto s2 = generate_sample(f2, NoiseModel::none(), 2, 1);
  std::ostringstream out2;
  write_dataset_csv(out2, s2, 2);
  std::istringstream in2(out2.str());
  std::getline(in2, line);
  std::getline(in2, line);
  CHECK(line.find("\"") != std::string::npos);  // quoted coordinate pair
}

TEST_CASE("experiment JSON rejects unknown enums") {
  CHECK_THROWS_AS(experiment_from_json(R"({"noise":{"kind":"cauchy"}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(experiment_from_json(
                      R"({"target":{"kind":"fourier"},"noise":{"kind":"none"}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      experiment_from_json(R"({"regression":{"grid_mode":"dense"}})"),
      std::invalid_argument);
}

TEST_CASE("thread count env override") {
  // only checks the parse path; the ambient value is machine-dependent
  CHECK(thread_count_from_env() >= 1);
}

TEST_CASE("multi-scale expert sets with init grids run end to end") {
  ExperimentConfig cfg = base_config();
  cfg.regression.horizon = 512;
  cfg.regression.depth = 4;
  cfg.regression.max_start_scale = 1;  // experts starting at j0 = 0 and 1
  cfg.regression.grid_mode = GridMode::paper_grid;
  cfg.regression.expert_cap = 2000;
  cfg.noise = NoiseModel::laplace(0.4);

  const RunRecord rec = run_experiment(cfg, 7);
  CHECK(rec.experts > 10);  // init grid x margins x two start scales
  CHECK(rec.risk >= 0.0);
  CHECK(rec.risk < 0.25);   // better than predicting zero
  CHECK(rec.jensen_lhs <= rec.jensen_rhs + 1e-12);

  cfg.regression.grid_mode = GridMode::coarse_grid;
  cfg.noise = NoiseModel::scaled_bernoulli(0.3);
  const RunRecord rec2 = run_experiment(cfg, 7);
  CHECK(rec2.jensen_lhs <= rec2.jensen_rhs + 1e-12);
}

TEST_CASE("d = 2 experiments run end to end") {
  ExperimentConfig cfg;
  cfg.regression.d = 2;
  cfg.regression.horizon = 512;
  cfg.regression.depth = 3;
  cfg.regression.besov_radius = 1.0;
  cfg.regression.grad_bound = 2.0;
  cfg.noise = NoiseModel::gaussian(0.25);
  cfg.target.kind = "dyadic_random";
  cfg.target.seed = 3;
  cfg.target.j0 = 0;
  cfg.target.depth = 2;
  cfg.target.meta.s = 1.5;
  cfg.target.meta.p = 2.0;
  cfg.target.meta.q = 2.0;
  cfg.target.meta.besov_radius = 0.8;

  const RunRecord rec = run_experiment(cfg, 4);
  CHECK(rec.risk >= 0.0);
  CHECK(rec.jensen_lhs <= rec.jensen_rhs + 1e-12);
  const RunRecord again = run_experiment(cfg, 4);
  CHECK(rec.risk == again.risk);

  ExperimentConfig bad = cfg;
  bad.regression.d = 3;
  CHECK_THROWS_AS(run_experiment(bad, 1), std::invalid_argument);
}
