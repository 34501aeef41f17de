#include "wavereg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "internal_json.hpp"
#include "wavereg/digest.hpp"

namespace wavereg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json meta_to_json(const TargetFunction::Meta& meta) {
  nlohmann::json j;
  j["s"] = meta.s;
  j["p"] = meta.p;
  j["q"] = meta.q == kInf ? nlohmann::json("inf") : nlohmann::json(meta.q);
  j["B"] = meta.besov_radius;
  return j;
}

TargetFunction::Meta meta_from_json(const nlohmann::json& j) {
  TargetFunction::Meta meta;
  meta.s = j.value("s", meta.s);
  meta.p = j.value("p", meta.p);
  if (j.contains("q")) {
    meta.q = j.at("q").is_string() ? kInf : j.at("q").get<double>();
  }
  meta.besov_radius = j.value("B", meta.besov_radius);
  return meta;
}

nlohmann::json target_to_json(const TargetSpec& t) {
  nlohmann::json j = meta_to_json(t.meta);
  j["kind"] = t.kind;
  if (t.kind == "constant") {
    j["value"] = t.value;
  } else if (t.kind == "step") {
    j["edges"] = t.edges;
    j["levels"] = t.levels;
  } else if (t.kind == "sawtooth") {
    j["teeth"] = t.teeth;
    j["amplitude"] = t.amplitude;
  } else if (t.kind == "dyadic_random") {
    j["seed"] = t.seed;
    j["j0"] = t.j0;
    j["depth"] = t.depth;
  }
  return j;
}

TargetSpec target_from_json(const nlohmann::json& j) {
  TargetSpec t;
  t.kind = j.value("kind", t.kind);
  if (t.kind != "constant" && t.kind != "step" && t.kind != "sawtooth" &&
      t.kind != "dyadic_random") {
    throw std::invalid_argument("harness: unknown target kind '" + t.kind + "'");
  }
  t.meta = meta_from_json(j);
  t.value = j.value("value", t.value);
  if (j.contains("edges")) t.edges = j.at("edges").get<std::vector<double>>();
  if (j.contains("levels")) t.levels = j.at("levels").get<std::vector<double>>();
  t.teeth = j.value("teeth", t.teeth);
  t.amplitude = j.value("amplitude", t.amplitude);
  t.seed = j.value("seed", t.seed);
  t.j0 = j.value("j0", t.j0);
  t.depth = j.value("depth", t.depth);
  return t;
}

nlohmann::json noise_to_json(const NoiseModel& n) {
  return nlohmann::json{{"kind", n.kind_name()}, {"sigma", n.sigma}};
}

NoiseModel noise_from_json(const nlohmann::json& j) {
  const std::string kind = j.value("kind", std::string("none"));
  const double sigma = j.value("sigma", 0.0);
  if (kind == "gaussian") return NoiseModel::gaussian(sigma);
  if (kind == "laplace") return NoiseModel::laplace(sigma);
  if (kind == "scaled_bernoulli") return NoiseModel::scaled_bernoulli(sigma);
  if (kind == "none") {
    if (sigma != 0.0) {
      throw std::invalid_argument("harness: noise kind 'none' needs sigma = 0");
    }
    return NoiseModel::none();
  }
  throw std::invalid_argument("harness: unknown noise kind '" + kind + "'");
}

nlohmann::json experiment_to_json_obj(const ExperimentConfig& c) {
  nlohmann::json j;
  j["regression"] = detail::regression_config_to_json(c.regression);
  j["noise"] = noise_to_json(c.noise);
  j["target"] = target_to_json(c.target);
  j["bound_constant"] = c.bound_constant;
  j["risk_guard"] = c.risk_guard;
  return j;
}

}  // namespace

TargetFunction build_target(const TargetSpec& spec, int d) {
  if (spec.kind == "constant") {
    return TargetFunction::constant(spec.value, spec.meta, d);
  }
  if (spec.kind == "step") {
    if (d != 1) throw std::invalid_argument("harness: step targets need d = 1");
    return TargetFunction::step(spec.edges, spec.levels, spec.meta);
  }
  if (spec.kind == "sawtooth") {
    if (d != 1) throw std::invalid_argument("harness: sawtooth targets need d = 1");
    return TargetFunction::sawtooth(spec.teeth, spec.amplitude, spec.meta);
  }
  if (spec.kind == "dyadic_random") {
    return TargetFunction::dyadic_random(spec.seed, spec.j0, spec.depth, d,
                                         spec.meta);
  }
  throw std::invalid_argument("harness: unknown target kind '" + spec.kind + "'");
}

void ExperimentConfig::validate() const {
  regression.validate();
  noise.validate();
  if (!(bound_constant > 0.0)) {
    throw std::invalid_argument("harness: bound constant must be > 0");
  }
  if (risk_guard < 1 || risk_guard > 8) {
    throw std::invalid_argument("harness: risk guard must lie in [1, 8]");
  }
}

std::string experiment_to_json(const ExperimentConfig& config) {
  return experiment_to_json_obj(config).dump(2);
}

ExperimentConfig experiment_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ExperimentConfig c;
  if (j.contains("regression")) {
    c.regression = detail::regression_config_from_json(j.at("regression"));
  }
  if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
  if (j.contains("target")) c.target = target_from_json(j.at("target"));
  c.bound_constant = j.value("bound_constant", c.bound_constant);
  c.risk_guard = j.value("risk_guard", c.risk_guard);
  c.validate();
  return c;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("harness: cannot open config file " + path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return experiment_from_json(buf.str());
}

std::string config_digest(const ExperimentConfig& config) {
  return fnv1a_hex(detail::canonical_dump(experiment_to_json_obj(config)));
}

double minimax_main_term(double besov_radius, double sigma, double s, int d,
                         std::int64_t horizon) {
  if (sigma <= 0.0 || horizon < 1) return 0.0;
  const double denom = 2.0 * s + static_cast<double>(d);
  return std::pow(besov_radius, 2.0 * d / denom) *
         std::pow(sigma * sigma, 2.0 * s / denom) *
         std::pow(static_cast<double>(horizon), -2.0 * s / denom);
}

RunRecord run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                         RunDetail* detail_out) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  const int d = config.regression.d;
  const HaarBasis basis = HaarBasis::make(d);
  const TargetFunction target = build_target(config.target, d);

  OnlineWaveletRegressor reg(config.regression, basis);
  const int depth = config.regression.effective_depth();
  const TreeLayout frame{0, config.regression.max_start_scale + depth, d};

  // Target coefficients on the shared frame and the projection tail.
  const CoefficientTree target_tree =
      analyze(basis, [&target](const double* x) { return target(x); }, 0,
              frame.depth, config.risk_guard);
  const int grid_level = std::min(frame.depth + 1 + config.risk_guard,
                                  d == 1 ? 24 : 12);
  std::vector<double> target_grid;
  {
    const std::int64_t m = std::int64_t{1} << grid_level;
    if (d == 1) {
      target_grid.resize(static_cast<std::size_t>(m));
      for (std::int64_t i = 0; i < m; ++i) {
        const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
        target_grid[static_cast<std::size_t>(i)] = target(&x);
      }
    } else {
      target_grid.resize(static_cast<std::size_t>(m * m));
      for (std::int64_t iy = 0; iy < m; ++iy) {
        for (std::int64_t ix = 0; ix < m; ++ix) {
          const double xy[2] = {
              (static_cast<double>(ix) + 0.5) / static_cast<double>(m),
              (static_cast<double>(iy) + 0.5) / static_cast<double>(m)};
          target_grid[static_cast<std::size_t>(iy * m + ix)] = target(xy);
        }
      }
    }
  }
  const std::vector<double> proj_grid = synthesize_grid(basis, target_tree, grid_level);
  const double tail_sq = l2_risk_grid(proj_grid, target_grid);

  const FrameEmbedder embedder(basis, frame);
  std::vector<std::vector<double>> expert_frames;
  expert_frames.reserve(reg.expert_count());
  for (std::size_t e = 0; e < reg.expert_count(); ++e) {
    expert_frames.push_back(embedder.embed_tree(reg.expert(e).tree_view()));
  }
  RunAccumulator accum(frame, std::move(expert_frames), target_tree.flatten(),
                       tail_sq);

  const std::vector<Sample> data =
      generate_sample(target, config.noise, config.regression.horizon, seed);

  double cumulative_regret = 0.0;
  if (detail_out != nullptr) {
    detail_out->cumulative_regret.clear();
    detail_out->per_round_risk.clear();
  }
  std::vector<std::vector<std::pair<std::int64_t, double>>> frame_deltas(
      reg.expert_count());
  for (const Sample& sample : data) {
    const double yhat = reg.predict(sample.x);
    reg.update(sample.y);
    const RoundTrace& trace = reg.last_round();
    for (std::size_t e = 0; e < reg.expert_count(); ++e) {
      auto& out = frame_deltas[e];
      out.clear();
      const TreeLayout& local = reg.expert(e).layout;
      for (const auto& [flat, dv] : trace.deltas[e].entries) {
        for (const auto& entry : embedder.embed(local, flat, dv)) {
          out.push_back(entry);
        }
      }
      std::sort(out.begin(), out.end());
    }
    accum.on_round(trace.weights_used, frame_deltas);

    const double ftrue = target(sample.x);
    const double loss_pred = (yhat - sample.y) * (yhat - sample.y);
    const double loss_true = (ftrue - sample.y) * (ftrue - sample.y);
    cumulative_regret += loss_pred - loss_true;
    if (detail_out != nullptr) {
      detail_out->cumulative_regret.push_back(cumulative_regret);
    }
  }
  if (detail_out != nullptr) {
    detail_out->per_round_risk = accum.per_round_risk();
  }

  const CoefficientTree mean_tree =
      CoefficientTree::unflatten(frame, accum.mean_coefficients());
  const std::vector<double> mean_grid = synthesize_grid(basis, mean_tree, grid_level);
  const double risk = l2_risk_grid(mean_grid, target_grid);

  RunRecord rec;
  rec.config_digest = config_digest(config);
  rec.seed = seed;
  rec.horizon = config.regression.horizon;
  rec.sigma = config.noise.sigma;
  rec.s = config.target.meta.s;
  rec.p = config.target.meta.p;
  rec.q = config.target.meta.q;
  rec.besov_radius = config.target.meta.besov_radius;
  rec.risk = risk;
  rec.regret = cumulative_regret;
  rec.experts = static_cast<std::int64_t>(reg.expert_count());
  rec.jensen_lhs = accum.jensen_lhs();
  rec.jensen_rhs = accum.jensen_rhs();
  const double main_term =
      minimax_main_term(config.target.meta.besov_radius, config.noise.sigma,
                        config.target.meta.s, d, config.regression.horizon);
  rec.bound_ratio = main_term > 0.0
                        ? (cumulative_regret / static_cast<double>(rec.horizon)) /
                              main_term
                        : 0.0;
  const auto stop = std::chrono::steady_clock::now();
  rec.wallclock_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count();
  return rec;
}

namespace {

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

RateFit fit_rate(const std::vector<RunRecord>& records, Sweep sweep) {
  std::map<double, std::vector<double>> groups;
  for (const auto& r : records) {
    const double key = sweep == Sweep::horizon
                           ? static_cast<double>(r.horizon)
                           : r.sigma * r.sigma;
    groups[key].push_back(r.risk);
  }
  if (groups.size() < 3) {
    throw std::invalid_argument("harness: rate fit needs at least 3 sweep points");
  }
  std::vector<double> xs, ys;
  for (const auto& [key, risks] : groups) {
    if (risks.size() < 5) {
      throw std::invalid_argument("harness: rate fit needs >= 5 seeds per point");
    }
    xs.push_back(std::log(key));
    ys.push_back(std::log(median(risks)));
  }
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  RateFit fit;
  fit.n_points = static_cast<int>(xs.size());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double resid = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += resid * resid;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.stderr_ = xs.size() > 2
                    ? std::sqrt(ss_res / (n - 2.0) / sxx)
                    : 0.0;
  return fit;
}

int thread_count_from_env() {
  if (const char* env = std::getenv("WAVEREG_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<RunRecord> run_sweep(const ExperimentConfig& base, Sweep sweep,
                                 const std::vector<double>& grid_values,
                                 int n_seeds, int threads) {
  if (grid_values.empty() || n_seeds < 1) {
    throw std::invalid_argument("harness: sweep needs grid values and seeds");
  }
  struct Job {
    ExperimentConfig config;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double value : grid_values) {
    ExperimentConfig cfg = base;
    if (sweep == Sweep::horizon) {
      cfg.regression.horizon = static_cast<std::int64_t>(value);
    } else {
      cfg.noise.sigma = value;
    }
    cfg.validate();
    for (int s = 0; s < n_seeds; ++s) {
      jobs.push_back(Job{cfg, static_cast<std::uint64_t>(s + 1)});
    }
  }

  std::vector<RunRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  const int n_threads =
      std::min<int>(threads > 0 ? threads : thread_count_from_env(),
                    static_cast<int>(jobs.size()));
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) break;
      records[i] = run_experiment(jobs[i].config, jobs[i].seed);
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return records;
}

namespace {
std::string q_to_string(double q) {
  if (q == kInf) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", q);
  return buf;
}
}  // namespace

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << "config_digest,seed,T,sigma,s,p,q,B,risk,regret,experts,ms\n";
  char buf[512];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf),
                  "%s,%llu,%lld,%.17g,%.17g,%.17g,%s,%.17g,%.17g,%.17g,%lld,%lld\n",
                  r.config_digest.c_str(),
                  static_cast<unsigned long long>(r.seed),
                  static_cast<long long>(r.horizon), r.sigma, r.s, r.p,
                  q_to_string(r.q).c_str(), r.besov_radius, r.risk, r.regret,
                  static_cast<long long>(r.experts),
                  static_cast<long long>(r.wallclock_ms));
    out << buf;
  }
}

void append_records_csv(const std::string& path,
                        const std::vector<RunRecord>& records) {
  const bool fresh = !std::ifstream(path).good();
  std::ofstream out(path, std::ios::app);
  if (!out) {
    throw std::runtime_error("harness: cannot open " + path);
  }
  if (fresh) {
    write_records_csv(out, records);
    return;
  }
  std::ostringstream buf;
  write_records_csv(buf, records);
  const std::string text = buf.str();
  out << text.substr(text.find('\n') + 1);  // drop the duplicate header
}

std::vector<RunRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("harness: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("harness: empty records file " + path);
  }
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 12) {
      throw std::runtime_error("harness: malformed records row: " + line);
    }
    RunRecord r;
    r.config_digest = fields[0];
    r.seed = std::strtoull(fields[1].c_str(), nullptr, 10);
    r.horizon = std::strtoll(fields[2].c_str(), nullptr, 10);
    r.sigma = std::strtod(fields[3].c_str(), nullptr);
    r.s = std::strtod(fields[4].c_str(), nullptr);
    r.p = std::strtod(fields[5].c_str(), nullptr);
    r.q = fields[6] == "inf" ? kInf : std::strtod(fields[6].c_str(), nullptr);
    r.besov_radius = std::strtod(fields[7].c_str(), nullptr);
    r.risk = std::strtod(fields[8].c_str(), nullptr);
    r.regret = std::strtod(fields[9].c_str(), nullptr);
    r.experts = std::strtoll(fields[10].c_str(), nullptr, 10);
    r.wallclock_ms = std::strtoll(fields[11].c_str(), nullptr, 10);
    out.push_back(std::move(r));
  }
  return out;
}

std::string rates_to_json(const RateFit& fit, Sweep sweep) {
  nlohmann::json j;
  j["sweep"] = sweep == Sweep::horizon ? "T" : "sigma2";
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["stderr"] = fit.stderr_;
  j["r2"] = fit.r2;
  j["n_points"] = fit.n_points;
  return j.dump(2);
}

void write_trace_csv(std::ostream& out, const std::vector<double>& cumulative) {
  out << "t,cumulative_regret\n";
  char buf[64];
  for (std::size_t t = 0; t < cumulative.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", t + 1, cumulative[t]);
    out << buf;
  }
}

void write_dataset_csv(std::ostream& out, const std::vector<Sample>& samples,
                       int d) {
  out << "t,x,y\n";
  char buf[160];
  for (std::size_t t = 0; t < samples.size(); ++t) {
    if (d == 1) {
      std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", t + 1, samples[t].x[0],
                    samples[t].y);
    } else {
      std::snprintf(buf, sizeof(buf), "%zu,\"%.17g,%.17g\",%.17g\n", t + 1,
                    samples[t].x[0], samples[t].x[1], samples[t].y);
    }
    out << buf;
  }
}

}  // namespace wavereg
