#include "ssca/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <type_traits>

namespace ssca::bench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Typed, strict view of one JSON object: every key must be consumed before finish().
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) {
      throw ConfigError((path_.empty() ? std::string("config") : path_) + ": expected an object",
                        path_);
    }
  }

  const json* find(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }
  void read(const std::string& key, long& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      out = v->get<long>();
    }
  }
  void read(const std::string& key, int& out) {
    long tmp = out;
    read(key, tmp);
    if (tmp < std::numeric_limits<int>::min() || tmp > std::numeric_limits<int>::max()) {
      fail(key, "out of range");
    }
    out = static_cast<int>(tmp);
  }
  // std::int64_t is long and std::size_t is std::uint64_t on the supported platforms.
  static_assert(std::is_same_v<std::int64_t, long> && std::is_same_v<std::size_t, std::uint64_t>);
  void read(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(field(key) + ": " + what, field(key));
  }
  std::string field(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(key, "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Wraps a validator's std::invalid_argument into a ConfigError under `path`.
template <typename Fn>
void checked(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    // Library messages start with the offending member ("power_limits: ...").
    const std::string what = e.what();
    const auto colon = what.find(':');
    throw ConfigError(path + "." + what,
                      colon == std::string::npos ? path : path + "." + what.substr(0, colon));
  }
}

std::vector<double> per_pair(const json& v, std::size_t K, const std::string& field) {
  if (v.is_number()) return std::vector<double>(K, v.get<double>());
  if (!v.is_array()) throw ConfigError(field + ": expected a number or an array", field);
  if (v.size() != K) {
    throw ConfigError(field + ": expected " + std::to_string(K) + " entries, got " +
                          std::to_string(v.size()),
                      field);
  }
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(field + ": entries must be numbers", field);
    out.push_back(e.get<double>());
  }
  return out;
}

wireless::NetworkModel parse_model(const json& j) {
  ObjectReader r(j, "model");
  const auto ref = wireless::NetworkModel::reference_five_pair();
  std::size_t K = ref.K;
  r.read("K", K);
  if (K == 0) r.fail("K", "at least one pair is required");

  wireless::NetworkModel m;
  m.K = K;
  auto vec = [&](const char* key, double fallback, std::vector<double>& out) {
    if (const json* v = r.find(key)) {
      out = per_pair(*v, K, r.field(key));
    } else {
      out.assign(K, fallback);
    }
  };
  vec("power_limits", ref.power_limits[0], m.power_limits);
  vec("noise_vars", ref.noise_vars[0], m.noise_vars);
  vec("rate_reqs", ref.rate_reqs[0], m.rate_reqs);

  double direct = ref.gain_var(0, 0);
  double cross = ref.gain_var(0, 1);
  m.gain_vars.assign(K * K, 0.0);
  bool matrix = false;
  if (const json* g = r.find("gain_vars")) {
    const std::string field = r.field("gain_vars");
    if (g->is_object()) {
      ObjectReader gr(*g, field);
      gr.read("direct", direct);
      gr.read("cross", cross);
      gr.finish();
    } else if (g->is_array()) {
      if (g->size() != K) {
        throw ConfigError(field + ": expected " + std::to_string(K) + " rows", field);
      }
      for (std::size_t k = 0; k < K; ++k) {
        const auto row = per_pair((*g)[k], K, field + "[" + std::to_string(k) + "]");
        std::copy(row.begin(), row.end(), m.gain_vars.begin() + static_cast<long>(k * K));
      }
      matrix = true;
    } else {
      throw ConfigError(field + ": expected {\"direct\", \"cross\"} or a KxK array", field);
    }
  }
  if (!matrix) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < K; ++i) m.gain_vars[k * K + i] = k == i ? direct : cross;
    }
  }
  r.finish();
  return m;
}

ToyConfig parse_toy(const json& j) {
  ObjectReader r(j, "toy");
  ToyConfig toy;
  r.read("dimension", toy.dimension);
  if (const json* v = r.find("target")) {
    toy.target = per_pair(*v, toy.dimension, r.field("target"));
  } else if (toy.target.size() != toy.dimension) {
    toy.target.assign(toy.dimension, 1.0);
  }
  r.read("noise", toy.noise);
  r.read("lower", toy.lower);
  r.read("upper", toy.upper);
  if (const json* v = r.find("sum_max")) {
    if (!v->is_null()) {
      if (!v->is_number()) r.fail("sum_max", "expected a number or null");
      toy.sum_max = v->get<double>();
    }
  }
  r.finish();
  return toy;
}

StepsizeSchedule parse_schedule(const json& j, const std::string& path, StepsizeSchedule s) {
  ObjectReader r(j, path);
  r.read("exponent", s.exponent);
  r.read("scale", s.scale);
  r.read("offset", s.offset);
  r.finish();
  return s;
}

StepRule parse_step_rule(const std::string& name, const std::string& field) {
  if (name == "newton") return StepRule::kNewton;
  if (name == "backtracking") return StepRule::kBacktracking;
  if (name == "diminishing") return StepRule::kDiminishing;
  throw ConfigError(field + ": expected newton, backtracking or diminishing, got \"" + name + "\"",
                    field);
}

const char* step_rule_name(StepRule rule) {
  switch (rule) {
    case StepRule::kNewton: return "newton";
    case StepRule::kBacktracking: return "backtracking";
    case StepRule::kDiminishing: return "diminishing";
  }
  return "newton";
}

InnerSolverConfig parse_inner(const json& j) {
  ObjectReader r(j, "run.inner");
  InnerSolverConfig c;
  r.read("max_iters", c.max_iters);
  r.read("tol", c.tol);
  r.read("smoothing_mu", c.smoothing_mu);
  std::string rule = step_rule_name(c.step_rule);
  r.read("step_rule", rule);
  c.step_rule = parse_step_rule(rule, r.field("step_rule"));
  r.read("prox_tau", c.prox_tau);
  r.finish();
  return c;
}

RunConfig parse_run(const json& j) {
  ObjectReader r(j, "run");
  RunConfig c;
  r.read("max_outer_iters", c.max_outer_iters);
  r.read("stop_residual", c.stop_residual);
  r.read("stop_early", c.stop_early);
  r.read("slack_window", c.slack_window);
  if (const json* v = r.find("gamma")) c.gamma = parse_schedule(*v, "run.gamma", c.gamma);
  if (const json* v = r.find("omega")) c.omega = parse_schedule(*v, "run.omega", c.omega);
  r.read("rho", c.penalty.rho);
  r.read("rho_growth", c.penalty.rho_growth);
  if (const json* v = r.find("inner")) c.inner = parse_inner(*v);
  r.read("seed", c.seed);
  r.read("restarts", c.restarts);
  r.read("slack_zero_tol", c.slack_zero_tol);
  r.read("minibatch", c.minibatch);
  r.read("prune_threshold", c.prune_threshold);
  r.read("max_components", c.max_components);
  r.read("block_threads", c.block_threads);
  r.read("record_time", c.record_time);
  r.finish();
  return c;
}

ProblemKind parse_problem(const std::string& name) {
  if (name == "problem7") return ProblemKind::kProblem7;
  if (name == "problem8") return ProblemKind::kProblem8;
  if (name == "custom-toy") return ProblemKind::kCustomToy;
  throw ConfigError("problem: expected problem7, problem8 or custom-toy, got \"" + name + "\"",
                    "problem");
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json schedule_json(const StepsizeSchedule& s) {
  return {{"exponent", s.exponent}, {"scale", s.scale}, {"offset", s.offset}};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Relative l1 error ||x - ref||_1 / ||ref||_1; the absolute l1 error when ref is zero.
double relative_error(const Vector& x, const Vector& ref) {
  const double scale = ref.lpNorm<1>();
  const double err = (x - ref).lpNorm<1>();
  return scale > 0.0 ? err / scale : err;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Linear-interpolation quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void write_trace(const fs::path& file, const std::vector<TraceRow>& rows, std::size_t n,
                 bool with_iterates) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << trace_header(n, with_iterates) << '\n';
  for (const auto& r : rows) {
    out << r.t << ',' << fmt(r.objective) << ',' << fmt(r.slack_sum) << ',' << fmt(r.step_gap)
        << ',' << fmt(r.residual) << ',' << fmt(r.elapsed);
    if (with_iterates) {
      for (Eigen::Index j = 0; j < r.x.size(); ++j) out << ',' << fmt(r.x[j]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

json path_json(const PathSummary& p, bool timing) {
  json j;
  j["index"] = p.index;
  j["seed"] = p.seed;
  j["iterations"] = p.iterations;
  j["converged"] = p.converged;
  j["stationary"] = p.stationary;
  j["iters_to_threshold"] = p.iters_to_threshold ? json(*p.iters_to_threshold) : json(nullptr);
  j["slack_l1"] = p.slack_l1;
  j["margins"] = p.margins;
  j["margin_std_errors"] = p.margin_std_errors;
  j["sum_rate"] = p.sum_rate;
  j["sum_rate_std_error"] = p.sum_rate_std_error;
  j["x_star"] = std::vector<double>(p.x_star.begin(), p.x_star.end());
  j["reference"] = std::vector<double>(p.reference.begin(), p.reference.end());
  if (timing) {
    j["elapsed_s"] = p.elapsed_s;
    j["seconds_per_iteration"] = p.seconds_per_iteration;
  }
  return j;
}

void finalize(CampaignSummary& s, double slack_zero_tol) {
  std::vector<double> hits;
  double iters = 0.0;
  int zero = 0;
  for (const auto& p : s.paths) {
    if (p.iters_to_threshold) hits.push_back(static_cast<double>(*p.iters_to_threshold));
    iters += static_cast<double>(p.iterations);
    if (p.slack_l1 <= slack_zero_tol) ++zero;
  }
  const auto n = static_cast<double>(s.paths.size());
  s.reached = static_cast<int>(hits.size());
  s.median_iters_to_threshold = median_of(hits);
  s.mean_iters_to_threshold = hits.empty() ? std::numeric_limits<double>::quiet_NaN()
                                           : [&] {
                                               double sum = 0.0;
                                               for (double h : hits) sum += h;
                                               return sum / static_cast<double>(hits.size());
                                             }();
  s.mean_iterations = s.paths.empty() ? 0.0 : iters / n;
  s.fraction_slack_zero = s.paths.empty() ? 0.0 : zero / n;
}

void write_summaries(const fs::path& dir, const ExperimentConfig& cfg, const CampaignSummary& s) {
  const bool timing = cfg.run.record_time;
  {
    std::ofstream out(dir / "summary.csv", std::ios::binary);
    out << "path,seed,iterations,converged,stationary,iters_to_threshold,slack_l1,sum_rate,"
           "sum_rate_std_error";
    const std::size_t m = s.paths.empty() ? 0 : s.paths.front().margins.size();
    for (std::size_t k = 0; k < m; ++k) out << ",margin_" << k + 1;
    out << ",elapsed_s\n";
    for (const auto& p : s.paths) {
      out << p.index << ',' << p.seed << ',' << p.iterations << ',' << int(p.converged) << ','
          << int(p.stationary) << ','
          << (p.iters_to_threshold ? std::to_string(*p.iters_to_threshold) : std::string("NA"))
          << ',' << fmt(p.slack_l1) << ',' << fmt(p.sum_rate) << ',' << fmt(p.sum_rate_std_error);
      for (double v : p.margins) out << ',' << fmt(v);
      out << ',' << fmt(timing ? p.elapsed_s : 0.0) << '\n';
    }
    if (!out) throw std::runtime_error("cannot write " + (dir / "summary.csv").string());
  }
  json j;
  j["problem"] = to_string(cfg.problem);
  j["master_seed"] = cfg.run.seed;
  j["reference_iters"] = s.reference_iters;
  j["report_threshold"] = s.threshold;
  j["paths_requested"] = cfg.paths;
  j["paths_completed"] = s.paths.size();
  j["reached"] = s.reached;
  // Strings keep every digit regardless of the JSON writer's float formatting.
  j["median_iters_to_threshold"] = fmt(s.median_iters_to_threshold);
  j["mean_iters_to_threshold"] = fmt(s.mean_iters_to_threshold);
  j["mean_iterations"] = fmt(s.mean_iterations);
  j["fraction_slack_zero"] = s.fraction_slack_zero;
  if (timing) j["total_elapsed_s"] = s.total_elapsed_s;
  j["paths"] = json::array();
  for (const auto& p : s.paths) j["paths"].push_back(path_json(p, timing));
  j["config"] = to_json(cfg);
  std::ofstream out(dir / "summary.json", std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
}

RunResult run_once(const StochasticProblem& problem, const RunConfig& rc, Algorithm alg) {
  if (rc.restarts > 1) return multi_restart(problem, rc, alg);
  return alg == Algorithm::kParallelSsca ? run_parallel_ssca(problem, rc) : run_ssca(problem, rc);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const fs::path& file) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error(file.string() + ": bad number \"" + s + "\"");
  }
  return v;
}

struct LoadedTrace {
  int index = -1;
  std::vector<long> t;
  std::vector<Vector> x;
};

LoadedTrace load_trace(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(file.string() + ": empty trace");
  const auto header = split_csv(line);
  std::vector<std::size_t> xcols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].rfind("x_", 0) == 0) xcols.push_back(c);
  }
  if (header.empty() || header[0] != "t") {
    throw std::runtime_error(file.string() + ": not a trace file");
  }
  if (xcols.empty()) throw std::runtime_error(file.string() + ": trace has no iterate columns");
  LoadedTrace tr;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error(file.string() + ": row with " + std::to_string(cells.size()) +
                               " cells, expected " + std::to_string(header.size()));
    }
    tr.t.push_back(static_cast<long>(parse_double(cells[0], file)));
    Vector x(static_cast<Eigen::Index>(xcols.size()));
    for (std::size_t j = 0; j < xcols.size(); ++j) {
      x[static_cast<Eigen::Index>(j)] = parse_double(cells[xcols[j]], file);
    }
    tr.x.push_back(std::move(x));
  }
  return tr;
}

}  // namespace

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kProblem7: return "problem7";
    case ProblemKind::kProblem8: return "problem8";
    case ProblemKind::kCustomToy: return "custom-toy";
  }
  return "problem7";
}

void ToyConfig::validate() const {
  if (dimension == 0) throw std::invalid_argument("dimension: must be at least 1");
  if (target.size() != dimension) {
    throw std::invalid_argument("target: expected " + std::to_string(dimension) + " entries");
  }
  if (!(noise >= 0.0)) throw std::invalid_argument("noise: must be non-negative");
  if (!(lower <= upper)) throw std::invalid_argument("lower: must not exceed upper");
  if (sum_max && !std::isfinite(*sum_max)) throw std::invalid_argument("sum_max: must be finite");
}

void ExperimentConfig::validate() const {
  if (paths < 1) throw ConfigError("paths: must be at least 1", "paths");
  if (reference_iters < 1) throw ConfigError("reference_iters: must be at least 1", "reference_iters");
  if (!(report_threshold > 0.0)) {
    throw ConfigError("report_threshold: must be positive", "report_threshold");
  }
  if (margin_samples < 2) throw ConfigError("margin_samples: must be at least 2", "margin_samples");
  if (path_threads < 0) throw ConfigError("path_threads: must be non-negative", "path_threads");
  checked("run", [&] {
    run.validate();
    run.gamma.validate();
    run.omega.validate();
    run.penalty.validate();
    run.inner.validate();
  });
  if (problem == ProblemKind::kCustomToy) {
    checked("toy", [&] { toy.validate(); });
  } else {
    checked("model", [&] { model.validate(); });
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string what = e.what();
    // Drop the library's own "[json.exception.parse_error.101] parse error at ...: " prefix.
    if (auto pos = what.find(": "); pos != std::string::npos) what = what.substr(pos + 2);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": parse error: " + what);
  }
  ExperimentConfig cfg;
  try {
    ObjectReader r(j, "");
    std::string problem = to_string(cfg.problem);
    r.read("problem", problem);
    cfg.problem = parse_problem(problem);
    if (const json* v = r.find("model")) cfg.model = parse_model(*v);
    if (const json* v = r.find("toy")) cfg.toy = parse_toy(*v);
    if (const json* v = r.find("run")) cfg.run = parse_run(*v);
    r.read("paths", cfg.paths);
    r.read("reference_iters", cfg.reference_iters);
    r.read("report_threshold", cfg.report_threshold);
    r.read("margin_samples", cfg.margin_samples);
    r.read("write_iterates", cfg.write_iterates);
    r.read("path_threads", cfg.path_threads);
    r.finish();
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what(), e.field());
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["problem"] = to_string(cfg.problem);
  if (cfg.problem == ProblemKind::kCustomToy) {
    json t;
    t["dimension"] = cfg.toy.dimension;
    t["target"] = cfg.toy.target;
    t["noise"] = cfg.toy.noise;
    t["lower"] = cfg.toy.lower;
    t["upper"] = cfg.toy.upper;
    t["sum_max"] = cfg.toy.sum_max ? json(*cfg.toy.sum_max) : json(nullptr);
    j["toy"] = t;
  } else {
    const auto& m = cfg.model;
    json g = json::array();
    for (std::size_t k = 0; k < m.K; ++k) {
      g.push_back(std::vector<double>(m.gain_vars.begin() + static_cast<long>(k * m.K),
                                      m.gain_vars.begin() + static_cast<long>((k + 1) * m.K)));
    }
    j["model"] = {{"K", m.K},
                  {"power_limits", m.power_limits},
                  {"noise_vars", m.noise_vars},
                  {"rate_reqs", m.rate_reqs},
                  {"gain_vars", g}};
  }
  const auto& r = cfg.run;
  j["run"] = {{"max_outer_iters", r.max_outer_iters},
              {"stop_residual", r.stop_residual},
              {"stop_early", r.stop_early},
              {"slack_window", r.slack_window},
              {"gamma", schedule_json(r.gamma)},
              {"omega", schedule_json(r.omega)},
              {"rho", r.penalty.rho},
              {"rho_growth", r.penalty.rho_growth},
              {"inner",
               {{"max_iters", r.inner.max_iters},
                {"tol", r.inner.tol},
                {"smoothing_mu", r.inner.smoothing_mu},
                {"step_rule", step_rule_name(r.inner.step_rule)},
                {"prox_tau", r.inner.prox_tau}}},
              {"seed", r.seed},
              {"restarts", r.restarts},
              {"slack_zero_tol", r.slack_zero_tol},
              {"minibatch", r.minibatch},
              {"prune_threshold", r.prune_threshold},
              {"max_components", r.max_components},
              {"block_threads", r.block_threads},
              {"record_time", r.record_time}};
  j["paths"] = cfg.paths;
  j["reference_iters"] = cfg.reference_iters;
  j["report_threshold"] = cfg.report_threshold;
  j["margin_samples"] = cfg.margin_samples;
  j["write_iterates"] = cfg.write_iterates;
  j["path_threads"] = cfg.path_threads;
  return j;
}

StochasticProblem build_problem(const ExperimentConfig& cfg) {
  switch (cfg.problem) {
    case ProblemKind::kProblem7: return wireless::build_problem7(cfg.model);
    case ProblemKind::kProblem8: return wireless::build_problem8(cfg.model);
    case ProblemKind::kCustomToy: break;
  }
  const ToyConfig toy = cfg.toy;
  toy.validate();
  const auto n = static_cast<Eigen::Index>(toy.dimension);
  const Vector target = Eigen::Map<const Vector>(toy.target.data(), n);
  const double noise = toy.noise;
  auto center = [target, noise](const Sample& s) {
    return Vector(target + noise * Eigen::Map<const Vector>(s.values.data(), target.size()));
  };

  StochasticProblem p;
  p.dimension = toy.dimension;
  p.feasible_set = FeasibleSet::box(Vector::Constant(n, toy.lower), Vector::Constant(n, toy.upper));
  p.sampler = [n](Rng& rng) {
    Sample s;
    s.values.resize(static_cast<std::size_t>(n));
    for (auto& v : s.values) v = 2.0 * uniform01(rng) - 1.0;
    return s;
  };
  p.objective.value = [center](const Vector& x, const Sample& s) {
    return (x - center(s)).squaredNorm();
  };
  p.objective.gradient = [center](const Vector& x, const Sample& s) {
    return Vector(2.0 * (x - center(s)));
  };
  // The objective is already convex, so the per-sample approximation is the sample function.
  p.objective_surrogate = [center, n](const Vector& anchor, const Sample& s) -> ComponentPtr {
    return std::make_shared<QuadraticComponent>(Vector::Ones(n), center(s), Vector::Zero(n), 0.0,
                                                anchor, s.id);
  };
  if (toy.sum_max) {
    const double cap = *toy.sum_max;
    p.constraints.push_back({[cap](const Vector& x, const Sample&) { return x.sum() - cap; },
                             [n](const Vector&, const Sample&) { return Vector(Vector::Ones(n)); }});
    p.constraint_surrogates.push_back([cap, n](const Vector& anchor, const Sample& s) -> ComponentPtr {
      return std::make_shared<QuadraticComponent>(Vector::Zero(n), Vector::Zero(n), Vector::Ones(n),
                                                  -cap, anchor, s.id);
    });
  }
  p.initial_point = p.feasible_set.project(Vector::Zero(n));
  return p;
}

Algorithm algorithm_for(ProblemKind kind) {
  return kind == ProblemKind::kProblem8 ? Algorithm::kParallelSsca : Algorithm::kSsca;
}

std::string trace_header(std::size_t n, bool with_iterates) {
  std::string h = "t,objective,slack_sum,step_gap,residual,elapsed_s";
  if (with_iterates) {
    for (std::size_t j = 1; j <= n; ++j) h += ",x_" + std::to_string(j);
  }
  return h;
}

long settle_iteration(const std::vector<TraceRow>& trace, const Vector& reference,
                      double threshold) {
  long settle = static_cast<long>(trace.size()) + 1;
  for (std::size_t i = trace.size(); i-- > 0;) {
    if (relative_error(trace[i].x, reference) > threshold) break;
    settle = static_cast<long>(i) + 1;
  }
  return settle;
}

namespace {

PathSummary run_path(const ExperimentConfig& cfg, const StochasticProblem& problem, Algorithm alg,
                     int i, const fs::path& out_dir) {
  PathSummary ps;
  ps.index = i;
  ps.seed = derive_seed(cfg.run.seed, kPathStream, static_cast<std::uint64_t>(i));

  RunConfig measured = cfg.run;
  measured.seed = ps.seed;
  measured.record_iterates = true;
  RunConfig reference = measured;
  reference.stop_early = false;
  reference.max_outer_iters = cfg.reference_iters;
  reference.record_time = false;

  // Only the final iterate of the long run is kept.
  ps.reference = run_once(problem, reference, alg).x_star;
  const RunResult run = run_once(problem, measured, alg);

  ps.iterations = run.iterations;
  ps.converged = run.converged;
  ps.stationary = run.stationary_for_original;
  ps.x_star = run.x_star;
  ps.slack_l1 = run.s_star.lpNorm<1>();
  const auto& rows = run.trace.rows;
  const long settle = settle_iteration(rows, ps.reference, cfg.report_threshold);
  if (settle <= static_cast<long>(rows.size())) ps.iters_to_threshold = rows[settle - 1].t;
  if (cfg.run.record_time && !rows.empty()) {
    ps.elapsed_s = rows.back().elapsed;
    ps.seconds_per_iteration = ps.elapsed_s / static_cast<double>(rows.size());
  }

  const Estimate obj = objective_estimate(problem, ps.x_star, cfg.margin_samples,
                                          derive_seed(ps.seed, kEstimateStream, 2));
  if (cfg.problem != ProblemKind::kCustomToy) {
    const std::uint64_t mc_seed = derive_seed(ps.seed, kEstimateStream, 1);
    const auto rates =
        cfg.problem == ProblemKind::kProblem7
            ? wireless::ergodic_rates_mc(cfg.model, ps.x_star, cfg.margin_samples, mc_seed)
            : wireless::ergodic_rate_lbs_mc(cfg.model, ps.x_star, cfg.margin_samples, mc_seed);
    for (std::size_t k = 0; k < rates.size(); ++k) {
      ps.margins.push_back(rates[k].mean - cfg.model.rate_reqs[k]);
      ps.margin_std_errors.push_back(rates[k].std_error);
    }
    // The objective is the negated sum rate.
    ps.sum_rate = -obj.mean;
  } else {
    ps.sum_rate = obj.mean;
  }
  ps.sum_rate_std_error = obj.std_error;

  if (!out_dir.empty()) {
    char name[32];
    std::snprintf(name, sizeof name, "path_%03d.csv", i);
    write_trace(out_dir / name, rows, problem.dimension, cfg.write_iterates);
  }
  return ps;
}

}  // namespace

CampaignSummary run_campaign(const ExperimentConfig& cfg, const fs::path& out_dir,
                             const ProgressFn& progress) {
  cfg.validate();
  const StochasticProblem problem = build_problem(cfg);
  const Algorithm alg = algorithm_for(cfg.problem);
  if (!out_dir.empty()) fs::create_directories(out_dir);
  const auto start = std::chrono::steady_clock::now();

  CampaignSummary summary;
  summary.reference_iters = cfg.reference_iters;
  summary.threshold = cfg.report_threshold;

  int workers = cfg.path_threads;
  if (workers == 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, cfg.paths);

  std::mutex mu;
  std::atomic<int> next{0};
  std::exception_ptr failure;
  auto work = [&] {
    for (int i = next++; i < cfg.paths; i = next++) {
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        PathSummary ps = run_path(cfg, problem, alg, i, out_dir);
        std::lock_guard lock(mu);
        auto pos = std::lower_bound(summary.paths.begin(), summary.paths.end(), i,
                                    [](const PathSummary& p, int idx) { return p.index < idx; });
        pos = summary.paths.insert(pos, std::move(ps));
        finalize(summary, cfg.run.slack_zero_tol);
        if (cfg.run.record_time) {
          summary.total_elapsed_s =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
        // Rewritten after every path so an interrupted campaign leaves consistent partial
        // results behind.
        if (!out_dir.empty()) write_summaries(out_dir, cfg, summary);
        if (progress) progress(*pos);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return summary;
}

void emit_plot_data(const fs::path& in_dir, const fs::path& out_file) {
  std::vector<fs::path> files;
  if (fs::is_directory(in_dir)) {
    for (const auto& e : fs::directory_iterator(in_dir)) {
      const std::string name = e.path().filename().string();
      if (e.is_regular_file() && name.rfind("path_", 0) == 0 && e.path().extension() == ".csv") {
        files.push_back(e.path());
      }
    }
  }
  if (files.empty()) throw std::runtime_error("no path_*.csv traces in " + in_dir.string());
  std::sort(files.begin(), files.end());

  std::map<int, Vector> references;
  const fs::path summary_file = in_dir / "summary.json";
  if (fs::exists(summary_file)) {
    std::ifstream in(summary_file);
    const json s = json::parse(in);
    for (const auto& p : s.at("paths")) {
      const auto ref = p.at("reference").get<std::vector<double>>();
      if (!ref.empty()) {
        references[p.at("index").get<int>()] =
            Eigen::Map<const Vector>(ref.data(), static_cast<Eigen::Index>(ref.size()));
      }
    }
  }

  // errors[t] collects every trace's relative error at iteration t.
  std::map<long, std::vector<double>> errors;
  for (const auto& file : files) {
    LoadedTrace tr = load_trace(file);
    if (tr.x.empty()) continue;
    const std::string stem = file.stem().string();
    int index = -1;
    std::from_chars(stem.data() + 5, stem.data() + stem.size(), index);
    auto it = references.find(index);
    const Vector ref = it != references.end() ? it->second : tr.x.back();
    if (ref.size() != tr.x.front().size()) {
      throw std::runtime_error(file.string() + ": reference dimension differs from the trace");
    }
    for (std::size_t r = 0; r < tr.x.size(); ++r) {
      errors[tr.t[r]].push_back(relative_error(tr.x[r], ref));
    }
  }
  if (errors.empty()) throw std::runtime_error("traces in " + in_dir.string() + " are empty");

  std::ofstream out(out_file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_file.string());
  out << "t,median,q1,q3,min,max,paths\n";
  for (auto& [t, v] : errors) {
    std::sort(v.begin(), v.end());
    out << t << ',' << fmt(quantile(v, 0.5)) << ',' << fmt(quantile(v, 0.25)) << ','
        << fmt(quantile(v, 0.75)) << ',' << fmt(v.front()) << ',' << fmt(v.back()) << ','
        << v.size() << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + out_file.string());
}

}  // namespace ssca::bench
