#include "mfda/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mfda/covertness.hpp"

namespace mfda {

using nlohmann::json;

void GridSpan::validate(const std::string& field) const {
  if (n < 2) throw ConfigError(field, "needs at least 2 samples");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) throw ConfigError(field, "needs finite lo < hi");
}

GridSpan parse_grid_span(std::string_view text, const std::string& field) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  if (parts.size() != 3) throw ConfigError(field, "expected lo,hi,n");
  GridSpan s;
  try {
    std::size_t used = 0;
    s.lo = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument("lo");
    s.hi = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument("hi");
    s.n = std::stoi(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument("n");
  } catch (const std::logic_error&) {
    throw ConfigError(field, "expected lo,hi,n with numeric entries");
  }
  s.validate(field);
  return s;
}

RealMatrix beampattern_grid(const ArrayLayout& layout, const Beamformer& w, const GridSpan& range_m,
                            const GridSpan& angle_deg, double reference_loss, const std::optional<LinkLoss>& raw_loss) {
  range_m.validate("range");
  angle_deg.validate("angle");
  if (!(range_m.lo > 0.0)) throw ConfigError("range", "must be positive");
  if (!(angle_deg.lo > -90.0 && angle_deg.hi < 90.0)) throw ConfigError("angle", "must lie inside (-90, 90) degrees");
  if (layout.size() != w.size()) throw ConfigError("beamformer", "size differs from the layout");

  RealMatrix grid(range_m.n, angle_deg.n);
  for (int i = 0; i < range_m.n; ++i) {
    const double r = range_m.at(i);
    const double loss = raw_loss ? path_loss_amplitude(r, raw_loss->model, raw_loss->kind) : reference_loss;
    for (int j = 0; j < angle_deg.n; ++j) {
      const ChannelVector h = channel_vector(layout, PolarCoordinate::from_degrees(r, angle_deg.at(j)));
      grid(i, j) = received_power(h, w) * loss * loss;
    }
  }
  return grid;
}

RealMatrix beampattern_grid(const OptimizationReport& report, const BeampatternOptions& o) {
  const ScenarioConfig& cfg = report.scenario;
  const double ref = path_loss_amplitude(cfg.bob.range_m, cfg.loss, LinkKind::legitimate);
  std::optional<LinkLoss> raw;
  if (o.raw_power) raw = LinkLoss{cfg.loss, LinkKind::legitimate};
  return beampattern_grid(report.final_layout, report.final_beamformer, o.range_m, o.angle_deg, ref, raw);
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string beampattern_csv(const RealMatrix& grid, const GridSpan& range_m, const GridSpan& angle_deg) {
  std::string out = "r_m,theta_deg,power\n";
  for (int i = 0; i < range_m.n; ++i)
    for (int j = 0; j < angle_deg.n; ++j)
      out += format_double(range_m.at(i)) + "," + format_double(angle_deg.at(j)) + "," + format_double(grid(i, j)) +
             "\n";
  return out;
}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::trace: return "trace";
    case ExperimentKind::rate_vs_m: return "rate_vs_m";
    case ExperimentKind::rate_vs_budget: return "rate_vs_budget";
    case ExperimentKind::beampattern: return "beampattern";
    case ExperimentKind::imperfect_sweep: return "imperfect_sweep";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::trace, ExperimentKind::rate_vs_m, ExperimentKind::rate_vs_budget,
                 ExperimentKind::beampattern, ExperimentKind::imperfect_sweep})
    if (name == to_string(k)) return k;
  throw ConfigError("kind", "unknown experiment kind '" + std::string(name) + "'");
}

namespace {

bool is_count(double v, int min) { return std::isfinite(v) && v == std::floor(v) && v >= min && v <= 1e6; }

}  // namespace

void ExperimentSpec::validate() const {
  scenario.validate();
  if (sweep.empty()) throw ConfigError("sweep", "must not be empty");
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const std::string field = "sweep[" + std::to_string(i) + "]";
    const double v = sweep[i];
    switch (kind) {
      case ExperimentKind::trace:
      case ExperimentKind::rate_vs_m:
      case ExperimentKind::beampattern:
        if (!is_count(v, 2)) throw ConfigError(field, "antenna count must be an integer >= 2");
        break;
      case ExperimentKind::imperfect_sweep:
        if (!is_count(v, 1)) throw ConfigError(field, "samples per axis must be an integer >= 1");
        break;
      case ExperimentKind::rate_vs_budget:
        if (!std::isfinite(v)) throw ConfigError(field, "power budget must be finite");
        break;
    }
  }
  if (kind != ExperimentKind::trace && strategies.empty()) throw ConfigError("strategies", "must not be empty");
  if (seeds.empty()) throw ConfigError("seeds", "must not be empty");
  if (threads < 1) throw ConfigError("threads", "must be at least 1");
  if (kind == ExperimentKind::imperfect_sweep && (!(spacing_r_m > 0.0) || !(spacing_theta_deg > 0.0)))
    throw ConfigError("spacing", "must be positive");
  beampattern.range_m.validate("grid.range_m");
  beampattern.angle_deg.validate("grid.angle_deg");
}

namespace {

ScenarioConfig builtin_scenario(std::string_view name) {
  if (name == "builtin:low") return low_correlation_scenario(10);
  if (name == "builtin:high") return high_correlation_scenario(10);
  if (name == "builtin:imperfect") return imperfect_csi_scenario(10, 1);
  throw ConfigError("scenario", "unknown builtin '" + std::string(name) + "'");
}

GridSpan span_from(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number_integer())
    throw ConfigError(field, "expected [lo, hi, n]");
  GridSpan s{j[0].get<double>(), j[1].get<double>(), j[2].get<int>()};
  s.validate(field);
  return s;
}

template <typename T>
T field_as(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(key, "wrong type");
  }
}

}  // namespace

ExperimentSpec parse_experiment(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("experiment is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "experiment must be a JSON object");

  ExperimentSpec spec;
  if (!doc.contains("scenario")) throw ConfigError("scenario", "missing");
  const json& sc = doc["scenario"];
  if (sc.is_object()) {
    spec.scenario = load_scenario(sc.dump());
    spec.scenario_source = "inline";
  } else if (sc.is_string()) {
    const std::string s = sc.get<std::string>();
    if (s.rfind("builtin:", 0) == 0) {
      spec.scenario = builtin_scenario(s);
    } else {
      std::filesystem::path p(s);
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      spec.scenario = load_scenario_file(p);
    }
    spec.scenario_source = s;
  } else {
    throw ConfigError("scenario", "expected a path, builtin name or object");
  }

  if (!doc.contains("kind") || !doc["kind"].is_string()) throw ConfigError("kind", "missing");
  spec.kind = parse_experiment_kind(doc["kind"].get<std::string>());
  spec.sweep = field_as<std::vector<double>>(doc, "sweep", {});
  if (doc.contains("strategies")) {
    spec.strategies.clear();
    for (const auto& s : doc["strategies"]) {
      if (!s.is_string()) throw ConfigError("strategies", "expected strategy names");
      spec.strategies.push_back(parse_strategy(s.get<std::string>()));
    }
  }
  spec.seeds = field_as<std::vector<std::uint64_t>>(doc, "seeds", spec.seeds);
  spec.output_dir = field_as<std::string>(doc, "out", spec.output_dir.string());
  spec.threads = field_as<int>(doc, "threads", spec.threads);
  const std::string solver = field_as<std::string>(doc, "solver", "socp");
  if (solver == "socp")
    spec.solver = Stage2Solver::socp;
  else if (solver == "sdr")
    spec.solver = Stage2Solver::sdr;
  else
    throw ConfigError("solver", "expected \"socp\" or \"sdr\"");
  spec.spacing_r_m = field_as<double>(doc, "spacing_r_m", spec.spacing_r_m);
  spec.spacing_theta_deg = field_as<double>(doc, "spacing_theta_deg", spec.spacing_theta_deg);
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    if (g.contains("range_m")) spec.beampattern.range_m = span_from(g["range_m"], "grid.range_m");
    if (g.contains("angle_deg")) spec.beampattern.angle_deg = span_from(g["angle_deg"], "grid.angle_deg");
  }
  spec.beampattern.raw_power = field_as<bool>(doc, "raw_power", false);
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str(), path.parent_path());
}

namespace {

struct NamedFile {
  std::string name;
  std::string content;
};

struct PointOutput {
  std::string target;  ///< aggregated CSV receiving `rows`
  std::string rows;
  std::vector<NamedFile> files;
  std::vector<PointFailure> failures;
};

const char* kRatesHeader = "strategy,M,rate_bits,max_constraint_margin\n";
const char* kTraceHeader = "seed,iteration,objective\n";

std::string label(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// PERFECT_COVERT has no solution when the wardens span Bob's channel, so it
// runs apart from the others and only its failure is recorded.
std::vector<OptimizationReport> robust_strategies(const ScenarioConfig& cfg, const std::vector<StrategyKind>& kinds,
                                                  const AoOptions& o, const std::string& point,
                                                  std::vector<PointFailure>& failures) {
  std::vector<StrategyKind> rest;
  bool want_perfect = false;
  for (auto k : kinds) {
    if (k == StrategyKind::perfect_covert)
      want_perfect = true;
    else
      rest.push_back(k);
  }
  std::vector<OptimizationReport> reports = run_strategies(cfg, rest, o);
  if (want_perfect) {
    try {
      OptimizationReport perfect = run_two_stage_ao(cfg, StrategyKind::perfect_covert, o);
      for (auto& r : reports)
        if (r.strategy == StrategyKind::mfda) r = enforce_nesting(cfg, std::move(r), perfect, o);
      reports.push_back(std::move(perfect));
    } catch (const GeometryError& e) {
      failures.push_back({point + " PERFECT_COVERT", e.what()});
    }
  }
  std::vector<OptimizationReport> ordered;
  for (auto k : kinds)
    for (auto& r : reports)
      if (r.strategy == k) ordered.push_back(r);
  return ordered;
}

void emit_rates(PointOutput& out, const std::vector<OptimizationReport>& reports, const std::string& point,
                const std::string& suffix) {
  for (const auto& r : reports) {
    const std::string name = std::string(to_string(r.strategy));
    const VerificationResult v = verify_report(r);
    if (!v.passed()) {
      out.failures.push_back({point + " " + name, "verification failed: " + v.violations.front()});
      continue;
    }
    const double margin = v.covert_exempt ? 0.0 : r.max_constraint_excess();
    out.rows += name + "," + std::to_string(r.scenario.num_antennas) + "," + format_double(r.covert_rate_bits) + "," +
                format_double(margin) + "\n";
    out.files.push_back({"reports/" + name + "_" + suffix + ".json", render_report(r) + "\n"});
  }
}

AoOptions options_for(const ScenarioConfig& cfg, const ExperimentSpec& spec) {
  AoOptions o = default_options(cfg);
  o.solver = spec.solver;
  o.seed = spec.seeds.front();
  return o;
}

std::function<PointOutput()> make_point(const ExperimentSpec& spec, std::size_t index, std::size_t seed_index) {
  const double v = spec.sweep[index];
  return [&spec, v, seed_index]() {
    PointOutput out;
    ScenarioConfig cfg = spec.scenario;
    switch (spec.kind) {
      case ExperimentKind::trace: {
        cfg.num_antennas = static_cast<int>(v);
        cfg.validate();
        const std::uint64_t seed = spec.seeds[seed_index];
        out.target = "trace_M" + label(v) + ".csv";
        std::mt19937_64 rng(seed);
        BsumState st;
        st.layout = random_feasible_layout(cfg, rng, true, false);
        st.bob = cfg.bob;
        st.warden_points = warden_sample_points(cfg);
        const BsumState done =
            bsum_positions(std::move(st), LayoutLimits::from(cfg), default_options(cfg).position_stop);
        for (std::size_t i = 0; i < done.objective_trace.size(); ++i)
          out.rows += std::to_string(seed) + "," + std::to_string(i) + "," + format_double(done.objective_trace[i]) +
                      "\n";
        return out;
      }
      case ExperimentKind::rate_vs_m:
      case ExperimentKind::beampattern: {
        cfg.num_antennas = static_cast<int>(v);
        cfg.validate();
        const std::string point = "M=" + label(v);
        out.target = spec.kind == ExperimentKind::rate_vs_m ? "rates.csv" : "rates_beampattern.csv";
        const auto reports = robust_strategies(cfg, spec.strategies, options_for(cfg, spec), point, out.failures);
        emit_rates(out, reports, point, "M" + label(v));
        if (spec.kind == ExperimentKind::beampattern) {
          for (const auto& r : reports) {
            const RealMatrix grid = beampattern_grid(r, spec.beampattern);
            out.files.push_back({"beampattern_" + std::string(to_string(r.strategy)) + "_M" + label(v) + ".csv",
                                 beampattern_csv(grid, spec.beampattern.range_m, spec.beampattern.angle_deg)});
          }
        }
        return out;
      }
      case ExperimentKind::rate_vs_budget: {
        cfg.p_max_w = dbm_to_watts(v);
        cfg.validate();
        const std::string point = "P_max=" + label(v) + "dBm";
        out.target = "rates_pmax_" + label(v) + "dBm.csv";
        const auto reports = robust_strategies(cfg, spec.strategies, options_for(cfg, spec), point, out.failures);
        emit_rates(out, reports, point, "P" + label(v) + "dBm");
        return out;
      }
      case ExperimentKind::imperfect_sweep: {
        const int samples = static_cast<int>(v);
        Uncertainty u;
        u.samples = samples;
        const double half = 0.5 * (samples - 1);
        u.delta_r_m.assign(cfg.willies.size(), half * spec.spacing_r_m);
        u.delta_theta_rad.assign(cfg.willies.size(), deg_to_rad(half * spec.spacing_theta_deg));
        cfg.uncertainty = u;
        cfg.validate();
        const std::string point = "L=" + label(v);
        out.target = "rates_L" + label(v) + ".csv";
        const auto reports = robust_strategies(cfg, spec.strategies, options_for(cfg, spec), point, out.failures);
        emit_rates(out, reports, point, "L" + label(v));
        return out;
      }
    }
    return out;
  };
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<std::function<PointOutput()>> tasks;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < spec.sweep.size(); ++i) {
    if (spec.kind == ExperimentKind::trace) {
      for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
        tasks.push_back(make_point(spec, i, s));
        names.push_back("M=" + label(spec.sweep[i]) + " seed=" + std::to_string(spec.seeds[s]));
      }
    } else {
      tasks.push_back(make_point(spec, i, 0));
      names.push_back("sweep=" + label(spec.sweep[i]));
    }
  }

  std::vector<PointOutput> outputs(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      try {
        outputs[k] = tasks[k]();
      } catch (const std::exception& e) {
        outputs[k] = PointOutput{};
        outputs[k].failures.push_back({names[k], e.what()});
      }
    }
  };
  const int n_threads = std::min<int>(spec.threads, static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Rows are concatenated in sweep order so the output does not depend on
  // scheduling.
  std::map<std::string, std::string> aggregated;
  std::vector<std::string> order;
  ExperimentResult result;
  std::vector<NamedFile> extra;
  for (auto& o : outputs) {
    if (!o.target.empty()) {
      if (!aggregated.count(o.target)) {
        aggregated[o.target] = spec.kind == ExperimentKind::trace ? kTraceHeader : kRatesHeader;
        order.push_back(o.target);
      }
      aggregated[o.target] += o.rows;
    }
    for (auto& f : o.files) extra.push_back(std::move(f));
    for (auto& f : o.failures) result.failures.push_back(std::move(f));
  }

  for (const auto& name : order) {
    write_file(spec.output_dir / name, aggregated[name]);
    result.files.push_back(spec.output_dir / name);
  }
  for (const auto& f : extra) {
    write_file(spec.output_dir / f.name, f.content);
    result.files.push_back(spec.output_dir / f.name);
  }

  json manifest;
  manifest["tool"] = "mfda";
  manifest["version"] = "0.1.0";
  manifest["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION);
  manifest["compiler"] = __VERSION__;
  json exp;
  exp["kind"] = std::string(to_string(spec.kind));
  exp["sweep"] = spec.sweep;
  json strategies = json::array();
  for (auto k : spec.strategies) strategies.push_back(std::string(to_string(k)));
  exp["strategies"] = strategies;
  exp["seeds"] = spec.seeds;
  exp["threads"] = spec.threads;
  exp["solver"] = spec.solver == Stage2Solver::socp ? "socp" : "sdr";
  exp["scenario_source"] = spec.scenario_source;
  if (spec.kind == ExperimentKind::imperfect_sweep) {
    exp["spacing_r_m"] = spec.spacing_r_m;
    exp["spacing_theta_deg"] = spec.spacing_theta_deg;
  }
  if (spec.kind == ExperimentKind::beampattern) {
    const auto& b = spec.beampattern;
    exp["grid"] = {{"range_m", {b.range_m.lo, b.range_m.hi, b.range_m.n}},
                   {"angle_deg", {b.angle_deg.lo, b.angle_deg.hi, b.angle_deg.n}},
                   {"raw_power", b.raw_power}};
  }
  manifest["experiment"] = exp;
  manifest["scenario"] = json::parse(render_scenario(spec.scenario));
  json files = json::array();
  for (const auto& f : result.files) files.push_back(std::filesystem::relative(f, spec.output_dir).string());
  manifest["files"] = files;
  json failures = json::array();
  for (const auto& f : result.failures) failures.push_back({{"point", f.point}, {"error", f.message}});
  manifest["failures"] = failures;
  write_file(spec.output_dir / "manifest.json", manifest.dump(2) + "\n");
  result.files.push_back(spec.output_dir / "manifest.json");
  return result;
}

}  // namespace mfda
