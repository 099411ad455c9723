#include <json.hpp>

#include "mfda/orchestrator.hpp"

namespace mfda {

using nlohmann::json;

namespace {

json vector_json(const RealVector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

RealVector vector_from(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field, "expected an array of numbers");
  RealVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(field + "[" + std::to_string(i) + "]", "expected a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

template <typename T>
T required(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + key, "wrong type");
  }
}

}  // namespace

std::string render_report(const OptimizationReport& r) {
  json doc;
  doc["strategy"] = std::string(to_string(r.strategy));
  doc["scenario"] = json::parse(render_scenario(r.scenario));
  doc["seed"] = r.seed;
  doc["covert_rate_bits"] = r.covert_rate_bits;
  doc["layout"] = {{"positions_m", vector_json(r.final_layout.positions_m)},
                   {"frequencies_hz", vector_json(r.final_layout.frequencies_hz)}};
  json w = json::array();
  for (Eigen::Index i = 0; i < r.final_beamformer.weights.size(); ++i)
    w.push_back({r.final_beamformer.weights(i).real(), r.final_beamformer.weights(i).imag()});
  doc["beamformer"] = w;
  doc["outer_iterations"] = r.outer_iterations;
  doc["stage1_rounds"] = r.stage1_rounds;
  doc["traces"] = {{"position", r.position_trace}, {"frequency", r.frequency_trace}};
  json cs = json::array();
  for (const auto& c : r.constraints) {
    cs.push_back({{"warden", c.warden},
                  {"r_m", c.point.range_m},
                  {"theta_deg", c.point.angle_deg()},
                  {"received_w", c.received_w},
                  {"threshold_w", c.threshold_w},
                  {"kl", c.kl},
                  {"dep_lower_bound", c.dep_lower_bound},
                  {"excess", c.excess}});
  }
  doc["constraints"] = cs;
  doc["solver"] = {{"method", r.solver.method},
                   {"newton_steps", r.solver.newton_steps},
                   {"duality_gap_w", r.solver.duality_gap},
                   {"max_violation", r.solver.max_violation}};
  doc["notes"] = r.notes;
  return doc.dump(2);
}

OptimizationReport parse_report(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("report is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "report must be a JSON object");
  OptimizationReport r;
  r.strategy = parse_strategy(required<std::string>(doc, "strategy", ""));
  if (!doc.contains("scenario")) throw ConfigError("scenario", "missing");
  r.scenario = load_scenario(doc["scenario"].dump());
  r.seed = doc.value("seed", std::uint64_t{0});
  r.covert_rate_bits = required<double>(doc, "covert_rate_bits", "");

  const json layout = required<json>(doc, "layout", "");
  r.final_layout.positions_m = vector_from(required<json>(layout, "positions_m", "layout."), "layout.positions_m");
  r.final_layout.frequencies_hz =
      vector_from(required<json>(layout, "frequencies_hz", "layout."), "layout.frequencies_hz");
  if (r.final_layout.positions_m.size() != r.final_layout.frequencies_hz.size())
    throw ConfigError("layout", "positions and frequencies differ in length");

  const json w = required<json>(doc, "beamformer", "");
  if (!w.is_array()) throw ConfigError("beamformer", "expected an array of [re, im] pairs");
  r.final_beamformer.weights.resize(static_cast<Eigen::Index>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto& e = w[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      throw ConfigError("beamformer[" + std::to_string(i) + "]", "expected [re, im]");
    r.final_beamformer.weights(static_cast<Eigen::Index>(i)) = Complex(e[0].get<double>(), e[1].get<double>());
  }

  r.outer_iterations = doc.value("outer_iterations", 0);
  r.stage1_rounds = doc.value("stage1_rounds", 0);
  if (doc.contains("traces")) {
    r.position_trace = doc["traces"].value("position", std::vector<double>{});
    r.frequency_trace = doc["traces"].value("frequency", std::vector<double>{});
  }
  if (doc.contains("constraints")) {
    for (const auto& c : doc["constraints"]) {
      ConstraintEntry e;
      e.warden = c.value("warden", 0);
      e.point = PolarCoordinate::from_degrees(c.value("r_m", 1.0), c.value("theta_deg", 0.0));
      e.received_w = c.value("received_w", 0.0);
      e.threshold_w = c.value("threshold_w", 0.0);
      e.kl = c.value("kl", 0.0);
      e.dep_lower_bound = c.value("dep_lower_bound", 1.0);
      e.excess = c.value("excess", 0.0);
      r.constraints.push_back(e);
    }
  }
  if (doc.contains("solver")) {
    const auto& s = doc["solver"];
    r.solver.method = s.value("method", std::string{});
    r.solver.newton_steps = s.value("newton_steps", 0);
    r.solver.duality_gap = s.value("duality_gap_w", 0.0);
    r.solver.max_violation = s.value("max_violation", 0.0);
  }
  r.notes = doc.value("notes", std::vector<std::string>{});
  return r;
}

}  // namespace mfda
