#include "mfda/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mfda {

using nlohmann::json;

PolarCoordinate PolarCoordinate::make(double range_m, double angle_rad) {
  if (!(range_m > 0.0) || !std::isfinite(range_m)) throw ConfigError("range_m", "must be positive");
  if (!(std::abs(angle_rad) < kPi / 2)) throw ConfigError("theta", "must lie in (-90, 90) degrees");
  return PolarCoordinate{range_m, angle_rad};
}

void ScenarioConfig::validate() const {
  if (num_antennas < 2) throw ConfigError("antennas", "need at least 2 antennas");
  if (!(carrier_hz > 0.0)) throw ConfigError("carrier_hz", "must be positive");
  if (!(delta_f_hz >= 0.0)) throw ConfigError("delta_f_hz", "must be non-negative");
  if (!(d_min_m > 0.0)) throw ConfigError("d_min_wavelengths", "must be positive");
  const double needed = (num_antennas - 1) * d_min_m;
  if (d_max_m < needed * (1.0 - 1e-12))
    throw ConfigError("d_max_wavelengths", "must be at least (antennas - 1) * d_min for a feasible layout");
  if (!(p_max_w >= 0.0)) throw ConfigError("p_max_dbm", "must be a finite power");
  if (!(noise_bob_w > 0.0)) throw ConfigError("noise_bob_dbm", "must be a finite power");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon", "must be non-negative");
  PolarCoordinate::make(bob.range_m, bob.angle_rad);
  if (willies.empty()) throw ConfigError("willies", "need at least one warden");
  for (std::size_t k = 0; k < willies.size(); ++k) {
    const std::string path = "willies[" + std::to_string(k) + "]";
    try {
      PolarCoordinate::make(willies[k].position.range_m, willies[k].position.angle_rad);
    } catch (const ConfigError& e) {
      throw ConfigError(path + "." + e.field(), "must be a valid coordinate");
    }
    if (!(willies[k].noise_w > 0.0)) throw ConfigError(path + ".noise_dbm", "must be a finite power");
  }
  if (!(loss.ref_distance_m > 0.0)) throw ConfigError("path_loss.ref_m", "must be positive");
  if (!(loss.alpha_ab > 0.0)) throw ConfigError("path_loss.alpha_ab", "must be positive");
  if (!(loss.alpha_aw > 0.0)) throw ConfigError("path_loss.alpha_aw", "must be positive");
  if (uncertainty) {
    const auto& u = *uncertainty;
    if (u.samples < 1) throw ConfigError("uncertainty.samples", "must be >= 1");
    if (u.samples % 2 == 0) throw ConfigError("uncertainty.samples", "must be odd so the nominal point is sampled");
    if (u.delta_r_m.size() != willies.size() || u.delta_theta_rad.size() != willies.size())
      throw ConfigError("uncertainty", "needs one delta per warden");
    for (std::size_t k = 0; k < willies.size(); ++k) {
      if (!(u.delta_r_m[k] >= 0.0)) throw ConfigError("uncertainty.delta_r_m", "must be non-negative");
      if (!(u.delta_theta_rad[k] >= 0.0)) throw ConfigError("uncertainty.delta_theta_deg", "must be non-negative");
      const auto& p = willies[k].position;
      if (p.range_m - u.delta_r_m[k] <= 0.0)
        throw ConfigError("uncertainty.delta_r_m", "uncertainty box reaches the array");
      if (std::abs(p.angle_rad) + u.delta_theta_rad[k] >= kPi / 2)
        throw ConfigError("uncertainty.delta_theta_deg", "uncertainty box leaves the half plane");
    }
  }
}

std::vector<std::string> ScenarioConfig::warnings() const {
  std::vector<std::string> out;
  if (delta_f_hz > 0.01 * carrier_hz)
    out.emplace_back("delta_f_hz is not small compared with carrier_hz");
  if (uncertainty && uncertainty->samples == 1) {
    for (std::size_t k = 0; k < uncertainty->delta_r_m.size(); ++k) {
      if (uncertainty->delta_r_m[k] > 0.0 || uncertainty->delta_theta_rad[k] > 0.0) {
        out.emplace_back("uncertainty.samples = 1 collapses a nonzero uncertainty box onto the nominal point");
        break;
      }
    }
  }
  return out;
}

namespace {

template <typename T>
T required(const json& j, const char* key, const std::string& path) {
  const std::string field = path.empty() ? key : path + "." + key;
  if (!j.is_object() || !j.contains(key)) throw ConfigError(field, "missing field");
  const json& v = j.at(key);
  if constexpr (std::is_arithmetic_v<T>) {
    if (!v.is_number()) throw ConfigError(field, "expected a number");
  }
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(field, e.what());
  }
}

double optional_number(const json& j, const char* key, const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  return required<double>(j, key, path);
}

PolarCoordinate parse_point(const json& j, const std::string& path) {
  const double r = required<double>(j, "r_m", path);
  const double theta = required<double>(j, "theta_deg", path);
  try {
    return PolarCoordinate::from_degrees(r, theta);
  } catch (const ConfigError& e) {
    throw ConfigError(path + "." + (e.field() == "theta" ? "theta_deg" : e.field()), "invalid coordinate");
  }
}

std::vector<double> per_warden(const json& j, const char* key, std::size_t k, double scale) {
  const std::string field = std::string("uncertainty.") + key;
  if (!j.contains(key)) throw ConfigError(field, "missing field");
  const json& v = j.at(key);
  std::vector<double> out;
  if (v.is_number()) {
    out.assign(k, v.get<double>() * scale);
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(field, "expected numbers");
      out.push_back(e.get<double>() * scale);
    }
    if (out.size() != k) throw ConfigError(field, "needs one entry per warden");
  } else {
    throw ConfigError(field, "expected a number or an array");
  }
  return out;
}

}  // namespace

ScenarioConfig load_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed scenario document: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "scenario document must be a JSON object");

  ScenarioConfig cfg;
  const double antennas = required<double>(doc, "antennas", "");
  if (antennas != std::floor(antennas)) throw ConfigError("antennas", "expected an integer");
  cfg.num_antennas = static_cast<int>(antennas);
  cfg.carrier_hz = required<double>(doc, "carrier_hz", "");
  if (!(cfg.carrier_hz > 0.0)) throw ConfigError("carrier_hz", "must be positive");
  cfg.delta_f_hz = required<double>(doc, "delta_f_hz", "");
  const double lambda = cfg.wavelength();
  cfg.d_min_m = required<double>(doc, "d_min_wavelengths", "") * lambda;
  cfg.d_max_m = required<double>(doc, "d_max_wavelengths", "") * lambda;
  cfg.p_max_w = dbm_to_watts(required<double>(doc, "p_max_dbm", ""));
  cfg.noise_bob_w = dbm_to_watts(required<double>(doc, "noise_bob_dbm", ""));
  cfg.epsilon = required<double>(doc, "epsilon", "");

  if (!doc.contains("bob")) throw ConfigError("bob", "missing field");
  cfg.bob = parse_point(doc.at("bob"), "bob");

  if (!doc.contains("willies") || !doc.at("willies").is_array()) throw ConfigError("willies", "expected an array");
  const json& ws = doc.at("willies");
  for (std::size_t k = 0; k < ws.size(); ++k) {
    const std::string path = "willies[" + std::to_string(k) + "]";
    Warden w;
    w.position = parse_point(ws[k], path);
    w.noise_w = dbm_to_watts(required<double>(ws[k], "noise_dbm", path));
    cfg.willies.push_back(w);
  }

  if (doc.contains("path_loss")) {
    const json& pl = doc.at("path_loss");
    cfg.loss.c_db = optional_number(pl, "c_db", "path_loss", cfg.loss.c_db);
    cfg.loss.ref_distance_m = optional_number(pl, "ref_m", "path_loss", cfg.loss.ref_distance_m);
    cfg.loss.alpha_ab = optional_number(pl, "alpha_ab", "path_loss", cfg.loss.alpha_ab);
    cfg.loss.alpha_aw = optional_number(pl, "alpha_aw", "path_loss", cfg.loss.alpha_aw);
  }

  if (doc.contains("uncertainty") && !doc.at("uncertainty").is_null()) {
    const json& u = doc.at("uncertainty");
    Uncertainty unc;
    const double samples = required<double>(u, "samples", "uncertainty");
    if (samples != std::floor(samples)) throw ConfigError("uncertainty.samples", "expected an integer");
    unc.samples = static_cast<int>(samples);
    unc.delta_r_m = per_warden(u, "delta_r_m", cfg.willies.size(), 1.0);
    unc.delta_theta_rad = per_warden(u, "delta_theta_deg", cfg.willies.size(), kPi / 180.0);
    cfg.uncertainty = std::move(unc);
  }

  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

std::string render_scenario(const ScenarioConfig& cfg) {
  const double lambda = cfg.wavelength();
  json doc;
  doc["antennas"] = cfg.num_antennas;
  doc["carrier_hz"] = cfg.carrier_hz;
  doc["delta_f_hz"] = cfg.delta_f_hz;
  doc["d_min_wavelengths"] = cfg.d_min_m / lambda;
  doc["d_max_wavelengths"] = cfg.d_max_m / lambda;
  doc["p_max_dbm"] = watts_to_dbm(cfg.p_max_w);
  doc["noise_bob_dbm"] = watts_to_dbm(cfg.noise_bob_w);
  doc["epsilon"] = cfg.epsilon;
  doc["bob"] = {{"r_m", cfg.bob.range_m}, {"theta_deg", cfg.bob.angle_deg()}};
  json ws = json::array();
  for (const auto& w : cfg.willies) {
    ws.push_back({{"r_m", w.position.range_m},
                  {"theta_deg", w.position.angle_deg()},
                  {"noise_dbm", watts_to_dbm(w.noise_w)}});
  }
  doc["willies"] = ws;
  doc["path_loss"] = {{"c_db", cfg.loss.c_db},
                      {"ref_m", cfg.loss.ref_distance_m},
                      {"alpha_ab", cfg.loss.alpha_ab},
                      {"alpha_aw", cfg.loss.alpha_aw}};
  if (cfg.uncertainty) {
    json dth = json::array();
    for (double v : cfg.uncertainty->delta_theta_rad) dth.push_back(rad_to_deg(v));
    doc["uncertainty"] = {{"delta_r_m", cfg.uncertainty->delta_r_m},
                          {"delta_theta_deg", dth},
                          {"samples", cfg.uncertainty->samples}};
  }
  return doc.dump(2);
}

namespace {

bool close(double a, double b, double rel) {
  if (a == b) return true;
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

bool close(const PolarCoordinate& a, const PolarCoordinate& b, double rel) {
  return close(a.range_m, b.range_m, rel) && close(a.angle_rad, b.angle_rad, rel);
}

bool close(const std::vector<double>& a, const std::vector<double>& b, double rel) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!close(a[i], b[i], rel)) return false;
  return true;
}

}  // namespace

bool approx_equal(const ScenarioConfig& a, const ScenarioConfig& b, double rel) {
  if (a.num_antennas != b.num_antennas || a.willies.size() != b.willies.size()) return false;
  if (!close(a.carrier_hz, b.carrier_hz, rel) || !close(a.delta_f_hz, b.delta_f_hz, rel) ||
      !close(a.d_min_m, b.d_min_m, rel) || !close(a.d_max_m, b.d_max_m, rel) ||
      !close(a.p_max_w, b.p_max_w, rel) || !close(a.noise_bob_w, b.noise_bob_w, rel) ||
      !close(a.epsilon, b.epsilon, rel) || !close(a.bob, b.bob, rel))
    return false;
  for (std::size_t k = 0; k < a.willies.size(); ++k) {
    if (!close(a.willies[k].position, b.willies[k].position, rel) ||
        !close(a.willies[k].noise_w, b.willies[k].noise_w, rel))
      return false;
  }
  if (!close(a.loss.c_db, b.loss.c_db, rel) || !close(a.loss.ref_distance_m, b.loss.ref_distance_m, rel) ||
      !close(a.loss.alpha_ab, b.loss.alpha_ab, rel) || !close(a.loss.alpha_aw, b.loss.alpha_aw, rel))
    return false;
  if (a.uncertainty.has_value() != b.uncertainty.has_value()) return false;
  if (a.uncertainty) {
    const auto& ua = *a.uncertainty;
    const auto& ub = *b.uncertainty;
    if (ua.samples != ub.samples || !close(ua.delta_r_m, ub.delta_r_m, rel) ||
        !close(ua.delta_theta_rad, ub.delta_theta_rad, rel))
      return false;
  }
  return true;
}

namespace {

ScenarioConfig base_scenario(int num_antennas) {
  ScenarioConfig cfg;
  cfg.num_antennas = num_antennas;
  cfg.carrier_hz = 10e9;
  cfg.delta_f_hz = 10e6;
  cfg.d_min_m = 0.5 * cfg.wavelength();
  cfg.d_max_m = 30.0 * cfg.wavelength();
  cfg.p_max_w = dbm_to_watts(10.0);
  cfg.noise_bob_w = dbm_to_watts(-100.0);
  cfg.epsilon = 0.1;
  cfg.bob = PolarCoordinate::from_degrees(1000.0, 30.0);
  return cfg;
}

void add_wardens(ScenarioConfig& cfg, std::initializer_list<std::pair<double, double>> coords) {
  for (auto [r, deg] : coords) cfg.willies.push_back({PolarCoordinate::from_degrees(r, deg), dbm_to_watts(-100.0)});
}

}  // namespace

ScenarioConfig low_correlation_scenario(int num_antennas) {
  auto cfg = base_scenario(num_antennas);
  add_wardens(cfg, {{1050.0, 10.0}, {950.0, 20.0}, {1100.0, 40.0}, {900.0, 50.0}});
  cfg.validate();
  return cfg;
}

ScenarioConfig high_correlation_scenario(int num_antennas) {
  auto cfg = base_scenario(num_antennas);
  add_wardens(cfg, {{1010.0, 26.0}, {990.0, 28.0}, {1020.0, 32.0}, {980.0, 34.0}});
  cfg.validate();
  return cfg;
}

ScenarioConfig imperfect_csi_scenario(int num_antennas, int samples, double spacing_r_m, double spacing_theta_deg) {
  auto cfg = base_scenario(num_antennas);
  add_wardens(cfg, {{1100.0, 10.0}, {850.0, 20.0}, {1150.0, 40.0}});
  Uncertainty u;
  u.samples = samples;
  const double half = 0.5 * (samples - 1);
  u.delta_r_m.assign(cfg.willies.size(), half * spacing_r_m);
  u.delta_theta_rad.assign(cfg.willies.size(), deg_to_rad(half * spacing_theta_deg));
  cfg.uncertainty = u;
  cfg.validate();
  return cfg;
}

}  // namespace mfda
