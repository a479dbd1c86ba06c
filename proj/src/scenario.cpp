#include "distpert/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace distpert {

using nlohmann::json;

namespace {

ScalarField field(const Expression& e) {
  return [e](std::span<const double> x) { return e(x); };
}

[[noreturn]] void bad(const std::string& path, const std::string& why) {
  throw std::invalid_argument("scenario: " + path + ": " + why);
}

Expression expr_at(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) bad(path + "." + key, "missing");
  const auto& v = j.at(key);
  if (v.is_number()) return Expression::constant(v.get<double>());
  if (!v.is_string()) bad(path + "." + key, "expected an expression string");
  try {
    return Expression::parse(v.get<std::string>());
  } catch (const std::exception& e) {
    bad(path + "." + key, e.what());
  }
}

std::vector<Expression> expr_list(const json& j, const std::string& key, const std::string& path, std::size_t want) {
  if (!j.contains(key)) bad(path + "." + key, "missing");
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.size() != want) bad(path + "." + key, "expected " + std::to_string(want) + " entries");
  std::vector<Expression> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    json wrap = {{"e", arr[i]}};
    out.push_back(expr_at(wrap, "e", path + "." + key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json expr_json(const Expression& e) { return e.text(); }

}  // namespace

Perturbation WellSpec::build(int n) const {
  Perturbation p = [&] {
    if (kind == "delta") return Perturbation::delta_point(strength);
    if (kind == "potential") return Perturbation::potential(n, support_radius, field(v));
    if (kind == "divergence") {
      std::vector<ScalarField> gf, df;
      for (const auto& e : g) gf.push_back(field(e));
      for (const auto& e : drift) df.push_back(field(e));
      return Perturbation::divergence_form(n, support_radius, std::move(gf), std::move(df), field(b0));
    }
    if (kind == "kernel") {
      const Expression k = kernel;
      return Perturbation::integral_kernel(n, support_radius,
                                           [k](std::span<const double> x, std::span<const double> y) { return k(x, y); });
    }
    throw std::invalid_argument("unknown well kind '" + kind + "'");
  }();
  if (!label.empty()) p.with_label(label);
  return p;
}

std::vector<WellPlacement> Scenario::placements() const {
  std::vector<WellPlacement> out;
  for (const auto& w : wells) out.push_back({w.build(n), w.center});
  return out;
}

double Scenario::max_support_radius() const {
  double r = 0.0;
  for (const auto& w : wells) r = std::max(r, w.kind == "delta" ? 0.0 : w.support_radius);
  return r;
}

Scenario parse_scenario(const json& j) {
  if (!j.is_object()) bad("$", "expected an object");
  if (j.value("schema", std::string()) != kScenarioSchema)
    bad("schema", std::string("expected \"") + kScenarioSchema + "\"");
  Scenario s;
  s.name = j.value("name", std::string("unnamed"));
  s.n = j.value("n", 1);
  if (s.n < 1 || s.n > 3) bad("n", "must be 1, 2 or 3");
  s.eigen = default_eigen_options(s.n);

  if (!j.contains("wells") || !j.at("wells").is_array() || j.at("wells").empty()) bad("wells", "need at least one well");
  const auto& ws = j.at("wells");
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const std::string path = "wells[" + std::to_string(i) + "]";
    const auto& wj = ws[i];
    WellSpec w;
    w.kind = wj.value("kind", std::string());
    w.label = wj.value("label", std::string());
    if (!wj.contains("center") || !wj.at("center").is_array()) bad(path + ".center", "missing");
    w.center = wj.at("center").get<std::vector<double>>();
    if (w.center.size() != static_cast<std::size_t>(s.n)) bad(path + ".center", "needs n coordinates");
    if (w.kind == "delta") {
      if (s.n != 1) bad(path, "delta wells exist only for n = 1");
      w.strength = wj.at("strength").get<double>();
    } else if (w.kind == "potential" || w.kind == "divergence" || w.kind == "kernel") {
      w.support_radius = wj.value("support_radius", 0.0);
      if (!(w.support_radius > 0.0)) bad(path + ".support_radius", "must be positive");
      if (w.kind == "potential") w.v = expr_at(wj, "V", path);
      if (w.kind == "divergence") {
        const auto nn = static_cast<std::size_t>(s.n);
        w.g = expr_list(wj, "G", path, nn * nn);
        w.drift = wj.contains("drift") ? expr_list(wj, "drift", path, nn) : std::vector<Expression>(nn);
        w.b0 = wj.contains("b0") ? expr_at(wj, "b0", path) : Expression();
      }
      if (w.kind == "kernel") w.kernel = expr_at(wj, "L", path);
    } else {
      bad(path + ".kind", "unknown kind '" + w.kind + "'");
    }
    s.wells.push_back(std::move(w));
  }

  const json grid = j.value("grid", json::object());
  s.h = grid.value("h", s.h);
  s.margin = grid.value("margin", s.margin);
  s.single_well_half_width = grid.value("single_well_half_width", 0.0);
  if (!(s.h > 0.0)) bad("grid.h", "must be positive");
  if (!(s.margin > 0.0)) bad("grid.margin", "must be positive");

  const json solver = j.value("solver", json::object());
  s.eigen.tol = solver.value("tol", s.eigen.tol);
  s.eigen.essential_tol = solver.value("essential_tol", s.eigen.essential_tol);
  s.eigen.max_restarts = solver.value("max_restarts", s.eigen.max_restarts);
  s.resolvent_tol = solver.value("resolvent_tol", s.resolvent_tol);
  s.cluster_tol = solver.value("cluster_tol", s.cluster_tol);
  s.states_per_well = solver.value("states_per_well", s.states_per_well);
  if (!(s.cluster_tol > 2.0 * s.eigen.tol)) bad("solver.cluster_tol", "must exceed twice the eigen tolerance");

  const json sweep = j.value("sweep", json::object());
  s.sweep_scales = sweep.value("scales", std::vector<double>{});
  s.onset = sweep.value("onset", s.onset);
  s.noise_floor = sweep.value("noise_floor", 0.0);

  s.prediction_route = j.value("prediction_route", s.prediction_route);
  if (s.prediction_route != "grid" && s.prediction_route != "closed_form")
    bad("prediction_route", "must be \"grid\" or \"closed_form\"");
  if (s.prediction_route == "closed_form")
    for (const auto& w : s.wells)
      if (w.kind != "delta") bad("prediction_route", "closed_form needs delta wells only");
  s.validation_trials = j.value("validation_trials", s.validation_trials);
  s.seed = j.value("seed", s.seed);
  s.eigen.seed = s.seed;

  // fail early on overlapping supports at the base geometry
  for (std::size_t a = 0; a < s.wells.size(); ++a)
    for (std::size_t b = a + 1; b < s.wells.size(); ++b) {
      double d2 = 0.0;
      for (int d = 0; d < s.n; ++d) {
        const double diff = s.wells[a].center[static_cast<std::size_t>(d)] - s.wells[b].center[static_cast<std::size_t>(d)];
        d2 += diff * diff;
      }
      if (d2 == 0.0) bad("wells", "two wells share a center");
    }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("scenario: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("scenario: " + path + ": " + e.what());
  }
  return parse_scenario(j);
}

json to_json(const Scenario& s) {
  json wells = json::array();
  for (const auto& w : s.wells) {
    json wj = {{"kind", w.kind}, {"center", w.center}};
    if (!w.label.empty()) wj["label"] = w.label;
    if (w.kind == "delta") wj["strength"] = w.strength;
    else wj["support_radius"] = w.support_radius;
    if (w.kind == "potential") wj["V"] = expr_json(w.v);
    if (w.kind == "divergence") {
      json g = json::array(), d = json::array();
      for (const auto& e : w.g) g.push_back(expr_json(e));
      for (const auto& e : w.drift) d.push_back(expr_json(e));
      wj["G"] = g;
      wj["drift"] = d;
      wj["b0"] = expr_json(w.b0);
    }
    if (w.kind == "kernel") wj["L"] = expr_json(w.kernel);
    wells.push_back(wj);
  }
  return {{"schema", kScenarioSchema},
          {"name", s.name},
          {"n", s.n},
          {"wells", wells},
          {"grid", {{"h", s.h}, {"margin", s.margin}, {"single_well_half_width", s.single_well_half_width}}},
          {"solver",
           {{"tol", s.eigen.tol},
            {"essential_tol", s.eigen.essential_tol},
            {"max_restarts", s.eigen.max_restarts},
            {"resolvent_tol", s.resolvent_tol},
            {"cluster_tol", s.cluster_tol},
            {"states_per_well", s.states_per_well}}},
          {"sweep", {{"scales", s.sweep_scales}, {"onset", s.onset}, {"noise_floor", s.noise_floor}}},
          {"prediction_route", s.prediction_route},
          {"validation_trials", s.validation_trials},
          {"seed", s.seed}};
}

Scenario scaled(const Scenario& s, double scale) {
  Scenario out = s;
  for (auto& w : out.wells)
    for (auto& c : w.center) c *= scale;
  return out;
}

}  // namespace distpert
