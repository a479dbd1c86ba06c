#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "distpert/eigensolver.hpp"
#include "distpert/expression.hpp"
#include "distpert/grid.hpp"
#include "distpert/perturbation.hpp"

namespace distpert {

inline constexpr const char* kScenarioSchema = "distpert.scenario/1";

// One localized perturbation and its center. Fields unused by `kind` stay
// empty. Kinds: delta, potential, divergence, kernel.
struct WellSpec {
  std::string kind;
  std::vector<double> center;
  double strength = 0.0;      // delta
  double support_radius = 0.0;
  Expression v;               // potential
  std::vector<Expression> g;  // divergence, n*n row-major
  std::vector<Expression> drift;
  Expression b0;
  Expression kernel;          // kernel, uses x.. and xp..
  std::string label;

  Perturbation build(int n) const;
};

struct Scenario {
  std::string name;
  int n = 1;
  std::vector<WellSpec> wells;

  double h = 0.01;
  double margin = 12.0;                 // box margin beyond the outermost support
  double single_well_half_width = 0.0;  // 0: max separation + support + margin

  EigenOptions eigen;
  double resolvent_tol = 1e-9;
  double cluster_tol = 1e-6;
  int states_per_well = 4;

  std::vector<double> sweep_scales;
  double onset = 4.0;        // asymptotic regime starts at l_X kappa* >= onset
  double noise_floor = 0.0;  // 0: estimate from one single-well refinement

  std::string prediction_route = "grid";  // or "closed_form" (1D delta wells only)
  int validation_trials = 32;
  std::uint64_t seed = 20240601;

  std::vector<WellPlacement> placements() const;
  double max_support_radius() const;
};

// Throws std::invalid_argument with a field path on malformed input.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);
nlohmann::json to_json(const Scenario& s);

// Copy with every center multiplied by `scale`.
Scenario scaled(const Scenario& s, double scale);

}  // namespace distpert
