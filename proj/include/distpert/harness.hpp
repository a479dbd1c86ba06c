#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "distpert/asympt.hpp"
#include "distpert/scenario.hpp"
#include "distpert/singlewell.hpp"

namespace distpert {

inline constexpr const char* kCodeVersion = "distpert 1.0.0";

struct ValidationEntry {
  int well = 0;
  std::string kind;
  HypothesisReport report;
};

struct ClusterResult {
  Cluster cluster;
  CouplingMatrix coupling;
  Prediction prediction;
  std::optional<std::pair<double, double>> splitting;
  std::optional<double> second_order_shift;
  std::string second_order_note;  // why it is absent, when it is

  // Filled by the direct stage. Predictions are compared in ascending order.
  std::vector<double> predicted_sorted;
  std::vector<double> direct;
  std::vector<double> deviation;
  std::optional<double> second_order_deviation;
  std::vector<double> recon_l2_err;
  Eigen::MatrixXd recon_gram;
  Eigen::MatrixXd kappa_gram;
};

struct RunStages {
  bool limiting = true;
  bool predict = true;
  bool direct = true;
  bool reconstruct = true;
};

struct RunResult {
  Scenario scenario;
  double l_x = 0.0;
  std::vector<ValidationEntry> validation;
  bool validation_failed = false;

  Grid single_grid;
  LimitingSpectrum limiting;
  std::vector<std::vector<TailFit>> tails;

  std::vector<ClusterResult> clusters;

  Grid direct_grid;
  bool direct_done = false;
  std::vector<EigenPair> direct_pairs;
  long direct_negative_count = 0;
  std::vector<int> assignment;  // cluster per direct eigenvalue, -1 unmatched
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

// The multi-well pipeline. Validation failures set validation_failed and a
// warning; ClusteringAmbiguity and SolverError propagate.
RunResult run_scenario(const Scenario& s, const RunStages& stages = {});

// Half-widths used for the single-well and multi-well boxes.
double single_well_half_width(const Scenario& s);
double direct_half_width(const Scenario& s);

struct SweepRow {
  double scale = 0.0;
  double l_x = 0.0;
  int cluster = -1;
  int index = -1;
  double lambda_direct = 0.0;
  double lambda_pred = 0.0;
  double deviation = 0.0;
  double recon_l2_err = 0.0;
  double coupling_norm = 0.0;
  double deviation_second = -1.0;  // < 0 when there is no second-order prediction
  bool valid = true;
  std::string error;
};

struct SweepRecord {
  std::vector<SweepRow> rows;  // sorted by l_X, then cluster, then index
  double noise_floor = 0.0;
  double kappa_star = 0.0;     // of the lowest cluster
  std::vector<nlohmann::json> runs;

  nlohmann::json to_json() const;
  std::string csv() const;
  std::string plot_csv() const;  // l_X, cluster, index, log10 deviation
};

// Runs the scenario at every scale (centers multiplied, box regrown). Rows
// fail independently. Up to `workers` scales run concurrently.
SweepRecord sweep_separation(const Scenario& s, const std::vector<double>& scales, int workers = 1);

// Change of the lowest single-well eigenvalue of well 0 when h halves.
double estimate_noise_floor(const Scenario& s);

struct RateFit {
  double c = 0.0;
  double alpha = 0.0;  // power of l
  double beta = 0.0;   // exponential rate
  double alpha_half_width = 0.0;  // 95% two-sided
  double beta_half_width = 0.0;
  double residual = 0.0;          // rms in log space
  int rows = 0;
};

class RateFitRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// log err = c + alpha log l - beta l by least squares. Rows at or below
// 10 x noise_floor are dropped; fewer than 4 remaining rows is a refusal.
RateFit fit_decay_rate(const std::vector<double>& l, const std::vector<double>& err, double noise_floor);

// Column in {deviation, deviation_second, recon_l2_err, coupling_norm}.
RateFit fit_decay_rate(const SweepRecord& rec, const std::string& column, int cluster = 0, int index = 0);

nlohmann::json to_json(const RateFit& f);

}  // namespace distpert
