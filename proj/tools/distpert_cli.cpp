// distpert: multi-well spectra, direct and asymptotic.
//
//   distpert run --scenario pair.json --out results/
//   distpert sweep --scenario pair.json --out results/ --workers 2
//   distpert fit-rate --out results/ --column deviation

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "distpert/harness.hpp"

namespace fs = std::filesystem;
using distpert::RunStages;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kError = 1, kValidation = 2, kAmbiguous = 3, kSolver = 4 };

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void print_run(const distpert::RunResult& r) {
  std::printf("l_X = %.6g, %zu cluster(s)\n", r.l_x, r.clusters.size());
  for (std::size_t c = 0; c < r.clusters.size(); ++c) {
    const auto& cr = r.clusters[c];
    std::printf("  lambda* = %.12g  p = %d\n", cr.cluster.lambda_star, cr.cluster.p);
    for (std::size_t i = 0; i < cr.predicted_sorted.size(); ++i) {
      std::printf("    pred %.12g", cr.predicted_sorted[i]);
      if (i < cr.direct.size()) std::printf("  direct %.12g  dev %.3e", cr.direct[i], cr.deviation[i]);
      std::printf("\n");
    }
    if (cr.second_order_shift) std::printf("    second-order shift %.6e\n", *cr.second_order_shift);
  }
  if (r.direct_done && r.clusters.empty())
    for (const auto& p : r.direct_pairs) std::printf("  direct %.12g  residual %.2e\n", p.lambda, p.residual);
  for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectra of -Laplacian plus distant localized perturbations"};
  app.require_subcommand(1);
  std::string scenario_path, out_dir = "distpert_out";
  int workers = 1;
  std::uint64_t seed = 0;
  app.add_option("--scenario", scenario_path, "scenario JSON file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "concurrent sweep rows")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "override the scenario seed");

  auto* validate = app.add_subcommand("validate", "hypothesis checks per well");
  auto* limiting = app.add_subcommand("limiting", "single-well spectra and clusters");
  auto* predict = app.add_subcommand("predict", "coupling matrices and predictions");
  auto* direct = app.add_subcommand("direct", "multi-well eigenvalues");
  auto* run = app.add_subcommand("run", "full pipeline");
  auto* sweep = app.add_subcommand("sweep", "separation sweep");
  std::vector<double> scales;
  sweep->add_option("--scales", scales, "scale factors (default: from the scenario)");
  auto* fit = app.add_subcommand("fit-rate", "fit log err = c + alpha log l - beta l");
  std::string column = "deviation", sweep_json;
  int cluster = 0, index = 0;
  fit->add_option("--column", column, "deviation | deviation_second | recon_l2_err | coupling_norm");
  fit->add_option("--cluster", cluster);
  fit->add_option("--index", index);
  fit->add_option("--input", sweep_json, "sweep JSON (default <out>/sweep.json)");

  for (auto* sc : {validate, limiting, predict, direct, run, sweep, fit}) sc->fallthrough();
  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path out(out_dir);
    if (fit->parsed()) {
      const fs::path in = sweep_json.empty() ? out / "sweep.json" : fs::path(sweep_json);
      std::ifstream f(in);
      if (!f) throw std::invalid_argument("cannot open " + in.string());
      const json j = json::parse(f);
      distpert::SweepRecord rec;
      rec.noise_floor = j.at("noise_floor").get<double>();
      for (const auto& r : j.at("rows")) {
        distpert::SweepRow row;
        row.l_x = r.at("l_x").is_number() ? r.at("l_x").get<double>() : 0.0;
        row.cluster = r.at("cluster").get<int>();
        row.index = r.at("index").get<int>();
        row.valid = r.at("valid").get<bool>();
        auto num = [&](const char* key) { return r.contains(key) && r.at(key).is_number() ? r.at(key).get<double>() : -1.0; };
        row.deviation = num("deviation");
        row.deviation_second = num("deviation_second");
        row.recon_l2_err = num("recon_l2_err");
        row.coupling_norm = num("coupling_norm");
        rec.rows.push_back(row);
      }
      const auto rf = distpert::fit_decay_rate(rec, column, cluster, index);
      std::printf("alpha = %.6g +- %.3g, beta = %.6g +- %.3g (%d rows, residual %.3g)\n", rf.alpha, rf.alpha_half_width,
                  rf.beta, rf.beta_half_width, rf.rows, rf.residual);
      auto fj = distpert::to_json(rf);
      fj["provenance"] = {{"code_version", distpert::kCodeVersion}, {"input", in.string()}, {"column", column},
                          {"cluster", cluster}, {"index", index}, {"noise_floor", rec.noise_floor}};
      write_file(out / "rate_fit.json", fj.dump(2) + "\n");
      return kOk;
    }

    if (scenario_path.empty()) throw std::invalid_argument("--scenario is required");
    auto s = distpert::load_scenario(scenario_path);
    if (seed_opt->count() > 0) {
      s.seed = seed;
      s.eigen.seed = seed;
    }

    if (sweep->parsed()) {
      const auto rec = distpert::sweep_separation(s, scales.empty() ? s.sweep_scales : scales, workers);
      write_file(out / "sweep.json", rec.to_json().dump(2) + "\n");
      write_file(out / "sweep.csv", rec.csv());
      write_file(out / "sweep_plot.csv", rec.plot_csv());
      std::fputs(rec.csv().c_str(), stdout);
      return kOk;
    }

    RunStages stages;
    std::string name = "run";
    if (validate->parsed()) {
      stages = {false, false, false, false};
      name = "validate";
    } else if (limiting->parsed()) {
      stages = {true, false, false, false};
      name = "limiting";
    } else if (predict->parsed()) {
      stages = {true, true, false, false};
      name = "predict";
    } else if (direct->parsed()) {
      stages = {false, false, true, false};
      name = "direct";
    }
    const auto r = distpert::run_scenario(s, stages);
    write_file(out / (name + ".json"), r.to_json().dump(2) + "\n");
    if (name == "validate") {
      for (const auto& v : r.validation)
        std::printf("well %d (%s): %s  c0 = %.4g  c1 = %.4g  symmetry defect = %.3g\n", v.well, v.kind.c_str(),
                    v.report.bypassed ? "bypassed" : (v.report.passes ? "pass" : "FAIL"), v.report.c0_estimate,
                    v.report.c1_estimate, v.report.symmetry_defect);
    } else if (name == "limiting") {
      for (const auto& c : r.limiting.clusters) std::printf("lambda* = %.12g  p = %d\n", c.lambda_star, c.p);
    } else {
      print_run(r);
    }
    return r.validation_failed ? kValidation : kOk;
  } catch (const distpert::ClusteringAmbiguity& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kAmbiguous;
  } catch (const distpert::SolverError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSolver;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
}
