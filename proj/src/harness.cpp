#include "distpert/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "distpert/point_interaction.hpp"

namespace distpert {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double snap_up(double half_width, double h) { return std::ceil(half_width / h - 1e-9) * h; }

std::string well_key(const WellSpec& w) {
  std::ostringstream k;
  k.precision(17);
  k << w.kind << '|' << w.strength << '|' << w.support_radius << '|' << w.v.text() << '|' << w.b0.text() << '|'
    << w.kernel.text();
  for (const auto& e : w.g) k << '|' << e.text();
  for (const auto& e : w.drift) k << '|' << e.text();
  return k.str();
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

json grid_json(const Grid& g) {
  return {{"n", g.dim}, {"half_width", g.half_width}, {"h", g.h}, {"nodes_per_axis", g.nodes_per_axis}, {"warnings", g.warnings}};
}

double l2_distance_signless(const GridFunction& a, const GridFunction& b, const Grid& g) {
  double plus = 0.0, minus = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    plus += (a[i] - b[i]) * (a[i] - b[i]);
    minus += (a[i] + b[i]) * (a[i] + b[i]);
  }
  return std::sqrt(std::min(plus, minus) * g.weight());
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void solve_direct(RunResult& res, const std::vector<WellPlacement>& wells, double required_margin, int k) {
  const auto& s = res.scenario;
  res.direct_grid = build_grid(s.n, direct_half_width(s), s.h);
  const auto h = assemble_hamiltonian(res.direct_grid, wells, required_margin);
  for (const auto& w : h.warnings()) res.warnings.push_back("direct grid: " + w);
  auto spectrum = lowest_eigenpairs(h, k, s.eigen);
  res.direct_done = true;
  res.direct_negative_count = spectrum.negative_count;
  res.direct_pairs = std::move(spectrum.pairs);
  res.assignment.assign(res.direct_pairs.size(), -1);
}

}  // namespace

double single_well_half_width(const Scenario& s) {
  if (s.single_well_half_width > 0.0) return snap_up(s.single_well_half_width, s.h);
  double far = 0.0;
  for (std::size_t a = 0; a < s.wells.size(); ++a)
    for (std::size_t b = a + 1; b < s.wells.size(); ++b) {
      double d2 = 0.0;
      for (int d = 0; d < s.n; ++d) {
        const double x = s.wells[a].center[static_cast<std::size_t>(d)] - s.wells[b].center[static_cast<std::size_t>(d)];
        d2 += x * x;
      }
      far = std::max(far, std::sqrt(d2));
    }
  return snap_up(far + s.max_support_radius() + s.margin, s.h);
}

double direct_half_width(const Scenario& s) {
  double reach = 0.0;
  for (const auto& w : s.wells)
    for (double c : w.center) reach = std::max(reach, std::abs(c));
  return snap_up(reach + s.max_support_radius() + s.margin, s.h);
}

RunResult run_scenario(const Scenario& s, const RunStages& stages) {
  RunResult res;
  res.scenario = s;
  const auto wells = s.placements();
  const std::size_t m = wells.size();
  res.l_x = m > 1 ? separation(wells) : 0.0;
  res.single_grid = build_grid(s.n, single_well_half_width(s), s.h);
  for (const auto& w : res.single_grid.warnings) res.warnings.push_back("single-well grid: " + w);

  for (std::size_t i = 0; i < m; ++i) {
    ValidationEntry e;
    e.well = static_cast<int>(i);
    e.kind = s.wells[i].kind;
    e.report = estimate_form_bound(wells[i].perturbation, res.single_grid, std::max(16, s.validation_trials),
                                   s.seed + 7919 * i);
    if (!e.report.bypassed && (!e.report.passes || e.report.symmetry_defect > 1e-8)) {
      res.validation_failed = true;
      std::ostringstream msg;
      msg << "well " << i << " fails hypothesis validation: c0 ~ " << e.report.c0_estimate << ", symmetry defect "
          << e.report.symmetry_defect;
      res.warnings.push_back(msg.str());
    }
    res.validation.push_back(e);
  }
  if (!stages.limiting) {
    if (stages.direct) solve_direct(res, wells, 0.0, std::max(1, s.states_per_well * static_cast<int>(m)));
    return res;
  }

  // limiting spectra, solved once per distinct well
  std::vector<std::vector<EigenPair>> per_well(m);
  std::vector<double> strengths, positions;
  const bool closed = s.prediction_route == "closed_form";
  if (closed) {
    for (const auto& w : s.wells) {
      strengths.push_back(w.strength);
      positions.push_back(w.center[0]);
    }
    auto exact = point::limiting_spectrum(strengths, s.cluster_tol);
    for (std::size_t i = 0; i < m; ++i) {
      per_well[i] = exact.wells[i];
      for (auto& pair : per_well[i]) {
        pair.psi.resize(res.single_grid.size());
        for (std::size_t k = 0; k < pair.psi.size(); ++k)
          pair.psi[k] = point::bound_state(strengths[i], res.single_grid.position(k)[0]);
      }
    }
  } else {
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < m; ++i) {
      const auto key = well_key(s.wells[i]);
      if (auto it = seen.find(key); it != seen.end()) {
        per_well[i] = per_well[it->second];
        continue;
      }
      seen[key] = i;
      per_well[i] = solve_limiting(wells[i].perturbation, res.single_grid, s.states_per_well, s.eigen);
    }
  }
  res.tails.resize(m);
  double kappa_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    for (auto& pair : per_well[i]) {
      kappa_min = std::min(kappa_min, pair.kappa);
      const double radius = wells[i].perturbation.support_radius();
      try {
        const auto [r1, r2] = default_tail_window(pair, res.single_grid, radius);
        const auto fit = fit_tail_coefficient(pair, res.single_grid, r1, r2, radius);
        if (!closed) pair.tail_coefficient = fit.coefficient;
        res.tails[i].push_back(fit);
      } catch (const std::invalid_argument& e) {
        res.tails[i].push_back(TailFit{});
        res.warnings.push_back("well " + std::to_string(i) + ": tail fit skipped: " + e.what());
      }
    }
  }
  if (std::isfinite(kappa_min) && s.margin < 5.0 / kappa_min) {
    std::ostringstream msg;
    msg << "margin " << s.margin << " is below 5/kappa_min = " << 5.0 / kappa_min;
    res.warnings.push_back(msg.str());
  }
  res.limiting = cluster_multiplicities(std::move(per_well), s.cluster_tol);
  if (!stages.predict) return res;

  for (std::size_t c = 0; c < res.limiting.clusters.size(); ++c) {
    ClusterResult cr;
    cr.cluster = res.limiting.clusters[c];
    const int ci = static_cast<int>(c);
    cr.coupling = closed ? point::coupling_matrix(res.limiting, ci, strengths, positions)
                         : coupling_matrix(res.limiting, ci, wells, res.single_grid);
    if (cr.coupling.tail_extended)
      res.warnings.push_back("cluster " + std::to_string(c) + ": coupling used tail-law samples outside the single-well box");
    cr.prediction = leading_predictions(cr.coupling, res.l_x, s.n);
    if (cr.cluster.p == 2 && cr.coupling.index_map[0].first != cr.coupling.index_map[1].first)
      cr.splitting = two_well_splitting(cr.coupling);
    if (m >= 2 && cr.cluster.p == 1) {
      const auto lone = static_cast<std::size_t>(cr.cluster.members[0].well);
      const auto& pair = res.limiting.wells[lone][static_cast<std::size_t>(cr.cluster.members[0].state)];
      std::vector<std::size_t> order{lone};
      for (std::size_t i = 0; i < m; ++i)
        if (i != lone) order.push_back(i);
      try {
        if (closed) {
          std::vector<double> b, x;
          for (auto i : order) {
            b.push_back(strengths[i]);
            x.push_back(positions[i]);
          }
          if (cr.cluster.members[0].state != 0) throw std::invalid_argument("closed form knows only the ground state");
          cr.second_order_shift = point::second_order_shift(cr.cluster.lambda_star, b, x);
        } else {
          std::vector<WellPlacement> reordered;
          for (auto i : order) reordered.push_back(wells[i]);
          cr.second_order_shift =
              second_order_shift(cr.cluster.lambda_star, reordered, pair, res.single_grid, s.resolvent_tol);
        }
      } catch (const std::exception& e) {
        cr.second_order_note = e.what();
      }
    } else {
      cr.second_order_note = m < 2 ? "single well" : "level is not simple";
    }
    cr.predicted_sorted = cr.prediction.lambdas;
    std::sort(cr.predicted_sorted.begin(), cr.predicted_sorted.end());
    res.clusters.push_back(std::move(cr));
  }
  if (!stages.direct) return res;

  int total = 0;
  for (const auto& c : res.limiting.clusters) total += c.p;
  solve_direct(res, wells, std::isfinite(kappa_min) ? 5.0 / kappa_min : 0.0, total + 2);

  // nearest lambda* within half the gap to the next level (0 included)
  const auto& cls = res.limiting.clusters;
  std::vector<double> radius(cls.size());
  for (std::size_t c = 0; c < cls.size(); ++c) {
    double gap = std::abs(cls[c].lambda_star);
    for (std::size_t d = 0; d < cls.size(); ++d)
      if (d != c) gap = std::min(gap, std::abs(cls[c].lambda_star - cls[d].lambda_star));
    radius[c] = 0.5 * gap;
  }
  for (std::size_t i = 0; i < res.direct_pairs.size(); ++i) {
    const double lam = res.direct_pairs[i].lambda;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cls.size(); ++c) {
      const double d = std::abs(lam - cls[c].lambda_star);
      if (d < radius[c] && d < best) {
        best = d;
        res.assignment[i] = static_cast<int>(c);
      }
    }
    if (res.assignment[i] < 0) {
      std::ostringstream msg;
      msg << "direct eigenvalue " << lam << " is not near any limiting level";
      res.warnings.push_back(msg.str());
    }
  }

  for (std::size_t c = 0; c < res.clusters.size(); ++c) {
    auto& cr = res.clusters[c];
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < res.direct_pairs.size(); ++i)
      if (res.assignment[i] == static_cast<int>(c)) idx.push_back(i);
    for (auto i : idx) cr.direct.push_back(res.direct_pairs[i].lambda);
    if (static_cast<int>(idx.size()) != cr.cluster.p) {
      std::ostringstream msg;
      msg << "cluster " << c << " (lambda* = " << cr.cluster.lambda_star << ") has " << idx.size()
          << " direct eigenvalues, expected p = " << cr.cluster.p;
      res.warnings.push_back(msg.str());
    }
    const std::size_t shared = std::min(idx.size(), cr.predicted_sorted.size());
    for (std::size_t i = 0; i < shared; ++i) cr.deviation.push_back(std::abs(cr.direct[i] - cr.predicted_sorted[i]));
    if (cr.second_order_shift && !cr.direct.empty())
      cr.second_order_deviation = std::abs(cr.direct[0] - (cr.cluster.lambda_star + *cr.second_order_shift));

    if (stages.reconstruct && idx.size() == static_cast<std::size_t>(cr.cluster.p) && cr.cluster.p > 0) {
      const auto rec = reconstruct_eigenfunctions(cr.prediction, res.limiting, static_cast<int>(c), wells,
                                                  res.single_grid, res.direct_grid);
      std::vector<std::size_t> by_value(static_cast<std::size_t>(cr.cluster.p));
      std::iota(by_value.begin(), by_value.end(), 0);
      std::stable_sort(by_value.begin(), by_value.end(),
                       [&](std::size_t a, std::size_t b) { return cr.prediction.lambdas[a] < cr.prediction.lambdas[b]; });
      for (std::size_t i = 0; i < by_value.size(); ++i) {
        GridFunction f = rec.functions[by_value[i]];
        const double nrm = res.direct_grid.norm(f);
        if (nrm > 0.0)
          for (auto& x : f) x /= nrm;
        cr.recon_l2_err.push_back(l2_distance_signless(f, res.direct_pairs[idx[i]].psi, res.direct_grid));
      }
      cr.recon_gram = rec.gram;
      cr.kappa_gram = rec.kappa_gram;
    }
  }
  return res;
}

json RunResult::to_json() const {
  json j;
  j["scenario"] = distpert::to_json(scenario);
  j["provenance"] = {
      {"code_version", kCodeVersion},
      {"seed", scenario.seed},
      {"tolerances",
       {{"eigen_residual", scenario.eigen.tol},
        {"essential", scenario.eigen.essential_tol},
        {"resolvent", scenario.resolvent_tol},
        {"cluster", scenario.cluster_tol}}},
      {"single_grid", grid_json(single_grid)},
      {"truncation_rationale",
       "Dirichlet box: bound states decay like exp(-kappa |x|), so a margin of several 1/kappa beyond the outermost "
       "support keeps truncation error below the separation-dependent remainders"}};
  if (direct_done) j["provenance"]["direct_grid"] = grid_json(direct_grid);
  j["l_x"] = l_x;
  j["validation_failed"] = validation_failed;
  json val = json::array();
  for (const auto& v : validation)
    val.push_back({{"well", v.well},
                   {"kind", v.kind},
                   {"bypassed", v.report.bypassed},
                   {"symmetry_defect", v.report.symmetry_defect},
                   {"c0_estimate", v.report.c0_estimate},
                   {"c1_estimate", v.report.c1_estimate},
                   {"passes", v.report.passes},
                   {"trials", v.report.trials}});
  j["validation"] = val;

  json lim = json::array();
  for (std::size_t w = 0; w < limiting.wells.size(); ++w) {
    json states = json::array();
    for (std::size_t q = 0; q < limiting.wells[w].size(); ++q) {
      const auto& p = limiting.wells[w][q];
      json st = {{"lambda", p.lambda}, {"kappa", p.kappa}, {"residual", p.residual}, {"parity", p.parity},
                 {"tail_coefficient", p.tail_coefficient}};
      if (w < tails.size() && q < tails[w].size()) {
        const auto& t = tails[w][q];
        st["tail_fit"] = {{"coefficient", t.coefficient}, {"power_deviation", t.power_deviation},
                          {"rate", t.rate}, {"residual", t.residual}, {"window", {t.r1, t.r2}}};
      }
      states.push_back(st);
    }
    lim.push_back(states);
  }
  j["limiting"] = lim;

  json cl = json::array();
  for (const auto& c : clusters) {
    json members = json::array();
    for (const auto& mem : c.cluster.members) members.push_back({{"well", mem.well}, {"state", mem.state}, {"lambda", mem.lambda}});
    json cj = {{"lambda_star", c.cluster.lambda_star},
               {"pattern", c.cluster.pattern},
               {"alpha", c.cluster.alpha},
               {"p", c.cluster.p},
               {"members", members},
               {"coupling",
                {{"entries", matrix_json(c.coupling.entries)},
                 {"symmetry_defect", c.coupling.symmetry_defect},
                 {"tail_extended", c.coupling.tail_extended},
                 {"tail_contribution", c.coupling.tail_contribution}}},
               {"tau", c.prediction.tau},
               {"predicted", c.prediction.lambdas},
               {"kappa_vectors", matrix_json(c.prediction.kappa_vectors)},
               {"error_band", c.prediction.error_band},
               {"direct", c.direct},
               {"deviation", c.deviation},
               {"recon_l2_err", c.recon_l2_err}};
    if (c.splitting) cj["splitting"] = {c.splitting->first, c.splitting->second};
    if (c.second_order_shift) {
      cj["second_order_shift"] = *c.second_order_shift;
      cj["second_order_prediction"] = c.cluster.lambda_star + *c.second_order_shift;
    } else {
      cj["second_order_note"] = c.second_order_note;
    }
    if (c.second_order_deviation) cj["second_order_deviation"] = *c.second_order_deviation;
    if (c.recon_gram.size() > 0) {
      cj["recon_gram"] = matrix_json(c.recon_gram);
      cj["kappa_gram"] = matrix_json(c.kappa_gram);
    }
    cl.push_back(cj);
  }
  j["clusters"] = cl;

  if (direct_done) {
    json d = json::array();
    for (std::size_t i = 0; i < direct_pairs.size(); ++i)
      d.push_back({{"lambda", direct_pairs[i].lambda},
                   {"residual", direct_pairs[i].residual},
                   {"parity", direct_pairs[i].parity},
                   {"cluster", assignment.empty() ? -1 : assignment[i]}});
    j["direct"] = {{"eigenpairs", d}, {"negative_count", direct_negative_count}};
  }
  j["warnings"] = warnings;
  return j;
}

double estimate_noise_floor(const Scenario& s) {
  const auto& w = s.wells.at(0);
  const auto p = w.build(s.n);
  const double half = snap_up(s.max_support_radius() + s.margin, s.h);
  const auto coarse = solve_limiting(p, build_grid(s.n, half, s.h), 1, s.eigen);
  const auto fine = solve_limiting(p, build_grid(s.n, half, 0.5 * s.h), 1, s.eigen);
  if (coarse.empty() || fine.empty()) return 0.0;
  return std::abs(coarse[0].lambda - fine[0].lambda);
}

SweepRecord sweep_separation(const Scenario& s, const std::vector<double>& scales, int workers) {
  if (scales.size() < 4) throw std::invalid_argument("sweep_separation: need at least 4 scales");
  for (std::size_t i = 1; i < scales.size(); ++i)
    if (!(scales[i] > scales[i - 1])) throw std::invalid_argument("sweep_separation: scales must increase");
  for (double x : scales)
    if (!(x > 0.0)) throw std::invalid_argument("sweep_separation: scales must be positive");

  SweepRecord rec;
  rec.noise_floor = s.noise_floor > 0.0 ? s.noise_floor : estimate_noise_floor(s);
  const auto count = static_cast<long>(scales.size());
  std::vector<std::vector<SweepRow>> rows(scales.size());
  std::vector<json> runs(scales.size());
  std::vector<double> kappas(scales.size(), 0.0);

#pragma omp parallel for num_threads(std::max(1, workers)) schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const Scenario si = scaled(s, scales[ui]);
    try {
      const auto r = run_scenario(si);
      runs[ui] = r.to_json();
      if (!r.clusters.empty()) kappas[ui] = std::sqrt(-r.clusters[0].cluster.lambda_star);
      for (std::size_t c = 0; c < r.clusters.size(); ++c) {
        const auto& cr = r.clusters[c];
        double norm = 0.0;
        for (double t : cr.prediction.tau) norm = std::max(norm, std::abs(t));
        for (std::size_t k = 0; k < cr.deviation.size(); ++k) {
          SweepRow row;
          row.scale = scales[ui];
          row.l_x = r.l_x;
          row.cluster = static_cast<int>(c);
          row.index = static_cast<int>(k);
          row.lambda_direct = cr.direct[k];
          row.lambda_pred = cr.predicted_sorted[k];
          row.deviation = cr.deviation[k];
          row.recon_l2_err = k < cr.recon_l2_err.size() ? cr.recon_l2_err[k] : kNaN;
          row.coupling_norm = norm;
          if (k == 0 && cr.second_order_deviation) row.deviation_second = *cr.second_order_deviation;
          rows[ui].push_back(row);
        }
      }
      if (rows[ui].empty()) throw std::runtime_error("no direct eigenvalue matched a limiting level");
    } catch (const std::exception& e) {
      SweepRow bad;
      bad.scale = scales[ui];
      bad.valid = false;
      bad.error = e.what();
      bad.lambda_direct = bad.lambda_pred = bad.deviation = bad.recon_l2_err = bad.coupling_norm = kNaN;
      try {
        bad.l_x = separation(si.placements());
      } catch (const std::exception&) {
        bad.l_x = kNaN;
      }
      rows[ui].assign(1, bad);
      runs[ui] = {{"scale", scales[ui]}, {"error", e.what()}};
    }
  }
  for (std::size_t i = 0; i < scales.size(); ++i) {
    for (auto& r : rows[i]) rec.rows.push_back(std::move(r));
    rec.runs.push_back(std::move(runs[i]));
    if (rec.kappa_star == 0.0) rec.kappa_star = kappas[i];
  }
  std::stable_sort(rec.rows.begin(), rec.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.l_x != b.l_x) return a.l_x < b.l_x;
    if (a.cluster != b.cluster) return a.cluster < b.cluster;
    return a.index < b.index;
  });
  return rec;
}

json SweepRecord::to_json() const {
  json rj = json::array();
  for (const auto& r : rows) {
    json row = {{"scale", r.scale},     {"l_x", r.l_x},
                {"cluster", r.cluster}, {"index", r.index},
                {"valid", r.valid},     {"lambda_direct", r.lambda_direct},
                {"lambda_pred", r.lambda_pred}, {"deviation", r.deviation},
                {"recon_l2_err", r.recon_l2_err}, {"coupling_norm", r.coupling_norm}};
    if (r.deviation_second >= 0.0) row["deviation_second"] = r.deviation_second;
    if (!r.valid) row["error"] = r.error;
    rj.push_back(row);
  }
  return {{"rows", rj}, {"noise_floor", noise_floor}, {"kappa_star", kappa_star}, {"runs", runs},
          {"provenance", {{"code_version", kCodeVersion}}}};
}

std::string SweepRecord::csv() const {
  std::string out = "l_X,cluster,index,lambda_direct,lambda_pred,deviation,recon_l2_err,coupling_norm\n";
  for (const auto& r : rows)
    out += fmt(r.l_x) + ',' + std::to_string(r.cluster) + ',' + std::to_string(r.index) + ',' + fmt(r.lambda_direct) +
           ',' + fmt(r.lambda_pred) + ',' + fmt(r.deviation) + ',' + fmt(r.recon_l2_err) + ',' + fmt(r.coupling_norm) +
           '\n';
  return out;
}

std::string SweepRecord::plot_csv() const {
  std::string out = "l_X,cluster,index,log10_deviation\n";
  for (const auto& r : rows) {
    if (!r.valid || !(r.deviation > 0.0)) continue;
    out += fmt(r.l_x) + ',' + std::to_string(r.cluster) + ',' + std::to_string(r.index) + ',' +
           fmt(std::log10(r.deviation)) + '\n';
  }
  return out;
}

}  // namespace distpert
