#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "distpert/harness.hpp"

namespace distpert {

RateFit fit_decay_rate(const std::vector<double>& l, const std::vector<double>& err, double noise_floor) {
  if (l.size() != err.size()) throw std::invalid_argument("fit_decay_rate: column length mismatch");
  std::vector<std::pair<double, double>> rows;
  for (std::size_t i = 0; i < l.size(); ++i)
    if (l[i] > 0.0 && std::isfinite(err[i]) && err[i] > 10.0 * noise_floor && err[i] > 0.0) rows.emplace_back(l[i], err[i]);
  if (rows.size() < 4) {
    std::ostringstream msg;
    msg << "fit_decay_rate: only " << rows.size() << " rows above 10x the noise floor " << noise_floor
        << " (need 4); the fit would measure discretization or truncation error";
    throw RateFitRefused(msg.str());
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd a(m, 3);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto [li, ei] = rows[static_cast<std::size_t>(i)];
    a(i, 0) = 1.0;
    a(i, 1) = std::log(li);
    a(i, 2) = -li;
    y[i] = std::log(ei);
  }
  const Eigen::VectorXd x = a.colPivHouseholderQr().solve(y);
  RateFit f;
  f.c = x[0];
  f.alpha = x[1];
  f.beta = x[2];
  f.rows = static_cast<int>(m);
  const double sse = (a * x - y).squaredNorm();
  f.residual = std::sqrt(sse / static_cast<double>(m));
  const long dof = static_cast<long>(m) - 3;
  if (dof > 0) {
    const double s2 = sse / static_cast<double>(dof);
    const Eigen::MatrixXd cov = s2 * (a.transpose() * a).inverse();
    const boost::math::students_t t(static_cast<double>(dof));
    const double q = boost::math::quantile(boost::math::complement(t, 0.025));
    f.alpha_half_width = q * std::sqrt(std::max(0.0, cov(1, 1)));
    f.beta_half_width = q * std::sqrt(std::max(0.0, cov(2, 2)));
  }
  return f;
}

RateFit fit_decay_rate(const SweepRecord& rec, const std::string& column, int cluster, int index) {
  std::vector<double> l, e;
  for (const auto& r : rec.rows) {
    if (!r.valid || r.cluster != cluster || r.index != index) continue;
    double v = 0.0;
    if (column == "deviation") v = r.deviation;
    else if (column == "deviation_second") v = r.deviation_second;
    else if (column == "recon_l2_err") v = r.recon_l2_err;
    else if (column == "coupling_norm") v = r.coupling_norm;
    else throw std::invalid_argument("fit_decay_rate: unknown column '" + column + "'");
    l.push_back(r.l_x);
    e.push_back(v);
  }
  // the coupling norm is a prediction-side quantity; the solver floor does not apply
  return fit_decay_rate(l, e, column == "coupling_norm" ? 0.0 : rec.noise_floor);
}

nlohmann::json to_json(const RateFit& f) {
  return {{"c", f.c},
          {"alpha", f.alpha},
          {"beta", f.beta},
          {"alpha_half_width", f.alpha_half_width},
          {"beta_half_width", f.beta_half_width},
          {"residual", f.residual},
          {"rows", f.rows}};
}

}  // namespace distpert
