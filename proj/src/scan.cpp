#include "recoil/scan.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "recoil/errors.hpp"
#include "recoil/parallel.hpp"

namespace recoil {

std::string to_string(Metric m) {
  switch (m) {
    case Metric::R: return "R";
    case Metric::K: return "K";
    case Metric::PE: return "PE";
  }
  return "?";
}

Metric metric_from_string(const std::string& name) {
  if (name == "R") return Metric::R;
  if (name == "K") return Metric::K;
  if (name == "PE") return Metric::PE;
  throw ConfigError("unknown metric '" + name + "' (expected R, K or PE)");
}

namespace {

void require_monotone(std::span<const double> axis, const char* name) {
  if (axis.empty()) throw ConfigError(std::string("empty ") + name + " axis");
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (!(axis[i] > axis[i - 1])) throw ConfigError(std::string(name) + " axis must be increasing");
  }
}

double evaluate(const AtomParams& p, Metric metric, const MeasureOptions& opt) {
  switch (metric) {
    case Metric::R: return r_ratio_at(p, opt.variance_grid_scale);
    case Metric::K: return schmidt_number_at(p, opt.schmidt_grid_scale, opt.schmidt_budget);
    case Metric::PE: {
      MeasureOptions o = opt;
      o.compute_k = true;
      o.keep_modes = false;
      return *measure_point(p, o).pe;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

ScanResult scan_coherence(const AtomParams& base, std::span<const double> r_axis,
                          std::span<const double> theta_axis, Metric metric,
                          const MeasureOptions& opt) {
  require_monotone(r_axis, "r");
  require_monotone(theta_axis, "theta");
  validate(base);

  ScanResult out;
  out.metric = metric;
  out.axis_r.assign(r_axis.begin(), r_axis.end());
  out.axis_theta.assign(theta_axis.begin(), theta_axis.end());
  const auto nr = static_cast<Eigen::Index>(r_axis.size());
  const auto nt = static_cast<Eigen::Index>(theta_axis.size());
  out.values = Eigen::MatrixXd::Constant(nr, nt, std::numeric_limits<double>::quiet_NaN());
  out.node_errors.assign(r_axis.size() * theta_axis.size(), {});

  parallel_for(out.node_errors.size(), [&](std::size_t node) {
    const auto i = static_cast<Eigen::Index>(node / theta_axis.size());
    const auto j = static_cast<Eigen::Index>(node % theta_axis.size());
    AtomParams p = base;
    p.coherence_r = r_axis[static_cast<std::size_t>(i)];
    p.coherence_theta = theta_axis[static_cast<std::size_t>(j)];
    try {
      out.values(i, j) = evaluate(p, metric, opt);
    } catch (const Error& e) {
      out.node_errors[node] = e.what();
    }
  });

  bool found = false;
  Eigen::Index pi = 0, pj = 0;
  for (Eigen::Index i = 0; i < nr; ++i) {
    for (Eigen::Index j = 0; j < nt; ++j) {
      const double v = out.values(i, j);
      if (std::isnan(v)) {
        ++out.missing;
        continue;
      }
      if (!found || v > out.values(pi, pj)) pi = i, pj = j, found = true;
    }
  }
  if (!found) return out;
  out.peak = {out.axis_r[static_cast<std::size_t>(pi)], out.axis_theta[static_cast<std::size_t>(pj)],
              out.values(pi, pj)};

  if (nr >= 3) {
    std::vector<double> cut(static_cast<std::size_t>(nr));
    for (Eigen::Index i = 0; i < nr; ++i) cut[static_cast<std::size_t>(i)] = out.values(i, pj);
    out.fwhm_r = fwhm(out.axis_r, cut);
    if (nr >= 5) {
      try {
        out.fit_r = fit_lorentzian(out.axis_r, cut);
      } catch (const Error&) {
      }
    }
  }
  if (nt >= 3) {
    std::vector<double> cut(static_cast<std::size_t>(nt));
    for (Eigen::Index j = 0; j < nt; ++j) cut[static_cast<std::size_t>(j)] = out.values(pi, j);
    out.fwhm_theta = fwhm(out.axis_theta, cut);
    if (nt >= 5) {
      try {
        out.fit_theta = fit_lorentzian(out.axis_theta, cut);
      } catch (const Error&) {
      }
    }
  }
  return out;
}

std::vector<double> default_r_axis(double delta, double eta, int n) {
  if (n < 1) throw ConfigError("axis needs at least one point");
  const double half = 6.0 * delta / eta;
  std::vector<double> a(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = n == 1 ? 0.0 : -half + 2.0 * half * i / (n - 1);
  return a;
}

std::vector<double> default_theta_axis(int n) {
  if (n < 1) throw ConfigError("axis needs at least one point");
  std::vector<double> a(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = 2.0 * std::numbers::pi * i / n;
  return a;
}

}  // namespace recoil
