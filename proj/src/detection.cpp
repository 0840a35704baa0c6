#include "recoil/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/LevenbergMarquardt>

#include "recoil/errors.hpp"

namespace recoil {

namespace {

constexpr double kEmptySliceFraction = 1e-12;

void require_2d(const JointAmplitudeGrid& g) {
  if (g.values.rows() < 2 || g.values.cols() < 2) {
    throw ConfigError("degenerate grid: need at least two rows and two columns");
  }
}

// Four-point Lagrange interpolation of column j along the uniform u axis.
complex interpolate_u(const JointAmplitudeGrid& g, Eigen::Index j, double u) {
  const auto n = g.values.rows();
  const double h = g.q.weights.front();
  const double pos = (u - g.q.nodes.front()) / h;
  if (n < 4) {
    const auto i = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(pos)), 0, n - 2);
    const double t = pos - static_cast<double>(i);
    return (1.0 - t) * g.values(i, j) + t * g.values(i + 1, j);
  }
  const auto base =
      std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(pos)) - 1, 0, n - 4);
  const double t = pos - static_cast<double>(base);
  complex sum = 0.0;
  for (int a = 0; a < 4; ++a) {
    double coeff = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) coeff *= (t - b) / static_cast<double>(a - b);
    sum += coeff * g.values(base + a, j);
  }
  return sum;
}

struct SliceSamples {
  std::vector<double> q;
  std::vector<double> density;  // |B|^2 times quadrature weight
};

SliceSamples rotated_slice(const JointAmplitudeGrid& g, double dk0) {
  SliceSamples s;
  const double lo = g.q.nodes.front();
  const double hi = g.q.nodes.back();
  for (Eigen::Index j = 0; j < g.values.cols(); ++j) {
    const double v = g.second.nodes[static_cast<std::size_t>(j)];
    const double q = v - dk0;
    if (q < lo || q > hi) continue;
    s.q.push_back(q);
    s.density.push_back(std::norm(interpolate_u(g, j, q)) *
                        g.second.weights[static_cast<std::size_t>(j)]);
  }
  return s;
}

Eigen::Index nearest_column(const JointAmplitudeGrid& g, double dk0) {
  const auto& k = g.second.nodes;
  const auto it = std::lower_bound(k.begin(), k.end(), dk0);
  Eigen::Index j = it - k.begin();
  if (j == static_cast<Eigen::Index>(k.size())) return j - 1;
  if (j > 0 && dk0 - k[static_cast<std::size_t>(j - 1)] < k[static_cast<std::size_t>(j)] - dk0) --j;
  return j;
}

double column_mass(const JointAmplitudeGrid& g, Eigen::Index j) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < g.values.rows(); ++i)
    m += std::norm(g.values(i, j)) * g.q.weights[static_cast<std::size_t>(i)];
  return m;
}

std::pair<double, double> k_range(const JointAmplitudeGrid& g) {
  if (g.spec.scheme == GridScheme::uniform) {
    const Axis& k = g.second;
    return {k.nodes.front() - 0.5 * k.weights.front(), k.nodes.back() + 0.5 * k.weights.back()};
  }
  return {g.second.nodes.front() - g.q.nodes.back(), g.second.nodes.back() - g.q.nodes.front()};
}

double atomic_mean(const JointAmplitudeGrid& g) {
  double m0 = 0.0;
  double m1 = 0.0;
  for (Eigen::Index i = 0; i < g.values.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < g.values.cols(); ++j) row += std::norm(g.values(i, j)) * g.weight(i, j);
    m0 += row;
    m1 += row * g.dq(i);
  }
  return m1 / m0;
}

// Photon marginal on the node-derived candidate set; returns (best dk, best value).
std::pair<double, double> coarse_marginal_peak(const JointAmplitudeGrid& g,
                                               std::vector<double>* candidates = nullptr) {
  double best_k = 0.0;
  double best = -1.0;
  if (g.spec.scheme == GridScheme::uniform) {
    for (Eigen::Index j = 0; j < g.values.cols(); ++j) {
      const double m = column_mass(g, j);
      if (m > best) best = m, best_k = g.second.nodes[static_cast<std::size_t>(j)];
    }
    return {best_k, best};
  }
  const double shift = atomic_mean(g);
  std::vector<double> ks;
  ks.reserve(g.second.size());
  for (double v : g.second.nodes) ks.push_back(v - shift);
  for (double k : ks) {
    const double m = photon_marginal(g, k);
    if (m > best) best = m, best_k = k;
  }
  if (candidates) *candidates = std::move(ks);
  return {best_k, best};
}

}  // namespace

double unconditional_variance(const JointAmplitudeGrid& g) {
  require_2d(g);
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  for (Eigen::Index i = 0; i < g.values.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < g.values.cols(); ++j) row += std::norm(g.values(i, j)) * g.weight(i, j);
    const double q = g.dq(i);
    m0 += row;
    m1 += row * q;
    m2 += row * q * q;
  }
  if (!(m0 > 0.0)) throw DegeneracyError("grid carries no probability mass");
  const double mean = m1 / m0;
  return std::max(0.0, m2 / m0 - mean * mean);
}

double photon_marginal(const JointAmplitudeGrid& g, double dk) {
  require_2d(g);
  if (g.spec.scheme == GridScheme::uniform) return column_mass(g, nearest_column(g, dk));
  double m = 0.0;
  for (double d : rotated_slice(g, dk).density) m += d;
  return m;
}

double photon_marginal_peak(const JointAmplitudeGrid& g) {
  require_2d(g);
  std::vector<double> ks;
  auto [best_k, best] = coarse_marginal_peak(g, &ks);
  if (g.spec.scheme == GridScheme::uniform) return best_k;

  // Golden-section refinement between the neighbouring candidates.
  std::sort(ks.begin(), ks.end());
  const auto it = std::lower_bound(ks.begin(), ks.end(), best_k);
  double a = it == ks.begin() ? best_k : *(it - 1);
  double b = (it + 1) >= ks.end() ? best_k : *(it + 1);
  if (!(b > a)) return best_k;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = photon_marginal(g, c);
  double fd = photon_marginal(g, d);
  for (int it_count = 0; it_count < 60 && (b - a) > 1e-14 * (1.0 + std::abs(a)); ++it_count) {
    if (fc > fd) {
      b = d, d = c, fd = fc;
      c = b - invphi * (b - a);
      fc = photon_marginal(g, c);
    } else {
      a = c, c = d, fc = fd;
      d = a + invphi * (b - a);
      fd = photon_marginal(g, d);
    }
  }
  const double refined = 0.5 * (a + b);
  return photon_marginal(g, refined) >= best ? refined : best_k;
}

ConditionalSlice conditional_slice(const JointAmplitudeGrid& g, double dk0) {
  require_2d(g);
  const auto [lo, hi] = k_range(g);
  if (!(dk0 >= lo && dk0 <= hi)) {
    throw ConfigError("conditioning point dk0 = " + std::to_string(dk0) + " outside the grid");
  }
  ConditionalSlice out;
  std::vector<double> q;
  std::vector<double> density;
  if (g.spec.scheme == GridScheme::uniform) {
    const Eigen::Index j = nearest_column(g, dk0);
    out.dk0 = g.second.nodes[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < g.values.rows(); ++i) {
      q.push_back(g.dq(i));
      density.push_back(std::norm(g.values(i, j)) * g.q.weights[static_cast<std::size_t>(i)]);
    }
  } else {
    out.dk0 = dk0;
    SliceSamples s = rotated_slice(g, dk0);
    q = std::move(s.q);
    density = std::move(s.density);
  }
  double m0 = 0.0;
  double m1 = 0.0;
  for (std::size_t n = 0; n < q.size(); ++n) {
    m0 += density[n];
    m1 += density[n] * q[n];
  }
  const double peak_mass = coarse_marginal_peak(g).second;
  if (!(m0 > kEmptySliceFraction * peak_mass) || !(m0 > 0.0)) {
    throw DegeneracyError("empty conditional slice at dk0 = " + std::to_string(dk0));
  }
  out.mass = m0;
  out.mean = m1 / m0;
  double m2 = 0.0;
  for (std::size_t n = 0; n < q.size(); ++n) {
    const double d = q[n] - out.mean;
    m2 += density[n] * d * d;
  }
  out.variance = m2 / m0;
  return out;
}

double conditional_variance(const JointAmplitudeGrid& g, double dk0) {
  return conditional_slice(g, dk0).variance;
}

VarianceReport r_ratio(const JointAmplitudeGrid& g, DkPolicy policy) {
  VarianceReport rep;
  rep.var_single = unconditional_variance(g);
  const double dk0 = policy.kind == DkPolicy::Kind::explicit_value ? policy.value
                                                                   : photon_marginal_peak(g);
  const ConditionalSlice slice = conditional_slice(g, dk0);
  if (!(slice.variance > 0.0)) throw DegeneracyError("conditional variance vanishes");
  rep.var_coin = slice.variance;
  rep.dk0 = slice.dk0;
  rep.r_ratio = rep.var_single / rep.var_coin;
  rep.resolution_adequate = g.resolution_adequate;
  rep.warnings = g.warnings;
  return rep;
}

FwhmResult fwhm(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw ConfigError("fwhm: need >= 3 paired samples");
  FwhmResult out;
  std::size_t peak = x.size();
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::isnan(y[i])) continue;
    if (peak == x.size() || y[i] > y[peak]) peak = i;
  }
  if (peak == x.size()) throw ConfigError("fwhm: profile has no finite samples");
  out.peak_x = x[peak];
  out.peak_value = y[peak];
  const double half = 0.5 * y[peak];

  auto crossing = [&](int step) -> std::optional<double> {
    std::size_t prev = peak;
    for (long i = static_cast<long>(peak) + step; i >= 0 && i < static_cast<long>(y.size()); i += step) {
      const auto idx = static_cast<std::size_t>(i);
      if (std::isnan(y[idx])) continue;
      if (y[idx] <= half) {
        const double t = (y[prev] - half) / (y[prev] - y[idx]);
        return x[prev] + t * (x[idx] - x[prev]);
      }
      prev = idx;
    }
    return std::nullopt;
  };
  const auto left = crossing(-1);
  const auto right = crossing(+1);
  out.bounded = left.has_value() && right.has_value();
  out.left = left.value_or(x.front());
  out.right = right.value_or(x.back());
  out.width = out.bounded ? std::abs(out.right - out.left) : std::numeric_limits<double>::infinity();
  return out;
}

namespace {

struct LorentzianResidual : Eigen::DenseFunctor<double> {
  std::vector<double> x;
  std::vector<double> y;

  LorentzianResidual(std::vector<double> xs, std::vector<double> ys)
      : Eigen::DenseFunctor<double>(4, static_cast<int>(xs.size())), x(std::move(xs)), y(std::move(ys)) {}

  int operator()(const InputType& p, ValueType& f) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double z = (x[i] - p[1]) / p[2];
      f[static_cast<Eigen::Index>(i)] = p[0] / (1.0 + z * z) + p[3] - y[i];
    }
    return 0;
  }

  int df(const InputType& p, JacobianType& J) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double z = (x[i] - p[1]) / p[2];
      const double den = 1.0 + z * z;
      J(r, 0) = 1.0 / den;
      J(r, 1) = p[0] * 2.0 * z / (p[2] * den * den);
      J(r, 2) = p[0] * 2.0 * z * z / (p[2] * den * den);
      J(r, 3) = 1.0;
    }
    return 0;
  }
};

}  // namespace

LorentzianFit fit_lorentzian(std::span<const double> x, std::span<const double> y) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (std::isfinite(y[i])) xs.push_back(x[i]), ys.push_back(y[i]);
  }
  if (xs.size() < 5) throw ConfigError("fit_lorentzian: need >= 5 finite samples");

  const FwhmResult w = fwhm(xs, ys);
  const double base = *std::min_element(ys.begin(), ys.end());
  const double span = xs.back() - xs.front();
  Eigen::VectorXd p(4);
  p << w.peak_value - base, w.peak_x, w.bounded ? 0.5 * w.width : 0.25 * std::abs(span), base;

  LorentzianResidual functor(xs, ys);
  Eigen::LevenbergMarquardt<LorentzianResidual> lm(functor);
  lm.setMaxfev(2000);
  const auto status = lm.minimize(p);

  LorentzianFit fit;
  fit.amplitude = p[0];
  fit.center = p[1];
  fit.halfwidth = std::abs(p[2]);
  fit.offset = p[3];
  fit.converged = status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters;
  Eigen::VectorXd f(static_cast<Eigen::Index>(xs.size()));
  functor(p, f);
  fit.rms_relative = std::sqrt(f.squaredNorm() / static_cast<double>(xs.size())) / w.peak_value;
  return fit;
}

}  // namespace recoil
