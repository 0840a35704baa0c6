#include "recoil/grid_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "recoil/errors.hpp"

namespace recoil {

nlohmann::json grid_header(const JointAmplitudeGrid& g) {
  nlohmann::json h = g.spec;
  h["schema_version"] = kGridSchemaVersion;
  h["kind"] = "joint_amplitude_grid";
  h["norm"] = g.norm;
  h["l2_mass"] = g.l2_mass();
  h["params_fingerprint"] = g.params_fingerprint;
  h["params"] = g.params;
  h["resolution_adequate"] = g.resolution_adequate;
  h["ridge_spacing"] = g.ridge_spacing;
  h["ridge_halfwidth"] = g.ridge_halfwidth;
  h["warnings"] = g.warnings;
  return h;
}

void write_grid(const std::filesystem::path& path, const JointAmplitudeGrid& g) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << grid_header(g).dump() << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < g.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.values.cols(); ++j) {
      const complex z = g.values(i, j);
      std::snprintf(buf, sizeof buf, "%s%.17g %.17g", j ? " " : "", z.real(), z.imag());
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

JointAmplitudeGrid read_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed grid header in " + path.string() + ": " + e.what());
  }
  if (h.value("schema_version", 0) != kGridSchemaVersion || h.value("kind", "") != "joint_amplitude_grid") {
    throw ConfigError("unsupported grid file " + path.string());
  }
  JointAmplitudeGrid g;
  g.spec = h.get<GridSpec>();
  validate(g.spec);
  g.q = uniform_axis(g.spec.q_min, g.spec.q_max, g.spec.n_q);
  g.second = second_axis(g.spec);
  g.norm = h.at("norm").get<double>();
  g.params_fingerprint = h.value("params_fingerprint", "");
  g.params = h.value("params", nlohmann::json());
  g.resolution_adequate = h.value("resolution_adequate", true);
  g.ridge_spacing = h.value("ridge_spacing", 0.0);
  g.ridge_halfwidth = h.value("ridge_halfwidth", 0.0);
  g.warnings = h.value("warnings", std::vector<std::string>{});
  g.values.resize(g.spec.n_q, static_cast<Eigen::Index>(g.second.size()));
  for (Eigen::Index i = 0; i < g.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.values.cols(); ++j) {
      double re = 0.0;
      double im = 0.0;
      if (!(in >> re >> im)) throw ConfigError("truncated grid data in " + path.string());
      g.values(i, j) = {re, im};
    }
  }
  return g;
}

void write_grid_csv(const std::filesystem::path& path, const JointAmplitudeGrid& g,
                    std::size_t max_nodes) {
  const auto nodes = static_cast<std::size_t>(g.values.size());
  if (nodes > max_nodes) {
    throw BudgetError("grid too large for CSV export (" + std::to_string(nodes) + " nodes)");
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# schema_version=" << kGridSchemaVersion << " kind=amplitude_long\n";
  out << "dq,dk,v,re,im,abs2\n";
  char buf[160];
  for (Eigen::Index i = 0; i < g.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.values.cols(); ++j) {
      const complex z = g.values(i, j);
      const double dk = g.dk(i, j);
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", g.dq(i), dk,
                    g.dq(i) + dk, z.real(), z.imag(), std::norm(z));
      out << buf;
    }
  }
}

}  // namespace recoil
