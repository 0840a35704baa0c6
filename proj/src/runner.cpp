#include "recoil/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "recoil/digest.hpp"
#include "recoil/grid_io.hpp"
#include "recoil/measures.hpp"
#include "recoil/scan.hpp"
#include "recoil/svg_plot.hpp"

namespace recoil {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> AxisSpec::values() const {
  if (n < 1) throw ConfigError("axis needs at least one point");
  if (!(std::isfinite(min) && std::isfinite(max))) throw ConfigError("axis bounds must be finite");
  if (n == 1) return {min};
  if (!(max > min)) throw ConfigError("axis requires min < max");
  std::vector<double> v(static_cast<std::size_t>(n));
  const double denom = include_max ? n - 1 : n;
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = min + (max - min) * i / denom;
  return v;
}

namespace {

json axis_json(const std::optional<AxisSpec>& a) {
  if (!a) return nullptr;
  return {{"min", a->min}, {"max", a->max}, {"n", a->n}, {"include_max", a->include_max}};
}

std::optional<AxisSpec> axis_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return AxisSpec{j.at("min").get<double>(), j.at("max").get<double>(), j.at("n").get<int>(),
                  j.value("include_max", true)};
}

}  // namespace

void to_json(json& j, const RunConfig& c) {
  j = json{{"params", c.params},
           {"grid_scale", c.grid_scale},
           {"out_dir", c.out_dir.string()},
           {"formats", c.formats},
           {"metric", c.metric},
           {"r_axis", axis_json(c.r_axis)},
           {"theta_axis", axis_json(c.theta_axis)},
           {"n_modes", c.n_modes},
           {"fixture", c.fixture},
           {"dk0", c.dk0 ? json(*c.dk0) : json(nullptr)},
           {"max_grid_nodes", c.max_grid_nodes},
           {"max_schmidt_entries", c.max_schmidt_entries}};
}

void from_json(const json& j, RunConfig& c) {
  c = RunConfig{};
  c.params = j.at("params").get<AtomParams>();
  c.grid_scale = j.value("grid_scale", 1.0);
  c.out_dir = j.value("out_dir", std::string("recoil_out"));
  c.formats = j.value("formats", std::set<std::string>{"csv", "json"});
  c.metric = j.value("metric", std::string("R"));
  c.r_axis = axis_from(j.value("r_axis", json(nullptr)));
  c.theta_axis = axis_from(j.value("theta_axis", json(nullptr)));
  c.n_modes = j.value("n_modes", 3);
  c.fixture = j.value("fixture", std::string());
  const json dk0 = j.value("dk0", json(nullptr));
  if (!dk0.is_null()) c.dk0 = dk0.get<double>();
  c.max_grid_nodes = j.value("max_grid_nodes", std::size_t{40'000'000});
  c.max_schmidt_entries = j.value("max_schmidt_entries", std::size_t{12'000'000});
}

json error_document(const Error& e) {
  return {{"schema_version", kOutputSchemaVersion},
          {"kind", "error"},
          {"code", to_string(e.code())},
          {"exit_code", static_cast<int>(e.code())},
          {"message", e.what()}};
}

namespace {

using Clock = std::chrono::steady_clock;

MeasureOptions measure_options(const RunConfig& c) {
  MeasureOptions o;
  o.variance_grid_scale = c.grid_scale;
  o.schmidt_grid_scale = c.grid_scale;
  o.grid_budget.max_nodes = c.max_grid_nodes;
  o.schmidt_budget.max_entries = c.max_schmidt_entries;
  if (c.dk0) o.dk_policy = DkPolicy::at(*c.dk0);
  return o;
}

bool wants(const RunConfig& c, const std::string& format) { return c.formats.count(format) > 0; }

/// Collects files written by one verb and produces its manifest.
class OutputSet {
 public:
  OutputSet(const RunConfig& config, std::string command, std::string figure = {})
      : config_(config), command_(std::move(command)), figure_(std::move(figure)), start_(Clock::now()) {
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + config.out_dir.string());
  }

  fs::path path(const std::string& name) const { return config_.out_dir / name; }

  void json_file(const std::string& name, const std::string& kind, json doc) {
    doc["schema_version"] = kOutputSchemaVersion;
    doc["kind"] = kind;
    const fs::path p = path(name);
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << doc.dump(2) << '\n';
    files_.push_back(p);
  }

  /// CSV with a schema comment line followed by the column header.
  std::ofstream csv_file(const std::string& name, const std::string& kind, const std::string& header) {
    const fs::path p = path(name);
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << "# schema_version=" << kOutputSchemaVersion << " kind=" << kind << '\n' << header << '\n';
    files_.push_back(p);
    return out;
  }

  void add(const fs::path& p) { files_.push_back(p); }
  void warn(const std::string& w) { warnings_.push_back(w); }
  void warn_all(const std::vector<std::string>& ws) {
    for (const auto& w : ws) warn(w);
  }

  RunOutcome finish(json headline, json grid_flags = json::object()) {
    RunOutcome r;
    r.headline = std::move(headline);
    r.files = files_;
    json outputs = json::array();
    for (const auto& f : files_) {
      outputs.push_back({{"path", f.filename().string()}, {"sha256", sha256_file(f)}});
    }
    r.manifest = {{"schema_version", kOutputSchemaVersion},
                  {"kind", "run_manifest"},
                  {"command", command_},
                  {"figure", figure_},
                  {"tool_version", RECOIL_VERSION},
                  {"config", config_},
                  {"grid_flags", std::move(grid_flags)},
                  {"warnings", warnings_},
                  {"wall_clock_seconds", std::chrono::duration<double>(Clock::now() - start_).count()},
                  {"outputs", outputs},
                  {"headline", r.headline}};
    r.manifest_path = path("manifest_" + command_ + (figure_.empty() ? "" : "_" + figure_) + ".json");
    std::ofstream out(r.manifest_path);
    if (!out) throw ConfigError("cannot write " + r.manifest_path.string());
    out << r.manifest.dump(2) << '\n';
    return r;
  }

 private:
  const RunConfig& config_;
  std::string command_;
  std::string figure_;
  Clock::time_point start_;
  std::vector<fs::path> files_;
  std::vector<std::string> warnings_;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json grid_json(const GridSpec& spec) { return spec; }

JointAmplitudeGrid separable_fixture_grid(double eta) {
  GridSpec s;
  s.scheme = GridScheme::uniform;
  s.q_min = s.k_min = -4.0 * eta;
  s.q_max = s.k_max = 4.0 * eta;
  s.n_q = s.n_k = 161;
  return sample_kernel(
      [eta](double q, double k) {
        return complex(std::exp(-(q / eta) * (q / eta)) * std::exp(-(k / eta) * (k / eta)), 0.0);
      },
      s);
}

}  // namespace

json entanglement_report(const RunConfig& c) {
  json doc;
  doc["params"] = c.params;
  if (c.fixture == "separable") {
    validate(c.params);
    const JointAmplitudeGrid grid = separable_fixture_grid(c.params.eta);
    const VarianceReport v = r_ratio(grid, c.dk0 ? DkPolicy::at(*c.dk0) : DkPolicy::peak());
    SchmidtOptions so;
    so.compute_modes = false;
    const SchmidtResult s = schmidt_decompose(grid, so);
    doc["fixture"] = "separable";
    doc["R"] = v.r_ratio;
    doc["K"] = s.k_number;
    doc["PE"] = phase_entanglement(s.k_number, v.r_ratio);
    doc["pe_validated"] = false;
    doc["var_single"] = v.var_single;
    doc["var_coin"] = v.var_coin;
    doc["dk0"] = v.dk0;
    doc["grids"] = {{"fixture", grid_json(grid.spec)}};
    doc["warnings"] = json::array();
    doc["extrapolated"] = false;
    return doc;
  }
  if (!c.fixture.empty()) throw ConfigError("unknown fixture '" + c.fixture + "'");

  const PointMeasures m = measure_point(c.params, measure_options(c));
  doc["R"] = m.variance.r_ratio;
  doc["K"] = *m.k;
  doc["PE"] = *m.pe;
  doc["pe_validated"] = m.pe_validated;
  doc["var_single"] = m.variance.var_single;
  doc["var_coin"] = m.variance.var_coin;
  doc["dk0"] = m.variance.dk0;
  doc["extrapolated"] = !in_validated_regime(c.params);
  doc["resolution_adequate"] = m.variance.resolution_adequate;
  doc["grids"] = {{"variance", grid_json(m.variance_grid)}, {"schmidt", grid_json(*m.schmidt_grid)}};
  doc["warnings"] = m.warnings;
  const DerivedParams d = derive(c.params);
  if (d.delta && *d.delta > 0.0) {
    doc["reference"] = {{"R_max_estimate", r_max_estimate(c.params.eta, *d.delta)},
                        {"K_max_estimate", k_max_estimate(c.params.eta, *d.delta)},
                        {"delta", *d.delta}};
  }
  return doc;
}

RunOutcome cmd_amplitude(const RunConfig& c) {
  OutputSet out(c, "amplitude");
  const GridSpec spec = default_variance_grid(c.params, c.grid_scale);
  GridBudget budget;
  budget.max_nodes = c.max_grid_nodes;
  const JointAmplitudeGrid grid = sample_grid(c.params, spec, budget);
  write_grid(out.path("amplitude.grid"), grid);
  out.add(out.path("amplitude.grid"));
  if (wants(c, "csv") && grid.values.size() <= 1'000'000) {
    write_grid_csv(out.path("amplitude.csv"), grid);
    out.add(out.path("amplitude.csv"));
  }
  out.warn_all(grid.warnings);
  json headline = {{"l2_mass", grid.l2_mass()}, {"norm", grid.norm}, {"n_q", spec.n_q}, {"n_k", grid.values.cols()}};
  return out.finish(headline, {{"resolution_adequate", grid.resolution_adequate}});
}

RunOutcome cmd_report(const RunConfig& c) {
  OutputSet out(c, "report");
  json doc = entanglement_report(c);
  out.warn_all(doc.value("warnings", std::vector<std::string>{}));
  out.json_file("report.json", "entanglement_report", doc);
  json headline = {{"R", doc["R"]}, {"K", doc["K"]}, {"PE", doc["PE"]}};
  return out.finish(headline, {{"resolution_adequate", doc.value("resolution_adequate", true)}});
}

namespace {

json fwhm_json(const std::optional<FwhmResult>& f) {
  if (!f) return nullptr;
  return {{"width", f->bounded ? json(f->width) : json(nullptr)},
          {"bounded", f->bounded},
          {"left", f->left},
          {"right", f->right}};
}

json fit_json(const std::optional<LorentzianFit>& f) {
  if (!f) return nullptr;
  return {{"amplitude", f->amplitude}, {"center", f->center},   {"halfwidth", f->halfwidth},
          {"offset", f->offset},       {"rms_relative", f->rms_relative}, {"converged", f->converged}};
}

json scan_summary(const ScanResult& s) {
  return {{"metric", to_string(s.metric)},
          {"peak", {{"r", s.peak.r}, {"theta", s.peak.theta}, {"value", s.peak.value}}},
          {"fwhm_r", fwhm_json(s.fwhm_r)},
          {"fwhm_theta", fwhm_json(s.fwhm_theta)},
          {"fit_r", fit_json(s.fit_r)},
          {"fit_theta", fit_json(s.fit_theta)},
          {"missing", s.missing},
          {"n_r", s.axis_r.size()},
          {"n_theta", s.axis_theta.size()}};
}

void write_scan_csv(OutputSet& out, const std::string& name, const ScanResult& s) {
  auto csv = out.csv_file(name, "scan_long", "r,theta,metric,value,flags");
  const std::string metric = to_string(s.metric);
  for (std::size_t i = 0; i < s.axis_r.size(); ++i) {
    for (std::size_t j = 0; j < s.axis_theta.size(); ++j) {
      const double v = s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const std::string& err = s.node_errors[i * s.axis_theta.size() + j];
      std::string flag = "ok";
      if (!err.empty()) {
        flag = "missing:" + err;
        for (char& ch : flag)
          if (ch == ',' || ch == '\n') ch = ';';
      }
      csv << fmt(s.axis_r[i]) << ',' << fmt(s.axis_theta[j]) << ',' << metric << ','
          << (std::isnan(v) ? std::string("nan") : fmt(v)) << ',' << flag << '\n';
    }
  }
}

void plot_scan_cuts(OutputSet& out, const std::string& name, const ScanResult& s) {
  std::vector<PlotSeries> series;
  if (s.axis_r.size() >= 2) {
    PlotSeries cut{"theta = peak", s.axis_r, {}, false, false};
    const auto j = static_cast<Eigen::Index>(
        std::find(s.axis_theta.begin(), s.axis_theta.end(), s.peak.theta) - s.axis_theta.begin());
    for (std::size_t i = 0; i < s.axis_r.size(); ++i) cut.y.push_back(s.values(static_cast<Eigen::Index>(i), j));
    series.push_back(std::move(cut));
  }
  if (s.axis_theta.size() >= 2) {
    PlotSeries cut{"r = peak (x = theta - theta*)", {}, {}, true, false};
    const auto i = static_cast<Eigen::Index>(
        std::find(s.axis_r.begin(), s.axis_r.end(), s.peak.r) - s.axis_r.begin());
    for (std::size_t j = 0; j < s.axis_theta.size(); ++j) {
      cut.x.push_back(s.axis_theta[j] - s.peak.theta);
      cut.y.push_back(s.values(i, static_cast<Eigen::Index>(j)));
    }
    series.push_back(std::move(cut));
  }
  write_svg_plot(out.path(name), to_string(s.metric) + " through the peak", "coherence offset",
                 to_string(s.metric), series);
  out.add(out.path(name));
}

std::vector<double> axis_or(const std::optional<AxisSpec>& a, std::vector<double> fallback) {
  return a ? a->values() : fallback;
}

}  // namespace

RunOutcome cmd_scan(const RunConfig& c) {
  OutputSet out(c, "scan");
  const Metric metric = metric_from_string(c.metric);
  const DerivedParams d = derive(c.params);
  const double delta = d.delta.value_or(c.params.omega_12 / c.params.gamma_a);
  const auto r_axis = axis_or(c.r_axis, default_r_axis(delta, c.params.eta));
  const auto t_axis = axis_or(c.theta_axis, default_theta_axis());
  const ScanResult s = scan_coherence(c.params, r_axis, t_axis, metric, measure_options(c));
  if (wants(c, "csv")) write_scan_csv(out, "scan.csv", s);
  out.json_file("scan_summary.json", "scan_summary", scan_summary(s));
  if (wants(c, "svg")) plot_scan_cuts(out, "scan_cuts.svg", s);
  if (s.missing) out.warn(std::to_string(s.missing) + " scan nodes failed");
  json headline = {{"peak_value", s.peak.value}, {"peak_r", s.peak.r}, {"peak_theta", s.peak.theta},
                   {"fwhm_r", fwhm_json(s.fwhm_r)["width"]}, {"fwhm_theta", fwhm_json(s.fwhm_theta)["width"]}};
  return out.finish(headline);
}

namespace {

struct ModesOutput {
  json spectrum;
  ModeTable table;
};

/// Decomposition feeding a mode export: the model at a point, or the separable fixture.
PointMeasures mode_source(const RunConfig& c, const AtomParams& params) {
  if (c.fixture.empty()) {
    MeasureOptions o = measure_options(c);
    o.keep_modes = true;
    return measure_point(params, o);
  }
  if (c.fixture != "separable") throw ConfigError("unknown fixture '" + c.fixture + "'");
  validate(params);
  const JointAmplitudeGrid grid = separable_fixture_grid(params.eta);
  PointMeasures m;
  m.params = params;
  m.variance = r_ratio(grid);
  m.variance_grid = grid.spec;
  m.schmidt_grid = grid.spec;
  m.schmidt = schmidt_decompose(grid);
  m.k = m.schmidt->k_number;
  m.pe = phase_entanglement(*m.k, m.variance.r_ratio);
  return m;
}

ModesOutput write_modes(OutputSet& out, const RunConfig& c, const AtomParams& params,
                        const std::string& prefix) {
  const PointMeasures m = mode_source(c, params);
  const SchmidtResult& res = *m.schmidt;
  ModeTable table = mode_profiles(res, c.n_modes);
  if (table.clamped) {
    out.warn(prefix + "requested " + std::to_string(c.n_modes) + " modes, only " +
             std::to_string(table.modes.size()) + " retained");
  }
  if (wants(c, "csv")) {
    for (const ModeProfile& mp : table.modes) {
      auto csv = out.csv_file(prefix + "mode_" + std::to_string(mp.index) + ".csv", "mode_profile",
                              "axis,coordinate,abs");
      for (std::size_t i = 0; i < table.q.size(); ++i) csv << "atom," << fmt(table.q[i]) << ',' << fmt(mp.atomic_abs[i]) << '\n';
      for (std::size_t i = 0; i < table.k.size(); ++i) csv << "photon," << fmt(table.k[i]) << ',' << fmt(mp.photonic_abs[i]) << '\n';
    }
  }
  if (wants(c, "svg") && !table.modes.empty()) {
    std::vector<PlotSeries> series;
    for (const ModeProfile& mp : table.modes) {
      series.push_back({"|psi_" + std::to_string(mp.index) + "(q)|", table.q, mp.atomic_abs, false, false});
    }
    write_svg_plot(out.path(prefix + "atomic_modes.svg"), "Atomic Schmidt modes", "dq", "|psi_n|", series);
    out.add(out.path(prefix + "atomic_modes.svg"));
  }

  const std::size_t listed = std::min<std::size_t>(res.eigenvalues.size(), 400);
  json modes = json::array();
  for (const ModeProfile& mp : table.modes) {
    modes.push_back({{"index", mp.index},
                     {"eigenvalue", mp.eigenvalue},
                     {"atomic_peaks", mp.atomic_peaks},
                     {"photonic_peaks", mp.photonic_peaks},
                     {"atomic_rms_width", mp.atomic_rms_width},
                     {"photonic_gaussian_width", mp.photonic_gaussian_width}});
  }
  json spectrum = {{"params", params},
                   {"eigenvalues", std::vector<double>(res.eigenvalues.begin(),
                                                       res.eigenvalues.begin() + static_cast<std::ptrdiff_t>(listed))},
                   {"eigenvalues_listed", listed},
                   {"K", res.k_number},
                   {"R", m.variance.r_ratio},
                   {"PE", *m.pe},
                   {"pe_validated", m.pe_validated},
                   {"truncation",
                    {{"retained", res.retained},
                     {"retained_mass", res.retained_mass},
                     {"full_rank", res.full_rank},
                     {"truncated_by_budget", res.truncated_by_budget}}},
                   {"modes", modes},
                   {"grid", grid_json(*m.schmidt_grid)},
                   {"warnings", m.warnings}};
  out.warn_all(m.warnings);
  out.json_file(prefix + "spectrum.json", "mode_spectrum", spectrum);
  return {spectrum, std::move(table)};
}

}  // namespace

RunOutcome cmd_modes(const RunConfig& c) {
  OutputSet out(c, "modes");
  if (c.n_modes < 1) throw ConfigError("n_modes must be >= 1");
  const ModesOutput m = write_modes(out, c, c.params, "");
  json headline = {{"K", m.spectrum["K"]}, {"R", m.spectrum["R"]}, {"PE", m.spectrum["PE"]},
                   {"modes_written", m.table.modes.size()}};
  return out.finish(headline);
}

// ---------------------------------------------------------------------------
// Figure recipes

const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> names{"fig2", "fig2c", "fig3", "fig3c", "fig4"};
  return names;
}

namespace {

constexpr double kPi = std::numbers::pi;

bool schmidt_feasible(const AtomParams& p, const RunConfig& c) {
  try {
    check_schmidt_budget(default_schmidt_grid(p, c.grid_scale), SchmidtBudget{c.max_schmidt_entries});
    return true;
  } catch (const BudgetError&) {
    return false;
  }
}

RunOutcome recipe_fig2(const RunConfig& c) {
  OutputSet out(c, "reproduce", "fig2");
  const double delta = 0.02, eta = 0.1;
  const AtomParams base = symmetric_params(delta, eta);
  const auto r_axis = axis_or(c.r_axis, default_r_axis(delta, eta));
  const auto t_axis = axis_or(c.theta_axis, default_theta_axis());
  const ScanResult s = scan_coherence(base, r_axis, t_axis, Metric::R, measure_options(c));
  write_scan_csv(out, "fig2_R_map.csv", s);
  if (wants(c, "svg")) plot_scan_cuts(out, "fig2_cuts.svg", s);
  const double reference = 2.0 * delta / eta;
  json summary = scan_summary(s);
  summary["figure"] = "fig2";
  summary["checks"] = {{"peak_at_dark_state", std::abs(s.peak.r) < 1e-9 + (r_axis.size() > 1 ? r_axis[1] - r_axis[0] : 0.0) &&
                                                  std::abs(s.peak.theta - kPi) <= (t_axis.size() > 1 ? t_axis[1] - t_axis[0] : 0.0)},
                       {"fwhm_reference_2delta_over_eta", reference},
                       {"R_max_estimate", r_max_estimate(eta, delta)}};
  out.json_file("fig2_summary.json", "recipe_summary", summary);
  json headline = {{"peak_R", s.peak.value},
                   {"fwhm_r", fwhm_json(s.fwhm_r)["width"]},
                   {"fwhm_theta", fwhm_json(s.fwhm_theta)["width"]},
                   {"reference_fwhm", reference}};
  return out.finish(headline);
}

RunOutcome recipe_fig2c(const RunConfig& c) {
  OutputSet out(c, "reproduce", "fig2c");
  const std::vector<double> etas{0.05, 0.1, 0.2};
  const std::vector<double> deltas{0.01, 0.02, 0.03, 0.04, 0.05};
  auto csv = out.csv_file("fig2c_fwhm.csv", "fwhm_curve", "eta,delta,fwhm_r,fwhm_theta,reference_2delta_over_eta");
  json points = json::array();
  std::vector<PlotSeries> series;
  const MeasureOptions o = measure_options(c);
  for (double eta : etas) {
    PlotSeries computed{"FWHM_r, eta=" + fmt(eta), {}, {}, false, true};
    PlotSeries ref{"2 delta/eta, eta=" + fmt(eta), {}, {}, true, false};
    for (double delta : deltas) {
      const AtomParams base = symmetric_params(delta, eta);
      const auto axis = default_r_axis(delta, eta, 41);
      std::vector<double> theta_axis(axis.size());
      std::transform(axis.begin(), axis.end(), theta_axis.begin(), [](double x) { return kPi + x; });
      double fr = NAN, ft = NAN;
      std::string note;
      try {
        const ScanResult sr = scan_coherence(base, axis, std::vector<double>{kPi}, Metric::R, o);
        const ScanResult st = scan_coherence(base, std::vector<double>{0.0}, theta_axis, Metric::R, o);
        if (sr.fwhm_r && sr.fwhm_r->bounded) fr = sr.fwhm_r->width;
        if (st.fwhm_theta && st.fwhm_theta->bounded) ft = st.fwhm_theta->width;
      } catch (const BudgetError& e) {
        note = e.what();
        out.warn("fig2c point eta=" + fmt(eta) + " delta=" + fmt(delta) + " skipped: " + note);
      }
      const double reference = 2.0 * delta / eta;
      csv << fmt(eta) << ',' << fmt(delta) << ',' << fmt(fr) << ',' << fmt(ft) << ',' << fmt(reference) << '\n';
      points.push_back({{"eta", eta}, {"delta", delta}, {"fwhm_r", std::isnan(fr) ? json(nullptr) : json(fr)},
                        {"fwhm_theta", std::isnan(ft) ? json(nullptr) : json(ft)}, {"reference", reference},
                        {"skipped", note}});
      computed.x.push_back(delta), computed.y.push_back(fr);
      ref.x.push_back(delta), ref.y.push_back(reference);
    }
    series.push_back(std::move(computed));
    series.push_back(std::move(ref));
  }
  if (wants(c, "svg")) {
    write_svg_plot(out.path("fig2c_fwhm.svg"), "FWHM of R(r) vs delta", "delta", "FWHM", series);
    out.add(out.path("fig2c_fwhm.svg"));
  }
  out.json_file("fig2c_summary.json", "recipe_summary", {{"figure", "fig2c"}, {"checks", {{"points", points}}}});
  return out.finish({{"points", points.size()}});
}

RunOutcome recipe_fig3(const RunConfig& c) {
  OutputSet out(c, "reproduce", "fig3");
  const double eta = 0.1;
  double delta = 0.02;
  std::string substitution;
  if (!schmidt_feasible(symmetric_params(delta, eta), c)) {
    substitution = "delta=0.02 exceeds the decomposition budget; scaled analog at delta=0.05";
    out.warn(substitution);
    delta = 0.05;
  }
  const MeasureOptions o = measure_options(c);
  const double half = std::min(kPi, 6.0 * delta / eta);
  const int n = 21;
  auto csv = out.csv_file("fig3_cuts.csv", "coherence_cut", "cut,coordinate,K,R,R_over_2.2,PE");
  std::map<std::string, PlotSeries> k_series, r_series;
  json cuts = json::object();
  for (const std::string cut : {"r", "theta"}) {
    std::vector<double> x, ks, rs;
    for (int i = 0; i < n; ++i) {
      const double offset = -half + 2.0 * half * i / (n - 1);
      const AtomParams p = cut == "r" ? symmetric_params(delta, eta, offset, kPi)
                                      : symmetric_params(delta, eta, 0.0, kPi + offset);
      double k = NAN, r = NAN;
      try {
        MeasureOptions mo = o;
        const PointMeasures m = measure_point(p, mo);
        k = *m.k;
        r = m.variance.r_ratio;
      } catch (const Error& e) {
        out.warn("fig3 node " + cut + "=" + fmt(offset) + " failed: " + e.what());
      }
      x.push_back(offset), ks.push_back(k), rs.push_back(r);
      csv << cut << ',' << fmt(offset) << ',' << fmt(k) << ',' << fmt(r) << ',' << fmt(r / 2.2) << ',' << fmt(2.2 * k / r) << '\n';
    }
    const FwhmResult fk = fwhm(x, ks);
    const FwhmResult fr = fwhm(x, rs);
    cuts[cut] = {{"fwhm_K", fk.bounded ? json(fk.width) : json(nullptr)},
                 {"fwhm_R", fr.bounded ? json(fr.width) : json(nullptr)},
                 {"K_peak_offset", fk.peak_x},
                 {"R_peak_offset", fr.peak_x},
                 {"K_decays_slower", fk.bounded && fr.bounded ? json(fk.width > fr.width) : json(nullptr)}};
    std::vector<double> r22(rs.size());
    std::transform(rs.begin(), rs.end(), r22.begin(), [](double v) { return v / 2.2; });
    if (wants(c, "svg")) {
      write_svg_plot(out.path("fig3_" + cut + ".svg"), "K and R/2.2 along " + cut, cut + " offset", "value",
                     {{"K", x, ks, false, true}, {"R/2.2", x, r22, false, false}});
      out.add(out.path("fig3_" + cut + ".svg"));
    }
  }
  out.json_file("fig3_summary.json", "recipe_summary",
                {{"figure", "fig3"}, {"delta", delta}, {"eta", eta}, {"substitution", substitution}, {"checks", cuts}});
  return out.finish({{"delta", delta}, {"cuts", cuts}});
}

RunOutcome recipe_fig3c(const RunConfig& c) {
  OutputSet out(c, "reproduce", "fig3c");
  const double eta = 0.1;
  auto csv = out.csv_file("fig3c_dark_state.csv", "dark_state_sweep", "delta,K,R,R_over_2.2,rel_gap");
  const MeasureOptions o = measure_options(c);
  double max_gap = 0.0;
  PlotSeries ks{"K", {}, {}, false, true}, rs{"R/2.2", {}, {}, false, false};
  json points = json::array();
  for (int i = 0; i <= 10; ++i) {
    const double delta = 0.05 + 0.01 * i;
    const AtomParams p = symmetric_params(delta, eta);
    try {
      const PointMeasures m = measure_point(p, o);
      const double gap = std::abs(2.2 * *m.k / m.variance.r_ratio - 1.0);
      if (eta / (delta * delta) >= 4.0) max_gap = std::max(max_gap, gap);
      csv << fmt(delta) << ',' << fmt(*m.k) << ',' << fmt(m.variance.r_ratio) << ',' << fmt(m.variance.r_ratio / 2.2)
          << ',' << fmt(gap) << '\n';
      points.push_back({{"delta", delta}, {"K", *m.k}, {"R", m.variance.r_ratio}, {"rel_gap", gap}});
      ks.x.push_back(delta), ks.y.push_back(*m.k);
      rs.x.push_back(delta), rs.y.push_back(m.variance.r_ratio / 2.2);
    } catch (const BudgetError& e) {
      out.warn("fig3c point delta=" + fmt(delta) + " skipped: " + e.what());
    }
  }
  if (wants(c, "svg")) {
    write_svg_plot(out.path("fig3c.svg"), "Dark state: K vs R/2.2", "delta", "value", {ks, rs});
    out.add(out.path("fig3c.svg"));
  }
  out.json_file("fig3c_summary.json", "recipe_summary",
                {{"figure", "fig3c"}, {"checks", {{"max_rel_gap", max_gap}, {"points", points}}}});
  return out.finish({{"max_rel_gap", max_gap}});
}

RunOutcome recipe_fig4(const RunConfig& c) {
  OutputSet out(c, "reproduce", "fig4");
  double delta = 0.02;
  const double eta = 0.12, eta_displaced = 0.2;
  std::string substitution;
  AtomParams ref = symmetric_params(delta, eta);
  AtomParams displaced = symmetric_params(delta, eta_displaced, 0.38, kPi);
  const MeasureOptions o = measure_options(c);
  if (!schmidt_feasible(ref, c) || !schmidt_feasible(displaced, c)) {
    delta = 0.05;
    substitution = "delta=0.02 exceeds the decomposition budget; scaled analog at delta=0.05 with r' matched on K";
    out.warn(substitution);
    ref = symmetric_params(delta, eta);
    const MatchedState m = match_schmidt_number(ref, eta_displaced, 0.0, 2.0, o);
    if (!m.found) throw DegeneracyError("fig4 analog: no r' in [0, 2] matches K");
    displaced = m.displaced;
  }
  const ModesOutput a = write_modes(out, c, ref, "fig4_ref_");
  const ModesOutput b = write_modes(out, c, displaced, "fig4_displaced_");
  const double k_ratio = b.spectrum["K"].get<double>() / a.spectrum["K"].get<double>();
  const double r_ratio_v = b.spectrum["R"].get<double>() / a.spectrum["R"].get<double>();
  json peaks_ref = json::array(), peaks_disp = json::array();
  for (const auto& mp : a.table.modes) peaks_ref.push_back(mp.atomic_peaks);
  for (const auto& mp : b.table.modes) peaks_disp.push_back(mp.atomic_peaks);
  const bool broader = !a.table.modes.empty() && !b.table.modes.empty() &&
                       b.table.modes.front().atomic_rms_width > a.table.modes.front().atomic_rms_width;
  json checks = {{"K_ratio", k_ratio},
                 {"R_ratio", r_ratio_v},
                 {"first_mode_broader", broader},
                 {"atomic_peaks_reference", peaks_ref},
                 {"atomic_peaks_displaced", peaks_disp},
                 {"displaced_r", displaced.coherence_r},
                 {"delta", delta}};
  if (wants(c, "svg")) {
    const std::size_t n = std::min<std::size_t>(20, std::min(a.table.eigenvalues.size(), b.table.eigenvalues.size()));
    PlotSeries la{"B", {}, {}, false, true}, lb{"B'", {}, {}, true, true};
    for (std::size_t i = 0; i < n; ++i) {
      la.x.push_back(static_cast<double>(i + 1)), la.y.push_back(a.table.eigenvalues[i]);
      lb.x.push_back(static_cast<double>(i + 1)), lb.y.push_back(b.table.eigenvalues[i]);
    }
    write_svg_plot(out.path("fig4_spectra.svg"), "Schmidt eigenvalues", "n", "lambda_n", {la, lb});
    out.add(out.path("fig4_spectra.svg"));
  }
  out.json_file("fig4_summary.json", "recipe_summary",
                {{"figure", "fig4"}, {"delta", delta}, {"substitution", substitution}, {"checks", checks}});
  return out.finish(checks);
}

}  // namespace

RunOutcome cmd_reproduce(const std::string& figure, const RunConfig& c) {
  if (figure == "fig2") return recipe_fig2(c);
  if (figure == "fig2c") return recipe_fig2c(c);
  if (figure == "fig3") return recipe_fig3(c);
  if (figure == "fig3c") return recipe_fig3c(c);
  if (figure == "fig4") return recipe_fig4(c);
  throw ConfigError("unknown figure recipe '" + figure + "' (fig2, fig2c, fig3, fig3c, fig4)");
}

ManifestRun read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed manifest: " + std::string(e.what()));
  }
  if (j.value("kind", "") != "run_manifest") throw ConfigError(path.string() + " is not a run manifest");
  return {j.at("command").get<std::string>(), j.value("figure", std::string()), j.at("config").get<RunConfig>()};
}

std::vector<std::string> validate_output(const fs::path& path) {
  std::vector<std::string> problems;
  std::ifstream in(path);
  if (!in) return {"cannot open " + path.string()};
  const std::string ext = path.extension().string();

  if (ext == ".json") {
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      return {"invalid JSON: " + std::string(e.what())};
    }
    if (j.value("schema_version", 0) != kOutputSchemaVersion) problems.push_back("missing or wrong schema_version");
    static const std::map<std::string, std::vector<std::string>> required{
        {"entanglement_report", {"R", "K", "PE", "var_single", "var_coin", "params"}},
        {"run_manifest", {"command", "config", "tool_version", "outputs", "headline", "wall_clock_seconds"}},
        {"scan_summary", {"metric", "peak", "fwhm_r", "fwhm_theta", "missing"}},
        {"mode_spectrum", {"eigenvalues", "K", "truncation", "modes"}},
        {"recipe_summary", {"figure", "checks"}},
        {"error", {"code", "message", "exit_code"}}};
    const std::string kind = j.value("kind", "");
    const auto it = required.find(kind);
    if (it == required.end()) {
      problems.push_back("unknown kind '" + kind + "'");
    } else {
      for (const auto& key : it->second)
        if (!j.contains(key)) problems.push_back("missing key '" + key + "'");
    }
    return problems;
  }

  std::string first;
  std::getline(in, first);
  if (ext == ".grid") {
    try {
      const json h = json::parse(first);
      if (h.value("schema_version", 0) != kGridSchemaVersion) problems.push_back("grid schema_version");
      for (const char* key : {"n_q", "n_k", "q_min", "q_max", "k_min", "k_max", "scheme", "params"})
        if (!h.contains(key)) problems.push_back(std::string("grid header lacks ") + key);
    } catch (const json::exception&) {
      problems.push_back("grid header is not JSON");
    }
    return problems;
  }
  if (ext == ".csv") {
    static const std::map<std::string, std::string> headers{
        {"scan_long", "r,theta,metric,value,flags"},
        {"mode_profile", "axis,coordinate,abs"},
        {"fwhm_curve", "eta,delta,fwhm_r,fwhm_theta,reference_2delta_over_eta"},
        {"coherence_cut", "cut,coordinate,K,R,R_over_2.2,PE"},
        {"dark_state_sweep", "delta,K,R,R_over_2.2,rel_gap"},
        {"amplitude_long", "dq,dk,v,re,im,abs2"}};
    const std::string prefix = "# schema_version=" + std::to_string(kOutputSchemaVersion) + " kind=";
    if (first.rfind(prefix, 0) != 0) return {"CSV lacks schema comment line"};
    const std::string kind = first.substr(prefix.size());
    std::string header;
    std::getline(in, header);
    const auto it = headers.find(kind);
    if (it == headers.end()) return {"unknown CSV kind '" + kind + "'"};
    if (header != it->second) problems.push_back("CSV header mismatch for " + kind);
    const auto columns = std::count(it->second.begin(), it->second.end(), ',') + 1;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      if (std::count(line.begin(), line.end(), ',') + 1 != columns) {
        problems.push_back("row " + std::to_string(row) + " has the wrong column count");
        break;
      }
    }
    return problems;
  }
  if (ext == ".svg") {
    if (first.rfind("<svg", 0) != 0) problems.push_back("not an SVG document");
    return problems;
  }
  return {"unknown output type " + ext};
}

}  // namespace recoil
