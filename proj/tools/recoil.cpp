// Command-line front end: amplitude, report, scan, modes, reproduce.
#include <cmath>
#include <iostream>
#include <numbers>
#include <optional>

#include <CLI11.hpp>

#include "recoil/runner.hpp"

namespace {

using recoil::AxisSpec;
using recoil::RunConfig;

struct AxisFlags {
  std::optional<double> min, max;
  std::optional<int> n;

  std::optional<AxisSpec> build(const std::string& name, double def_min, double def_max, bool closed) const {
    if (!min && !max && !n) return std::nullopt;
    if (!n) throw recoil::ConfigError(name + " axis needs " + name + "-n");
    return AxisSpec{min.value_or(def_min), max.value_or(def_max), *n, closed};
  }
};

int emit_error(const recoil::Error& e, const std::optional<std::filesystem::path>& out_dir) {
  const auto doc = recoil::error_document(e);
  std::cout << doc.dump(2) << '\n';
  std::cerr << "error (" << recoil::to_string(e.code()) << "): " << e.what() << '\n';
  if (out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*out_dir, ec);
    std::ofstream f(*out_dir / "error.json");
    if (f) f << doc.dump(2) << '\n';
  }
  return static_cast<int>(e.code());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Atom-photon recoil entanglement: joint amplitude, R, K and phase entanglement"};
  app.set_version_flag("--version", std::string(RECOIL_VERSION));
  app.set_config("--config", "", "key = value configuration file (TOML/INI subset)");
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  std::optional<double> delta;
  std::vector<std::string> formats;
  std::string out_dir = cfg.out_dir.string();
  std::string from_manifest;
  AxisFlags r_axis, theta_axis;
  std::optional<double> dk0;

  auto& p = cfg.params;
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--grid-scale", cfg.grid_scale, "multiplies grid resolution in every direction")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--format", formats, "output formats (csv, json, svg); repeatable or comma-separated")
      ->delimiter(',')
      ->check(CLI::IsMember({"csv", "json", "svg"}));
  app.add_option("--gamma-a", p.gamma_a, "linewidth of transition a")->capture_default_str();
  app.add_option("--gamma-b", p.gamma_b, "linewidth of transition b")->capture_default_str();
  app.add_option("--omega-12", p.omega_12, "upper-level splitting")->capture_default_str();
  app.add_option("--delta", delta, "splitting in units of gamma_a (sets omega-12 = delta * gamma-a)");
  app.add_option("--epsilon", p.epsilon, "dipole alignment cosine")->capture_default_str();
  app.add_option("--eta", p.eta, "wavepacket parameter")->capture_default_str();
  app.add_option("--r", p.coherence_r, "log |A10/A20|")->capture_default_str();
  app.add_option("--theta", p.coherence_theta, "arg(A10/A20)")->capture_default_str();
  app.add_option("--dk0", dk0, "conditioning photon detuning (default: photon-marginal peak)");
  app.add_option("--max-grid-nodes", cfg.max_grid_nodes, "amplitude grid budget")->capture_default_str();
  app.add_option("--max-schmidt-entries", cfg.max_schmidt_entries, "decomposition matrix budget")
      ->capture_default_str();
  app.add_option("--from-manifest", from_manifest, "rerun the verb and configuration recorded in a manifest");

  auto* amplitude = app.add_subcommand("amplitude", "sample the normalized joint amplitude");
  auto* report = app.add_subcommand("report", "R, K, PE and variances at one point");
  report->add_option("--fixture", cfg.fixture, "built-in test kernel instead of the model")
      ->check(CLI::IsMember({"separable"}));
  auto* scan = app.add_subcommand("scan", "sweep the coherence (r, theta) plane");
  scan->add_option("--metric", cfg.metric, "R, K or PE")->check(CLI::IsMember({"R", "K", "PE"}))->capture_default_str();
  scan->add_option("--r-min", r_axis.min);
  scan->add_option("--r-max", r_axis.max);
  scan->add_option("--r-n", r_axis.n);
  scan->add_option("--theta-min", theta_axis.min);
  scan->add_option("--theta-max", theta_axis.max);
  scan->add_option("--theta-n", theta_axis.n);
  auto* modes = app.add_subcommand("modes", "Schmidt modes and spectrum");
  modes->add_option("--n-modes", cfg.n_modes, "number of modes to export")->capture_default_str();
  modes->add_option("--fixture", cfg.fixture, "built-in test kernel instead of the model")
      ->check(CLI::IsMember({"separable"}));
  std::string figure;
  auto* reproduce = app.add_subcommand("reproduce", "named figure recipe");
  reproduce->add_option("figure", figure, "fig2, fig2c, fig3, fig3c or fig4")
      ->required()
      ->check(CLI::IsMember(recoil::recipe_names()));
  // A config file or --from-manifest may stand in for the subcommand.
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return emit_error(recoil::ConfigError(e.what()), std::nullopt);
  }

  std::optional<std::filesystem::path> out_path;
  try {
    std::string verb;
    if (!from_manifest.empty()) {
      const recoil::ManifestRun run = recoil::read_manifest(from_manifest);
      cfg = run.config;
      if (app.count("--out")) cfg.out_dir = out_dir;
      verb = run.command;
      figure = run.figure;
    } else {
      if (app.get_subcommands().empty()) throw recoil::ConfigError("no verb given (amplitude, report, scan, modes, reproduce)");
      verb = app.get_subcommands().front()->get_name();
      cfg.out_dir = out_dir;
      if (delta) p.omega_12 = *delta * p.gamma_a;
      if (!formats.empty()) cfg.formats = {formats.begin(), formats.end()};
      cfg.dk0 = dk0;
      cfg.r_axis = r_axis.build("r", -1.0, 1.0, true);
      cfg.theta_axis = theta_axis.build("theta", 0.0, 2.0 * std::numbers::pi, true);
    }
    out_path = cfg.out_dir;

    recoil::RunOutcome outcome;
    if (verb == "amplitude") outcome = recoil::cmd_amplitude(cfg);
    else if (verb == "report") outcome = recoil::cmd_report(cfg);
    else if (verb == "scan") outcome = recoil::cmd_scan(cfg);
    else if (verb == "modes") outcome = recoil::cmd_modes(cfg);
    else if (verb == "reproduce") outcome = recoil::cmd_reproduce(figure, cfg);
    else throw recoil::ConfigError("unknown verb '" + verb + "'");

    nlohmann::json summary = {{"headline", outcome.headline}, {"manifest", outcome.manifest_path.string()}};
    std::cout << summary.dump(2) << '\n';
    (void)amplitude, (void)report, (void)scan, (void)modes, (void)reproduce;
    return 0;
  } catch (const recoil::Error& e) {
    return emit_error(e, out_path);
  } catch (const nlohmann::json::exception& e) {
    return emit_error(recoil::ConfigError(std::string("configuration: ") + e.what()), out_path);
  } catch (const std::bad_alloc&) {
    return emit_error(recoil::BudgetError("out of memory"), out_path);
  }
}
