#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "recoil/core_model.hpp"
#include "recoil/errors.hpp"

namespace recoil {

inline constexpr int kOutputSchemaVersion = 1;

struct AxisSpec {
  double min = 0.0;
  double max = 0.0;
  int n = 0;
  bool include_max = true;  ///< false gives a half-open axis such as [0, 2 pi)

  std::vector<double> values() const;
};

/// Everything a run depends on. Deterministic: no seeds, no clocks.
struct RunConfig {
  AtomParams params;
  double grid_scale = 1.0;
  std::filesystem::path out_dir = "recoil_out";
  std::set<std::string> formats{"csv", "json"};
  std::string metric = "R";
  std::optional<AxisSpec> r_axis;
  std::optional<AxisSpec> theta_axis;
  int n_modes = 3;
  std::string fixture;  ///< "" or "separable"
  std::optional<double> dk0;
  std::size_t max_grid_nodes = 40'000'000;
  std::size_t max_schmidt_entries = 12'000'000;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Result of one CLI verb: the files it wrote and its manifest.
struct RunOutcome {
  nlohmann::json headline;
  nlohmann::json manifest;
  std::vector<std::filesystem::path> files;
  std::filesystem::path manifest_path;
};

/// Headline entanglement measures at a single point as a JSON document.
nlohmann::json entanglement_report(const RunConfig& config);

RunOutcome cmd_amplitude(const RunConfig& config);
RunOutcome cmd_report(const RunConfig& config);
RunOutcome cmd_scan(const RunConfig& config);
RunOutcome cmd_modes(const RunConfig& config);

/// Named figure recipes: fig2, fig2c, fig3, fig3c, fig4.
RunOutcome cmd_reproduce(const std::string& figure, const RunConfig& config);
const std::vector<std::string>& recipe_names();

/// Machine-readable error body for a failed verb.
nlohmann::json error_document(const Error& error);

/// Verb and configuration recorded in a manifest.
struct ManifestRun {
  std::string command;
  std::string figure;
  RunConfig config;
};
ManifestRun read_manifest(const std::filesystem::path& path);

/// Checks one emitted file against its schema; returns a list of problems (empty when valid).
std::vector<std::string> validate_output(const std::filesystem::path& path);

}  // namespace recoil
