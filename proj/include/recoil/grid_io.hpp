#pragma once

#include <filesystem>

#include "recoil/amplitude.hpp"

namespace recoil {

inline constexpr int kGridSchemaVersion = 1;

/// Textual grid file: one JSON header line (schema_version, n_q, n_k, q_min/max,
/// k_min/max, scheme, ridge grading, norm, l2_mass, params fingerprint and params),
/// followed by n_q rows of 2*n_k numbers "re im ..." at full precision.
void write_grid(const std::filesystem::path& path, const JointAmplitudeGrid& grid);
JointAmplitudeGrid read_grid(const std::filesystem::path& path);

/// Header of a grid file as written by write_grid.
nlohmann::json grid_header(const JointAmplitudeGrid& grid);

/// Long-form CSV (dq, dk, v, re, im, abs2). Refuses grids above max_nodes.
void write_grid_csv(const std::filesystem::path& path, const JointAmplitudeGrid& grid,
                    std::size_t max_nodes = 1'000'000);

}  // namespace recoil
