#pragma once

#include "mmq/limits.hpp"
#include "mmq/simulate.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace mmq {

/// Doubles are written with 17 significant digits so that they read back bit-exact.
[[nodiscard]] std::string format_double(double v);

/// Comma-separated, '\n'-terminated. Rows may be empty, giving a header-only file.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// t, j_state, q_1..q_L
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryBundle& bundle);
/// t, rho_1..rho_L
void write_fluid_csv(const std::filesystem::path& path, const FluidSolution& fluid, int queues);
/// t, m_1..m_L, V_kl for k <= l in row-major order
void write_moments_csv(const std::filesystem::path& path, const OUMoments& moments, int queues);

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);

[[nodiscard]] std::vector<std::string> fluid_header(int queues);
[[nodiscard]] std::vector<std::string> moments_header(int queues);
[[nodiscard]] std::vector<std::string> trajectory_header(int queues);

}  // namespace mmq
