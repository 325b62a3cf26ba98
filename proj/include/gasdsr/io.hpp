#pragma once

#include <string>

#include "gasdsr/simulator.hpp"

namespace gasdsr {

/// Write-to-temp plus atomic rename; partial files never appear at `path`.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// Trajectory as rows (t, pipe, seg, rho, m).
std::string trajectory_to_csv(const Trajectory& traj, const GasNetwork& net, const Grid& grid);

/// Linepack series as rows (t, linepack_kg).
std::string linepack_to_csv(const Trajectory& traj);

} // namespace gasdsr
