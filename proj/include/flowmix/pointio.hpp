#pragma once

#include <string>

#include "flowmix/points.hpp"

namespace flowmix::io {

// Supported formats: .xyz (whitespace-separated coordinates per line), .ply
// (ascii, float64 properties x[,y[,z]] plus optional int flow_id) and .csv
// (d coordinate columns plus optional integer id column). Coordinates are
// written with 17 significant digits so a write/read round-trip is lossless
// at f64.
void write_cloud(const std::string& path, const PointCloud& pc);
PointCloud read_cloud(const std::string& path);

} // namespace flowmix::io
