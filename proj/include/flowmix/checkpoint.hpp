#pragma once

#include <string>

#include "flowmix/nn.hpp"

namespace flowmix::ckpt {

// Binary checkpoint: magic "FLMX1\n", a uint64 length-prefixed JSON metadata
// blob (topology + anything the caller wants to persist), then per registry
// entry: name, rows, cols and raw little-endian f64 data, in registry order.
// Round-trips are lossless at f64.
void save(const std::string& path, const nn::ParamRegistry& reg, const std::string& meta_json);

// Loads into an existing registry; names and shapes must match exactly.
// Returns the metadata JSON blob.
std::string load(const std::string& path, nn::ParamRegistry& reg);

// Reads just the metadata blob (to reconstruct topology before loading).
std::string peek_meta(const std::string& path);

} // namespace flowmix::ckpt
