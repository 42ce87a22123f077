#pragma once

#include <string>
#include <vector>

#include "flowmix/trainer.hpp"

namespace flowmix::cfg {

// Reads a whole file; InputError if it cannot be opened.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Flat TOML subset (key = value with strings, numbers, booleans and arrays)
// converted to a JSON object text. Covers everything a run config needs.
std::string toml_to_json(const std::string& toml_text);

// Loads a TrainConfig from .toml or .json, by extension.
train::TrainConfig load_config(const std::string& path);

inline const char* version_string() { return "flowmix 0.1.0"; }

// One manifest per command run: the effective config, seed, version, wall
// clock and produced files. Everything needed to reproduce the outputs (the
// wall clock is informational and deliberately not part of any output the
// determinism contract covers).
struct RunManifest {
    std::string command;
    std::string config_json; // effective config snapshot (JSON object text)
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    std::vector<std::string> outputs;

    std::string to_json() const;
};

void write_manifest(const std::string& path, const RunManifest& m);

} // namespace flowmix::cfg
