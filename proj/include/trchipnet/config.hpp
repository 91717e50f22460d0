// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#pragma once

#include "trchipnet/chan.hpp"
#include "trchipnet/netsim.hpp"
#include "trchipnet/tr.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace trchipnet::config {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

struct Violation {
    std::string path;  // JSON path, e.g. $.links[0].symbol_rate
    std::string message;
};

struct ChannelSource {
    std::string source = "generate";  // "generate" | "manifest"
    std::string topology = "inter-chip";
    int nodes = 2;
    std::uint64_t seed = 1;
    std::string manifest;  // as written in the config
    std::filesystem::path manifest_path;  // resolved against the config directory
};

struct SweepConfig {
    std::vector<double> rates;
    std::vector<double> powers_dbm{-10, -5, 0, 5, 10, 15, 20};
    std::vector<int> orders{2, 4, 8, 16};
    std::vector<tr::FilterDegradation> degradations;
    double ber_threshold = 1e-3;
};

struct SchedulerConfig {
    double p_min_dbm = -10.0;
    double p_max_dbm = 20.0;
    std::optional<double> sinr_target_db;  // required for the schedule experiment
};

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    std::string experiment;
    std::uint64_t seed = 1;
    ChannelSource channels;
    netsim::NoiseModel noise;
    netsim::SimControl control;
    std::vector<netsim::LinkConfig> links;
    netsim::SetMode mode = netsim::SetMode::single;
    SweepConfig sweep;
    SchedulerConfig scheduler;
    std::string output = "out";
};

const std::vector<std::string>& experiment_kinds();

struct Loaded {
    ExperimentConfig config;
    std::optional<chan::ChannelMatrix> channels;
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

/// Full schema and cross-field validation; the channel source is resolved (generated or
/// loaded) so grid, entry and length checks can run. Never throws for bad content.
Loaded load(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Loaded load_file(const std::filesystem::path& path);

/// Resolved configuration with every default materialized; load() of the result reproduces it.
nlohmann::json to_json(const ExperimentConfig& cfg);

chan::ChannelMatrix resolve_channels(const ChannelSource& src);

}  // namespace trchipnet::config
