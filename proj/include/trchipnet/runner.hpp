// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#pragma once

#include "trchipnet/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace trchipnet::runner {

struct Output {
    std::vector<std::string> files;  // relative to the output directory
    nlohmann::json summary = nlohmann::json::object();
};

/// Runs the configured experiment and writes results.csv (plus experiment extras) and
/// manifest.json into `dir`, which is created if needed.
Output run(const config::ExperimentConfig& cfg, const chan::ChannelMatrix& channels, const std::filesystem::path& dir,
           unsigned threads);

/// Per-pair statistics (results.csv) and the pairwise correlation matrix (correlation.csv).
Output characterize(const chan::ChannelMatrix& channels, const std::filesystem::path& dir);

void write_manifest(const std::filesystem::path& dir, const config::ExperimentConfig& cfg, const Output& out);

}  // namespace trchipnet::runner
