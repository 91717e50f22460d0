// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#pragma once

#include "trchipnet/dsp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trchipnet::chan {

/// Sampled complex-baseband channel impulse response. Immutable once constructed;
/// the constructor enforces: at least one sample, all finite, energy > 0,
/// sample_interval > 0 and start_delay >= 0.
class ChannelImpulseResponse {
public:
    ChannelImpulseResponse(Eigen::VectorXcd samples, double sample_interval, double start_delay = 0.0);

    const Eigen::VectorXcd& samples() const noexcept { return samples_; }
    double sample_interval() const noexcept { return sample_interval_; }
    double start_delay() const noexcept { return start_delay_; }
    Index size() const noexcept { return samples_.size(); }
    double energy() const noexcept { return energy_; }
    double norm() const { return std::sqrt(energy_); }
    double time_at(Index n) const noexcept { return start_delay_ + static_cast<double>(n) * sample_interval_; }

    friend bool operator==(const ChannelImpulseResponse& a, const ChannelImpulseResponse& b) {
        return a.sample_interval_ == b.sample_interval_ && a.start_delay_ == b.start_delay_ &&
               a.samples_.size() == b.samples_.size() && a.samples_ == b.samples_;
    }

private:
    Eigen::VectorXcd samples_;
    double sample_interval_;
    double start_delay_;
    double energy_;
};

using Cir = ChannelImpulseResponse;

/// True when two sample intervals agree to within floating-point noise.
bool same_interval(double a, double b);

using NodeId = int;
using NodePair = std::pair<NodeId, NodeId>;

/// (tx, rx)-indexed CIR set over an N-node package.
class ChannelMatrix {
public:
    ChannelMatrix(int node_count, bool reciprocal);

    int node_count() const noexcept { return node_count_; }
    bool reciprocal() const noexcept { return reciprocal_; }
    double sample_interval() const noexcept { return sample_interval_; }

    /// Inserts (tx, rx). With the reciprocal flag set, a present (rx, tx) entry must be identical.
    void set(NodeId tx, NodeId rx, Cir cir);
    bool contains(NodeId tx, NodeId rx) const;
    /// Looks up (tx, rx), falling back to (rx, tx) when reciprocal. Throws if neither exists.
    const Cir& at(NodeId tx, NodeId rx) const;

    /// Stored entries only (reciprocal fill-ins are not duplicated).
    const std::map<NodePair, Cir>& entries() const noexcept { return entries_; }

private:
    void check_node(NodeId id) const;

    int node_count_;
    bool reciprocal_;
    double sample_interval_ = 0.0;
    std::map<NodePair, Cir> entries_;
};

/// Poisson-arrival exponential-decay multipath with a Rician line-of-sight tap.
struct ReverbChannelParams {
    double propagation_delay = 0.05e-9;  // first arrival t0 [s]
    double decay_constant = 0.5e-9;      // power-decay tau [s]
    double tap_rate = 100e9;             // arrivals per second
    double rician_k = 1.0;               // LOS-to-diffuse power ratio; may be +inf
    double duration = 5e-9;              // CIR truncation [s]
    double path_gain_db = -40.0;
    double sample_interval = 5e-12;

    void validate() const;
};

/// Named presets: "inter-chip" and "intra-chip".
ReverbChannelParams preset(std::string_view name);
std::vector<std::string> preset_names();

Cir generate_reverberant_cir(const ReverbChannelParams& params, std::uint64_t seed);

/// Reciprocal matrix for every unordered node pair, one draw per pair. The "package"
/// topology groups nodes three per chip and uses the intra-chip preset for pairs on
/// the same chip and inter-chip otherwise; any other preset name applies to all pairs.
ChannelMatrix generate_channel_matrix(std::string_view topology, int node_count, std::uint64_t seed);

/// CSV with header `time_s,real,imag`.
Cir load_cir(const std::filesystem::path& path);
void save_cir(const std::filesystem::path& path, const Cir& cir);
void save_taps(const std::filesystem::path& path, const Eigen::VectorXcd& taps, double sample_interval,
               double start_delay = 0.0);

/// JSON manifest: `"tx-rx"` keys mapping to CIR file paths (relative to the manifest),
/// plus `"reciprocal"` and optional `"node_count"`.
ChannelMatrix load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& dir, const ChannelMatrix& channels,
                   const std::string& filename = "manifest.json");

double rms_delay_spread(const Cir& cir);
double mean_delay(const Cir& cir);

/// Peak normalized cross-correlation over all lags, in [0, 1].
double channel_correlation(const Cir& a, const Cir& b);

/// Link as seen by the correlation table: (tx, rx).
using LinkEnds = std::pair<NodeId, NodeId>;

/// Pairwise correlation table for a set of receiver-targeted links. The directional entry
/// for (i, j) correlates link i's own channel (its TR filter source) with the channel from
/// link i's transmitter to link j's receiver; the table is symmetrized by taking the larger
/// of the two directions. Diagonal is 1.
Eigen::MatrixXd correlation_matrix(const ChannelMatrix& channels, const std::vector<LinkEnds>& links);

}  // namespace trchipnet::chan
