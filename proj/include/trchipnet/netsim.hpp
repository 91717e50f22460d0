// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#pragma once

#include "trchipnet/chan.hpp"
#include "trchipnet/modem.hpp"
#include "trchipnet/tr.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trchipnet::netsim {

using chan::ChannelMatrix;
using chan::NodeId;

struct NoiseModel {
    double psd_dbm_per_hz = -174.0;
    double noise_figure_db = 10.0;
    std::optional<double> bandwidth;  // Hz; defaults to 1 / sample_interval

    void validate() const;
    /// Total complex noise power per sample in mW.
    double power_mw(double sample_interval) const;
    /// Model with the given per-sample power (mW) at the given sample interval.
    static NoiseModel from_power(double power_mw, double sample_interval);
    static NoiseModel none() { return {-INFINITY, 0.0, std::nullopt}; }
};

/// Per-sample AWGN of NoiseModel::power_mw, deterministic in `seed`.
modem::Waveform add_awgn(const modem::Waveform& x, const NoiseModel& noise, std::uint64_t seed);

struct LinkConfig {
    NodeId tx = 0;
    NodeId rx = 1;
    double tx_power_dbm = 10.0;
    double symbol_rate = 50e9;
    modem::ModulationScheme scheme = modem::ModulationScheme::ask(0.5, 4);
    modem::DetectorConfig detector;  // sampling_offset and symbol_count are set by the engine
    bool use_tr = true;
    std::optional<tr::FilterDegradation> degradation;

    /// Checks scheme/detector validity and rate * sps * Ts = 1 within 1e-6.
    void validate(double sample_interval) const;
    /// Copy with the symbol rate moved to `rate` and samples_per_symbol re-derived from it.
    LinkConfig at_rate(double rate, double sample_interval) const;
    /// Information bits per second carried by this link.
    double bit_rate() const;
};

/// Samples per symbol for `rate`, or nullopt when the rate is off the sample grid.
std::optional<int> grid_sps(double rate, double sample_interval);
/// Closest rate 1 / (k * Ts) with k >= 1.
double nearest_grid_rate(double rate, double sample_interval);

enum class SetMode { single, multi_tx, scatter, combined };

std::string to_string(SetMode m);
SetMode set_mode_from_string(std::string_view s);

struct LinkSet {
    std::vector<LinkConfig> links;
    SetMode mode = SetMode::single;

    /// Mode invariants plus per-link validation. All links must share one symbol rate.
    void validate(double sample_interval) const;
    static LinkSet single(const LinkConfig& link) { return {{link}, SetMode::single}; }
};

struct SimControl {
    std::int64_t min_bits = 100'000;
    std::int64_t max_errors = 100;
    std::int64_t max_bits = 10'000'000;
    Index block_samples = 1 << 17;  // target waveform length of one Monte Carlo block
    bool sample_level = false;      // force sample-rate waveforms even where the symbol-rate form is exact

    void validate() const;
};

/// Component powers (mW) of the receiver's decision statistic.
struct SinrBreakdown {
    double signal = 0.0;
    double isi = 0.0;
    double cci = 0.0;
    double noise = 0.0;
    double total = 0.0;  // measured power of the full statistic; 0 when not measured

    double sinr() const { return signal / (isi + cci + noise); }
    double sinr_db() const;
    /// Interference-limited ceiling signal / (ISI + CCI).
    double ceiling_db() const;
};

struct LinkResult {
    NodeId tx = 0;
    NodeId rx = 0;
    std::int64_t bits = 0;
    std::int64_t errors = 0;
    double ber = 0.0;
    double ber_ci = 0.0;  // 95% Wilson half-width
    SinrBreakdown sinr;
    Index sampling_offset = 0;
};

struct SimResult {
    std::vector<LinkResult> links;
    double aggregate_rate = 0.0;  // bits/s
    std::uint64_t seed = 0;

    std::int64_t total_bits() const;
    std::int64_t total_errors() const;
    /// Pooled BER over all links.
    double ber() const;
    /// Largest per-link BER.
    double worst_ber() const;
};

double wilson_half_width(std::int64_t errors, std::int64_t trials, double z = 1.959963984540054);

SimResult simulate_link(const ChannelMatrix& channels, const LinkConfig& link, const NoiseModel& noise,
                        const SimControl& control, std::uint64_t seed);

SimResult simulate_concurrent(const ChannelMatrix& channels, const LinkSet& set, const NoiseModel& noise,
                              const SimControl& control, std::uint64_t seed);

/// Deterministic decomposition at the sampling instants of link `index`. `tx_powers_dbm`
/// overrides the configured powers when non-empty.
SinrBreakdown measure_sinr(const ChannelMatrix& channels, const LinkSet& set, std::size_t index,
                           const NoiseModel& noise, const std::vector<double>& tx_powers_dbm = {});

// -- transmit/receive chain -----------------------------------------------------

/// Per-link transmit state: filter, amplitude, and the effective self channel.
struct LinkChain {
    std::optional<tr::TrFilter> filter;
    double amplitude = 1.0;                // sqrt(P_mW / Es)
    Eigen::VectorXcd self_channel;         // (g * h_self) or h_self, then any receive filter
    std::optional<Eigen::VectorXcd> receive_filter;
    Index sampling_offset = 0;
};

LinkChain build_chain(const ChannelMatrix& channels, const LinkConfig& link);

/// Scaled, precoded transmit waveform of each stream from its unit-constellation symbols.
std::vector<modem::Waveform> stream_waveforms(const ChannelMatrix& channels, const LinkSet& set,
                                              const std::vector<Eigen::VectorXcd>& symbols);

/// Noise-free input at `rx`: streams sharing a transmitter are summed before that
/// transmitter's channel, then all transmitters' contributions are added.
modem::Waveform received_waveform(const ChannelMatrix& channels, const LinkSet& set,
                                  const std::vector<modem::Waveform>& streams, NodeId rx);

// -- sweeps -------------------------------------------------------------------------

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware concurrency).
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

/// Threads from an explicit request, else TRCHIPNET_THREADS, else 0 (auto).
unsigned resolve_threads(std::optional<unsigned> requested);

struct SweepPoint {
    double x = 0.0;  // symbol rate, power, or order depending on the sweep
    SimResult result;
};

std::vector<SweepPoint> sweep_symbol_rate(const ChannelMatrix& channels, const LinkSet& set,
                                          const std::vector<double>& rates, const NoiseModel& noise,
                                          const SimControl& control, std::uint64_t seed, unsigned threads = 0);

/// Sets every link's transmit power to each grid value (dBm).
std::vector<SweepPoint> sweep_power(const ChannelMatrix& channels, const LinkSet& set,
                                    const std::vector<double>& powers_dbm, const NoiseModel& noise,
                                    const SimControl& control, std::uint64_t seed, unsigned threads = 0);

struct AggregatePoint {
    std::size_t link_count = 0;
    double symbol_rate = 0.0;
    SimResult result;
};

/// Every (set, rate) pair, grid order set-major.
std::vector<AggregatePoint> sweep_aggregate(const ChannelMatrix& channels, const std::vector<LinkSet>& sets,
                                            const std::vector<double>& rates, const NoiseModel& noise,
                                            const SimControl& control, std::uint64_t seed, unsigned threads = 0);

/// First grid rate (ascending) at which the worst link BER exceeds `threshold`; nullopt when none does.
std::optional<double> threshold_rate(const std::vector<AggregatePoint>& points, std::size_t link_count,
                                     double threshold = 1e-3);

struct OrderPoint {
    int order = 2;
    bool use_tr = true;
    double symbol_rate = 0.0;
    SimResult result;
};

struct OrderSummary {
    int order = 2;
    bool use_tr = true;
    double max_aggregate_rate = 0.0;  // 0 when no grid rate reaches the BER target
};

struct OrderSweep {
    std::vector<OrderPoint> points;
    std::vector<OrderSummary> summary;
};

/// PSK orders x {TR, non-TR} x rates; the summary keeps, per (order, TR), the largest aggregate
/// rate with pooled BER below `threshold`.
OrderSweep sweep_modulation_order(const ChannelMatrix& channels, const LinkSet& set, const std::vector<int>& orders,
                                  const std::vector<double>& rates, const NoiseModel& noise,
                                  const SimControl& control, std::uint64_t seed, unsigned threads = 0,
                                  double threshold = 1e-3);

struct DegradationPoint {
    tr::FilterDegradation degradation;
    double peak = 0.0;  // max |g' * h| of the degraded filter on the link's own channel
    SimResult result;
};

std::vector<DegradationPoint> sweep_degradation(const ChannelMatrix& channels, const LinkConfig& link,
                                                const std::vector<tr::FilterDegradation>& grid,
                                                const NoiseModel& noise, const SimControl& control,
                                                std::uint64_t seed, unsigned threads = 0);

}  // namespace trchipnet::netsim
