// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#pragma once

#include "trchipnet/chan.hpp"
#include "trchipnet/dsp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trchipnet::modem {

using Bits = std::vector<std::uint8_t>;

enum class Kind { ask, psk, ofdm };

std::string to_string(Kind k);
Kind kind_from_string(std::string_view s);

/// Modulation descriptor. For OFDM, `order` is the PSK order on each subcarrier and one
/// "symbol" of `samples_per_symbol` samples is one time-domain OFDM sample.
struct ModulationScheme {
    Kind kind = Kind::ask;
    int order = 2;
    double ask_ratio = 0.5;
    int subcarriers = 0;
    int samples_per_symbol = 4;
    int cyclic_prefix = 0;  // OFDM only, in OFDM samples

    static ModulationScheme ask(double ratio, int sps, int order = 2);
    static ModulationScheme psk(int order, int sps);
    static ModulationScheme ofdm(int subcarriers, int order, int sps, int cyclic_prefix);

    void validate() const;
    int bits_per_symbol() const;
    /// Bits consumed by one modulation unit (one symbol, or one OFDM block).
    Index bits_per_block() const;
    /// Nominal E|s|^2 of the unit constellation: 1 for PSK/OFDM, mean of squared ASK levels otherwise.
    double mean_symbol_power() const;
    /// Constellation points indexed by Gray-coded bit label (MSB first).
    std::vector<cplx> constellation() const;
};

/// Cyclic prefix in OFDM samples: the channel memory min(L - 1, sps * N / 2) expressed in
/// whole OFDM samples.
int default_cyclic_prefix(Index channel_length, int sps, int subcarriers);

struct Waveform {
    Eigen::VectorXcd samples;
    double sample_interval = 5e-12;
};

enum class DetectorKind { energy, coherent, matched_filter_coherent };

std::string to_string(DetectorKind k);
DetectorKind detector_from_string(std::string_view s);

struct DetectorConfig {
    DetectorKind kind = DetectorKind::energy;
    int pilot_symbols = 128;     // known prefix, stripped from the output
    Index sampling_offset = 0;   // start of symbol 0's integration window
    Index symbol_count = 0;      // 0: as many whole windows as the waveform holds

    void validate(const ModulationScheme& scheme) const;
};

/// What a coherent receiver knows about the link. `gain` is the complex gain of the
/// integrate-and-dump statistic for a unit symbol (coherent); `taps` is the raw channel
/// used to build the receive matched filter, with `amplitude` the transmit scale.
struct ChannelReference {
    std::optional<cplx> gain;
    Eigen::VectorXcd taps;
    double amplitude = 1.0;
};

// -- bit/symbol plumbing ---------------------------------------------------

constexpr unsigned gray_encode(unsigned i) { return i ^ (i >> 1); }
unsigned gray_decode(unsigned g);

std::vector<int> bits_to_labels(const Bits& bits, int bits_per_symbol);
Bits labels_to_bits(const std::vector<int>& labels, int bits_per_symbol);

/// Deterministic PRBS-7 pilot prefix for `pilot_symbols` symbols.
Bits pilot_bits(const ModulationScheme& scheme, int pilot_symbols);
Bits with_pilot(const Bits& payload, const ModulationScheme& scheme, int pilot_symbols);

/// Unit-constellation symbols (one per symbol for ASK/PSK; time-domain samples for OFDM).
Eigen::VectorXcd map_symbols(const Bits& bits, const ModulationScheme& scheme);

// -- transmit / receive ----------------------------------------------------

/// Rectangular pulse shaping of the mapped symbols; unscaled (unit constellation).
Waveform modulate(const Bits& bits, const ModulationScheme& scheme, double sample_interval = 5e-12);

Bits detect(const Waveform& received, const ModulationScheme& scheme, const DetectorConfig& det,
            const std::optional<ChannelReference>& reference = std::nullopt);

Bits ofdm_demodulate(const Waveform& received, const ModulationScheme& scheme, const chan::Cir& channel);

/// Per-subcarrier one-tap equalized symbols of a whole-block OFDM waveform received through
/// `channel_taps` (linear in the waveform).
Eigen::VectorXcd ofdm_equalize(const Eigen::VectorXcd& received, const ModulationScheme& scheme,
                               const Eigen::VectorXcd& channel_taps);

// -- detector building blocks ----------------------------------------------

Eigen::VectorXd window_energies(const Eigen::VectorXcd& y, int sps, Index offset, Index count);
/// Mean of each window (integrate-and-dump normalized by the window length).
Eigen::VectorXcd integrate_dump(const Eigen::VectorXcd& y, int sps, Index offset, Index count);

struct EnergyThresholds {
    std::vector<int> labels_by_energy;  // labels sorted by ascending trained energy
    std::vector<double> cuts;           // midpoints between consecutive level means
};

EnergyThresholds train_energy_detector(const Eigen::VectorXd& energies, const std::vector<int>& known_labels,
                                       int order);
std::vector<int> slice_energy(const Eigen::VectorXd& energies, const EnergyThresholds& t);
std::vector<int> slice_coherent(const Eigen::VectorXcd& z, cplx gain, const ModulationScheme& scheme);

/// Symbol-spaced response of the integrate-and-dump statistic to a rectangular pulse sent
/// through `q`, with the window of symbol 0 starting at `offset`. taps(center) is lag 0.
struct SymbolResponse {
    Eigen::VectorXcd taps;
    Index center = 0;
    cplx at(Index lag) const {
        const Index i = center + lag;
        return (i >= 0 && i < taps.size()) ? taps(i) : cplx(0.0);
    }
};

SymbolResponse symbol_response(const Eigen::VectorXcd& q, int sps, Index offset);

}  // namespace trchipnet::modem
