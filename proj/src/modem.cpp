// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#include "trchipnet/modem.hpp"

#include "trchipnet/error.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace trchipnet::modem {

std::string to_string(Kind k) {
    switch (k) {
        case Kind::ask: return "ask";
        case Kind::psk: return "psk";
        case Kind::ofdm: return "ofdm";
    }
    return "?";
}

Kind kind_from_string(std::string_view s) {
    if (s == "ask") return Kind::ask;
    if (s == "psk") return Kind::psk;
    if (s == "ofdm") return Kind::ofdm;
    throw Error("unknown modulation kind '" + std::string(s) + "'");
}

std::string to_string(DetectorKind k) {
    switch (k) {
        case DetectorKind::energy: return "energy";
        case DetectorKind::coherent: return "coherent";
        case DetectorKind::matched_filter_coherent: return "matched_filter_coherent";
    }
    return "?";
}

DetectorKind detector_from_string(std::string_view s) {
    if (s == "energy") return DetectorKind::energy;
    if (s == "coherent") return DetectorKind::coherent;
    if (s == "matched_filter_coherent") return DetectorKind::matched_filter_coherent;
    throw Error("unknown detector kind '" + std::string(s) + "'");
}

ModulationScheme ModulationScheme::ask(double ratio, int sps, int order) {
    return {Kind::ask, order, ratio, 0, sps, 0};
}

ModulationScheme ModulationScheme::psk(int order, int sps) { return {Kind::psk, order, 0.5, 0, sps, 0}; }

ModulationScheme ModulationScheme::ofdm(int subcarriers, int order, int sps, int cyclic_prefix) {
    return {Kind::ofdm, order, 0.5, subcarriers, sps, cyclic_prefix};
}

void ModulationScheme::validate() const {
    if (order < 2 || !std::has_single_bit(static_cast<unsigned>(order)))
        throw Error("modulation order must be a power of two >= 2");
    if (samples_per_symbol < 1) throw Error("samples_per_symbol must be >= 1");
    if (kind == Kind::ask && !(ask_ratio > 0.0 && ask_ratio < 1.0)) throw Error("ask ratio must lie in (0, 1)");
    if (kind == Kind::ofdm) {
        if (subcarriers < 2) throw Error("OFDM needs at least 2 subcarriers");
        if (cyclic_prefix < 0) throw Error("cyclic prefix must be >= 0");
    }
}

int ModulationScheme::bits_per_symbol() const { return std::countr_zero(static_cast<unsigned>(order)); }

Index ModulationScheme::bits_per_block() const {
    return kind == Kind::ofdm ? Index(subcarriers) * bits_per_symbol() : bits_per_symbol();
}

double ModulationScheme::mean_symbol_power() const {
    if (kind != Kind::ask) return 1.0;
    double s = 0.0;
    for (const cplx& c : constellation()) s += std::norm(c);
    return s / order;
}

unsigned gray_decode(unsigned g) {
    unsigned i = g;
    for (unsigned shift = 1; shift < 32; shift <<= 1) i ^= i >> shift;
    return i;
}

std::vector<cplx> ModulationScheme::constellation() const {
    std::vector<cplx> pts(static_cast<std::size_t>(order));
    for (unsigned label = 0; label < static_cast<unsigned>(order); ++label) {
        const unsigned pos = gray_decode(label);
        if (kind == Kind::ask) {
            pts[label] = ask_ratio + (1.0 - ask_ratio) * pos / (order - 1);
        } else {
            pts[label] = std::polar(1.0, 2.0 * std::numbers::pi * pos / order);
        }
    }
    return pts;
}

int default_cyclic_prefix(Index channel_length, int sps, int subcarriers) {
    const Index memory = std::min<Index>(channel_length - 1, Index(sps) * subcarriers / 2);
    return static_cast<int>((std::max<Index>(memory, 0) + sps - 1) / sps);
}

void DetectorConfig::validate(const ModulationScheme& scheme) const {
    if (pilot_symbols < 0) throw Error("pilot_symbols must be >= 0");
    if (kind == DetectorKind::energy) {
        if (pilot_symbols < 16) throw Error("energy detection needs at least 16 pilot symbols");
        if (scheme.kind != Kind::ask) throw Error("energy detection requires ASK");
    }
    if (scheme.kind == Kind::ofdm) throw Error("OFDM uses ofdm_demodulate, not detect");
    if (sampling_offset < 0) throw Error("sampling_offset must be >= 0");
}

// -- bits -------------------------------------------------------------------

std::vector<int> bits_to_labels(const Bits& bits, int bps) {
    if (bits.size() % static_cast<std::size_t>(bps) != 0) throw Error("bit count not divisible by bits per symbol");
    std::vector<int> labels(bits.size() / static_cast<std::size_t>(bps));
    for (std::size_t s = 0; s < labels.size(); ++s) {
        int v = 0;
        for (int b = 0; b < bps; ++b) v = (v << 1) | (bits[s * bps + b] & 1);
        labels[s] = v;
    }
    return labels;
}

Bits labels_to_bits(const std::vector<int>& labels, int bps) {
    Bits bits(labels.size() * static_cast<std::size_t>(bps));
    for (std::size_t s = 0; s < labels.size(); ++s)
        for (int b = 0; b < bps; ++b) bits[s * bps + b] = static_cast<std::uint8_t>((labels[s] >> (bps - 1 - b)) & 1);
    return bits;
}

Bits pilot_bits(const ModulationScheme& scheme, int pilot_symbols) {
    Bits bits(static_cast<std::size_t>(pilot_symbols) * scheme.bits_per_symbol());
    unsigned lfsr = 0x7f;
    for (auto& b : bits) {
        const unsigned fb = ((lfsr >> 6) ^ (lfsr >> 5)) & 1u;
        lfsr = ((lfsr << 1) | fb) & 0x7f;
        b = static_cast<std::uint8_t>(fb);
    }
    return bits;
}

Bits with_pilot(const Bits& payload, const ModulationScheme& scheme, int pilot_symbols) {
    Bits out = pilot_bits(scheme, pilot_symbols);
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

Eigen::VectorXcd map_symbols(const Bits& bits, const ModulationScheme& scheme) {
    scheme.validate();
    if (bits.size() % static_cast<std::size_t>(scheme.bits_per_block()) != 0)
        throw Error("bit count " + std::to_string(bits.size()) + " not divisible by " +
                    std::to_string(scheme.bits_per_block()));
    const auto labels = bits_to_labels(bits, scheme.bits_per_symbol());
    const auto pts = scheme.constellation();
    Eigen::VectorXcd syms(static_cast<Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) syms(static_cast<Index>(i)) = pts[static_cast<std::size_t>(labels[i])];
    if (scheme.kind != Kind::ofdm) return syms;

    const Index n = scheme.subcarriers;
    const Index cp = scheme.cyclic_prefix;
    const Index blocks = syms.size() / n;
    Eigen::VectorXcd out(blocks * (n + cp));
    Eigen::FFT<double> fft;
    Eigen::VectorXcd freq(n), time(n);
    for (Index b = 0; b < blocks; ++b) {
        freq = syms.segment(b * n, n);
        fft.inv(time, freq);
        time *= std::sqrt(static_cast<double>(n));
        out.segment(b * (n + cp), cp) = time.tail(cp);
        out.segment(b * (n + cp) + cp, n) = time;
    }
    return out;
}

Waveform modulate(const Bits& bits, const ModulationScheme& scheme, double sample_interval) {
    return {dsp::hold(map_symbols(bits, scheme), scheme.samples_per_symbol), sample_interval};
}

// -- detector blocks ----------------------------------------------------------

Eigen::VectorXd window_energies(const Eigen::VectorXcd& y, int sps, Index offset, Index count) {
    return dsp::window_sums(y.cwiseAbs2(), offset, sps, count);
}

Eigen::VectorXcd integrate_dump(const Eigen::VectorXcd& y, int sps, Index offset, Index count) {
    return dsp::window_sums(y, offset, sps, count) / static_cast<double>(sps);
}

EnergyThresholds train_energy_detector(const Eigen::VectorXd& energies, const std::vector<int>& known_labels,
                                       int order) {
    std::vector<double> sum(static_cast<std::size_t>(order), 0.0);
    std::vector<int> count(static_cast<std::size_t>(order), 0);
    const std::size_t n = std::min(known_labels.size(), static_cast<std::size_t>(energies.size()));
    for (std::size_t i = 0; i < n; ++i) {
        sum[static_cast<std::size_t>(known_labels[i])] += energies(static_cast<Index>(i));
        ++count[static_cast<std::size_t>(known_labels[i])];
    }
    std::vector<std::pair<double, int>> means;
    for (int l = 0; l < order; ++l) {
        if (count[static_cast<std::size_t>(l)] == 0) throw Error("pilot does not cover every amplitude level");
        means.emplace_back(sum[static_cast<std::size_t>(l)] / count[static_cast<std::size_t>(l)], l);
    }
    std::sort(means.begin(), means.end());
    EnergyThresholds t;
    for (std::size_t i = 0; i < means.size(); ++i) {
        t.labels_by_energy.push_back(means[i].second);
        if (i > 0) t.cuts.push_back(0.5 * (means[i - 1].first + means[i].first));
    }
    return t;
}

std::vector<int> slice_energy(const Eigen::VectorXd& energies, const EnergyThresholds& t) {
    std::vector<int> out(static_cast<std::size_t>(energies.size()));
    for (Index k = 0; k < energies.size(); ++k) {
        const auto level = std::upper_bound(t.cuts.begin(), t.cuts.end(), energies(k)) - t.cuts.begin();
        out[static_cast<std::size_t>(k)] = t.labels_by_energy[static_cast<std::size_t>(level)];
    }
    return out;
}

std::vector<int> slice_coherent(const Eigen::VectorXcd& z, cplx gain, const ModulationScheme& scheme) {
    if (std::abs(gain) == 0.0) throw Error("coherent detection with zero reference gain");
    const auto pts = scheme.constellation();
    std::vector<int> out(static_cast<std::size_t>(z.size()));
    for (Index k = 0; k < z.size(); ++k) {
        const cplx d = z(k) / gain;
        int best = 0;
        double best_dist = std::norm(d - pts[0]);
        for (std::size_t l = 1; l < pts.size(); ++l) {
            const double dist = std::norm(d - pts[l]);
            if (dist < best_dist) {
                best_dist = dist;
                best = static_cast<int>(l);
            }
        }
        out[static_cast<std::size_t>(k)] = best;
    }
    return out;
}

SymbolResponse symbol_response(const Eigen::VectorXcd& q, int sps, Index offset) {
    // p = q * rect(sps); z_k = mean of p over [offset + k*sps, offset + (k+1)*sps)
    const Eigen::VectorXcd p = dsp::convolve(q, Eigen::VectorXcd::Ones(sps).eval());
    const Index last = p.size() - 1;
    const auto floor_div = [](Index a, Index b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
    const Index first = floor_div(-offset, sps);          // smallest lag whose window ends at or after 0
    const Index final = floor_div(last - offset, sps);    // largest lag whose window starts at or before last
    SymbolResponse r;
    r.center = -first;
    r.taps = dsp::window_sums(p, offset + first * sps, sps, final - first + 1) / static_cast<double>(sps);
    return r;
}

// -- detect -------------------------------------------------------------------

Bits detect(const Waveform& received, const ModulationScheme& scheme, const DetectorConfig& det,
            const std::optional<ChannelReference>& reference) {
    scheme.validate();
    det.validate(scheme);
    const int sps = scheme.samples_per_symbol;
    const int bps = scheme.bits_per_symbol();

    Eigen::VectorXcd y = received.samples;
    cplx gain{1.0, 0.0};
    if (det.kind == DetectorKind::coherent) {
        if (!reference || !reference->gain) throw Error("coherent detection requires a reference gain");
        gain = *reference->gain;
    } else if (det.kind == DetectorKind::matched_filter_coherent) {
        if (!reference || reference->taps.size() == 0)
            throw Error("matched-filter detection requires the reference channel taps");
        const Eigen::VectorXcd g = dsp::time_reversed_conj(reference->taps) / reference->taps.norm();
        y = dsp::convolve(y, g);
        const Eigen::VectorXcd q = dsp::convolve(g, reference->taps);
        gain = reference->amplitude * symbol_response(q, sps, det.sampling_offset).at(0);
    }

    const Index available = std::max<Index>(0, (y.size() - det.sampling_offset) / sps);
    const Index count = det.symbol_count > 0 ? det.symbol_count : available;
    if (count < det.pilot_symbols) throw Error("received waveform shorter than the pilot span");

    std::vector<int> labels;
    if (det.kind == DetectorKind::energy) {
        const Eigen::VectorXd e = window_energies(y, sps, det.sampling_offset, count);
        const auto pilots = bits_to_labels(pilot_bits(scheme, det.pilot_symbols), bps);
        labels = slice_energy(e, train_energy_detector(e.head(det.pilot_symbols), pilots, scheme.order));
    } else {
        labels = slice_coherent(integrate_dump(y, sps, det.sampling_offset, count), gain, scheme);
    }
    labels.erase(labels.begin(), labels.begin() + det.pilot_symbols);
    return labels_to_bits(labels, bps);
}

Eigen::VectorXcd ofdm_equalize(const Eigen::VectorXcd& received, const ModulationScheme& scheme,
                               const Eigen::VectorXcd& channel_taps) {
    scheme.validate();
    if (scheme.kind != Kind::ofdm) throw Error("OFDM equalization requires an OFDM scheme");
    const Index n = scheme.subcarriers;
    const Index cp = scheme.cyclic_prefix;
    const int sps = scheme.samples_per_symbol;
    const Index block_len = (n + cp) * sps;
    if (received.size() % block_len != 0) throw Error("OFDM waveform length is not a whole number of blocks");
    const Index blocks = received.size() / block_len;

    const Eigen::VectorXcd r = integrate_dump(received, sps, 0, blocks * (n + cp));
    const SymbolResponse c = symbol_response(channel_taps, sps, 0);
    Eigen::VectorXcd wrapped = Eigen::VectorXcd::Zero(n);
    for (Index l = 0; l < c.taps.size(); ++l) wrapped((l - c.center + n * c.taps.size()) % n) += c.taps(l);

    Eigen::FFT<double> fft;
    Eigen::VectorXcd response(n), spectrum(n), time(n);
    fft.fwd(response, wrapped);
    const double scale = std::sqrt(static_cast<double>(n));

    Eigen::VectorXcd eq(blocks * n);
    for (Index b = 0; b < blocks; ++b) {
        time = r.segment(b * (n + cp) + cp, n);
        fft.fwd(spectrum, time);
        eq.segment(b * n, n) = spectrum.cwiseQuotient(response) / scale;
    }
    return eq;
}

Bits ofdm_demodulate(const Waveform& received, const ModulationScheme& scheme, const chan::Cir& channel) {
    const Eigen::VectorXcd eq = ofdm_equalize(received.samples, scheme, channel.samples());
    const ModulationScheme inner = ModulationScheme::psk(scheme.order, 1);
    return labels_to_bits(slice_coherent(eq, cplx(1.0, 0.0), inner), scheme.bits_per_symbol());
}

}  // namespace trchipnet::modem
