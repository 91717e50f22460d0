// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#include "trchipnet/netsim.hpp"

#include "trchipnet/error.hpp"
#include "trchipnet/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace trchipnet::netsim {

namespace {

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

Eigen::VectorXcd gaussian_noise(Index n, double variance, Rng& rng) {
    Eigen::VectorXcd out(n);
    std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
    for (Index i = 0; i < n; ++i) {
        const double re = nd(rng);
        const double im = nd(rng);
        out(i) = {re, im};
    }
    return out;
}

modem::Bits random_bits(std::size_t n, Rng& rng) {
    modem::Bits bits(n);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 64 == 0) word = rng();
        bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
    }
    return bits;
}

std::string link_name(const LinkConfig& l) { return std::to_string(l.tx) + "-" + std::to_string(l.rx); }

void add_into(Eigen::VectorXcd& acc, const Eigen::VectorXcd& v) {
    if (v.size() > acc.size()) {
        const Index old = acc.size();
        acc.conservativeResize(v.size());
        acc.tail(v.size() - old).setZero();
    }
    acc.head(v.size()) += v;
}

}  // namespace

// -- noise ----------------------------------------------------------------------

void NoiseModel::validate() const {
    if (std::isnan(psd_dbm_per_hz) || psd_dbm_per_hz == INFINITY) throw Error("noise psd must be finite or -inf");
    if (!std::isfinite(noise_figure_db)) throw Error("noise figure must be finite");
    if (bandwidth && !(*bandwidth > 0.0 && std::isfinite(*bandwidth))) throw Error("noise bandwidth must be > 0");
}

double NoiseModel::power_mw(double sample_interval) const {
    validate();
    if (psd_dbm_per_hz == -INFINITY) return 0.0;
    return std::pow(10.0, (psd_dbm_per_hz + noise_figure_db) / 10.0) * bandwidth.value_or(1.0 / sample_interval);
}

NoiseModel NoiseModel::from_power(double power_mw, double sample_interval) {
    if (!(power_mw >= 0.0)) throw Error("noise power must be >= 0");
    return {power_mw > 0.0 ? 10.0 * std::log10(power_mw * sample_interval) : -INFINITY, 0.0, std::nullopt};
}

modem::Waveform add_awgn(const modem::Waveform& x, const NoiseModel& noise, std::uint64_t seed) {
    const double var = noise.power_mw(x.sample_interval);
    if (var == 0.0) return x;
    Rng rng(seed);
    return {x.samples + gaussian_noise(x.samples.size(), var, rng), x.sample_interval};
}

// -- configuration ----------------------------------------------------------------

std::optional<int> grid_sps(double rate, double sample_interval) {
    if (!(rate > 0.0) || !std::isfinite(rate)) return std::nullopt;
    const double k = std::round(1.0 / (rate * sample_interval));
    if (k < 1.0 || k > 1e9) return std::nullopt;
    if (std::abs(rate * k * sample_interval - 1.0) > 1e-6) return std::nullopt;
    return static_cast<int>(k);
}

double nearest_grid_rate(double rate, double sample_interval) {
    const double k = std::max(1.0, std::round(1.0 / (rate * sample_interval)));
    return 1.0 / (k * sample_interval);
}

void LinkConfig::validate(double sample_interval) const {
    const std::string name = "link " + link_name(*this);
    if (tx == rx) throw Error(name + ": tx and rx must differ");
    if (!std::isfinite(tx_power_dbm)) throw Error(name + ": tx_power_dbm must be finite");
    scheme.validate();
    if (scheme.kind != modem::Kind::ofdm) detector.validate(scheme);
    const auto sps = grid_sps(symbol_rate, sample_interval);
    if (!sps)
        throw Error(name + ": symbol_rate " + std::to_string(symbol_rate) + " is off the sample grid (nearest " +
                    std::to_string(nearest_grid_rate(symbol_rate, sample_interval)) + ")");
    if (*sps != scheme.samples_per_symbol)
        throw Error(name + ": symbol_rate implies " + std::to_string(*sps) + " samples per symbol but the scheme has " +
                    std::to_string(scheme.samples_per_symbol));
    if (degradation) {
        if (!use_tr) throw Error(name + ": filter degradation requires use_tr");
        degradation->validate();
    }
}

LinkConfig LinkConfig::at_rate(double rate, double sample_interval) const {
    const auto sps = grid_sps(rate, sample_interval);
    if (!sps)
        throw Error("symbol rate " + std::to_string(rate) + " is off the sample grid (nearest " +
                    std::to_string(nearest_grid_rate(rate, sample_interval)) + ")");
    LinkConfig out = *this;
    out.symbol_rate = rate;
    out.scheme.samples_per_symbol = *sps;
    return out;
}

double LinkConfig::bit_rate() const {
    const double r = symbol_rate * scheme.bits_per_symbol();
    if (scheme.kind != modem::Kind::ofdm) return r;
    return r * scheme.subcarriers / static_cast<double>(scheme.subcarriers + scheme.cyclic_prefix);
}

std::string to_string(SetMode m) {
    switch (m) {
        case SetMode::single: return "single";
        case SetMode::multi_tx: return "multi_tx";
        case SetMode::scatter: return "scatter";
        case SetMode::combined: return "combined";
    }
    return "?";
}

SetMode set_mode_from_string(std::string_view s) {
    if (s == "single") return SetMode::single;
    if (s == "multi_tx") return SetMode::multi_tx;
    if (s == "scatter") return SetMode::scatter;
    if (s == "combined") return SetMode::combined;
    throw Error("unknown link-set mode '" + std::string(s) + "'");
}

void LinkSet::validate(double sample_interval) const {
    if (links.empty()) throw Error("link set is empty");
    for (const auto& l : links) l.validate(sample_interval);

    std::set<NodeId> txs, rxs;
    for (const auto& l : links) {
        txs.insert(l.tx);
        if (!rxs.insert(l.rx).second) throw Error("receiver " + std::to_string(l.rx) + " appears in more than one link");
    }
    switch (mode) {
        case SetMode::single:
            if (links.size() != 1) throw Error("single mode takes exactly one link");
            break;
        case SetMode::multi_tx:
            if (txs.size() != links.size()) throw Error("multi_tx mode requires a distinct transmitter per link");
            break;
        case SetMode::scatter:
            if (txs.size() != 1) throw Error("scatter mode requires all links to share one transmitter");
            break;
        case SetMode::combined:
            break;
    }

    const auto& s0 = links.front().scheme;
    for (const auto& l : links) {
        if (l.symbol_rate != links.front().symbol_rate)
            throw Error("all links in a set must share one symbol rate");
        const bool ofdm = l.scheme.kind == modem::Kind::ofdm;
        if (ofdm != (s0.kind == modem::Kind::ofdm) ||
            (ofdm && (l.scheme.subcarriers != s0.subcarriers || l.scheme.cyclic_prefix != s0.cyclic_prefix)))
            throw Error("all links in a set must share one block structure");
    }
}

void SimControl::validate() const {
    if (min_bits < 10'000) throw Error("min_bits must be >= 10000");
    if (max_errors < 1) throw Error("max_errors must be >= 1");
    if (max_bits < min_bits) throw Error("max_bits must be >= min_bits");
    if (block_samples < 1) throw Error("block_samples must be >= 1");
}

double SinrBreakdown::sinr_db() const { return 10.0 * std::log10(sinr()); }
double SinrBreakdown::ceiling_db() const { return 10.0 * std::log10(signal / (isi + cci)); }

std::int64_t SimResult::total_bits() const {
    std::int64_t n = 0;
    for (const auto& l : links) n += l.bits;
    return n;
}

std::int64_t SimResult::total_errors() const {
    std::int64_t n = 0;
    for (const auto& l : links) n += l.errors;
    return n;
}

double SimResult::ber() const {
    const auto n = total_bits();
    return n ? static_cast<double>(total_errors()) / static_cast<double>(n) : 0.0;
}

double SimResult::worst_ber() const {
    double w = 0.0;
    for (const auto& l : links) w = std::max(w, l.ber);
    return w;
}

double wilson_half_width(std::int64_t errors, std::int64_t trials, double z) {
    if (trials <= 0) return 0.0;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(errors) / n;
    return z / (1.0 + z * z / n) * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n));
}

// -- chain ------------------------------------------------------------------------

LinkChain build_chain(const ChannelMatrix& channels, const LinkConfig& link) {
    const chan::Cir& h = channels.at(link.tx, link.rx);
    LinkChain c;
    c.amplitude = std::sqrt(dbm_to_mw(link.tx_power_dbm) / link.scheme.mean_symbol_power());
    if (link.use_tr) {
        tr::TrFilter g = tr::build_tr_filter(h, link_name(link));
        if (link.degradation) g = tr::degrade_filter(g, *link.degradation);
        c.self_channel = dsp::convolve(g.taps, h.samples());
        c.filter = std::move(g);
    } else {
        c.self_channel = h.samples();
    }
    if (link.detector.kind == modem::DetectorKind::matched_filter_coherent &&
        link.scheme.kind != modem::Kind::ofdm) {
        Eigen::VectorXcd f = dsp::time_reversed_conj(c.self_channel) / c.self_channel.norm();
        c.self_channel = dsp::convolve(f, c.self_channel);
        c.receive_filter = std::move(f);
    }
    c.sampling_offset = link.scheme.kind == modem::Kind::ofdm ? 0 : dsp::argmax_abs(c.self_channel);
    return c;
}

namespace {

// Path from stream j's symbol waveform to receiver i's decision input (excluding amplitude).
Eigen::VectorXcd path_response(const ChannelMatrix& channels, const LinkConfig& src, const LinkChain& src_chain,
                               const LinkConfig& dst, const LinkChain& dst_chain) {
    const chan::Cir& h = channels.at(src.tx, dst.rx);
    Eigen::VectorXcd p = src_chain.filter ? dsp::convolve(src_chain.filter->taps, h.samples()) : h.samples();
    if (dst_chain.receive_filter) p = dsp::convolve(*dst_chain.receive_filter, p);
    return p;
}

struct Plan {
    std::vector<LinkChain> chains;
    std::vector<std::vector<Eigen::VectorXcd>> paths;  // paths[j][i]: stream j into receiver i
    int sps = 1;
    Index unit = 1;   // waveform samples per modulation unit
    Index units_history = 0;
    Index units_payload = 1;
    bool ofdm = false;
};

Plan make_plan(const ChannelMatrix& channels, const LinkSet& set, const SimControl& control) {
    Plan p;
    const std::size_t n = set.links.size();
    for (const auto& l : set.links) p.chains.push_back(build_chain(channels, l));
    p.paths.resize(n);
    Index longest = 1;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            p.paths[j].push_back(i == j ? p.chains[i].self_channel
                                        : path_response(channels, set.links[j], p.chains[j], set.links[i],
                                                        p.chains[i]));
            longest = std::max(longest, p.paths[j].back().size());
        }
    }
    const auto& s = set.links.front().scheme;
    p.sps = s.samples_per_symbol;
    p.ofdm = s.kind == modem::Kind::ofdm;
    p.unit = p.ofdm ? Index(s.subcarriers + s.cyclic_prefix) * p.sps : p.sps;
    p.units_history = (longest + p.unit - 1) / p.unit + 1;
    p.units_payload = std::max<Index>(p.ofdm ? 1 : 64, control.block_samples / p.unit);
    return p;
}

struct Accum {
    std::int64_t bits = 0;
    std::int64_t errors = 0;
    double sig = 0.0, isi = 0.0, cci = 0.0, noise = 0.0, total = 0.0;
    Index samples = 0;
    std::optional<modem::EnergyThresholds> thresholds;
};

}  // namespace

SimResult simulate_concurrent(const ChannelMatrix& channels, const LinkSet& set, const NoiseModel& noise,
                              const SimControl& control, std::uint64_t seed) {
    set.validate(channels.sample_interval());
    control.validate();
    noise.validate();
    const Plan plan = make_plan(channels, set, control);
    const std::size_t n = set.links.size();
    const double variance = noise.power_mw(channels.sample_interval());
    const Index H = plan.units_history;
    const Index B = plan.units_payload;
    const Index K = 2 * H + B;

    // A coherent receiver without a receive filter only sees the integrate-and-dump
    // statistic, which is the symbol-rate convolution of each stream with its symbol
    // response plus CN(0, sigma^2 / sps) noise; no sample-rate waveform is needed.
    std::vector<bool> symbol_domain(n, false);
    std::vector<std::vector<modem::SymbolResponse>> responses(n);  // responses[i][j]: stream j at receiver i
    for (std::size_t i = 0; i < n; ++i) {
        const LinkChain& c = plan.chains[i];
        symbol_domain[i] = !control.sample_level && !plan.ofdm &&
                           set.links[i].detector.kind == modem::DetectorKind::coherent && !c.receive_filter;
        if (!plan.ofdm)
            for (std::size_t j = 0; j < n; ++j)
                responses[i].push_back(modem::symbol_response(plan.paths[j][i], plan.sps, c.sampling_offset));
    }

    std::vector<Accum> acc(n);
    for (std::uint64_t block = 0;; ++block) {
        // Transmit side: unit-constellation symbols per stream.
        std::vector<Eigen::VectorXcd> units(n);
        std::vector<modem::Bits> payload(n);
        std::vector<Index> pilot(n, 0);
        for (std::size_t j = 0; j < n; ++j) {
            const auto& l = set.links[j];
            Rng rng(derive_seed(seed, {1, j, block}));
            const auto bpu = static_cast<std::size_t>(l.scheme.bits_per_block());
            modem::Bits bits = random_bits(bpu * static_cast<std::size_t>(K), rng);
            if (block == 0 && !plan.ofdm && l.detector.kind == modem::DetectorKind::energy) {
                pilot[j] = l.detector.pilot_symbols;
                const modem::Bits pb = modem::pilot_bits(l.scheme, l.detector.pilot_symbols);
                if (static_cast<Index>(pb.size()) > static_cast<Index>(bpu) * B)
                    throw Error("pilot longer than one simulation block");
                std::copy(pb.begin(), pb.end(), bits.begin() + static_cast<std::ptrdiff_t>(bpu * H));
            }
            payload[j].assign(bits.begin() + static_cast<std::ptrdiff_t>(bpu * H),
                              bits.begin() + static_cast<std::ptrdiff_t>(bpu * (H + B)));
            units[j] = modem::map_symbols(bits, l.scheme);
        }
        std::vector<Eigen::VectorXcd> held(n);  // scaled sample-rate waveforms, built on first use
        auto waveform = [&](std::size_t j) -> const Eigen::VectorXcd& {
            if (held[j].size() == 0) held[j] = dsp::hold(units[j], plan.sps) * plan.chains[j].amplitude;
            return held[j];
        };

        for (std::size_t i = 0; i < n; ++i) {
            const auto& l = set.links[i];
            const LinkChain& c = plan.chains[i];
            Accum& a = acc[i];
            const int bps = l.scheme.bits_per_symbol();
            Rng noise_rng(derive_seed(seed, {2, i, block}));

            modem::Bits detected;
            if (symbol_domain[i]) {
                auto statistic = [&](std::size_t j) {
                    const modem::SymbolResponse& r = responses[i][j];
                    const Eigen::VectorXcd full = dsp::convolve(units[j], r.taps);
                    return Eigen::VectorXcd(full.segment(H + r.center, B) * plan.chains[j].amplitude);
                };
                const Eigen::VectorXcd self = statistic(i);
                Eigen::VectorXcd cross = Eigen::VectorXcd::Zero(B);
                for (std::size_t j = 0; j < n; ++j)
                    if (j != i) cross += statistic(j);
                const Eigen::VectorXcd nz = variance > 0.0 ? gaussian_noise(B, variance / plan.sps, noise_rng)
                                                           : Eigen::VectorXcd::Zero(B);
                const Eigen::VectorXcd z = self + cross + nz;
                const cplx gain = c.amplitude * responses[i][i].at(0);
                detected = modem::labels_to_bits(modem::slice_coherent(z, gain, l.scheme), bps);

                const Eigen::VectorXcd z_sig = gain * units[i].segment(H, B);
                a.sig += z_sig.squaredNorm();
                a.isi += (self - z_sig).squaredNorm();
                a.cci += cross.squaredNorm();
                a.noise += nz.squaredNorm();
                a.total += z.squaredNorm();
                a.samples += B;
            } else {
                Eigen::VectorXcd self = dsp::convolve(waveform(i), plan.paths[i][i]);
                Eigen::VectorXcd cross = Eigen::VectorXcd::Zero(self.size());
                for (std::size_t j = 0; j < n; ++j)
                    if (j != i) add_into(cross, dsp::convolve(waveform(j), plan.paths[j][i]));
                const Index len = std::max(self.size(), cross.size());
                add_into(self, Eigen::VectorXcd::Zero(len));
                add_into(cross, Eigen::VectorXcd::Zero(len));

                Eigen::VectorXcd nz = Eigen::VectorXcd::Zero(len);
                if (variance > 0.0) {
                    nz = gaussian_noise(len, variance, noise_rng);
                    if (c.receive_filter) nz = dsp::convolve(nz, *c.receive_filter).head(len).eval();
                }
                const Eigen::VectorXcd y = self + cross + nz;

                if (plan.ofdm) {
                    const Index start = H * plan.unit;
                    const Index span = B * plan.unit;
                    const Eigen::VectorXcd ref = c.self_channel * c.amplitude;
                    const Eigen::VectorXcd eq = modem::ofdm_equalize(y.segment(start, span), l.scheme, ref);
                    const modem::ModulationScheme inner = modem::ModulationScheme::psk(l.scheme.order, 1);
                    detected = modem::labels_to_bits(modem::slice_coherent(eq, cplx(1.0), inner), bps);
                    const Eigen::VectorXcd s = modem::map_symbols(payload[i], inner);
                    const Eigen::VectorXcd e_self = modem::ofdm_equalize(self.segment(start, span), l.scheme, ref) - s;
                    const Eigen::VectorXcd e_cross = modem::ofdm_equalize(cross.segment(start, span), l.scheme, ref);
                    const Eigen::VectorXcd e_noise = modem::ofdm_equalize(nz.segment(start, span), l.scheme, ref);
                    a.sig += s.squaredNorm();
                    a.isi += e_self.squaredNorm();
                    a.cci += e_cross.squaredNorm();
                    a.noise += e_noise.squaredNorm();
                    a.total += eq.squaredNorm();
                    a.samples += s.size();
                } else {
                    const Index off = c.sampling_offset + H * plan.sps;
                    const cplx gain = c.amplitude * responses[i][i].at(0);
                    const Eigen::VectorXcd z = modem::integrate_dump(y, plan.sps, off, B);
                    std::vector<int> labels;
                    if (l.detector.kind == modem::DetectorKind::energy) {
                        const Eigen::VectorXd e = modem::window_energies(y, plan.sps, off, B);
                        if (!a.thresholds) {
                            const auto known = modem::bits_to_labels(modem::pilot_bits(l.scheme, pilot[i]), bps);
                            a.thresholds = modem::train_energy_detector(e.head(pilot[i]), known, l.scheme.order);
                        }
                        labels = modem::slice_energy(e, *a.thresholds);
                    } else {
                        labels = modem::slice_coherent(z, gain, l.scheme);
                    }
                    detected = modem::labels_to_bits(labels, bps);

                    const Eigen::VectorXcd z_sig = gain * units[i].segment(H, B);
                    a.sig += z_sig.squaredNorm();
                    a.isi += (modem::integrate_dump(self, plan.sps, off, B) - z_sig).squaredNorm();
                    a.cci += modem::integrate_dump(cross, plan.sps, off, B).squaredNorm();
                    a.noise += modem::integrate_dump(nz, plan.sps, off, B).squaredNorm();
                    a.total += z.squaredNorm();
                    a.samples += B;
                }
            }

            const std::size_t skip = static_cast<std::size_t>(pilot[i] * bps);
            for (std::size_t k = skip; k < payload[i].size(); ++k) a.errors += detected[k] != payload[i][k];
            a.bits += static_cast<std::int64_t>(payload[i].size() - skip);
        }

        bool done = true;
        for (const Accum& a : acc)
            done = done && (a.bits >= control.max_bits || (a.bits >= control.min_bits && a.errors >= control.max_errors));
        if (done) break;
    }

    SimResult r;
    r.seed = seed;
    for (std::size_t i = 0; i < n; ++i) {
        const Accum& a = acc[i];
        LinkResult lr;
        lr.tx = set.links[i].tx;
        lr.rx = set.links[i].rx;
        lr.bits = a.bits;
        lr.errors = a.errors;
        lr.ber = static_cast<double>(a.errors) / static_cast<double>(a.bits);
        lr.ber_ci = wilson_half_width(a.errors, a.bits);
        const double m = static_cast<double>(a.samples);
        lr.sinr = {a.sig / m, a.isi / m, a.cci / m, a.noise / m, a.total / m};
        lr.sampling_offset = plan.chains[i].sampling_offset;
        r.links.push_back(lr);
        r.aggregate_rate += set.links[i].bit_rate();
    }
    return r;
}

SimResult simulate_link(const ChannelMatrix& channels, const LinkConfig& link, const NoiseModel& noise,
                        const SimControl& control, std::uint64_t seed) {
    return simulate_concurrent(channels, LinkSet::single(link), noise, control, seed);
}

SinrBreakdown measure_sinr(const ChannelMatrix& channels, const LinkSet& set, std::size_t index,
                           const NoiseModel& noise, const std::vector<double>& tx_powers_dbm) {
    set.validate(channels.sample_interval());
    if (index >= set.links.size()) throw Error("measure_sinr: link index out of range");
    if (!tx_powers_dbm.empty() && tx_powers_dbm.size() != set.links.size())
        throw Error("measure_sinr: need one transmit power per link");
    if (set.links.front().scheme.kind == modem::Kind::ofdm)
        throw Error("measure_sinr: deterministic decomposition needs a single-carrier scheme");

    LinkSet s = set;
    for (std::size_t j = 0; j < tx_powers_dbm.size(); ++j) s.links[j].tx_power_dbm = tx_powers_dbm[j];
    std::vector<LinkChain> chains;
    for (const auto& l : s.links) chains.push_back(build_chain(channels, l));

    const auto& li = s.links[index];
    const LinkChain& ci = chains[index];
    const int sps = li.scheme.samples_per_symbol;
    const Index off = ci.sampling_offset;

    SinrBreakdown out;
    const double p_i = dbm_to_mw(li.tx_power_dbm);
    const modem::SymbolResponse self = modem::symbol_response(ci.self_channel, sps, off);
    out.signal = p_i * std::norm(self.at(0));
    out.isi = p_i * self.taps.squaredNorm() - out.signal;
    for (std::size_t j = 0; j < s.links.size(); ++j) {
        if (j == index) continue;
        const Eigen::VectorXcd path = path_response(channels, s.links[j], chains[j], li, ci);
        out.cci += dbm_to_mw(s.links[j].tx_power_dbm) * modem::symbol_response(path, sps, off).taps.squaredNorm();
    }
    const double var = noise.power_mw(channels.sample_interval());
    if (ci.receive_filter) {
        const Eigen::VectorXcd fr = dsp::convolve(*ci.receive_filter, Eigen::VectorXcd::Ones(sps).eval());
        out.noise = var * fr.squaredNorm() / (static_cast<double>(sps) * sps);
    } else {
        out.noise = var / sps;
    }
    return out;
}

// -- waveform helpers ----------------------------------------------------------------

std::vector<modem::Waveform> stream_waveforms(const ChannelMatrix& channels, const LinkSet& set,
                                              const std::vector<Eigen::VectorXcd>& symbols) {
    if (symbols.size() != set.links.size()) throw Error("need one symbol sequence per link");
    std::vector<modem::Waveform> out;
    for (std::size_t j = 0; j < set.links.size(); ++j) {
        const LinkChain c = build_chain(channels, set.links[j]);
        modem::Waveform w{dsp::hold(symbols[j], set.links[j].scheme.samples_per_symbol), channels.sample_interval()};
        if (c.filter) w = tr::apply_precoding(w, *c.filter);
        w.samples *= c.amplitude;
        out.push_back(std::move(w));
    }
    return out;
}

modem::Waveform received_waveform(const ChannelMatrix& channels, const LinkSet& set,
                                  const std::vector<modem::Waveform>& streams, NodeId rx) {
    if (streams.size() != set.links.size()) throw Error("need one waveform per link");
    std::map<NodeId, Eigen::VectorXcd> at_tx;
    for (std::size_t j = 0; j < streams.size(); ++j) add_into(at_tx[set.links[j].tx], streams[j].samples);
    Eigen::VectorXcd y(0);
    for (const auto& [tx, x] : at_tx) {
        if (tx == rx) continue;
        add_into(y, dsp::convolve(x, channels.at(tx, rx).samples()));
    }
    return {y, channels.sample_interval()};
}

// -- sweeps --------------------------------------------------------------------------

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>(threads, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next = n;
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

unsigned resolve_threads(std::optional<unsigned> requested) {
    if (requested) return *requested;
    if (const char* env = std::getenv("TRCHIPNET_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0') return static_cast<unsigned>(v);
    }
    return 0;
}

namespace {

LinkSet with_rate(const LinkSet& set, double rate, double ts) {
    LinkSet s = set;
    for (auto& l : s.links) l = l.at_rate(rate, ts);
    return s;
}

}  // namespace

std::vector<SweepPoint> sweep_symbol_rate(const ChannelMatrix& channels, const LinkSet& set,
                                          const std::vector<double>& rates, const NoiseModel& noise,
                                          const SimControl& control, std::uint64_t seed, unsigned threads) {
    std::vector<SweepPoint> out(rates.size());
    parallel_for(rates.size(), threads, [&](std::size_t k) {
        out[k] = {rates[k],
                  simulate_concurrent(channels, with_rate(set, rates[k], channels.sample_interval()), noise, control, seed)};
    });
    return out;
}

std::vector<SweepPoint> sweep_power(const ChannelMatrix& channels, const LinkSet& set,
                                    const std::vector<double>& powers_dbm, const NoiseModel& noise,
                                    const SimControl& control, std::uint64_t seed, unsigned threads) {
    std::vector<SweepPoint> out(powers_dbm.size());
    parallel_for(powers_dbm.size(), threads, [&](std::size_t k) {
        LinkSet s = set;
        for (auto& l : s.links) l.tx_power_dbm = powers_dbm[k];
        out[k] = {powers_dbm[k], simulate_concurrent(channels, s, noise, control, seed)};
    });
    return out;
}

std::vector<AggregatePoint> sweep_aggregate(const ChannelMatrix& channels, const std::vector<LinkSet>& sets,
                                            const std::vector<double>& rates, const NoiseModel& noise,
                                            const SimControl& control, std::uint64_t seed, unsigned threads) {
    std::vector<AggregatePoint> out(sets.size() * rates.size());
    parallel_for(out.size(), threads, [&](std::size_t k) {
        const LinkSet& set = sets[k / rates.size()];
        const double rate = rates[k % rates.size()];
        out[k] = {set.links.size(), rate,
                  simulate_concurrent(channels, with_rate(set, rate, channels.sample_interval()), noise, control, seed)};
    });
    return out;
}

std::optional<double> threshold_rate(const std::vector<AggregatePoint>& points, std::size_t link_count,
                                     double threshold) {
    std::optional<double> first;
    for (const auto& p : points) {
        if (p.link_count != link_count || !(p.result.worst_ber() > threshold)) continue;
        if (!first || p.symbol_rate < *first) first = p.symbol_rate;
    }
    return first;
}

OrderSweep sweep_modulation_order(const ChannelMatrix& channels, const LinkSet& set, const std::vector<int>& orders,
                                  const std::vector<double>& rates, const NoiseModel& noise,
                                  const SimControl& control, std::uint64_t seed, unsigned threads, double threshold) {
    const std::size_t per_order = 2 * rates.size();
    OrderSweep sweep;
    sweep.points.resize(orders.size() * per_order);
    parallel_for(sweep.points.size(), threads, [&](std::size_t k) {
        const int order = orders[k / per_order];
        const bool use_tr = (k % per_order) < rates.size();
        const double rate = rates[k % rates.size()];
        LinkSet s = with_rate(set, rate, channels.sample_interval());
        for (auto& l : s.links) {
            l.scheme = modem::ModulationScheme::psk(order, l.scheme.samples_per_symbol);
            if (l.detector.kind == modem::DetectorKind::energy) l.detector.kind = modem::DetectorKind::coherent;
            l.use_tr = use_tr;
            if (!use_tr) l.degradation.reset();
        }
        sweep.points[k] = {order, use_tr, rate, simulate_concurrent(channels, s, noise, control, seed)};
    });
    for (const int order : orders) {
        for (const bool use_tr : {true, false}) {
            OrderSummary s{order, use_tr, 0.0};
            for (const auto& p : sweep.points)
                if (p.order == order && p.use_tr == use_tr && p.result.ber() < threshold)
                    s.max_aggregate_rate = std::max(s.max_aggregate_rate, p.result.aggregate_rate);
            sweep.summary.push_back(s);
        }
    }
    return sweep;
}

std::vector<DegradationPoint> sweep_degradation(const ChannelMatrix& channels, const LinkConfig& link,
                                                const std::vector<tr::FilterDegradation>& grid,
                                                const NoiseModel& noise, const SimControl& control,
                                                std::uint64_t seed, unsigned threads) {
    std::vector<DegradationPoint> out(grid.size());
    const chan::Cir& h = channels.at(link.tx, link.rx);
    parallel_for(grid.size(), threads, [&](std::size_t k) {
        LinkConfig l = link;
        l.use_tr = true;
        l.degradation = grid[k];
        const tr::TrFilter g = tr::degrade_filter(tr::build_tr_filter(h), grid[k]);
        const double peak = tr::equivalent_channel(g, h).samples().cwiseAbs().maxCoeff();
        out[k] = {grid[k], peak, simulate_link(channels, l, noise, control, seed)};
    });
    return out;
}

}  // namespace trchipnet::netsim
