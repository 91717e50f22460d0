// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#include "trchipnet/chan.hpp"

#include "trchipnet/csv.hpp"
#include "trchipnet/error.hpp"
#include "trchipnet/rng.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace trchipnet::chan {

ChannelImpulseResponse::ChannelImpulseResponse(Eigen::VectorXcd samples, double sample_interval,
                                               double start_delay)
    : samples_(std::move(samples)), sample_interval_(sample_interval), start_delay_(start_delay) {
    if (!(sample_interval_ > 0.0) || !std::isfinite(sample_interval_))
        throw Error("CIR sample_interval must be positive and finite");
    if (!(start_delay_ >= 0.0) || !std::isfinite(start_delay_)) throw Error("CIR start_delay must be >= 0");
    if (samples_.size() == 0) throw Error("CIR must have at least one sample");
    if (!samples_.allFinite()) throw Error("CIR samples must be finite");
    energy_ = samples_.squaredNorm();
    if (!(energy_ > 0.0) || !std::isfinite(energy_)) throw Error("CIR energy must be finite and > 0");
}

bool same_interval(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

// --- ChannelMatrix -------------------------------------------------------

ChannelMatrix::ChannelMatrix(int node_count, bool reciprocal) : node_count_(node_count), reciprocal_(reciprocal) {
    if (node_count <= 0) throw Error("node_count must be positive");
}

void ChannelMatrix::check_node(NodeId id) const {
    if (id < 0 || id >= node_count_)
        throw Error("node id " + std::to_string(id) + " outside [0, " + std::to_string(node_count_) + ")");
}

void ChannelMatrix::set(NodeId tx, NodeId rx, Cir cir) {
    check_node(tx);
    check_node(rx);
    if (tx == rx) throw Error("channel entries require tx != rx");
    if (!entries_.empty() && !same_interval(cir.sample_interval(), sample_interval_))
        throw Error("all channel entries must share one sample_interval");
    if (reciprocal_) {
        auto rev = entries_.find({rx, tx});
        if (rev != entries_.end() && !(rev->second == cir))
            throw Error("reciprocal matrix: entry " + std::to_string(tx) + "-" + std::to_string(rx) +
                        " differs from its reverse");
    }
    if (entries_.empty()) sample_interval_ = cir.sample_interval();
    entries_.insert_or_assign({tx, rx}, std::move(cir));
}

bool ChannelMatrix::contains(NodeId tx, NodeId rx) const {
    if (entries_.count({tx, rx})) return true;
    return reciprocal_ && entries_.count({rx, tx});
}

const Cir& ChannelMatrix::at(NodeId tx, NodeId rx) const {
    if (auto it = entries_.find({tx, rx}); it != entries_.end()) return it->second;
    if (reciprocal_) {
        if (auto it = entries_.find({rx, tx}); it != entries_.end()) return it->second;
    }
    throw Error("missing channel entry " + std::to_string(tx) + "-" + std::to_string(rx));
}

// --- generation ------------------------------------------------------------

void ReverbChannelParams::validate() const {
    if (!(sample_interval > 0.0)) throw Error("sample_interval must be > 0");
    if (!(propagation_delay >= 0.0)) throw Error("propagation_delay must be >= 0");
    if (!(decay_constant > 0.0)) throw Error("decay_constant must be > 0");
    if (!(tap_rate > 0.0)) throw Error("tap_rate must be > 0");
    if (!(rician_k >= 0.0)) throw Error("rician_k must be >= 0");
    if (!(duration >= propagation_delay)) throw Error("duration must be >= propagation_delay");
    if (!std::isfinite(path_gain_db)) throw Error("path_gain_db must be finite");
}

ReverbChannelParams preset(std::string_view name) {
    ReverbChannelParams p;
    if (name == "inter-chip") {
        p.decay_constant = 0.5e-9;
        p.rician_k = 1.0;
        p.path_gain_db = -40.0;
    } else if (name == "intra-chip") {
        p.decay_constant = 0.15e-9;
        p.rician_k = 3.0;
        p.path_gain_db = -35.0;
    } else {
        throw Error("unknown channel preset '" + std::string(name) + "'");
    }
    p.duration = p.propagation_delay + 10.0 * p.decay_constant;
    return p;
}

std::vector<std::string> preset_names() { return {"inter-chip", "intra-chip"}; }

Cir generate_reverberant_cir(const ReverbChannelParams& params, std::uint64_t seed) {
    params.validate();
    const double ts = params.sample_interval;
    const double t0 = params.propagation_delay;
    const auto first = static_cast<Index>(std::llround(t0 / ts));
    const double start = static_cast<double>(first) * ts;
    const Index n = std::max<Index>(1, static_cast<Index>(std::floor((params.duration - start) / ts + 1e-9)) + 1);

    Eigen::VectorXcd h = Eigen::VectorXcd::Zero(n);
    Rng rng(derive_seed(seed, {0x636972}));

    const double span = params.duration - t0;
    if (span > 0.0) {
        std::poisson_distribution<long long> arrivals(params.tap_rate * span);
        std::uniform_real_distribution<double> when(0.0, span);
        const long long count = arrivals(rng);
        for (long long i = 0; i < count; ++i) {
            const double dt = when(rng);
            const Index idx =
                std::clamp<Index>(static_cast<Index>(std::llround((t0 + dt - start) / ts)), 0, n - 1);
            h(idx) += complex_normal(rng, std::exp(-dt / params.decay_constant));
        }
    }

    const double total = dsp::db_to_linear(params.path_gain_db);
    const double diffuse = h.squaredNorm();
    double los_fraction = std::isinf(params.rician_k) ? 1.0 : params.rician_k / (params.rician_k + 1.0);
    if (diffuse == 0.0) los_fraction = 1.0;
    if (los_fraction < 1.0)
        h *= std::sqrt(total * (1.0 - los_fraction) / diffuse);
    else
        h.setZero();
    h(0) += std::sqrt(total * los_fraction);
    return Cir(std::move(h), ts, start);
}

ChannelMatrix generate_channel_matrix(std::string_view topology, int node_count, std::uint64_t seed) {
    ChannelMatrix m(node_count, true);
    const bool package = topology == "package";
    const ReverbChannelParams inter = preset("inter-chip");
    const ReverbChannelParams intra = preset("intra-chip");
    const ReverbChannelParams fixed = package ? inter : preset(topology);
    for (int a = 0; a < node_count; ++a) {
        for (int b = a + 1; b < node_count; ++b) {
            const ReverbChannelParams& p = package ? (a / 3 == b / 3 ? intra : inter) : fixed;
            m.set(a, b, generate_reverberant_cir(p, derive_seed(seed, {std::uint64_t(a), std::uint64_t(b)})));
        }
    }
    return m;
}

// --- file I/O --------------------------------------------------------------

namespace {

double parse_double(std::string_view field, const std::string& path, std::size_t line) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
        field.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
        throw ParseError(path, line, "not a finite number: '" + std::string(field) + "'");
    return v;
}

}  // namespace

Cir load_cir(const std::filesystem::path& path) {
    std::ifstream in(path);
    const std::string name = path.string();
    if (!in) throw Error("cannot open " + name);

    std::string text;
    std::size_t line = 0;
    if (!std::getline(in, text)) throw ParseError(name, 1, "empty file");
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text != "time_s,real,imag") throw ParseError(name, line, "expected header 'time_s,real,imag'");

    std::vector<double> times;
    std::vector<cplx> values;
    std::vector<std::size_t> lines;
    while (std::getline(in, text)) {
        ++line;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (text.empty()) continue;
        const auto fields = csv::split(text);
        if (fields.size() != 3)
            throw ParseError(name, line, "expected 3 fields, found " + std::to_string(fields.size()));
        times.push_back(parse_double(fields[0], name, line));
        values.emplace_back(parse_double(fields[1], name, line), parse_double(fields[2], name, line));
        lines.push_back(line);
    }
    if (values.empty()) throw ParseError(name, line, "no samples");

    double e = 0.0;
    for (const cplx& v : values) e += std::norm(v);
    if (!(e > 0.0)) throw ParseError(name, lines.back(), "zero-energy response");
    if (values.size() < 2) throw ParseError(name, lines.front(), "at least two rows are needed to infer the sample interval");

    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw ParseError(name, lines[1], "times must increase");
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double expected = times[0] + static_cast<double>(i) * dt;
        if (std::abs(times[i] - expected) > 1e-6 * dt)
            throw ParseError(name, lines[i], "non-uniform sample spacing");
    }
    if (times[0] < 0.0) throw ParseError(name, lines[0], "negative start time");

    Eigen::VectorXcd s(static_cast<Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) s(static_cast<Index>(i)) = values[i];
    return Cir(std::move(s), dt, times[0]);
}

void save_taps(const std::filesystem::path& path, const Eigen::VectorXcd& taps, double sample_interval,
               double start_delay) {
    csv::Writer w(path);
    w.header({"time_s", "real", "imag"});
    for (Index n = 0; n < taps.size(); ++n) {
        w.row({csv::num(start_delay + static_cast<double>(n) * sample_interval), csv::num(taps(n).real()),
               csv::num(taps(n).imag())});
    }
}

void save_cir(const std::filesystem::path& path, const Cir& cir) {
    save_taps(path, cir.samples(), cir.sample_interval(), cir.start_delay());
}

ChannelMatrix load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw Error(path.string() + ": manifest must be a JSON object");

    bool reciprocal = false;
    int node_count = 0;
    std::vector<std::pair<NodePair, std::filesystem::path>> files;
    for (const auto& [key, value] : j.items()) {
        if (key == "reciprocal") {
            if (!value.is_boolean()) throw Error(path.string() + ": 'reciprocal' must be boolean");
            reciprocal = value.get<bool>();
        } else if (key == "node_count") {
            if (!value.is_number_integer()) throw Error(path.string() + ": 'node_count' must be an integer");
            node_count = value.get<int>();
        } else {
            const auto dash = key.find('-');
            int tx = -1, rx = -1;
            if (dash == std::string::npos ||
                std::from_chars(key.data(), key.data() + dash, tx).ec != std::errc() ||
                std::from_chars(key.data() + dash + 1, key.data() + key.size(), rx).ec != std::errc())
                throw Error(path.string() + ": unrecognized key '" + key + "'");
            if (!value.is_string()) throw Error(path.string() + ": '" + key + "' must map to a file path");
            std::filesystem::path file = value.get<std::string>();
            if (file.is_relative()) file = path.parent_path() / file;
            files.push_back({{tx, rx}, file});
            node_count = std::max(node_count, std::max(tx, rx) + 1);
        }
    }
    ChannelMatrix m(node_count > 0 ? node_count : 1, reciprocal);
    for (auto& [pair, file] : files) m.set(pair.first, pair.second, load_cir(file));
    return m;
}

void save_manifest(const std::filesystem::path& dir, const ChannelMatrix& channels, const std::string& filename) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json j;
    j["reciprocal"] = channels.reciprocal();
    j["node_count"] = channels.node_count();
    for (const auto& [pair, cir] : channels.entries()) {
        const std::string key = std::to_string(pair.first) + "-" + std::to_string(pair.second);
        const std::string file = "cir_" + std::to_string(pair.first) + "_" + std::to_string(pair.second) + ".csv";
        save_cir(dir / file, cir);
        j[key] = file;
    }
    std::ofstream(dir / filename) << j.dump(2) << '\n';
}

// --- metrics ---------------------------------------------------------------

double mean_delay(const Cir& cir) {
    const Eigen::ArrayXd p = cir.samples().cwiseAbs2().array();
    const Eigen::ArrayXd n = Eigen::ArrayXd::LinSpaced(p.size(), 0.0, static_cast<double>(p.size() - 1));
    return cir.start_delay() + (p * n).sum() / p.sum() * cir.sample_interval();
}

double rms_delay_spread(const Cir& cir) {
    const Eigen::ArrayXd p = cir.samples().cwiseAbs2().array();
    const Eigen::ArrayXd n = Eigen::ArrayXd::LinSpaced(p.size(), 0.0, static_cast<double>(p.size() - 1));
    const double total = p.sum();
    const double mean = (p * n).sum() / total;
    const double var = (p * (n - mean).square()).sum() / total;
    return std::sqrt(std::max(var, 0.0)) * cir.sample_interval();
}

double channel_correlation(const Cir& a, const Cir& b) {
    if (!same_interval(a.sample_interval(), b.sample_interval()))
        throw Error("channel_correlation: mismatched sample_interval");
    const Eigen::VectorXcd xc = dsp::convolve(a.samples(), dsp::time_reversed_conj(b.samples()).eval());
    const double peak = xc.cwiseAbs().maxCoeff();
    return std::min(1.0, peak / (a.norm() * b.norm()));
}

Eigen::MatrixXd correlation_matrix(const ChannelMatrix& channels, const std::vector<LinkEnds>& links) {
    const auto n = static_cast<Index>(links.size());
    Eigen::MatrixXd directional = Eigen::MatrixXd::Identity(n, n);
    for (Index i = 0; i < n; ++i) {
        const auto [tx, rx] = links[static_cast<std::size_t>(i)];
        const Cir& own = channels.at(tx, rx);
        for (Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const Cir& victim = channels.at(tx, links[static_cast<std::size_t>(j)].second);
            directional(i, j) = channel_correlation(own, victim);
        }
    }
    return directional.cwiseMax(directional.transpose());
}

}  // namespace trchipnet::chan
