// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#include "trchipnet/config.hpp"

#include "trchipnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace trchipnet::config {

using nlohmann::json;

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds{"characterize",    "sim-link",       "sim-multi",
                                                "sweep-rate",      "sweep-power",    "sweep-aggregate",
                                                "sweep-order",     "degradation-study", "schedule"};
    return kinds;
}

namespace {

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(12);
    s << v;
    return s.str();
}

// Reads fields of one JSON object, recording type errors and unknown keys as violations.
class Obj {
public:
    Obj(const json& j, std::string path, std::vector<Violation>& out) : j_(j), path_(std::move(path)), out_(out) {
        if (!j_.is_object()) {
            bad(path_, "expected an object");
            valid_ = false;
        }
    }

    ~Obj() {
        if (!valid_) return;
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) bad(at(k), "unknown key");
    }

    bool valid() const { return valid_; }
    std::string at(const std::string& key) const { return path_ + "." + key; }
    const std::string& path() const { return path_; }
    void bad(const std::string& path, const std::string& msg) { out_.push_back({path, msg}); }

    bool has(const std::string& key) {
        seen_.insert(key);
        return valid_ && j_.contains(key) && !j_.at(key).is_null();
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    bool require(const std::string& key) {
        if (has(key)) return true;
        if (valid_) bad(at(key), "required");
        return false;
    }

    void number(const std::string& key, double& dst, bool required = false) {
        if (!(required ? require(key) : has(key))) return;
        const json& v = j_.at(key);
        if (!v.is_number()) return bad(at(key), "expected a number");
        dst = v.get<double>();
        if (!std::isfinite(dst)) bad(at(key), "must be finite");
    }

    void integer(const std::string& key, int& dst, bool required = false) {
        if (!(required ? require(key) : has(key))) return;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) return bad(at(key), "expected an integer");
        dst = v.get<int>();
    }

    void count(const std::string& key, std::int64_t& dst) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) return bad(at(key), "expected an integer");
        dst = v.get<std::int64_t>();
    }

    void u64(const std::string& key, std::uint64_t& dst) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_unsigned()) return bad(at(key), "expected a non-negative integer");
        dst = v.get<std::uint64_t>();
    }

    void boolean(const std::string& key, bool& dst) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_boolean()) return bad(at(key), "expected true or false");
        dst = v.get<bool>();
    }

    void string(const std::string& key, std::string& dst, bool required = false) {
        if (!(required ? require(key) : has(key))) return;
        const json& v = j_.at(key);
        if (!v.is_string()) return bad(at(key), "expected a string");
        dst = v.get<std::string>();
    }

    template <typename T>
    void list(const std::string& key, std::vector<T>& dst) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_array()) return bad(at(key), "expected an array");
        dst.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string p = at(key) + "[" + std::to_string(i) + "]";
            if constexpr (std::is_integral_v<T>) {
                if (!v[i].is_number_integer()) {
                    bad(p, "expected an integer");
                    continue;
                }
            } else if (!v[i].is_number()) {
                bad(p, "expected a number");
                continue;
            }
            dst.push_back(v[i].get<T>());
        }
    }

private:
    const json& j_;
    std::string path_;
    std::vector<Violation>& out_;
    std::set<std::string> seen_;
    bool valid_ = true;
};

void parse_degradation(const json& j, const std::string& path, tr::FilterDegradation& d, std::vector<Violation>& out) {
    Obj o(j, path, out);
    if (!o.valid()) return;
    if (o.has("keep_taps")) {
        const json& v = o.raw("keep_taps");
        if (v.is_string() && v.get<std::string>() == "all") d.keep_taps.reset();
        else if (v.is_number_integer() && v.get<int>() >= 1) d.keep_taps = v.get<int>();
        else o.bad(o.at("keep_taps"), "expected an integer >= 1 or \"all\"");
    }
    if (o.has("quant_bits")) {
        const json& v = o.raw("quant_bits");
        if (v.is_string() && v.get<std::string>() == "none") d.quant_bits.reset();
        else if (v.is_number_integer() && v.get<int>() >= 1 && v.get<int>() <= 52) d.quant_bits = v.get<int>();
        else o.bad(o.at("quant_bits"), "expected an integer in [1, 52] or \"none\"");
    }
    o.integer("downsample_factor", d.downsample_factor);
    if (d.downsample_factor < 1) o.bad(o.at("downsample_factor"), "must be >= 1");
}

json degradation_json(const tr::FilterDegradation& d) {
    return {{"keep_taps", d.keep_taps ? json(*d.keep_taps) : json("all")},
            {"quant_bits", d.quant_bits ? json(*d.quant_bits) : json("none")},
            {"downsample_factor", d.downsample_factor}};
}

// Scheme fields; samples_per_symbol stays 0 when absent so the link can derive it from the rate.
void parse_scheme(const json& j, const std::string& path, modem::ModulationScheme& s, bool& cp_given,
                  std::vector<Violation>& out) {
    Obj o(j, path, out);
    if (!o.valid()) return;
    std::string kind;
    o.string("kind", kind, true);
    try {
        if (!kind.empty()) s.kind = modem::kind_from_string(kind);
    } catch (const Error& e) {
        o.bad(o.at("kind"), "expected one of ask, psk, ofdm");
        return;
    }
    o.integer("order", s.order);
    if (s.order < 2 || (s.order & (s.order - 1)) != 0) o.bad(o.at("order"), "must be a power of two >= 2");
    s.samples_per_symbol = 0;
    o.integer("sps", s.samples_per_symbol);
    if (o.has("sps") && s.samples_per_symbol < 1) o.bad(o.at("sps"), "must be >= 1");
    if (s.kind == modem::Kind::ask) {
        o.number("ratio", s.ask_ratio);
        if (!(s.ask_ratio > 0.0 && s.ask_ratio < 1.0)) o.bad(o.at("ratio"), "must lie in (0, 1)");
    }
    if (s.kind == modem::Kind::ofdm) {
        s.subcarriers = 32;
        o.integer("subcarriers", s.subcarriers);
        if (s.subcarriers < 2) o.bad(o.at("subcarriers"), "must be >= 2");
        cp_given = o.has("cyclic_prefix");
        o.integer("cyclic_prefix", s.cyclic_prefix);
        if (s.cyclic_prefix < 0) o.bad(o.at("cyclic_prefix"), "must be >= 0");
    }
}

json scheme_json(const modem::ModulationScheme& s) {
    json j{{"kind", modem::to_string(s.kind)}, {"order", s.order}, {"sps", s.samples_per_symbol}};
    if (s.kind == modem::Kind::ask) j["ratio"] = s.ask_ratio;
    if (s.kind == modem::Kind::ofdm) {
        j["subcarriers"] = s.subcarriers;
        j["cyclic_prefix"] = s.cyclic_prefix;
    }
    return j;
}

struct LinkDraft {
    netsim::LinkConfig link;
    bool cp_given = false;
    bool detector_given = false;
};

LinkDraft parse_link(const json& j, const std::string& path, std::vector<Violation>& out) {
    LinkDraft d;
    netsim::LinkConfig& l = d.link;
    Obj o(j, path, out);
    if (!o.valid()) return d;
    o.integer("tx", l.tx, true);
    o.integer("rx", l.rx, true);
    o.number("tx_power_dbm", l.tx_power_dbm);
    o.number("symbol_rate", l.symbol_rate, true);
    if (!(l.symbol_rate > 0.0)) o.bad(o.at("symbol_rate"), "must be > 0");
    if (o.require("scheme")) parse_scheme(o.raw("scheme"), o.at("scheme"), l.scheme, d.cp_given, out);
    l.detector.kind =
        l.scheme.kind == modem::Kind::ask ? modem::DetectorKind::energy : modem::DetectorKind::coherent;
    if (o.has("detector")) {
        d.detector_given = true;
        Obj det(o.raw("detector"), o.at("detector"), out);
        if (det.valid()) {
            std::string kind;
            det.string("kind", kind);
            if (!kind.empty()) {
                try {
                    l.detector.kind = modem::detector_from_string(kind);
                } catch (const Error&) {
                    det.bad(det.at("kind"), "expected one of energy, coherent, matched_filter_coherent");
                }
            }
            det.integer("pilot_symbols", l.detector.pilot_symbols);
        }
    }
    o.boolean("use_tr", l.use_tr);
    if (o.has("degradation")) {
        tr::FilterDegradation deg;
        parse_degradation(o.raw("degradation"), o.at("degradation"), deg, out);
        l.degradation = deg;
    }
    return d;
}

json link_json(const netsim::LinkConfig& l) {
    json j{{"tx", l.tx},
           {"rx", l.rx},
           {"tx_power_dbm", l.tx_power_dbm},
           {"symbol_rate", l.symbol_rate},
           {"scheme", scheme_json(l.scheme)},
           {"detector", {{"kind", modem::to_string(l.detector.kind)}, {"pilot_symbols", l.detector.pilot_symbols}}},
           {"use_tr", l.use_tr}};
    if (l.degradation) j["degradation"] = degradation_json(*l.degradation);
    return j;
}

bool needs_links(const std::string& kind) { return kind != "characterize"; }

}  // namespace

chan::ChannelMatrix resolve_channels(const ChannelSource& src) {
    if (src.source == "manifest") return chan::load_manifest(src.manifest_path);
    return chan::generate_channel_matrix(src.topology, src.nodes, src.seed);
}

Loaded load(const json& doc, const std::filesystem::path& base_dir) {
    Loaded r;
    ExperimentConfig& c = r.config;
    auto& out = r.violations;
    std::vector<LinkDraft> drafts;
    {
        Obj o(doc, "$", out);
        if (!o.valid()) return r;

        if (o.require("schema_version")) {
            o.integer("schema_version", c.schema_version);
            if (c.schema_version != kSchemaVersion)
                o.bad("$.schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
        }
        o.string("experiment", c.experiment, true);
        const auto& kinds = experiment_kinds();
        if (!c.experiment.empty() && std::find(kinds.begin(), kinds.end(), c.experiment) == kinds.end())
            o.bad("$.experiment", "unknown experiment '" + c.experiment + "'");
        o.u64("seed", c.seed);
        o.string("output", c.output);

        if (o.has("channels")) {
            Obj ch(o.raw("channels"), "$.channels", out);
            if (ch.valid()) {
                ch.string("source", c.channels.source);
                if (c.channels.source == "generate") {
                    ch.string("topology", c.channels.topology);
                    ch.integer("nodes", c.channels.nodes);
                    ch.u64("seed", c.channels.seed);
                    const auto names = chan::preset_names();
                    if (c.channels.topology != "package" &&
                        std::find(names.begin(), names.end(), c.channels.topology) == names.end())
                        ch.bad("$.channels.topology", "expected package or a preset name");
                    if (c.channels.nodes < 2) ch.bad("$.channels.nodes", "must be >= 2");
                } else if (c.channels.source == "manifest") {
                    ch.string("path", c.channels.manifest, true);
                    c.channels.manifest_path = base_dir / c.channels.manifest;
                    if (!c.channels.manifest.empty() && !std::filesystem::exists(c.channels.manifest_path))
                        ch.bad("$.channels.path", "file not found: " + c.channels.manifest_path.string());
                } else {
                    ch.bad("$.channels.source", "expected generate or manifest");
                }
            }
        }

        if (o.has("noise")) {
            Obj n(o.raw("noise"), "$.noise", out);
            if (n.valid()) {
                n.number("psd_dbm_per_hz", c.noise.psd_dbm_per_hz);
                n.number("noise_figure_db", c.noise.noise_figure_db);
                if (n.has("bandwidth_hz")) {
                    double bw = 0.0;
                    n.number("bandwidth_hz", bw);
                    if (!(bw > 0.0)) n.bad("$.noise.bandwidth_hz", "must be > 0");
                    c.noise.bandwidth = bw;
                }
            }
        }

        if (o.has("control")) {
            Obj k(o.raw("control"), "$.control", out);
            if (k.valid()) {
                k.count("min_bits", c.control.min_bits);
                k.count("max_errors", c.control.max_errors);
                k.count("max_bits", c.control.max_bits);
                if (c.control.min_bits < 10'000) k.bad("$.control.min_bits", "must be >= 10000");
                if (c.control.max_errors < 1) k.bad("$.control.max_errors", "must be >= 1");
                if (c.control.max_bits < c.control.min_bits) k.bad("$.control.max_bits", "must be >= min_bits");
            }
        }

        if (o.has("links")) {
            const json& ls = o.raw("links");
            if (!ls.is_array()) {
                o.bad("$.links", "expected an array");
            } else {
                for (std::size_t i = 0; i < ls.size(); ++i)
                    drafts.push_back(parse_link(ls[i], "$.links[" + std::to_string(i) + "]", out));
            }
        }
        if (o.has("mode")) {
            std::string mode;
            o.string("mode", mode);
            try {
                c.mode = netsim::set_mode_from_string(mode);
            } catch (const Error&) {
                o.bad("$.mode", "expected one of single, multi_tx, scatter, combined");
            }
        } else if (drafts.size() > 1) {
            c.mode = netsim::SetMode::multi_tx;
        }

        if (o.has("sweep")) {
            Obj s(o.raw("sweep"), "$.sweep", out);
            if (s.valid()) {
                s.list("rates", c.sweep.rates);
                s.list("powers_dbm", c.sweep.powers_dbm);
                s.list("orders", c.sweep.orders);
                s.number("ber_threshold", c.sweep.ber_threshold);
                if (!(c.sweep.ber_threshold > 0.0 && c.sweep.ber_threshold < 0.5))
                    s.bad("$.sweep.ber_threshold", "must lie in (0, 0.5)");
                if (s.has("degradations")) {
                    const json& ds = s.raw("degradations");
                    if (!ds.is_array()) {
                        s.bad("$.sweep.degradations", "expected an array");
                    } else {
                        for (std::size_t i = 0; i < ds.size(); ++i) {
                            tr::FilterDegradation d;
                            parse_degradation(ds[i], "$.sweep.degradations[" + std::to_string(i) + "]", d, out);
                            c.sweep.degradations.push_back(d);
                        }
                    }
                }
            }
        }

        if (o.has("scheduler")) {
            Obj s(o.raw("scheduler"), "$.scheduler", out);
            if (s.valid()) {
                s.number("p_min_dbm", c.scheduler.p_min_dbm);
                s.number("p_max_dbm", c.scheduler.p_max_dbm);
                if (s.has("sinr_target_db")) {
                    double t = 0.0;
                    s.number("sinr_target_db", t);
                    c.scheduler.sinr_target_db = t;
                }
                if (c.scheduler.p_min_dbm > c.scheduler.p_max_dbm) s.bad("$.scheduler.p_min_dbm", "must be <= p_max_dbm");
            }
        }
    }

    // Channel-dependent checks.
    try {
        r.channels = resolve_channels(c.channels);
    } catch (const std::exception& e) {
        out.push_back({c.channels.source == "manifest" ? "$.channels.path" : "$.channels", e.what()});
    }
    const double ts = r.channels ? r.channels->sample_interval() : 5e-12;
    const int nodes = r.channels ? r.channels->node_count() : c.channels.nodes;

    const std::string& kind = c.experiment;
    if (needs_links(kind) && drafts.empty()) out.push_back({"$.links", "at least one link is required"});
    if ((kind == "sim-link" || kind == "degradation-study") && drafts.size() > 1)
        out.push_back({"$.links", "this experiment takes exactly one link"});

    for (std::size_t i = 0; i < drafts.size(); ++i) {
        const std::string p = "$.links[" + std::to_string(i) + "]";
        netsim::LinkConfig& l = drafts[i].link;
        if (l.tx < 0 || l.tx >= nodes) out.push_back({p + ".tx", "node out of range [0, " + std::to_string(nodes) + ")"});
        if (l.rx < 0 || l.rx >= nodes) out.push_back({p + ".rx", "node out of range [0, " + std::to_string(nodes) + ")"});
        if (l.tx == l.rx) out.push_back({p + ".rx", "must differ from tx"});
        const auto sps = netsim::grid_sps(l.symbol_rate, ts);
        if (l.symbol_rate > 0.0 && !sps)
            out.push_back({p + ".symbol_rate", "off the " + fmt(ts * 1e12) + " ps sample grid; nearest valid rate is " +
                                                   fmt(netsim::nearest_grid_rate(l.symbol_rate, ts))});
        if (sps) {
            if (l.scheme.samples_per_symbol == 0) l.scheme.samples_per_symbol = *sps;
            else if (l.scheme.samples_per_symbol != *sps)
                out.push_back({p + ".scheme.sps", "symbol_rate implies " + std::to_string(*sps) + " samples per symbol"});
        }
        if (l.detector.kind == modem::DetectorKind::energy && l.scheme.kind != modem::Kind::ask)
            out.push_back({p + ".detector.kind", "energy detection requires ASK"});
        if (l.detector.kind == modem::DetectorKind::energy && l.detector.pilot_symbols < 16)
            out.push_back({p + ".detector.pilot_symbols", "must be >= 16 for energy detection"});
        if (l.detector.pilot_symbols < 0) out.push_back({p + ".detector.pilot_symbols", "must be >= 0"});
        if (l.degradation && !l.use_tr) out.push_back({p + ".degradation", "requires use_tr"});
        if (r.channels && l.tx != l.rx && l.tx >= 0 && l.rx >= 0 && l.tx < nodes && l.rx < nodes) {
            if (!r.channels->contains(l.tx, l.rx) && !(r.channels->reciprocal() && r.channels->contains(l.rx, l.tx)))
                out.push_back({p, "no channel entry " + std::to_string(l.tx) + "-" + std::to_string(l.rx)});
            else if (l.scheme.kind == modem::Kind::ofdm && !drafts[i].cp_given && l.scheme.samples_per_symbol > 0)
                l.scheme.cyclic_prefix = modem::default_cyclic_prefix(r.channels->at(l.tx, l.rx).size(),
                                                                      l.scheme.samples_per_symbol, l.scheme.subcarriers);
        }
        c.links.push_back(l);
    }

    if (kind != "characterize" && kind != "schedule" && !c.links.empty()) {
        std::set<int> txs;
        for (const auto& l : c.links) txs.insert(l.tx);
        if (c.mode == netsim::SetMode::scatter && txs.size() > 1)
            out.push_back({"$.mode", "scatter mode requires all links to share one transmitter"});
        if (c.mode == netsim::SetMode::multi_tx && txs.size() != c.links.size())
            out.push_back({"$.mode", "multi_tx mode requires a distinct transmitter per link"});
        if (c.mode == netsim::SetMode::single && c.links.size() != 1)
            out.push_back({"$.mode", "single mode takes exactly one link"});
    }

    const auto check_rates = [&] {
        if (c.sweep.rates.empty()) out.push_back({"$.sweep.rates", "required and non-empty for " + kind});
        for (std::size_t k = 0; k < c.sweep.rates.size(); ++k)
            if (!netsim::grid_sps(c.sweep.rates[k], ts))
                out.push_back({"$.sweep.rates[" + std::to_string(k) + "]",
                               "off the sample grid; nearest valid rate is " +
                                   fmt(netsim::nearest_grid_rate(c.sweep.rates[k], ts))});
    };
    if (kind == "sweep-rate" || kind == "sweep-aggregate" || kind == "sweep-order") check_rates();
    if (kind == "sweep-power" && c.sweep.powers_dbm.empty()) out.push_back({"$.sweep.powers_dbm", "must be non-empty"});
    if (kind == "sweep-order") {
        if (c.sweep.orders.empty()) out.push_back({"$.sweep.orders", "must be non-empty"});
        for (std::size_t k = 0; k < c.sweep.orders.size(); ++k) {
            const int m = c.sweep.orders[k];
            if (m < 2 || (m & (m - 1)) != 0)
                out.push_back({"$.sweep.orders[" + std::to_string(k) + "]", "must be a power of two >= 2"});
        }
    }
    if (kind == "degradation-study" && c.sweep.degradations.empty())
        out.push_back({"$.sweep.degradations", "must be non-empty"});
    if (kind == "schedule" && !c.scheduler.sinr_target_db)
        out.push_back({"$.scheduler.sinr_target_db", "required for the schedule experiment"});

    // Anything the library itself rejects, so run and validate accept the same configs.
    if (out.empty() && r.channels && !c.links.empty()) {
        try {
            if (kind == "schedule") {
                for (const auto& l : c.links) l.validate(ts);
            } else if (kind != "characterize") {
                netsim::LinkSet{c.links, c.mode}.validate(ts);
            }
            c.noise.validate();
            c.control.validate();
        } catch (const Error& e) {
            out.push_back({"$.links", e.what()});
        }
    }
    return r;
}

Loaded load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        Loaded r;
        r.violations.push_back({"$", "cannot open " + path.string()});
        return r;
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        Loaded r;
        r.violations.push_back({"$", std::string("JSON parse error: ") + e.what()});
        return r;
    }
    return load(doc, path.parent_path());
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;
    j["experiment"] = c.experiment;
    j["seed"] = c.seed;
    j["output"] = c.output;
    if (c.channels.source == "manifest") {
        j["channels"] = {{"source", "manifest"}, {"path", c.channels.manifest}};
    } else {
        j["channels"] = {{"source", "generate"},
                         {"topology", c.channels.topology},
                         {"nodes", c.channels.nodes},
                         {"seed", c.channels.seed}};
    }
    j["noise"] = {{"psd_dbm_per_hz", std::isfinite(c.noise.psd_dbm_per_hz) ? json(c.noise.psd_dbm_per_hz) : json(-1e300)},
                  {"noise_figure_db", c.noise.noise_figure_db}};
    if (c.noise.bandwidth) j["noise"]["bandwidth_hz"] = *c.noise.bandwidth;
    j["control"] = {{"min_bits", c.control.min_bits},
                    {"max_errors", c.control.max_errors},
                    {"max_bits", c.control.max_bits}};
    j["links"] = json::array();
    for (const auto& l : c.links) j["links"].push_back(link_json(l));
    j["mode"] = netsim::to_string(c.mode);
    json sweep{{"rates", c.sweep.rates},
               {"powers_dbm", c.sweep.powers_dbm},
               {"orders", c.sweep.orders},
               {"ber_threshold", c.sweep.ber_threshold},
               {"degradations", json::array()}};
    for (const auto& d : c.sweep.degradations) sweep["degradations"].push_back(degradation_json(d));
    j["sweep"] = sweep;
    j["scheduler"] = {{"p_min_dbm", c.scheduler.p_min_dbm}, {"p_max_dbm", c.scheduler.p_max_dbm}};
    if (c.scheduler.sinr_target_db) j["scheduler"]["sinr_target_db"] = *c.scheduler.sinr_target_db;
    return j;
}

}  // namespace trchipnet::config
