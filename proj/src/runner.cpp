// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#include "trchipnet/runner.hpp"

#include "trchipnet/csv.hpp"
#include "trchipnet/error.hpp"
#include "trchipnet/sched.hpp"

#include <cmath>
#include <fstream>

namespace trchipnet::runner {

using nlohmann::json;
using netsim::LinkSet;
using netsim::SimResult;

namespace {

const std::vector<std::string> kLinkColumns{
    "link",      "tx",       "rx",      "use_tr",  "scheme",    "order",     "symbol_rate",
    "tx_power_dbm", "bits",  "errors",  "ber",     "ber_ci95",  "sinr_db",   "signal_dbm",
    "isi_dbm",   "cci_dbm",  "noise_dbm", "aggregate_rate", "seed"};

std::string dbm(double mw) { return csv::num(10.0 * std::log10(mw)); }

std::vector<std::string> link_fields(const LinkSet& set, const SimResult& r, std::size_t i) {
    const auto& l = set.links[i];
    const auto& lr = r.links[i];
    return {csv::num(static_cast<long long>(i)),
            csv::num(l.tx),
            csv::num(l.rx),
            l.use_tr ? "1" : "0",
            modem::to_string(l.scheme.kind),
            csv::num(l.scheme.order),
            csv::num(l.symbol_rate),
            csv::num(l.tx_power_dbm),
            csv::num(static_cast<long long>(lr.bits)),
            csv::num(static_cast<long long>(lr.errors)),
            csv::num(lr.ber),
            csv::num(lr.ber_ci),
            csv::num(lr.sinr.sinr_db()),
            dbm(lr.sinr.signal),
            dbm(lr.sinr.isi),
            dbm(lr.sinr.cci),
            dbm(lr.sinr.noise),
            csv::num(r.aggregate_rate),
            csv::num(static_cast<unsigned long long>(r.seed))};
}

// Writes results.csv with `axes` leading columns followed by the per-link columns.
class Results {
public:
    Results(const std::filesystem::path& dir, std::vector<std::string> axes) : w_(dir / "results.csv") {
        std::vector<std::string> cols{"point"};
        cols.insert(cols.end(), axes.begin(), axes.end());
        cols.insert(cols.end(), kLinkColumns.begin(), kLinkColumns.end());
        w_.header(cols);
    }

    void add(std::size_t point, const std::vector<std::string>& axes, const LinkSet& set, const SimResult& r) {
        add_rows(point, std::vector<std::vector<std::string>>(r.links.size(), axes), set, r);
    }

    // Per-link axis values.
    void add_rows(std::size_t point, const std::vector<std::vector<std::string>>& axes, const LinkSet& set,
             const SimResult& r) {
        for (std::size_t i = 0; i < r.links.size(); ++i) {
            std::vector<std::string> row{csv::num(static_cast<long long>(point))};
            row.insert(row.end(), axes[i].begin(), axes[i].end());
            const auto f = link_fields(set, r, i);
            row.insert(row.end(), f.begin(), f.end());
            w_.row(row);
        }
    }

private:
    csv::Writer w_;
};

json result_summary(const SimResult& r) {
    return {{"bits", r.total_bits()},
            {"errors", r.total_errors()},
            {"ber", r.ber()},
            {"worst_ber", r.worst_ber()},
            {"aggregate_rate", r.aggregate_rate}};
}

LinkSet with_rate(const LinkSet& set, double rate, double ts) {
    LinkSet s = set;
    for (auto& l : s.links) l = l.at_rate(rate, ts);
    return s;
}

std::string degr_field(const std::optional<int>& v, const char* none) { return v ? csv::num(*v) : none; }

}  // namespace

Output characterize(const chan::ChannelMatrix& channels, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    Output out;
    csv::Writer w(dir / "results.csv");
    w.header({"tx", "rx", "taps", "sample_interval", "energy", "energy_db", "mean_delay_ns", "rms_delay_spread_ns"});
    std::vector<const chan::Cir*> cirs;
    std::vector<std::string> labels;
    for (const auto& [pair, h] : channels.entries()) {
        cirs.push_back(&h);
        labels.push_back(std::to_string(pair.first) + "-" + std::to_string(pair.second));
        w.row({csv::num(pair.first), csv::num(pair.second), csv::num(static_cast<long long>(h.size())),
               csv::num(h.sample_interval()), csv::num(h.energy()), csv::num(10.0 * std::log10(h.energy())),
               csv::num(chan::mean_delay(h) * 1e9), csv::num(chan::rms_delay_spread(h) * 1e9)});
    }
    const auto n = static_cast<Index>(cirs.size());
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            corr(i, j) = corr(j, i) = chan::channel_correlation(*cirs[i], *cirs[j]);
    csv::write_matrix(dir / "correlation.csv", corr, labels);
    out.files = {"results.csv", "correlation.csv"};
    double off_max = 0.0;
    for (Index i = 0; i < corr.rows(); ++i)
        for (Index j = 0; j < corr.cols(); ++j)
            if (i != j) off_max = std::max(off_max, corr(i, j));
    out.summary = {{"pairs", cirs.size()}, {"max_off_diagonal_correlation", off_max}};
    return out;
}

Output run(const config::ExperimentConfig& cfg, const chan::ChannelMatrix& channels, const std::filesystem::path& dir,
           unsigned threads) {
    const std::string& kind = cfg.experiment;
    if (kind == "characterize") {
        Output out = characterize(channels, dir);
        write_manifest(dir, cfg, out);
        return out;
    }
    std::filesystem::create_directories(dir);
    Output out;
    out.files = {"results.csv"};
    const double ts = channels.sample_interval();
    const LinkSet set{cfg.links, cfg.mode};
    const auto& sw = cfg.sweep;

    if (kind == "sim-link" || kind == "sim-multi") {
        Results res(dir, {});
        const SimResult r = netsim::simulate_concurrent(channels, set, cfg.noise, cfg.control, cfg.seed);
        res.add(0, {}, set, r);
        out.summary = result_summary(r);
    } else if (kind == "sweep-rate") {
        Results res(dir, {});
        const auto pts = netsim::sweep_symbol_rate(channels, set, sw.rates, cfg.noise, cfg.control, cfg.seed, threads);
        json rows = json::array();
        for (std::size_t k = 0; k < pts.size(); ++k) {
            res.add(k, {}, with_rate(set, pts[k].x, ts), pts[k].result);
            rows.push_back({{"symbol_rate", pts[k].x}, {"worst_ber", pts[k].result.worst_ber()}});
        }
        out.summary = {{"points", rows}};
    } else if (kind == "sweep-power") {
        Results res(dir, {"sinr_det_db"});
        const auto pts = netsim::sweep_power(channels, set, sw.powers_dbm, cfg.noise, cfg.control, cfg.seed, threads);
        const bool ofdm = set.links.front().scheme.kind == modem::Kind::ofdm;
        json rows = json::array();
        for (std::size_t k = 0; k < pts.size(); ++k) {
            LinkSet s = set;
            for (auto& l : s.links) l.tx_power_dbm = pts[k].x;
            std::vector<std::vector<std::string>> det;
            for (std::size_t i = 0; i < s.links.size(); ++i)
                det.push_back({ofdm ? "" : csv::num(netsim::measure_sinr(channels, s, i, cfg.noise).sinr_db())});
            res.add_rows(k, det, s, pts[k].result);
            rows.push_back({{"tx_power_dbm", pts[k].x}, {"worst_ber", pts[k].result.worst_ber()}});
        }
        out.summary = {{"points", rows}};
    } else if (kind == "sweep-aggregate") {
        std::vector<LinkSet> sets;
        for (std::size_t n = 1; n <= set.links.size(); ++n) {
            LinkSet s{{set.links.begin(), set.links.begin() + static_cast<std::ptrdiff_t>(n)},
                      n == 1 ? netsim::SetMode::single : set.mode};
            sets.push_back(s);
        }
        Results res(dir, {"link_count"});
        const auto pts = netsim::sweep_aggregate(channels, sets, sw.rates, cfg.noise, cfg.control, cfg.seed, threads);
        for (std::size_t k = 0; k < pts.size(); ++k)
            res.add(k, {csv::num(static_cast<long long>(pts[k].link_count))},
                    with_rate(sets[pts[k].link_count - 1], pts[k].symbol_rate, ts), pts[k].result);
        json thr = json::array();
        for (std::size_t n = 1; n <= sets.size(); ++n) {
            const auto t = netsim::threshold_rate(pts, n, sw.ber_threshold);
            thr.push_back({{"link_count", n}, {"threshold_rate", t ? json(*t) : json(nullptr)}});
        }
        out.summary = {{"ber_threshold", sw.ber_threshold}, {"threshold_rates", thr}};
    } else if (kind == "sweep-order") {
        Results res(dir, {});
        const auto sweep = netsim::sweep_modulation_order(channels, set, sw.orders, sw.rates, cfg.noise, cfg.control,
                                                          cfg.seed, threads, sw.ber_threshold);
        for (std::size_t k = 0; k < sweep.points.size(); ++k) {
            const auto& p = sweep.points[k];
            LinkSet s = with_rate(set, p.symbol_rate, ts);
            for (auto& l : s.links) {
                l.scheme = modem::ModulationScheme::psk(p.order, l.scheme.samples_per_symbol);
                l.use_tr = p.use_tr;
            }
            res.add(k, {}, s, p.result);
        }
        json rows = json::array();
        for (const auto& s : sweep.summary)
            rows.push_back({{"order", s.order}, {"use_tr", s.use_tr}, {"max_aggregate_rate", s.max_aggregate_rate}});
        out.summary = {{"ber_threshold", sw.ber_threshold}, {"max_aggregate_rates", rows}};
    } else if (kind == "degradation-study") {
        Results res(dir, {"keep_taps", "quant_bits", "downsample_factor", "peak"});
        const auto pts = netsim::sweep_degradation(channels, set.links.front(), sw.degradations, cfg.noise,
                                                   cfg.control, cfg.seed, threads);
        json rows = json::array();
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const auto& d = pts[k].degradation;
            LinkSet s = LinkSet::single(set.links.front());
            s.links.front().use_tr = true;
            res.add(k,
                    {degr_field(d.keep_taps, "all"), degr_field(d.quant_bits, "none"), csv::num(d.downsample_factor),
                     csv::num(pts[k].peak)},
                    s, pts[k].result);
            rows.push_back({{"downsample_factor", d.downsample_factor}, {"peak", pts[k].peak},
                            {"ber", pts[k].result.ber()}});
        }
        out.summary = {{"points", rows}};
    } else if (kind == "schedule") {
        std::vector<sched::Candidate> cands;
        for (const auto& l : cfg.links) cands.push_back({l.tx, l.rx, l.scheme, l.symbol_rate});
        const sched::SchedulerInput in =
            sched::make_input(channels, cands, cfg.noise.power_mw(ts), cfg.scheduler.p_min_dbm,
                              cfg.scheduler.p_max_dbm, *cfg.scheduler.sinr_target_db);
        const sched::Schedule s = sched::select_links(in);
        csv::Writer w(dir / "results.csv");
        w.header({"candidate", "tx", "rx", "bit_rate", "gain_db", "selected", "power_dbm", "sinr_db"});
        json links = json::array();
        for (std::size_t k = 0; k < cands.size(); ++k) {
            std::string p, q;
            for (std::size_t a = 0; a < s.links.size(); ++a)
                if (s.links[a] == static_cast<int>(k)) {
                    p = csv::num(s.powers_dbm(static_cast<Index>(a)));
                    q = csv::num(s.sinr_db(static_cast<Index>(a)));
                    links.push_back({{"candidate", k},
                                     {"tx", cands[k].tx},
                                     {"rx", cands[k].rx},
                                     {"power_dbm", s.powers_dbm(static_cast<Index>(a))},
                                     {"sinr_db", s.sinr_db(static_cast<Index>(a))}});
                }
            w.row({csv::num(static_cast<long long>(k)), csv::num(cands[k].tx), csv::num(cands[k].rx),
                   csv::num(cands[k].bit_rate()), csv::num(10.0 * std::log10(in.gains(static_cast<Index>(k)))),
                   p.empty() ? "0" : "1", p, q});
        }
        const json schedule{{"links", links}, {"aggregate_rate", s.aggregate_rate}};
        std::ofstream(dir / "schedule.json", std::ios::binary) << schedule.dump(2) << "\n";
        sched::save_lut(dir / "lut.csv", in.lut, cands);
        out.files = {"results.csv", "schedule.json", "lut.csv"};
        out.summary = {{"selected", s.links.size()}, {"aggregate_rate", s.aggregate_rate}};
    } else {
        throw Error("unknown experiment '" + kind + "'");
    }
    write_manifest(dir, cfg, out);
    return out;
}

void write_manifest(const std::filesystem::path& dir, const config::ExperimentConfig& cfg, const Output& out) {
    json files = out.files;
    files.push_back("manifest.json");
    const json m{{"tool", "trchipnet"},
                 {"version", config::kToolVersion},
                 {"config", config::to_json(cfg)},
                 {"outputs", files},
                 {"summary", out.summary}};
    std::ofstream f(dir / "manifest.json", std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / "manifest.json").string());
    f << m.dump(2) << "\n";
}

}  // namespace trchipnet::runner
