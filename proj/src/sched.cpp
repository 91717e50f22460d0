// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#include "trchipnet/sched.hpp"

#include "trchipnet/csv.hpp"
#include "trchipnet/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace trchipnet::sched {

namespace {

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

constexpr double kTolerance = 1e-6;

void check_subset(const SchedulerInput& in, const Subset& subset) {
    if (subset.empty()) throw Error("subset must be non-empty");
    for (int k : subset)
        if (k < 0 || k >= static_cast<int>(in.candidates.size())) throw Error("subset index out of range");
}

Schedule make_schedule(const SchedulerInput& in, const Subset& subset, const PowerAllocation& a) {
    Schedule s;
    s.links = subset;
    s.powers_dbm = a.powers.unaryExpr(&mw_to_dbm);
    s.sinr_db = a.sinr.unaryExpr([](double v) { return 10.0 * std::log10(v); });
    for (int k : subset) s.aggregate_rate += in.candidates[static_cast<std::size_t>(k)].bit_rate();
    return s;
}

}  // namespace

void SchedulerInput::validate() const {
    const auto n = static_cast<Index>(candidates.size());
    if (lut.rows() != n || lut.cols() != n) throw Error("LUT size does not match the candidate count");
    if (gains.size() != n) throw Error("need one gain per candidate");
    if (!lut.isApprox(lut.transpose(), 1e-12)) throw Error("LUT must be symmetric");
    for (Index i = 0; i < n; ++i) {
        if (std::abs(lut(i, i) - 1.0) > 1e-9) throw Error("LUT diagonal must be 1");
        if (!(gains(i) > 0.0)) throw Error("channel gains must be > 0");
    }
    if (!(lut.minCoeff() >= 0.0 && lut.maxCoeff() <= 1.0 + 1e-12)) throw Error("LUT entries must lie in [0, 1]");
    if (!(noise >= 0.0)) throw Error("noise power must be >= 0");
    if (!(p_min > 0.0 && p_min <= p_max && std::isfinite(p_max))) throw Error("power bounds need 0 < P_min <= P_max");
    if (!(sinr_target > 0.0 && std::isfinite(sinr_target))) throw Error("SINR target must be finite");
}

SchedulerInput make_input(const chan::ChannelMatrix& channels, std::vector<Candidate> candidates, double noise_mw,
                          double p_min_dbm, double p_max_dbm, double sinr_target_db) {
    SchedulerInput in;
    std::vector<chan::LinkEnds> ends;
    in.gains.resize(static_cast<Index>(candidates.size()));
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        ends.emplace_back(candidates[k].tx, candidates[k].rx);
        in.gains(static_cast<Index>(k)) = channels.at(candidates[k].tx, candidates[k].rx).energy();
    }
    in.lut = chan::correlation_matrix(channels, ends);
    in.candidates = std::move(candidates);
    in.noise = noise_mw;
    in.p_min = dbm_to_mw(p_min_dbm);
    in.p_max = dbm_to_mw(p_max_dbm);
    in.sinr_target = std::pow(10.0, sinr_target_db / 10.0);
    in.validate();
    return in;
}

Eigen::VectorXd predict_sinr(const SchedulerInput& in, const Subset& subset, const Eigen::VectorXd& powers) {
    check_subset(in, subset);
    const auto m = static_cast<Index>(subset.size());
    if (powers.size() != m) throw Error("need one power per subset member");
    Eigen::VectorXd sinr(m);
    for (Index a = 0; a < m; ++a) {
        const int i = subset[static_cast<std::size_t>(a)];
        double interference = in.noise;
        for (Index b = 0; b < m; ++b) {
            if (b == a) continue;
            const int j = subset[static_cast<std::size_t>(b)];
            interference += powers(b) * in.gains(j) * in.lut(i, j) * in.lut(i, j);
        }
        sinr(a) = powers(a) * in.gains(i) / interference;
    }
    return sinr;
}

PowerAllocation allocate_power(const SchedulerInput& in, const Subset& subset) {
    check_subset(in, subset);
    const auto m = static_cast<Index>(subset.size());
    PowerAllocation out;
    Eigen::VectorXd p = Eigen::VectorXd::Constant(m, in.p_min);
    for (out.iterations = 1; out.iterations <= 1000; ++out.iterations) {
        Eigen::VectorXd next(m);
        for (Index a = 0; a < m; ++a) {
            const int i = subset[static_cast<std::size_t>(a)];
            double interference = in.noise;
            for (Index b = 0; b < m; ++b) {
                if (b == a) continue;
                const int j = subset[static_cast<std::size_t>(b)];
                interference += p(b) * in.gains(j) * in.lut(i, j) * in.lut(i, j);
            }
            next(a) = std::clamp(in.sinr_target * interference / in.gains(i), in.p_min, in.p_max);
        }
        const double change = ((next - p).array().abs() / next.array()).maxCoeff();
        p = next;
        if (change < kTolerance) break;
    }
    out.iterations = std::min(out.iterations, 1000);
    out.powers = p;
    out.sinr = predict_sinr(in, subset, p);
    out.feasible = (out.sinr.array() >= in.sinr_target * (1.0 - kTolerance)).all();
    return out;
}

double spectral_radius(const SchedulerInput& in, const Subset& subset) {
    check_subset(in, subset);
    const auto m = static_cast<Index>(subset.size());
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(m, m);
    for (Index a = 0; a < m; ++a)
        for (Index b = 0; b < m; ++b) {
            if (a == b) continue;
            const int i = subset[static_cast<std::size_t>(a)];
            const int j = subset[static_cast<std::size_t>(b)];
            f(a, b) = in.sinr_target * in.gains(j) * in.lut(i, j) * in.lut(i, j) / in.gains(i);
        }
    return Eigen::EigenSolver<Eigen::MatrixXd>(f, false).eigenvalues().cwiseAbs().maxCoeff();
}

Schedule select_links(const SchedulerInput& in) {
    in.validate();
    if (in.candidates.empty()) throw Error("no candidate links");
    Subset chosen;
    PowerAllocation alloc;
    for (;;) {
        int best = -1;
        double best_rate = 0.0;
        PowerAllocation best_alloc;
        for (int k = 0; k < static_cast<int>(in.candidates.size()); ++k) {
            if (std::find(chosen.begin(), chosen.end(), k) != chosen.end()) continue;
            Subset trial = chosen;
            trial.push_back(k);
            std::sort(trial.begin(), trial.end());
            PowerAllocation a = allocate_power(in, trial);
            if (!a.feasible) continue;
            double rate = 0.0;
            for (int t : trial) rate += in.candidates[static_cast<std::size_t>(t)].bit_rate();
            if (rate > best_rate) {
                best = k;
                best_rate = rate;
                best_alloc = std::move(a);
            }
        }
        if (best < 0) break;
        chosen.push_back(best);
        std::sort(chosen.begin(), chosen.end());
        alloc = std::move(best_alloc);
    }
    if (chosen.empty()) return {};
    return make_schedule(in, chosen, alloc);
}

Schedule exhaustive_best(const SchedulerInput& in) {
    in.validate();
    const auto n = in.candidates.size();
    if (n > 20) throw Error("exhaustive search is limited to 20 candidates");
    Schedule best;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        Subset s;
        double rate = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            if (mask & (1u << k)) {
                s.push_back(static_cast<int>(k));
                rate += in.candidates[k].bit_rate();
            }
        if (rate <= best.aggregate_rate) continue;
        const PowerAllocation a = allocate_power(in, s);
        if (a.feasible) best = make_schedule(in, s, a);
    }
    return best;
}

void save_lut(const std::filesystem::path& path, const Eigen::MatrixXd& lut, const std::vector<Candidate>& links) {
    std::vector<std::string> labels;
    for (const auto& c : links) labels.push_back(std::to_string(c.tx) + "-" + std::to_string(c.rx));
    csv::write_matrix(path, lut, labels);
}

Eigen::MatrixXd load_lut(const std::filesystem::path& path) { return csv::read_matrix(path); }

}  // namespace trchipnet::sched
