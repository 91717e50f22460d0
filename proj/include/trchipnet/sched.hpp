// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#pragma once

#include "trchipnet/chan.hpp"
#include "trchipnet/modem.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <vector>

namespace trchipnet::sched {

using chan::NodeId;

struct Candidate {
    NodeId tx = 0;
    NodeId rx = 1;
    modem::ModulationScheme scheme = modem::ModulationScheme::ask(0.5, 4);
    double symbol_rate = 50e9;

    double bit_rate() const { return symbol_rate * scheme.bits_per_symbol(); }
};

/// Everything in linear units: powers and noise in mW, target as a power ratio.
struct SchedulerInput {
    std::vector<Candidate> candidates;
    Eigen::MatrixXd lut;    // correlation chi, symmetric with unit diagonal
    Eigen::VectorXd gains;  // ||h||^2 per candidate
    double noise = 0.0;
    double p_min = 1e-3;
    double p_max = 10.0;
    double sinr_target = 10.0;

    void validate() const;
};

/// Fills lut and gains from the channel matrix; bounds in dBm, target in dB.
SchedulerInput make_input(const chan::ChannelMatrix& channels, std::vector<Candidate> candidates, double noise_mw,
                          double p_min_dbm, double p_max_dbm, double sinr_target_db);

using Subset = std::vector<int>;

/// SINR_i = P_i g_i / (sum_{j != i} P_j g_j chi_ij^2 + N), linear, one entry per subset member.
Eigen::VectorXd predict_sinr(const SchedulerInput& in, const Subset& subset, const Eigen::VectorXd& powers);

struct PowerAllocation {
    bool feasible = false;
    Eigen::VectorXd powers;  // mW, one per subset member
    Eigen::VectorXd sinr;    // linear
    int iterations = 0;
};

/// Synchronous target-tracking iteration from P_min, clamped to bounds.
PowerAllocation allocate_power(const SchedulerInput& in, const Subset& subset);

/// Spectral radius of target * g_j chi_ij^2 / g_i (zero diagonal); < 1 iff the targets are
/// reachable with unbounded power.
double spectral_radius(const SchedulerInput& in, const Subset& subset);

struct Schedule {
    Subset links;
    Eigen::VectorXd powers_dbm;
    Eigen::VectorXd sinr_db;
    double aggregate_rate = 0.0;
};

Schedule select_links(const SchedulerInput& in);

/// Highest-rate feasible subset by enumeration (up to 20 candidates). Ties go to the
/// subset enumerated first (lowest bitmask).
Schedule exhaustive_best(const SchedulerInput& in);

void save_lut(const std::filesystem::path& path, const Eigen::MatrixXd& lut, const std::vector<Candidate>& links);
Eigen::MatrixXd load_lut(const std::filesystem::path& path);

}  // namespace trchipnet::sched
