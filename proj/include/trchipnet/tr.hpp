// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#pragma once

#include "trchipnet/chan.hpp"
#include "trchipnet/modem.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>

namespace trchipnet::tr {

/// Unit-energy time-reversed conjugate precoder built from a CIR.
struct TrFilter {
    Eigen::VectorXcd taps;
    double sample_interval = 5e-12;
    std::string source;  // "tx-rx" of the channel the filter was built from
};

/// Hardware-style filter impairments, applied in the order truncate, quantize, downsample.
struct FilterDegradation {
    std::optional<int> keep_taps;   // nullopt: keep all
    std::optional<int> quant_bits;  // nullopt: no quantization
    int downsample_factor = 1;

    void validate() const;
    bool is_identity() const { return !keep_taps && !quant_bits && downsample_factor == 1; }
};

TrFilter build_tr_filter(const chan::Cir& cir, std::string source = {});

/// Linear convolution of the waveform with the filter taps.
modem::Waveform apply_precoding(const modem::Waveform& x, const TrFilter& g);

/// q = g * h. When h is g's source, q peaks at index L-1 with value ||h||.
chan::Cir equivalent_channel(const TrFilter& g, const chan::Cir& h);

TrFilter degrade_filter(const TrFilter& g, const FilterDegradation& d);

void save_filter(const std::filesystem::path& path, const TrFilter& g);

}  // namespace trchipnet::tr
