// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#include "trchipnet/tr.hpp"

#include "trchipnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace trchipnet::tr {

void FilterDegradation::validate() const {
    if (keep_taps && *keep_taps < 1) throw Error("keep_taps must be >= 1");
    if (quant_bits && *quant_bits < 1) throw Error("quant_bits must be >= 1");
    if (downsample_factor < 1) throw Error("downsample_factor must be >= 1");
}

TrFilter build_tr_filter(const chan::Cir& cir, std::string source) {
    // Cir construction already guarantees energy > 0.
    return {dsp::time_reversed_conj(cir.samples()) / cir.norm(), cir.sample_interval(), std::move(source)};
}

modem::Waveform apply_precoding(const modem::Waveform& x, const TrFilter& g) {
    if (!chan::same_interval(x.sample_interval, g.sample_interval))
        throw Error("apply_precoding: sample interval mismatch");
    return {dsp::convolve(x.samples, g.taps), x.sample_interval};
}

chan::Cir equivalent_channel(const TrFilter& g, const chan::Cir& h) {
    if (!chan::same_interval(g.sample_interval, h.sample_interval()))
        throw Error("equivalent_channel: sample interval mismatch");
    return chan::Cir(dsp::convolve(g.taps, h.samples()), h.sample_interval(), h.start_delay());
}

namespace {

// Nearest of 2^bits levels evenly spanning [-full_scale, +full_scale] (mid-rise: no zero level).
double quantize(double v, int bits, double full_scale) {
    const double levels = std::ldexp(1.0, bits);
    const double step = 2.0 * full_scale / (levels - 1.0);
    const double idx = std::clamp(std::round((v + full_scale) / step), 0.0, levels - 1.0);
    return -full_scale + idx * step;
}

}  // namespace

TrFilter degrade_filter(const TrFilter& g, const FilterDegradation& d) {
    d.validate();
    TrFilter out = g;
    Eigen::VectorXcd& t = out.taps;

    if (d.keep_taps && *d.keep_taps < t.size()) {
        std::vector<Index> order(static_cast<std::size_t>(t.size()));
        std::iota(order.begin(), order.end(), Index(0));
        // Stable so equal-magnitude taps resolve toward the earlier index.
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return std::norm(t(a)) > std::norm(t(b)); });
        for (std::size_t i = static_cast<std::size_t>(*d.keep_taps); i < order.size(); ++i) t(order[i]) = 0.0;
    }

    if (d.quant_bits) {
        const double full_scale = std::max(t.real().cwiseAbs().maxCoeff(), t.imag().cwiseAbs().maxCoeff());
        if (full_scale > 0.0) {
            for (Index n = 0; n < t.size(); ++n) {
                if (t(n) == cplx(0.0)) continue;  // truncated taps stay absent
                t(n) = {quantize(t(n).real(), *d.quant_bits, full_scale),
                        quantize(t(n).imag(), *d.quant_bits, full_scale)};
            }
        }
    }

    if (d.downsample_factor > 1) {
        const Index f = d.downsample_factor;
        for (Index n = 0; n < t.size(); ++n) t(n) = t((n / f) * f);
    }

    const double e = t.squaredNorm();
    if (!(e > 0.0)) throw Error("filter degradation annihilates the filter");
    t /= std::sqrt(e);
    return out;
}

void save_filter(const std::filesystem::path& path, const TrFilter& g) {
    chan::save_taps(path, g.taps, g.sample_interval);
}

}  // namespace trchipnet::tr
