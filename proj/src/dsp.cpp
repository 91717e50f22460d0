// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#include "trchipnet/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>

namespace trchipnet::dsp {

namespace {

Index next_pow2(Index n) {
    Index p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

Vec<cplx> convolve_fft(const Eigen::Ref<const Vec<cplx>>& a, const Eigen::Ref<const Vec<cplx>>& b) {
    if (a.size() == 0 || b.size() == 0) return Vec<cplx>();
    // Overlap-add: the shorter operand is the filter; blocks of a few filter lengths keep
    // the transforms cache-resident.
    const Eigen::Ref<const Vec<cplx>>& x = a.size() >= b.size() ? a : b;
    const Eigen::Ref<const Vec<cplx>>& h = a.size() >= b.size() ? b : a;
    const Index out_len = x.size() + h.size() - 1;
    const Index n = std::min(next_pow2(out_len), std::max<Index>(4096, next_pow2(4 * h.size())));
    const Index step = n - h.size() + 1;

    Eigen::FFT<double> fft;
    Vec<cplx> padded = Vec<cplx>::Zero(n);
    padded.head(h.size()) = h;
    Vec<cplx> hf(n), seg(n), sf(n), time(n);
    fft.fwd(hf, padded);

    Vec<cplx> y = Vec<cplx>::Zero(out_len);
    for (Index s = 0; s < x.size(); s += step) {
        const Index len = std::min(step, x.size() - s);
        seg.setZero();
        seg.head(len) = x.segment(s, len);
        fft.fwd(sf, seg);
        sf = sf.cwiseProduct(hf);
        fft.inv(time, sf);
        const Index m = std::min(n, out_len - s);
        y.segment(s, m) += time.head(m);
    }
    return y;
}

}  // namespace trchipnet::dsp
