// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <type_traits>

namespace trchipnet {

using cplx = std::complex<double>;
using Eigen::Index;

namespace dsp {

// Output scalar of a binary op between two Eigen expressions.
template <typename A, typename B>
using promoted_t = typename Eigen::ScalarBinaryOpTraits<typename A::Scalar, typename B::Scalar>::ReturnType;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Direct-form linear convolution. Output length is a.size() + b.size() - 1.
template <typename DerivedA, typename DerivedB>
Vec<promoted_t<DerivedA, DerivedB>> convolve_direct(const Eigen::MatrixBase<DerivedA>& a,
                                                    const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = promoted_t<DerivedA, DerivedB>;
    if (a.size() == 0 || b.size() == 0) return Vec<Scalar>();
    Vec<Scalar> out = Vec<Scalar>::Zero(a.size() + b.size() - 1);
    for (Index i = 0; i < a.size(); ++i) {
        const Scalar ai = a(i);
        if (ai == Scalar(0)) continue;
        out.segment(i, b.size()) += ai * b.derived().template cast<Scalar>();
    }
    return out;
}

/// FFT-based linear convolution of complex sequences (overlap-free, single transform).
Vec<cplx> convolve_fft(const Eigen::Ref<const Vec<cplx>>& a, const Eigen::Ref<const Vec<cplx>>& b);

/// Linear convolution. Switches to the FFT path for long complex operands; the choice
/// depends only on the operand sizes, so results are reproducible.
template <typename DerivedA, typename DerivedB>
Vec<promoted_t<DerivedA, DerivedB>> convolve(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = promoted_t<DerivedA, DerivedB>;
    if constexpr (std::is_same_v<Scalar, cplx>) {
        const Index shorter = std::min(a.size(), b.size());
        if (shorter > 64 && a.size() * b.size() > (Index(1) << 16)) {
            return convolve_fft(a.derived().template cast<cplx>(), b.derived().template cast<cplx>());
        }
    }
    return convolve_direct(a, b);
}

template <typename Derived>
double energy(const Eigen::MatrixBase<Derived>& v) {
    return v.squaredNorm();
}

template <typename Derived>
auto time_reversed_conj(const Eigen::MatrixBase<Derived>& v) {
    return v.reverse().conjugate();
}

template <typename Derived>
Index argmax_abs(const Eigen::MatrixBase<Derived>& v) {
    Index best = 0;
    v.cwiseAbs2().maxCoeff(&best);
    return best;
}

/// Rectangular hold: every input value repeated `factor` times.
template <typename Derived>
Vec<typename Derived::Scalar> hold(const Eigen::MatrixBase<Derived>& v, Index factor) {
    Vec<typename Derived::Scalar> out(v.size() * factor);
    for (Index i = 0; i < v.size(); ++i) out.segment(i * factor, factor).setConstant(v(i));
    return out;
}

/// Sum of consecutive non-overlapping windows of `width` samples, starting at `offset`.
template <typename Derived>
Vec<typename Derived::Scalar> window_sums(const Eigen::MatrixBase<Derived>& v, Index offset, Index width,
                                          Index count) {
    using Scalar = typename Derived::Scalar;
    Vec<Scalar> out = Vec<Scalar>::Zero(count);
    for (Index k = 0; k < count; ++k) {
        const Index start = offset + k * width;
        const Index lo = std::max<Index>(start, 0);
        const Index hi = std::min<Index>(start + width, v.size());
        if (hi > lo) out(k) = v.segment(lo, hi - lo).sum();
    }
    return out;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace dsp
}  // namespace trchipnet
