#include "trchipnet/chan.hpp"
#include "trchipnet/dsp.hpp"
#include "trchipnet/error.hpp"
#include "trchipnet/modem.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>
#include <numbers>
#include <random>

using namespace trchipnet;
using modem::Bits;
using modem::ModulationScheme;

namespace {

Bits random_bits(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Bits b(n);
    for (auto& v : b) v = static_cast<std::uint8_t>(rng() & 1u);
    return b;
}

modem::DetectorConfig coherent(int pilots = 0) { return {modem::DetectorKind::coherent, pilots, 0, 0}; }
modem::ChannelReference gain(cplx g) { return {g, {}, 1.0}; }

// P(|a + n|^2 < thr) for n ~ CN(0, s2): integral of the noncentral chi-square (2 dof) density.
double below(double a, double thr, double s2) {
    constexpr int kSteps = 20000;  // even
    const double h = thr / kSteps;
    const auto pdf = [&](double e) {
        const double x = 2.0 * a * std::sqrt(e) / s2;
        const double d = std::sqrt(e) - a;
        return std::exp(-d * d / s2) * std::cyl_bessel_i(0.0, x) * std::exp(-x) / s2;
    };
    double s = pdf(0.0) + pdf(thr);
    for (int k = 1; k < kSteps; ++k) s += (k % 2 ? 4.0 : 2.0) * pdf(k * h);
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("2-ASK amplitudes") {
    const auto w = modem::modulate({1, 0}, ModulationScheme::ask(0.5, 2));
    REQUIRE(w.samples.size() == 4);
    CHECK(w.samples(0) == cplx(1.0));
    CHECK(w.samples(1) == cplx(1.0));
    CHECK(w.samples(2) == cplx(0.5));
    CHECK(w.samples(3) == cplx(0.5));
    CHECK(modem::modulate({}, ModulationScheme::ask(0.5, 4)).samples.size() == 0);
}

TEST_CASE("QPSK Gray table") {
    const auto w = modem::modulate({0, 0, 1, 1}, ModulationScheme::psk(4, 1));
    REQUIRE(w.samples.size() == 2);
    CHECK(std::abs(w.samples(0)) == doctest::Approx(1.0));
    CHECK(std::abs(w.samples(1)) == doctest::Approx(1.0));
    CHECK(std::abs(std::arg(w.samples(1) / w.samples(0))) == doctest::Approx(std::numbers::pi));
}

TEST_CASE("Gray neighbours differ in one bit") {
    for (int m : {2, 4, 8, 16, 32}) {
        const auto pts = ModulationScheme::psk(m, 1).constellation();
        std::vector<std::pair<double, unsigned>> by_angle;
        for (unsigned label = 0; label < pts.size(); ++label) {
            double a = std::arg(pts[label]);
            if (a < 0) a += 2 * std::numbers::pi;
            by_angle.emplace_back(a, label);
        }
        std::sort(by_angle.begin(), by_angle.end());
        for (std::size_t k = 0; k < by_angle.size(); ++k) {
            const unsigned x = by_angle[k].second ^ by_angle[(k + 1) % by_angle.size()].second;
            CHECK(std::popcount(x) == 1);
        }
    }
    for (unsigned i = 0; i < 64; ++i) CHECK(modem::gray_decode(modem::gray_encode(i)) == i);
}

TEST_CASE("mean power contract") {
    const Bits bits = random_bits(199680, 3);
    for (int m : {2, 4, 8, 16}) {
        const auto w = modem::modulate(bits, ModulationScheme::psk(m, 2));
        CHECK(w.samples.cwiseAbs2().mean() == doctest::Approx(1.0).epsilon(0.01));
    }
    for (double r : {0.25, 0.5, 0.8}) {
        const auto s = ModulationScheme::ask(r, 3);
        CHECK(s.mean_symbol_power() == doctest::Approx((1 + r * r) / 2));
        CHECK(modem::modulate(bits, s).samples.cwiseAbs2().mean() == doctest::Approx((1 + r * r) / 2).epsilon(0.01));
    }
    const auto o = modem::modulate(Bits(bits.begin(), bits.begin() + 32 * 2 * 500), ModulationScheme::ofdm(32, 4, 2, 4));
    CHECK(o.samples.cwiseAbs2().mean() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("noiseless round trips over the identity channel") {
    const Bits payload = random_bits(12288, 5);
    SUBCASE("2-ASK energy detector") {
        const auto s = ModulationScheme::ask(0.5, 4);
        const auto w = modem::modulate(modem::with_pilot(payload, s, 128), s);
        CHECK(modem::detect(w, s, {}) == payload);
    }
    SUBCASE("4-ASK energy detector") {
        const auto s = ModulationScheme::ask(0.5, 2, 4);
        const auto w = modem::modulate(modem::with_pilot(payload, s, 128), s);
        CHECK(modem::detect(w, s, {}) == payload);
    }
    SUBCASE("PSK coherent") {
        for (int m : {2, 4, 8, 16}) {
            const auto s = ModulationScheme::psk(m, 3);
            CHECK(modem::detect(modem::modulate(payload, s), s, coherent(), gain(1.0)) == payload);
        }
    }
    SUBCASE("QPSK with a rotated reference") {
        const auto s = ModulationScheme::psk(4, 2);
        const cplx g = std::polar(1.0, std::numbers::pi / 4);
        modem::Waveform w = modem::modulate(payload, s);
        w.samples *= g;
        CHECK(modem::detect(w, s, coherent(), gain(g)) == payload);
    }
    SUBCASE("OFDM") {
        for (int m : {2, 4, 16}) {
            const auto s = ModulationScheme::ofdm(32, m, 2, 0);
            const chan::Cir unit(Eigen::VectorXcd::Ones(1), 5e-12);
            CHECK(modem::ofdm_demodulate(modem::modulate(payload, s), s, unit) == payload);
        }
    }
    SUBCASE("matched-filter receiver") {
        const auto s = ModulationScheme::psk(4, 4);
        Eigen::VectorXcd h(3);
        h << 0.2, 1.0, cplx(0, 0.3);
        const auto tx = modem::modulate(payload, s);
        modem::Waveform rx{dsp::convolve(tx.samples, h), tx.sample_interval};
        modem::DetectorConfig det{modem::DetectorKind::matched_filter_coherent, 0, h.size() - 1, 0};
        det.symbol_count = static_cast<Index>(payload.size() / 2);
        CHECK(modem::detect(rx, s, det, modem::ChannelReference{std::nullopt, h, 1.0}) == payload);
    }
}

TEST_CASE("detector preconditions") {
    const auto s = ModulationScheme::ask(0.5, 4);
    const auto w = modem::modulate(random_bits(256, 1), s);
    CHECK_THROWS_AS(modem::detect(w, s, {modem::DetectorKind::energy, 8, 0, 0}), Error);
    CHECK_THROWS_AS(modem::detect(w, ModulationScheme::psk(2, 4), coherent()), Error);
    CHECK_THROWS_AS(ModulationScheme::psk(3, 4).validate(), Error);
    CHECK_THROWS_AS(ModulationScheme::ask(1.0, 4).validate(), Error);
    CHECK_THROWS_AS(ModulationScheme::ofdm(1, 2, 4, 0).validate(), Error);
}

TEST_CASE("OFDM cyclic prefix") {
    const Bits payload = random_bits(32 * 4 * 200, 9);
    SUBCASE("two-tap channel with a one-sample prefix is exact") {
        const auto s = ModulationScheme::ofdm(32, 16, 1, 1);
        Eigen::VectorXcd h(2);
        h << 1.0, 0.5;
        const auto tx = modem::modulate(payload, s);
        const modem::Waveform rx{dsp::convolve(tx.samples, h).head(tx.samples.size()), tx.sample_interval};
        CHECK(modem::ofdm_demodulate(rx, s, chan::Cir(h, 5e-12)) == payload);
    }
    SUBCASE("prefix shorter than the channel memory leaves an error floor") {
        const chan::Cir h = chan::generate_reverberant_cir(chan::preset("inter-chip"), 4);
        const auto s = ModulationScheme::ofdm(32, 16, 4, 0);
        const auto tx = modem::modulate(payload, s);
        const modem::Waveform rx{dsp::convolve(tx.samples, h.samples()).head(tx.samples.size()), tx.sample_interval};
        const Bits out = modem::ofdm_demodulate(rx, s, h);
        std::size_t errors = 0;
        for (std::size_t i = 0; i < payload.size(); ++i) errors += out[i] != payload[i];
        CHECK(errors > 0);

        const auto full = ModulationScheme::ofdm(32, 16, 4, modem::default_cyclic_prefix(h.size(), 4, 32));
        const auto tx2 = modem::modulate(payload, full);
        const modem::Waveform rx2{dsp::convolve(tx2.samples, h.samples()).head(tx2.samples.size()),
                                  tx2.sample_interval};
        const Bits out2 = modem::ofdm_demodulate(rx2, full, h);
        std::size_t errors2 = 0;
        for (std::size_t i = 0; i < payload.size(); ++i) errors2 += out2[i] != payload[i];
        CHECK(errors2 < errors);
    }
}

TEST_CASE("2-ASK energy detection at 15 dB against the integrated error rate") {
    constexpr double kRatio = 0.5;
    constexpr double kSnrDb = 15.0;
    constexpr int kPilot = 20000;
    constexpr std::size_t kBits = 200000;
    const auto s = ModulationScheme::ask(kRatio, 1);
    const double s2 = s.mean_symbol_power() / std::pow(10.0, kSnrDb / 10.0);

    const Bits payload = random_bits(kBits, 21);
    modem::Waveform w = modem::modulate(modem::with_pilot(payload, s, kPilot), s);
    std::mt19937_64 rng(77);
    std::normal_distribution<double> n(0.0, std::sqrt(s2 / 2));
    for (auto& v : w.samples) v += cplx(n(rng), n(rng));
    const Bits out = modem::detect(w, s, {modem::DetectorKind::energy, kPilot, 0, 0});
    std::size_t errors = 0;
    for (std::size_t i = 0; i < kBits; ++i) errors += out[i] != payload[i];
    const double ber = static_cast<double>(errors) / kBits;

    // Trained threshold converges to the midpoint of the conditional means a^2 + s2.
    const double thr = (1.0 + kRatio * kRatio) / 2.0 + s2;
    const double oracle = 0.5 * below(1.0, thr, s2) + 0.5 * (1.0 - below(kRatio, thr, s2));
    const double half = 2.5758 * std::sqrt(oracle * (1 - oracle) / kBits);
    MESSAGE("BER " << ber << ", integrated " << oracle);
    CHECK(std::abs(ber - oracle) <= half);
}
