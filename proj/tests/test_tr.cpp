#include "trchipnet/chan.hpp"
#include "trchipnet/error.hpp"
#include "trchipnet/tr.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace trchipnet;
using chan::Cir;

namespace {

Eigen::VectorXcd vec(std::initializer_list<cplx> v) {
    Eigen::VectorXcd h(static_cast<Index>(v.size()));
    Index i = 0;
    for (cplx c : v) h(i++) = c;
    return h;
}

Eigen::VectorXcd conv_oracle(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(a.size() + b.size() - 1);
    for (Index i = 0; i < a.size(); ++i)
        for (Index j = 0; j < b.size(); ++j) y(i + j) += a(i) * b(j);
    return y;
}

Eigen::VectorXcd random_taps(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXcd v(n);
    for (auto& x : v) x = {g(rng), g(rng)};
    return v;
}

}  // namespace

TEST_CASE("filter construction") {
    CHECK(tr::build_tr_filter(Cir(vec({1.0}), 5e-12)).taps == vec({1.0}));

    const auto g = tr::build_tr_filter(Cir(vec({0.0, 1.0, 0.5}), 5e-12), "0-1");
    REQUIRE(g.taps.size() == 3);
    CHECK(g.taps(0).real() == doctest::Approx(0.4472).epsilon(1e-3));
    CHECK(g.taps(1).real() == doctest::Approx(0.8944).epsilon(1e-3));
    CHECK(std::abs(g.taps(2)) < 1e-12);
    CHECK(g.source == "0-1");

    std::mt19937_64 rng(1);
    for (int t = 0; t < 100; ++t) {
        const Cir h(random_taps(1 + t * 7, rng) * 1e-2, 5e-12);
        const auto f = tr::build_tr_filter(h);
        CHECK(std::abs(f.taps.squaredNorm() - 1.0) < 1e-9);
        CHECK(f.taps.allFinite());
    }
}

TEST_CASE("precoding") {
    std::mt19937_64 rng(2);
    const modem::Waveform x{random_taps(40, rng), 5e-12};
    const tr::TrFilter unit{vec({1.0}), 5e-12, ""};
    CHECK(tr::apply_precoding(x, unit).samples == x.samples);

    const tr::TrFilter g{random_taps(9, rng), 5e-12, ""};
    const modem::Waveform impulse{vec({1.0}), 5e-12};
    CHECK(tr::apply_precoding(impulse, g).samples.isApprox(g.taps));
    CHECK(tr::apply_precoding(x, g).samples.isApprox(conv_oracle(x.samples, g.taps), 1e-12));

    CHECK_THROWS_AS(tr::apply_precoding(modem::Waveform{x.samples, 10e-12}, g), Error);

    // Mean power through a random unit-energy filter.
    Eigen::VectorXcd g50 = random_taps(50, rng);
    g50 /= g50.norm();
    std::bernoulli_distribution coin;
    Eigen::VectorXcd bpsk(100000);
    for (auto& s : bpsk) s = coin(rng) ? 1.0 : -1.0;
    const auto y = tr::apply_precoding({bpsk, 5e-12}, {g50, 5e-12, ""});
    const double ratio = y.samples.cwiseAbs2().mean() / bpsk.cwiseAbs2().mean();
    CHECK(ratio >= 0.95);
    CHECK(ratio <= 1.05);
}

TEST_CASE("equivalent channel") {
    const Cir h(vec({0.0, 1.0, 0.5}), 5e-12);
    const Cir q = tr::equivalent_channel(tr::build_tr_filter(h), h);
    const double expect[] = {0.0, 0.4472, 1.1180, 0.4472, 0.0};
    REQUIRE(q.size() == 5);
    for (Index i = 0; i < 5; ++i) CHECK(std::abs(q.samples()(i)) == doctest::Approx(expect[i]).epsilon(1e-3));
    CHECK(dsp::argmax_abs(q.samples()) == 2);
    CHECK(std::abs(q.samples()(2)) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));

    const Cir one(vec({1.0}), 5e-12);
    CHECK(tr::equivalent_channel(tr::build_tr_filter(one), one).samples() == vec({1.0}));

    const Cir a(vec({1.0, 1.0}), 5e-12), b(vec({1.0, -1.0}), 5e-12);
    const Cir cross = tr::equivalent_channel(tr::build_tr_filter(a), b);
    CHECK(cross.samples().cwiseAbs().maxCoeff() == doctest::Approx(0.5 * b.norm()));
    CHECK(chan::channel_correlation(a, b) == doctest::Approx(0.5));
}

TEST_CASE("Cauchy-Schwarz bound on the focusing peak") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; ++t) {
        const Cir h(random_taps(20 + t, rng), 5e-12);
        Eigen::VectorXcd g = random_taps(20 + t, rng);
        g /= g.norm();
        const double peak = tr::equivalent_channel({g, 5e-12, ""}, h).samples().cwiseAbs().maxCoeff();
        CHECK(peak <= h.norm() * (1 + 1e-12));
        const double own = tr::equivalent_channel(tr::build_tr_filter(h), h).samples().cwiseAbs().maxCoeff();
        CHECK(own == doctest::Approx(h.norm()).epsilon(1e-9));
        CHECK(own >= peak);
    }
}

TEST_CASE("degradation") {
    std::mt19937_64 rng(4);
    const Cir h = chan::generate_reverberant_cir(chan::preset("inter-chip"), 17);
    const auto g = tr::build_tr_filter(h);

    CHECK(tr::degrade_filter(g, {}).taps.isApprox(g.taps, 1e-15));

    SUBCASE("truncation keeps the strongest taps") {
        const tr::TrFilter f{vec({0.5, 1.0, 0.25}) / std::sqrt(1.3125), 5e-12, ""};
        const auto d = tr::degrade_filter(f, {1, std::nullopt, 1});
        CHECK(std::abs(d.taps(0)) == 0.0);
        CHECK(std::abs(d.taps(1)) == doctest::Approx(1.0));
        CHECK(std::abs(d.taps(2)) == 0.0);
    }
    SUBCASE("mid-rise quantizer") {
        // Full scale 1, two bits: levels -1, -1/3, 1/3, 1; zero components land on +1/3.
        const tr::TrFilter f{vec({1.0, 0.3, -0.36, -1.0}), 5e-12, ""};
        const auto d = tr::degrade_filter(f, {std::nullopt, 2, 1});
        Eigen::VectorXcd e = vec({{1.0, 1 / 3.0}, {1 / 3.0, 1 / 3.0}, {-1 / 3.0, 1 / 3.0}, {-1.0, 1 / 3.0}});
        e /= e.norm();
        CHECK(d.taps.isApprox(e, 1e-12));
        CHECK(tr::degrade_filter(g, {std::nullopt, 24, 1}).taps.isApprox(g.taps, 1e-5));
    }
    SUBCASE("zero-order-hold downsampling") {
        const tr::TrFilter f{vec({1.0, 2.0, 3.0, 4.0, 5.0}), 5e-12, ""};
        const auto d = tr::degrade_filter(f, {std::nullopt, std::nullopt, 2});
        Eigen::VectorXcd e = vec({1.0, 1.0, 3.0, 3.0, 5.0});
        CHECK(d.taps.isApprox(e / e.norm(), 1e-12));

        REQUIRE(g.taps.size() >= 20);
        const double peak = tr::equivalent_channel(g, h).samples().cwiseAbs().maxCoeff();
        const double down =
            tr::equivalent_channel(tr::degrade_filter(g, {std::nullopt, std::nullopt, 2}), h).samples().cwiseAbs().maxCoeff();
        CHECK(down < peak);
    }
    SUBCASE("renormalized and annihilation") {
        for (int k : {1, 5, 50}) CHECK(tr::degrade_filter(g, {k, 3, 4}).taps.norm() == doctest::Approx(1.0));
        const tr::TrFilter f{vec({0.0, 1.0}), 5e-12, ""};
        CHECK_THROWS_AS(tr::degrade_filter(f, {1, std::nullopt, 2}), Error);
        CHECK_THROWS_AS(tr::degrade_filter(g, {0, std::nullopt, 1}), Error);
    }
}

TEST_CASE("expected peak is non-decreasing in keep_taps") {
    const std::vector<int> keep{4, 16, 64, 256, 100000};
    std::vector<double> mean(keep.size(), 0.0);
    for (int s = 0; s < 100; ++s) {
        const Cir h = chan::generate_reverberant_cir(chan::preset("inter-chip"), 300u + s);
        const auto g = tr::build_tr_filter(h);
        for (std::size_t k = 0; k < keep.size(); ++k)
            mean[k] += tr::equivalent_channel(tr::degrade_filter(g, {keep[k], std::nullopt, 1}), h)
                           .samples()
                           .cwiseAbs()
                           .maxCoeff();
    }
    for (std::size_t k = 1; k < keep.size(); ++k) CHECK(mean[k] >= mean[k - 1]);
}

TEST_CASE("filter export") {
    const auto path = std::filesystem::temp_directory_path() / "trchipnet_filter.csv";
    const auto g = tr::build_tr_filter(chan::generate_reverberant_cir(chan::preset("intra-chip"), 2));
    tr::save_filter(path, g);
    const Cir back = chan::load_cir(path);
    CHECK((back.samples() - g.taps).norm() < 1e-12);
}
