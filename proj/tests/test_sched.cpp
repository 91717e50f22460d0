#include "trchipnet/error.hpp"
#include "trchipnet/netsim.hpp"
#include "trchipnet/sched.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace trchipnet;
using sched::SchedulerInput;

namespace {

SchedulerInput symmetric(double chi2, double noise, double target, std::size_t n = 2) {
    SchedulerInput in;
    for (std::size_t k = 0; k < n; ++k)
        in.candidates.push_back({static_cast<int>(2 * k), static_cast<int>(2 * k + 1),
                                 modem::ModulationScheme::psk(2, 4), 50e9});
    in.lut = Eigen::MatrixXd::Constant(static_cast<Index>(n), static_cast<Index>(n), std::sqrt(chi2));
    in.lut.diagonal().setOnes();
    in.gains = Eigen::VectorXd::Ones(static_cast<Index>(n));
    in.noise = noise;
    in.p_min = 1e-6;
    in.p_max = 1e3;
    in.sinr_target = target;
    return in;
}

SchedulerInput random_input(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SchedulerInput in;
    const int orders[] = {2, 4, 8, 16};
    for (std::size_t k = 0; k < n; ++k)
        in.candidates.push_back({static_cast<int>(2 * k), static_cast<int>(2 * k + 1),
                                 modem::ModulationScheme::psk(orders[rng() % 4], 4), 50e9});
    const auto m = static_cast<Index>(n);
    in.lut = Eigen::MatrixXd::Identity(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = i + 1; j < m; ++j) in.lut(i, j) = in.lut(j, i) = 0.6 * u(rng);
    in.gains = Eigen::VectorXd(m);
    for (Index i = 0; i < m; ++i) in.gains(i) = std::pow(10.0, -u(rng));
    in.noise = 1e-3;
    in.p_min = 1e-3;
    in.p_max = 1.0;
    in.sinr_target = std::pow(10.0, 0.5 + u(rng));
    return in;
}

// Independent SINR evaluation straight from the surrogate formula.
double sinr_oracle(const SchedulerInput& in, const sched::Subset& s, const Eigen::VectorXd& p, std::size_t a) {
    const int i = s[a];
    double den = in.noise;
    for (std::size_t b = 0; b < s.size(); ++b)
        if (b != a) den += p(static_cast<Index>(b)) * in.gains(s[b]) * std::pow(in.lut(i, s[b]), 2);
    return p(static_cast<Index>(a)) * in.gains(i) / den;
}

}  // namespace

TEST_CASE("predict_sinr") {
    SchedulerInput one = symmetric(0.0, 0.01, 10.0, 1);
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 0.3);
    CHECK(sched::predict_sinr(one, {0}, p)(0) == doctest::Approx(0.3 / 0.01));

    SchedulerInput two = symmetric(1.0, 1e-9, 10.0);
    const Eigen::VectorXd hot = Eigen::VectorXd::Constant(2, 100.0);
    CHECK(10 * std::log10(sched::predict_sinr(two, {0, 1}, hot)(0)) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK_THROWS_AS(sched::predict_sinr(two, {}, hot), Error);
    CHECK_THROWS_AS(sched::predict_sinr(two, {0, 2}, hot), Error);
}

TEST_CASE("allocate_power fixed points") {
    SchedulerInput one = symmetric(0.0, 0.01, 10.0, 1);
    auto a = sched::allocate_power(one, {0});
    CHECK(a.feasible);
    CHECK(a.powers(0) == doctest::Approx(0.1).epsilon(1e-6));

    SchedulerInput two = symmetric(0.05, 0.01, 10.0);
    a = sched::allocate_power(two, {0, 1});
    CHECK(a.feasible);
    CHECK(std::abs(a.powers(0) - 0.2) < 1e-6);
    CHECK(std::abs(a.powers(1) - 0.2) < 1e-6);
    CHECK(sched::spectral_radius(two, {0, 1}) == doctest::Approx(0.5));
    for (Index i = 0; i < 2; ++i) CHECK(std::abs(10 * std::log10(a.sinr(i) / 10.0)) < 1e-4);

    SchedulerInput edge = symmetric(0.1, 0.01, 10.0);
    CHECK(sched::spectral_radius(edge, {0, 1}) == doctest::Approx(1.0));
    CHECK_FALSE(sched::allocate_power(edge, {0, 1}).feasible);
}

TEST_CASE("select_links basics") {
    SchedulerInput free = symmetric(0.0, 0.01, 10.0);
    CHECK(sched::select_links(free).links == sched::Subset{0, 1});

    SchedulerInput clash = symmetric(1.0, 0.01, std::pow(10.0, 0.3));
    const auto s = sched::select_links(clash);
    CHECK(s.links.size() == 1);
    CHECK(s.links[0] == 0);

    SchedulerInput hopeless = symmetric(0.0, 10.0, 10.0);
    hopeless.p_max = 1.0;
    CHECK(sched::select_links(hopeless).links.empty());
}

TEST_CASE("greedy against the exhaustive optimum") {
    std::mt19937_64 rng(2024);
    int rows = 0, optimal = 0;
    for (int t = 0; t < 50; ++t) {
        for (std::size_t n = 1; n <= 6; ++n) {
            const SchedulerInput in = random_input(n, rng);
            const auto g = sched::select_links(in);
            const auto best = sched::exhaustive_best(in);
            ++rows;
            CHECK(g.aggregate_rate <= best.aggregate_rate * (1 + 1e-12));
            optimal += g.aggregate_rate >= best.aggregate_rate * (1 - 1e-12);
            if (g.links.empty()) continue;
            Eigen::VectorXd p(static_cast<Index>(g.links.size()));
            for (Index a = 0; a < p.size(); ++a) p(a) = std::pow(10.0, g.powers_dbm(a) / 10.0);
            for (std::size_t a = 0; a < g.links.size(); ++a) {
                CHECK(sinr_oracle(in, g.links, p, a) >= in.sinr_target * (1 - 1e-6));
                CHECK(p(static_cast<Index>(a)) >= in.p_min * (1 - 1e-12));
                CHECK(p(static_cast<Index>(a)) <= in.p_max * (1 + 1e-12));
            }
        }
    }
    MESSAGE("greedy matched the exhaustive optimum on " << optimal << " of " << rows << " inputs");
}

TEST_CASE("wider power bounds never shrink the greedy rate") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 100; ++t) {
        SchedulerInput in = random_input(5, rng);
        const double narrow = sched::select_links(in).aggregate_rate;
        in.p_min /= 10;
        in.p_max *= 10;
        CHECK(sched::select_links(in).aggregate_rate >= narrow);
    }
}

TEST_CASE("select_links is permutation invariant") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 50; ++t) {
        SchedulerInput in = random_input(5, rng);
        // Distinct bit rates so the index tie-break never fires.
        const double rates[] = {11e9, 13e9, 17e9, 19e9, 23e9};
        for (std::size_t k = 0; k < 5; ++k) in.candidates[k].symbol_rate = rates[k];
        std::vector<int> perm{3, 0, 4, 1, 2};
        SchedulerInput q = in;
        for (std::size_t k = 0; k < 5; ++k) {
            q.candidates[k] = in.candidates[perm[k]];
            q.gains(static_cast<Index>(k)) = in.gains(perm[k]);
            for (std::size_t j = 0; j < 5; ++j) q.lut(static_cast<Index>(k), static_cast<Index>(j)) = in.lut(perm[k], perm[j]);
        }
        const auto a = sched::select_links(in);
        const auto b = sched::select_links(q);
        std::vector<int> mapped;
        for (int k : b.links) mapped.push_back(perm[k]);
        std::sort(mapped.begin(), mapped.end());
        CHECK(mapped == a.links);
        CHECK(sched::select_links(in).links == a.links);
    }
}

// Random two-link scenarios over the presets. The surrogate ignores ISI, which the synthetic
// channels leave well above the noise floor once interference dominates, so this can fail.
TEST_CASE("surrogate tracks the simulator within 3 dB" * doctest::may_fail()) {
    const netsim::NoiseModel noise;
    const char* presets[] = {"inter-chip", "intra-chip", "package"};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dbm(-30.0, 0.0);
    int within = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto m = chan::generate_channel_matrix(presets[rng() % 3], 4, 900 + s);
        const double rate = rng() % 2 ? 10e9 : 50e9;
        const int sps = static_cast<int>(std::llround(1.0 / (rate * m.sample_interval())));
        netsim::LinkConfig a, b;
        a.tx = 0, a.rx = 1, b.tx = 2, b.rx = 3;
        for (auto* l : {&a, &b}) {
            l->scheme = modem::ModulationScheme::psk(2, sps);
            l->symbol_rate = rate;
            l->detector.kind = modem::DetectorKind::coherent;
            l->tx_power_dbm = dbm(rng);
        }
        const netsim::LinkSet set{{a, b}, netsim::SetMode::multi_tx};
        const auto in = sched::make_input(m, {{0, 1, a.scheme, rate}, {2, 3, b.scheme, rate}},
                                          noise.power_mw(m.sample_interval()) / sps, -40, 20, 10);
        Eigen::VectorXd p(2);
        p << std::pow(10.0, a.tx_power_dbm / 10), std::pow(10.0, b.tx_power_dbm / 10);
        const Eigen::VectorXd pred = sched::predict_sinr(in, {0, 1}, p);
        for (std::size_t i = 0; i < 2; ++i) {
            const double gap = 10 * std::log10(pred(static_cast<Index>(i))) - netsim::measure_sinr(m, set, i, noise).sinr_db();
            within += std::abs(gap) < 3.0;
            CHECK(std::abs(gap) < 3.0);
        }
    }
    MESSAGE(within << " of 20 links within 3 dB");
}

TEST_CASE("input validation and LUT files") {
    SchedulerInput in = symmetric(0.05, 0.01, 10.0);
    CHECK_NOTHROW(in.validate());
    in.lut(0, 1) = 0.3;
    CHECK_THROWS_AS(in.validate(), Error);
    in = symmetric(0.05, 0.01, 10.0);
    in.p_min = 2e3;
    CHECK_THROWS_AS(in.validate(), Error);

    const auto m = chan::generate_channel_matrix("package", 6, 1);
    std::vector<sched::Candidate> c{{0, 3, modem::ModulationScheme::psk(2, 4), 50e9},
                                    {1, 4, modem::ModulationScheme::psk(2, 4), 50e9}};
    const auto mi = sched::make_input(m, c, 1e-9, -10, 20, 10);
    CHECK(mi.gains(0) == doctest::Approx(m.at(0, 3).energy()));
    CHECK(mi.lut(0, 1) ==
          doctest::Approx(std::max(chan::channel_correlation(m.at(0, 3), m.at(0, 4)),
                                   chan::channel_correlation(m.at(1, 4), m.at(1, 3)))));
    const auto path = std::filesystem::temp_directory_path() / "trchipnet_lut.csv";
    sched::save_lut(path, mi.lut, c);
    CHECK(sched::load_lut(path).isApprox(mi.lut, 1e-15));
}
