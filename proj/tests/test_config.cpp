#include "trchipnet/config.hpp"
#include "trchipnet/runner.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace trchipnet;
using nlohmann::json;

namespace {

const std::filesystem::path kRoot = TRCHIPNET_SOURCE_DIR;

json read_json(const std::filesystem::path& p) { return json::parse(std::ifstream(p)); }

std::string slurp(const std::filesystem::path& p) {
    std::ostringstream s;
    s << std::ifstream(p).rdbuf();
    return s.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "trchipnet_test_config" / name;
    std::filesystem::remove_all(dir);
    return dir;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    REQUIRE(it != header.end());
    return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

TEST_CASE("bundled configs validate") {
    for (const auto& e : std::filesystem::directory_iterator(kRoot / "configs")) {
        CAPTURE(e.path().filename().string());
        const auto l = config::load_file(e.path());
        for (const auto& v : l.violations) MESSAGE(v.path << ": " << v.message);
        CHECK(l.ok());
    }
    CHECK(config::load_file(kRoot / "tests/fixtures/flat/sim_link.json").ok());
    CHECK(config::experiment_kinds().size() == 9);
}

TEST_CASE("violations name the offending field") {
    const json base = read_json(kRoot / "configs/sim_link.json");

    SUBCASE("off-grid symbol rate") {
        json doc = base;
        doc["links"][0]["symbol_rate"] = 30e9;
        const auto l = config::load(doc, kRoot / "configs");
        REQUIRE(l.violations.size() == 1);
        CHECK(l.violations[0].path == "$.links[0].symbol_rate");
        CHECK(l.violations[0].message.find("nearest valid rate") != std::string::npos);
        CHECK(l.violations[0].message.find("28571428571") != std::string::npos);
    }
    SUBCASE("scatter with two transmitters") {
        json doc = base;
        doc["channels"]["nodes"] = 4;
        json second = doc["links"][0];
        second["tx"] = 2;
        second["rx"] = 3;
        doc["links"].push_back(second);
        doc["mode"] = "scatter";
        doc["experiment"] = "sweep-rate";
        doc["sweep"] = {{"rates", {10e9, 50e9}}};
        const auto l = config::load(doc, kRoot / "configs");
        REQUIRE(l.violations.size() == 1);
        CHECK(l.violations[0].path == "$.mode");
    }
    SUBCASE("unknown key") {
        json doc = base;
        doc["links"][0]["power"] = 3;
        const auto l = config::load(doc, kRoot / "configs");
        REQUIRE(l.violations.size() == 1);
        CHECK(l.violations[0].path == "$.links[0].power");
    }
    SUBCASE("energy detector needs ASK") {
        json doc = base;
        doc["links"][0]["scheme"] = {{"kind", "psk"}, {"order", 4}};
        doc["links"][0]["detector"] = {{"kind", "energy"}};
        CHECK_FALSE(config::load(doc, kRoot / "configs").ok());
    }
    SUBCASE("bad JSON is reported, not thrown") {
        const auto p = scratch("broken");
        std::filesystem::create_directories(p);
        std::ofstream(p / "c.json") << "{\"schema_version\": 1,";
        const auto l = config::load_file(p / "c.json");
        CHECK_FALSE(l.ok());
    }
}

TEST_CASE("resolved config reloads to itself") {
    for (const char* name : {"sim_link.json", "sweep_aggregate.json", "degradation.json", "schedule.json"}) {
        CAPTURE(name);
        const auto l = config::load_file(kRoot / "configs" / name);
        REQUIRE(l.ok());
        const json once = config::to_json(l.config);
        const auto again = config::load(once, kRoot / "configs");
        REQUIRE(again.ok());
        CHECK(config::to_json(again.config) == once);
    }
}

TEST_CASE("flat fixture runs error free and reproducibly") {
    const auto l = config::load_file(kRoot / "tests/fixtures/flat/sim_link.json");
    REQUIRE(l.ok());
    const auto a = scratch("flat_a");
    const auto b = scratch("flat_b");
    runner::run(l.config, *l.channels, a, 1);
    runner::run(l.config, *l.channels, b, 2);

    const auto rows = read_csv(a / "results.csv");
    REQUIRE(rows.size() == 2);
    CHECK(std::stod(rows[1][column(rows[0], "ber")]) == 0.0);
    CHECK(std::stoll(rows[1][column(rows[0], "bits")]) >= 10000);
    CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));

    const json m = read_json(a / "manifest.json");
    CHECK(m["tool"] == "trchipnet");
    CHECK(m["config"] == config::to_json(l.config));
}

TEST_CASE("characterize agrees with the channel statistics") {
    const auto channels = chan::generate_channel_matrix("package", 4, 3);
    const auto dir = scratch("char");
    runner::characterize(channels, dir);
    const auto rows = read_csv(dir / "results.csv");
    REQUIRE(rows.size() == channels.entries().size() + 1);
    const auto& h = rows[0];
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const int tx = std::stoi(rows[r][column(h, "tx")]);
        const int rx = std::stoi(rows[r][column(h, "rx")]);
        const chan::Cir& c = channels.at(tx, rx);
        CHECK(std::stod(rows[r][column(h, "energy")]) == doctest::Approx(c.energy()).epsilon(1e-9));
        CHECK(std::stod(rows[r][column(h, "rms_delay_spread_ns")]) ==
              doctest::Approx(chan::rms_delay_spread(c) * 1e9).epsilon(1e-9));
        CHECK(std::stoll(rows[r][column(h, "taps")]) == c.size());
    }
    const auto corr = read_csv(dir / "correlation.csv");
    REQUIRE(corr.size() == channels.entries().size() + 1);
    const auto first = channels.entries().begin();
    const auto second = std::next(first);
    CHECK(std::stod(corr[1][2]) ==
          doctest::Approx(chan::channel_correlation(first->second, second->second)).epsilon(1e-9));
    CHECK(std::stod(corr[1][1]) == doctest::Approx(1.0));
}
