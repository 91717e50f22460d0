// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors
//
// trchipnet command-line front end.

#include "trchipnet/config.hpp"
#include "trchipnet/error.hpp"
#include "trchipnet/netsim.hpp"
#include "trchipnet/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

using namespace trchipnet;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

void report(const std::vector<config::Violation>& v, std::ostream& os) {
    for (const auto& e : v) os << e.path << ": " << e.message << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-reversal in-package wireless link simulator"};
    app.set_version_flag("--version", std::string(config::kToolVersion));
    app.require_subcommand(1);

    std::optional<unsigned> threads;
    std::string output;
    std::optional<std::uint64_t> seed;

    std::string cfg_path;
    auto* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", cfg_path, "experiment config (JSON)")->required();

    auto* run = app.add_subcommand("run", "run the experiment in a config");
    run->add_option("config", cfg_path, "experiment config (JSON)")->required();
    run->add_option("--threads", threads, "worker threads (0 = auto)");
    run->add_option("--output", output, "output directory (overrides the config)");
    run->add_option("--seed", seed, "master seed (overrides the config)");

    std::string preset;
    std::uint64_t gen_seed = 1;
    int nodes = 2;
    std::string gen_dir;
    auto* gen = app.add_subcommand("gen-channel", "generate a channel set and write its manifest");
    gen->add_option("preset", preset, "inter-chip, intra-chip or package")->required();
    gen->add_option("--seed", gen_seed, "channel seed");
    gen->add_option("--nodes", nodes, "node count")->check(CLI::Range(2, 1024));
    gen->add_option("-o,--output", gen_dir, "output directory")->required();

    std::string manifest;
    std::string char_dir = "out";
    auto* characterize = app.add_subcommand("characterize", "per-pair statistics of a channel manifest");
    characterize->add_option("manifest", manifest, "channel manifest (JSON)")->required()->check(CLI::ExistingFile);
    characterize->add_option("-o,--output", char_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try {
        if (*validate || *run) {
            config::Loaded l = config::load_file(cfg_path);
            if (!l.ok()) {
                report(l.violations, *validate ? std::cout : std::cerr);
                return kConfigError;
            }
            if (*validate) {
                std::cout << cfg_path << ": ok\n";
                return kOk;
            }
            if (seed) l.config.seed = *seed;
            if (!output.empty()) l.config.output = output;
            const unsigned n = netsim::resolve_threads(threads);
            const auto out = runner::run(l.config, *l.channels, l.config.output, n);
            std::cout << l.config.output << ": " << out.summary.dump() << "\n";
        } else if (*gen) {
            const auto channels = chan::generate_channel_matrix(preset, nodes, gen_seed);
            chan::save_manifest(gen_dir, channels);
            std::cout << gen_dir << ": " << channels.entries().size() << " channels\n";
        } else if (*characterize) {
            config::ExperimentConfig cfg;
            cfg.experiment = "characterize";
            cfg.channels.source = "manifest";
            cfg.channels.manifest = manifest;
            cfg.channels.manifest_path = manifest;
            cfg.output = char_dir;
            const auto channels = config::resolve_channels(cfg.channels);
            const auto out = runner::characterize(channels, char_dir);
            runner::write_manifest(char_dir, cfg, out);
            std::cout << char_dir << ": " << out.summary.dump() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kOk;
}
