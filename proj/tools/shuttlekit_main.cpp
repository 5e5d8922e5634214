#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "shuttlekit/config.hpp"
#include "shuttlekit/errors.hpp"
#include "shuttlekit/runner.hpp"

namespace {

// exit codes: 0 success, 2 validation error, 3 runtime (divergence/singularity)
int guarded(int (*fn)(const shuttlekit::RunConfig&, std::optional<std::uint64_t>),
            const std::string& config_path, std::optional<std::uint64_t> seed) {
    try {
        const auto cfg = shuttlekit::load_run_config(config_path);
        return fn(cfg, seed);
    } catch (const shuttlekit::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const shuttlekit::InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const shuttlekit::InvalidDurationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

int run_adapter(const shuttlekit::RunConfig& cfg, std::optional<std::uint64_t>) {
    return shuttlekit::cmd_run(cfg);
}

int dump_adapter(const shuttlekit::RunConfig& cfg, std::optional<std::uint64_t>) {
    return shuttlekit::cmd_traj_dump(cfg);
}

int compare_adapter(const shuttlekit::RunConfig& cfg, std::optional<std::uint64_t> seed) {
    return shuttlekit::cmd_compare(cfg, seed);
}

int oracle_adapter(const shuttlekit::RunConfig& cfg, std::optional<std::uint64_t> seed) {
    return shuttlekit::cmd_oracle(cfg, seed);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"harmonic-trap shuttling: trajectories, noise sensitivity, oracles"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_value = 0;
    bool seed_set = false;

    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed_value, "override the configured ensemble seed")
            ->each([&](const std::string&) { seed_set = true; });
    };

    auto* run = app.add_subcommand("run", "execute a sweep and write records");
    run->add_option("config", config_path, "run configuration file")->required();

    auto* compare = app.add_subcommand("compare", "sweep with oracle comparison columns");
    compare->add_option("config", config_path, "run configuration file")->required();
    add_seed(compare);

    auto* traj = app.add_subcommand("traj", "trajectory utilities");
    auto* dump = traj->add_subcommand("dump", "write q_c, derivatives, and q_0 on a grid");
    dump->add_option("config", config_path, "run configuration file")->required();
    traj->require_subcommand(1);

    auto* oracle = app.add_subcommand("oracle", "single-point oracle run (JSON output)");
    oracle->add_option("config", config_path, "run configuration file")->required();
    add_seed(oracle);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::optional<std::uint64_t> seed =
        seed_set ? std::optional<std::uint64_t>(seed_value) : std::nullopt;

    if (run->parsed()) return guarded(run_adapter, config_path, seed);
    if (compare->parsed()) return guarded(compare_adapter, config_path, seed);
    if (traj->parsed() && dump->parsed()) return guarded(dump_adapter, config_path, seed);
    if (oracle->parsed()) return guarded(oracle_adapter, config_path, seed);
    return 2;
}
