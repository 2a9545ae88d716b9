#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "jamstat/experiments.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

int run(jamstat::Command cmd, const std::string& config_path, const std::string& seed, int threads,
        const std::string& out) {
    using namespace jamstat;
    ExperimentConfig c;
    try {
        std::ifstream is(config_path);
        if (!is) throw ConfigError("cannot open config file " + config_path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(is);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(config_path + ": " + e.what());
        }
        c = config_from_json(j);
        if (j.contains("command") && c.command != cmd)
            throw ConfigError("field 'command': config says '" + command_name(c.command) + "' but '" +
                              command_name(cmd) + "' was requested");
        c.command = cmd;
        if (!seed.empty()) c.seed = parse_seed(seed);
        if (threads > 0) c.threads = threads;
        if (!out.empty()) c.out = out;
        validate_config(c);
    } catch (const ConfigError& e) {
        std::cerr << "jamstat: config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "jamstat: error: " << e.what() << "\n";
        return kRuntimeError;
    }
    try {
        for (const auto& p : run_experiment(c)) std::cout << p.string() << "\n";
    } catch (const ConfigError& e) {
        std::cerr << "jamstat: config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "jamstat: error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Jamming limits and second-order statistics of random packings"};
    app.set_version_flag("--version", jamstat::kVersion);
    app.require_subcommand(1);

    std::string config, seed, out;
    int threads = 0;
    const std::pair<const char*, jamstat::Command> cmds[] = {
        {"jam", jamstat::Command::Jam},         {"clt", jamstat::Command::Clt},
        {"weights", jamstat::Command::Weights}, {"wsg", jamstat::Command::Wsg},
        {"field", jamstat::Command::Field},     {"rates", jamstat::Command::Rates}};
    const char* help[] = {"jamming-limit estimates over a window grid",
                          "normal-approximation distances of the normalized statistic",
                          "empirical weight-of-stabilization tables",
                          "variance bound check and second-order terms",
                          "render one realization to field.csv and field.jsfd",
                          "variance and distance rates with power-law fits"};
    int k = 0;
    for (auto& [name, cmd] : cmds) {
        auto* sub = app.add_subcommand(name, help[k++]);
        sub->add_option("--config", config, "JSON configuration file")->required();
        sub->add_option("--seed", seed, "master seed, decimal or 0x-hex");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", out, "output directory");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }
    for (auto& [name, cmd] : cmds)
        if (app.got_subcommand(name)) return run(cmd, config, seed, threads, out);
    return kConfigError;
}
