#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wrinkle/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Homogenized wrinkled-plate toolkit"};
    app.require_subcommand(1);
    std::string config;
    std::string out;
    std::string reuse;
    std::uint64_t seed = 0;
    for (const char* verb : {"effective", "solve", "validate"}) {
        auto* sub = app.add_subcommand(verb);
        sub->add_option("config", config, "run configuration (JSON)")->required();
        sub->add_option("--out", out, "output directory (overrides the config)");
        sub->add_option("--seed", seed, "minimizer and validation seed (overrides the config)");
        if (std::string(verb) == "solve")
            sub->add_option("--reuse-effective", reuse, "effective_form.json written by 'effective'");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : wrinkle::cli::kConfigError;
    }
    auto* chosen = app.get_subcommands().front();
    wrinkle::cli::CommandOptions options;
    if (!out.empty()) options.out_dir = out;
    if (!reuse.empty()) options.reuse_effective = reuse;
    if (chosen->count("--seed") > 0) options.seed = seed;
    return wrinkle::cli::run(chosen->get_name(), config, options, std::cerr);
}
