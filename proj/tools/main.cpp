#include "crossdiff/config.hpp"
#include "crossdiff/experiments.hpp"
#include "crossdiff/models.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"entropy-variable LDG solver for nonlinear cross-diffusion systems"};
    app.require_subcommand(1);

    std::string config_path, preset, outdir = "out";
    int samples = 2000;
    std::uint64_t seed = 20240915;

    CLI::App* run = app.add_subcommand("run", "integrate a configured problem");
    run->add_option("--config", config_path, "INI configuration file")->required();

    CLI::App* exp = app.add_subcommand("experiment", "run a canned experiment preset");
    exp->add_option("preset", preset, "preset name")
        ->required()
        ->check(CLI::IsMember(crossdiff::preset_names()));
    exp->add_option("-o,--output", outdir, "output directory root")->capture_default_str();

    CLI::App* val = app.add_subcommand("validate-model", "sample-check the model assumptions");
    val->add_option("--config", config_path, "INI configuration file")->required();
    val->add_option("--samples", samples, "number of sample states")->capture_default_str();
    val->add_option("--seed", seed, "sampling seed")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            crossdiff::RunConfig cfg = crossdiff::parse_config_file(config_path);
            return crossdiff::run_config(cfg, std::cout);
        }
        if (exp->parsed()) return crossdiff::run_experiment(preset, outdir, std::cout);
        if (val->parsed()) {
            crossdiff::RunConfig cfg = crossdiff::parse_config_file(config_path);
            crossdiff::ModelSpec model = cfg.make_model();
            crossdiff::ValidationReport rep = crossdiff::validate_model(model, samples, seed);
            std::cout << rep.summary() << "\n";
            return (rep.h2a_ok && rep.h2b_ok && rep.roundtrip_ok) ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
