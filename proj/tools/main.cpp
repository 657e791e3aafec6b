// eitmono command-line front end.
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "app/commands.hpp"
#include "app/run_config.hpp"
#include "eitmono/error.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Inputs {
    std::string config;
    std::string hom;
    std::string inhom;
    std::string method;
    std::string output_dir;
};

eitmono::app::RunConfig load(const Inputs& in) {
    auto cfg = eitmono::app::load_run_config(in.config);
    if (!in.method.empty()) cfg.inversion.method = eitmono::app::parse_method(in.method);
    if (!in.output_dir.empty()) cfg.output.directory = in.output_dir;
    return cfg;
}

// Measurement paths default to the files `simulate` writes for the same config.
std::filesystem::path input_path(const std::string& given, const eitmono::app::RunConfig& cfg,
                                 const std::string& fallback) {
    return given.empty() ? cfg.out(fallback) : std::filesystem::path(given);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monotonicity-constrained linearized EIT reconstruction"};
    app.require_subcommand(1);
    Inputs in;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("-c,--config", in.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--output-dir", in.output_dir, "Override output.directory");
    };
    auto add_frames = [&](CLI::App* sub) {
        sub->add_option("--hom", in.hom, "Homogeneous measurement (default: output dir / output.hom)");
        sub->add_option("--inhom", in.inhom, "Inhomogeneous measurement (default: output dir / output.inhom)");
        sub->add_option("-m,--method", in.method, "Override inversion.method")
            ->check(CLI::IsMember({"monotonicity", "tikhonov"}));
    };

    auto* simulate = app.add_subcommand("simulate", "Simulate homogeneous and phantom frames");
    add_config(simulate);
    auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct kappa from two frames");
    add_config(reconstruct);
    add_frames(reconstruct);
    auto* constraints = app.add_subcommand("constraints", "Dump the per-pixel monotonicity bounds");
    add_config(constraints);
    add_frames(constraints);
    auto* forward = app.add_subcommand("forward", "Noise-free forward solve, optional mesh and sensitivity dumps");
    add_config(forward);

    std::string measured;
    std::string model;
    auto* calibrate = app.add_subcommand("calibrate", "Scale factor mapping measured data onto a model frame");
    calibrate->add_option("measured", measured, "Measured frame (.json or .csv)")->required()->check(CLI::ExistingFile);
    calibrate->add_option("model", model, "Model frame (.json or .csv)")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (simulate->parsed()) {
            eitmono::app::cmd_simulate(load(in), std::cout);
        } else if (reconstruct->parsed() || constraints->parsed()) {
            const auto cfg = load(in);
            const auto hom = input_path(in.hom, cfg, cfg.output.hom);
            const auto inhom = input_path(in.inhom, cfg, cfg.output.inhom);
            if (reconstruct->parsed()) {
                eitmono::app::cmd_reconstruct(cfg, hom, inhom, std::cout);
            } else {
                eitmono::app::cmd_constraints(cfg, hom, inhom, std::cout);
            }
        } else if (forward->parsed()) {
            eitmono::app::cmd_forward(load(in), std::cout);
        } else if (calibrate->parsed()) {
            eitmono::app::cmd_calibrate(measured, model, std::cout);
        }
    } catch (const eitmono::NumericalError& e) {
        std::cerr << "eitmono: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const eitmono::Error& e) {
        std::cerr << "eitmono: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "eitmono: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
