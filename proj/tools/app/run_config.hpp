#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "eitmono/forward.hpp"
#include "eitmono/geometry.hpp"
#include "eitmono/inversion.hpp"

namespace eitmono::app {

// Everything a command needs, read from one JSON file. Every field has a default; see
// README.md for the full key list. Unknown keys anywhere are rejected.
struct RunConfig {
    struct Geometry {
        double radius = 0.1;
        int electrodes = 16;
        double electrode_arc_fraction = 0.0159;
        int simulation_level = 3;
        int reconstruction_level = 2;
        int grid = 24;
    } geometry;

    PhantomSpec phantom;

    struct Protocol {
        double current_amplitude = 1e-3;
        double noise_level = 0.0;
        std::uint64_t seed = 1;
        // Devices following the adjacent protocol do not deliver |k - l| <= 1.
        bool mask_driving_electrodes = true;
    } protocol;

    struct Inversion {
        Method method = Method::Monotonicity;
        Polarity polarity = Polarity::Resistive;
        double sigma0 = 1.0;
        double contrast_bound = 0.99;
        double alpha = 0.03;
        TikhonovWeighting weighting = TikhonovWeighting::Noser;
        std::optional<double> manual_cap;
        bool calibrate = false;
        double tolerance = 1e-8;
        int max_iterations = 10000;
    } inversion;

    struct Output {
        std::filesystem::path directory = ".";
        std::string hom = "hom.json";
        std::string inhom = "inhom.json";
        std::string kappa = "kappa.csv";
        std::string image = "recon.pgm";
        std::string report = "report.json";
        std::string beta = "beta.csv";
        std::string beta_image = "beta.pgm";
        std::string forward = "forward.json";
        std::string mesh;         // empty: not written
        std::string sensitivity;  // empty: not written
    } output;

    [[nodiscard]] std::filesystem::path out(const std::string& name) const { return output.directory / name; }
    [[nodiscard]] MeshParams simulation_mesh() const;
    [[nodiscard]] ReconstructionConfig reconstruction() const;
};

// Throws ConfigError on malformed input, unknown keys or out-of-range values.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

Method parse_method(const std::string& name);
std::string to_string(Method method);
std::string to_string(Polarity polarity);

}  // namespace eitmono::app
