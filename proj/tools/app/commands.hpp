#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>

#include "eitmono/forward.hpp"
#include "eitmono/geometry.hpp"
#include "eitmono/inversion.hpp"
#include "eitmono/io.hpp"
#include "run_config.hpp"

namespace eitmono::app {

struct SimulatedFrames {
    MeasurementFrame hom;
    MeasurementFrame inhom;
};

// Homogeneous and phantom frames on the simulation mesh, masked and noisy as configured.
// The homogeneous frame uses seed, the phantom frame seed + 1.
SimulatedFrames simulate_frames(const RunConfig& config);

// Each command writes its files below config.output.directory (created if needed) and logs a
// short summary to `log`.
void cmd_simulate(const RunConfig& config, std::ostream& log);
void cmd_reconstruct(const RunConfig& config, const std::filesystem::path& hom, const std::filesystem::path& inhom,
                     std::ostream& log);
void cmd_constraints(const RunConfig& config, const std::filesystem::path& hom, const std::filesystem::path& inhom,
                     std::ostream& log);
// Noise-free phantom frame on the simulation mesh; optional mesh and sensitivity dumps.
void cmd_forward(const RunConfig& config, std::ostream& log);
// Prints the scale factor and the residual before and after scaling.
void cmd_calibrate(const std::filesystem::path& measured, const std::filesystem::path& model, std::ostream& out);

// "pixel,row,col,x,y,kappa" with one line per retained pixel.
void write_kappa_csv(std::ostream& out, const PixelGrid& grid, std::span<const double> kappa);
// "pixel,row,col,x,y,beta,upper"; an infinite beta is written as inf.
void write_beta_csv(std::ostream& out, const PixelGrid& grid, const ConstraintSet& constraints);

}  // namespace eitmono::app
