#pragma once

#include <span>

#include <Eigen/Core>

#include "eitmono/forward.hpp"

namespace eitmono {

// V = U(sigma) - U(sigma0) after completion, exactly symmetric, plus the noise shift
// delta = max(0, -lambda_min(V)).
struct DifferenceFrame {
    Eigen::MatrixXd V;
    double delta = 0.0;
    double scale = 1.0;

    [[nodiscard]] int electrodes() const { return static_cast<int>(V.rows()); }
};

// argmin_c || c * measured - model ||_2 = <measured, model> / <measured, measured>.
double calibrate_scale(std::span<const double> measured, std::span<const double> model);

// Same, restricted to entries valid in both frames.
double calibrate_scale(const MeasurementFrame& measured, const MeasurementFrame& model);

// Completes an adjacent-protocol frame. The driving-electrode band |k - l| <= 1 (mod L) is
// filled with the values that make every row as smooth as possible (least squares on periodic
// third differences along l), subject to reciprocity (the band is symmetric) and conservation
// of voltages (every row sums to zero). Measured entries are only changed by symmetrization.
// A frame that is already complete is symmetrized and its band corrected to zero row sums by
// a minimum-norm change. Any other mask is rejected.
MeasurementFrame complete_frame(const MeasurementFrame& frame);

// V = scale * (inhom - hom) for completed frames of the same size.
DifferenceFrame build_difference(const MeasurementFrame& hom, const MeasurementFrame& inhom, double scale = 1.0);

double noise_shift(const Eigen::MatrixXd& symmetric);

}  // namespace eitmono
