#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "eitmono/forward.hpp"
#include "eitmono/geometry.hpp"
#include "eitmono/protocol.hpp"

namespace eitmono {

// Discretized Frechet derivative of the measurement map at a homogeneous background.
//
// columns[p](j, l) = -(1/I) * integral over pixel p of grad u_j . grad u_l, with u_j the
// pattern-j potential at drive current I. The 1/I makes S the derivative of the frame U
// measured at that same current, so S * kappa and V carry the same units.
struct SensitivityTensor {
    int electrodes = 0;
    double background = 1.0;
    double current = 1.0;
    std::vector<Eigen::MatrixXd> columns;

    [[nodiscard]] int pixel_count() const { return static_cast<int>(columns.size()); }
};

SensitivityTensor assemble_sensitivity(const DiskMesh& mesh, const PixelGrid& grid, double sigma0, double current);

// Same as assemble_sensitivity, reusing potentials computed at sigma0.
SensitivityTensor sensitivity_from_solutions(const DiskMesh& mesh, const PixelGrid& grid,
                                             const PatternSolutions& solutions, double sigma0);

// Gradient of every pattern potential on triangle t: 2 x L.
Eigen::Matrix<double, 2, Eigen::Dynamic> pattern_gradients(const DiskMesh& mesh, const PatternSolutions& solutions,
                                                           std::size_t t);

// L^2 x P matrix; entry (k + l*L, p) = columns[p](k, l), i.e. the column-major flattening.
Eigen::MatrixXd vectorize(const SensitivityTensor& tensor);
SensitivityTensor unvectorize(const Eigen::MatrixXd& matrix, int electrodes);

// Entry k + l*L holds V(k, l), matching vectorize().
Eigen::VectorXd vectorize_frame(const Eigen::MatrixXd& frame);
Eigen::VectorXd vectorize_frame(const DifferenceFrame& frame);
Eigen::MatrixXd unvectorize_frame(const Eigen::VectorXd& vec, int electrodes);

// Text dump, one block per pixel:
//   # eitmono sensitivity v1
//   electrodes <L> pixels <P> background <s0> current <I>
//   pixel <p>      then L lines of L values
void write_sensitivity_text(std::ostream& out, const SensitivityTensor& tensor);

}  // namespace eitmono
