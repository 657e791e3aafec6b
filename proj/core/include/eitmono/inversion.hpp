#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eitmono/forward.hpp"
#include "eitmono/geometry.hpp"
#include "eitmono/monotonicity.hpp"
#include "eitmono/protocol.hpp"
#include "eitmono/sensitivity.hpp"

namespace eitmono {

struct SolverOptions {
    // Stop once ||P(kappa - g) - kappa|| <= tol * ||S^T V||, g = S^T (S kappa - V), and the same
    // holds in coordinates where every column of S has unit norm.
    double tol = 1e-8;
    int max_iterations = 10000;
    // Assert the objective never increases between iterations.
    bool check_descent = false;
};

struct ReconstructionResult {
    Eigen::VectorXd kappa;
    double objective = 0.0;  // ||S kappa - V||^2
    int iterations = 0;
    bool converged = false;
    std::string method;
    std::vector<int> active_set;
    double projected_gradient = 0.0;
};

// Norm of P(kappa - g) - kappa for the box [lower, upper].
double projected_gradient_norm(const Eigen::MatrixXd& s, const Eigen::VectorXd& v, const Eigen::VectorXd& kappa,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

// min ||S kappa - V||^2 over lower <= kappa <= upper by projected gradient with
// Barzilai-Borwein steps. Once the binding set repeats, conjugate gradients on the free
// coordinates take over until a new bound is hit. Every move is an exact line minimisation
// inside the box, so the objective is non-increasing.
ReconstructionResult solve_box(const Eigen::MatrixXd& s, const Eigen::VectorXd& v, const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper, const SolverOptions& opts = {});

ReconstructionResult solve_constrained(const Eigen::MatrixXd& s, const Eigen::VectorXd& v,
                                       const ConstraintSet& constraints, const SolverOptions& opts = {});

enum class TikhonovWeighting { Identity, Noser };

// (S^T S + alpha W) kappa = S^T V with W = I or diag(S^T S).
ReconstructionResult solve_tikhonov(const Eigen::MatrixXd& s, const Eigen::VectorXd& v, double alpha,
                                    TikhonovWeighting weighting = TikhonovWeighting::Noser);

enum class Method { Monotonicity, Tikhonov };

struct ReconstructionConfig {
    MeshParams mesh{0.1, 16, 0.0159, 2};
    int grid = 24;
    double sigma0 = 1.0;
    double contrast_bound = 0.99;
    Polarity polarity = Polarity::Resistive;
    Method method = Method::Monotonicity;
    double alpha = 0.03;
    TikhonovWeighting weighting = TikhonovWeighting::Noser;
    std::optional<double> manual_cap;
    // Scale the measured frames onto the homogeneous model frame first.
    bool calibrate = false;
    SolverOptions solver;
};

struct Reconstruction {
    ReconstructionResult result;
    std::optional<ConstraintSet> constraints;
    DifferenceFrame difference;
    DiskMesh mesh;
    PixelGrid grid;
    Eigen::MatrixXd sensitivity;  // L^2 x P
    Eigen::VectorXd data;         // L^2
    double scale = 1.0;
};

// complete -> (calibrate) -> difference -> sensitivity -> constraints -> solve.
// Failures are rethrown with the stage name prefixed to the message.
Reconstruction reconstruct(const MeasurementFrame& hom, const MeasurementFrame& inhom, const ReconstructionConfig& config);

// Up to the constraint stage only (no solve); used for constraint dumps.
Reconstruction prepare_constraints(const MeasurementFrame& hom, const MeasurementFrame& inhom,
                                   const ReconstructionConfig& config);

}  // namespace eitmono
