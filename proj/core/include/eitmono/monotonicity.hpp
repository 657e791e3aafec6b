#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Cholesky>

#include "eitmono/forward.hpp"
#include "eitmono/protocol.hpp"
#include "eitmono/sensitivity.hpp"

namespace eitmono {

enum class Polarity { Conductive, Resistive };

inline constexpr double kInfiniteBeta = std::numeric_limits<double>::infinity();

// Contrast-derived caps for a contrast lower bound c > 0.
double a_plus(double sigma0, double contrast_bound);
inline double a_minus(double contrast_bound) { return contrast_bound; }

// Per-pixel box constraints of the monotonicity-regularized problem.
struct ConstraintSet {
    std::vector<double> beta;  // may hold kInfiniteBeta
    double a_plus = 0.0;
    double a_minus = 0.0;
    Polarity polarity = Polarity::Resistive;
    std::optional<double> manual_cap;
    double delta = 0.0;
    std::vector<double> upper;  // min(cap, beta_k), finite and >= 0

    [[nodiscard]] int pixel_count() const { return static_cast<int>(upper.size()); }
    // a_plus / a_minus for the polarity, or the manual cap when one is set.
    [[nodiscard]] double cap() const;
    // Box in kappa: [0, upper] when conductive, [-upper, 0] when resistive.
    [[nodiscard]] Eigen::VectorXd lower_bounds() const;
    [[nodiscard]] Eigen::VectorXd upper_bounds() const;
};

// Q |Lambda| Q^T for symmetric M = Q Lambda Q^T.
Eigen::MatrixXd matrix_abs(const Eigen::MatrixXd& m);

// Largest alpha >= 0 with A + alpha * S_k positive semi-definite, for A SPD and S_k NSD.
// The Cholesky factor of A is computed once and reused for every S_k.
class BetaSolver {
public:
    explicit BetaSolver(const Eigen::MatrixXd& a);

    // Returns kInfiniteBeta when S_k has no direction of negative curvature relative to A.
    // Throws NumericalError if S_k is not NSD (beyond 1e-10 ||S_k||) or the definiteness
    // certificate A + beta S_k >= -1e-8 ||A|| fails.
    [[nodiscard]] double operator()(const Eigen::MatrixXd& s_k) const;

    [[nodiscard]] double norm() const { return norm_; }

private:
    Eigen::MatrixXd a_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double norm_ = 0.0;
};

double compute_beta(const Eigen::MatrixXd& s_k, const Eigen::MatrixXd& a);

// A = |V| + delta I with delta from the difference frame; beta_k for every pixel and
// upper_k = min(cap, beta_k). When V and every S_k annihilate the constant vector (always the
// case for completed frames and assembled sensitivities) the computation runs on the
// orthogonal complement of the constants, so delta = 0 is admissible for exact data.
ConstraintSet build_constraints(const SensitivityTensor& sensitivity, const DifferenceFrame& difference,
                                double sigma0, double contrast_bound, Polarity polarity,
                                std::optional<double> manual_cap = std::nullopt);

// Three terms of the monotonicity chain left >= middle >= right:
//   left   = (1/I) int (sigma0/sigma)(sigma0 - sigma) |grad u_g|^2
//   middle = g^T V g
//   right  = (1/I) int (sigma0 - sigma) |grad u_g|^2
// with u_g = sum_j g_j u_j built from the sigma0 pattern potentials at current I.
struct MonotonicityBounds {
    double left = 0.0;
    double middle = 0.0;
    double right = 0.0;
};

MonotonicityBounds monotonicity_check(const Eigen::MatrixXd& v, double sigma0, const DiskMesh& mesh,
                                      const ConductivityField& field, const PatternSolutions& background,
                                      const Eigen::VectorXd& g);

}  // namespace eitmono
