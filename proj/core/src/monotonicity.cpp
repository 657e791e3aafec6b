#include "eitmono/monotonicity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "eitmono/error.hpp"
#include "parallel.hpp"

namespace eitmono {

namespace {

double spectral_norm_symmetric(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

void require_symmetric(const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != m.cols()) throw InvalidArgument(std::string(what) + " must be square");
    const double scale = m.cwiseAbs().maxCoeff();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw InvalidArgument(std::string(what) + " is not symmetric");
    }
}

// Orthonormal basis of the complement of the constant vector: columns 1..L-1 of the
// Householder reflector that maps e_0 onto 1/sqrt(L).
Eigen::MatrixXd constant_complement_basis(int n) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    w(0) -= 1.0;
    w.normalize();
    const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n) - 2.0 * w * w.transpose();
    return h.rightCols(n - 1);
}

bool annihilates_constants(const Eigen::MatrixXd& m) {
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return true;
    return m.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-8 * scale * static_cast<double>(m.cols());
}

}  // namespace

double a_plus(double sigma0, double contrast_bound) {
    return sigma0 - sigma0 * sigma0 / (sigma0 + contrast_bound);
}

double ConstraintSet::cap() const {
    if (manual_cap) return *manual_cap;
    return polarity == Polarity::Conductive ? a_plus : a_minus;
}

Eigen::VectorXd ConstraintSet::lower_bounds() const {
    Eigen::VectorXd lo = Eigen::VectorXd::Zero(pixel_count());
    if (polarity == Polarity::Resistive) {
        for (int k = 0; k < pixel_count(); ++k) lo(k) = -upper[k];
    }
    return lo;
}

Eigen::VectorXd ConstraintSet::upper_bounds() const {
    Eigen::VectorXd hi = Eigen::VectorXd::Zero(pixel_count());
    if (polarity == Polarity::Conductive) {
        for (int k = 0; k < pixel_count(); ++k) hi(k) = upper[k];
    }
    return hi;
}

Eigen::MatrixXd matrix_abs(const Eigen::MatrixXd& m) {
    require_symmetric(m, "matrix_abs: input");
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) throw NumericalError("matrix_abs: eigensolver failed");
    const Eigen::MatrixXd& q = eig.eigenvectors();
    Eigen::MatrixXd out = q * eig.eigenvalues().cwiseAbs().asDiagonal() * q.transpose();
    return 0.5 * (out + out.transpose());
}

BetaSolver::BetaSolver(const Eigen::MatrixXd& a) {
    require_symmetric(a, "compute_beta: A");
    a_ = 0.5 * (a + a.transpose());
    norm_ = spectral_norm_symmetric(a_);
    llt_.compute(a_);
    if (llt_.info() != Eigen::Success || !(norm_ > 0.0)) {
        throw NumericalError("compute_beta: |V| + delta I is not positive definite (delta too small)");
    }
    const Eigen::VectorXd diag = llt_.matrixL().toDenseMatrix().diagonal();
    if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
        throw NumericalError("compute_beta: Cholesky factor has non-positive pivots (delta too small)");
    }
}

double BetaSolver::operator()(const Eigen::MatrixXd& s_k) const {
    if (s_k.rows() != a_.rows() || s_k.cols() != a_.cols()) {
        throw InvalidArgument("compute_beta: S_k and A differ in size");
    }
    require_symmetric(s_k, "compute_beta: S_k");
    Eigen::MatrixXd s = 0.5 * (s_k + s_k.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(s);
    const double s_norm = se.eigenvalues().cwiseAbs().maxCoeff();
    if (s_norm == 0.0) return kInfiniteBeta;
    const double s_max = se.eigenvalues().maxCoeff();
    if (s_max > 1e-10 * s_norm) {
        throw NumericalError("compute_beta: S_k is not negative semi-definite (largest eigenvalue " +
                             std::to_string(s_max / s_norm) + " * ||S_k||)");
    }
    if (s_max > 0.0) {
        const Eigen::VectorXd clamped = se.eigenvalues().cwiseMin(0.0);
        s = se.eigenvectors() * clamped.asDiagonal() * se.eigenvectors().transpose();
        s = 0.5 * (s + s.transpose()).eval();
    }

    // M = L^{-1} S L^{-T}
    const auto l = llt_.matrixL();
    const Eigen::MatrixXd y = l.solve(s);
    Eigen::MatrixXd m = l.solve(y.transpose());
    m = 0.5 * (m + m.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> me(m, Eigen::EigenvaluesOnly);
    const double lambda_s = me.eigenvalues()(0);
    const double m_norm = me.eigenvalues().cwiseAbs().maxCoeff();
    if (!(lambda_s < -1e-14 * m_norm)) return kInfiniteBeta;
    const double beta = -1.0 / lambda_s;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> cert(a_ + beta * s, Eigen::EigenvaluesOnly);
    if (cert.eigenvalues()(0) < -1e-8 * norm_) {
        throw NumericalError("compute_beta: definiteness certificate failed for beta = " + std::to_string(beta));
    }
    return beta;
}

double compute_beta(const Eigen::MatrixXd& s_k, const Eigen::MatrixXd& a) { return BetaSolver(a)(s_k); }

ConstraintSet build_constraints(const SensitivityTensor& sensitivity, const DifferenceFrame& difference,
                                double sigma0, double contrast_bound, Polarity polarity,
                                std::optional<double> manual_cap) {
    if (!(contrast_bound > 0.0) || !std::isfinite(contrast_bound)) {
        throw InvalidArgument("build_constraints: contrast bound c must be positive");
    }
    if (!(sigma0 > 0.0)) throw InvalidArgument("build_constraints: sigma0 must be positive");
    if (manual_cap && !(*manual_cap > 0.0 && std::isfinite(*manual_cap))) {
        throw InvalidArgument("build_constraints: manual cap must be positive and finite");
    }
    const int n_el = difference.electrodes();
    if (sensitivity.electrodes != n_el) {
        throw InvalidArgument("build_constraints: sensitivity and data have different electrode counts");
    }
    if (!(difference.delta >= 0.0)) throw InvalidArgument("build_constraints: delta must be non-negative");

    ConstraintSet out;
    out.a_plus = a_plus(sigma0, contrast_bound);
    out.a_minus = a_minus(contrast_bound);
    out.polarity = polarity;
    out.manual_cap = manual_cap;
    out.delta = difference.delta;
    out.beta.assign(sensitivity.pixel_count(), 0.0);

    const Eigen::MatrixXd a =
        matrix_abs(difference.V) + difference.delta * Eigen::MatrixXd::Identity(n_el, n_el);

    if (a.cwiseAbs().maxCoeff() == 0.0) {
        // Only alpha = 0 satisfies alpha S_k >= 0 unless S_k vanishes.
        for (int k = 0; k < sensitivity.pixel_count(); ++k) {
            out.beta[k] = sensitivity.columns[k].cwiseAbs().maxCoeff() == 0.0 ? kInfiniteBeta : 0.0;
        }
    } else {
        bool reduce = annihilates_constants(difference.V);
        for (const auto& s : sensitivity.columns) reduce = reduce && annihilates_constants(s);
        const Eigen::MatrixXd q = reduce ? constant_complement_basis(n_el) : Eigen::MatrixXd::Identity(n_el, n_el);
        const BetaSolver solver(q.transpose() * a * q);
        detail::parallel_for(static_cast<std::size_t>(sensitivity.pixel_count()), [&](std::size_t k) {
            out.beta[k] = solver(q.transpose() * sensitivity.columns[k] * q);
        });
    }

    const double cap = out.cap();
    out.upper.resize(out.beta.size());
    for (std::size_t k = 0; k < out.beta.size(); ++k) out.upper[k] = std::min(cap, out.beta[k]);
    return out;
}

MonotonicityBounds monotonicity_check(const Eigen::MatrixXd& v, double sigma0, const DiskMesh& mesh,
                                      const ConductivityField& field, const PatternSolutions& background,
                                      const Eigen::VectorXd& g) {
    field.validate(mesh);
    const int n_el = mesh.electrode_count();
    if (g.size() != n_el || v.rows() != n_el || v.cols() != n_el) {
        throw InvalidArgument("monotonicity_check: dimension mismatch");
    }
    if (background.pattern_count() != n_el || !(background.current > 0.0)) {
        throw InvalidArgument("monotonicity_check: need the background potentials of every pattern");
    }
    MonotonicityBounds out;
    out.middle = g.dot(v * g);
    const Eigen::VectorXd ug = background.potentials * g;
    double left = 0.0;
    double right = 0.0;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto gr = mesh.shape_gradients(t);
        const auto& tri = mesh.triangles[t];
        const Eigen::Vector2d grad = gr * Eigen::Vector3d(ug(tri[0]), ug(tri[1]), ug(tri[2]));
        const double energy = mesh.signed_area(t) * grad.squaredNorm();
        const double sigma = field.values[t];
        right += (sigma0 - sigma) * energy;
        left += (sigma0 / sigma) * (sigma0 - sigma) * energy;
    }
    out.left = left / background.current;
    out.right = right / background.current;
    return out;
}

}  // namespace eitmono
