#include "eitmono/protocol.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "eitmono/error.hpp"

namespace eitmono {

double calibrate_scale(std::span<const double> measured, std::span<const double> model) {
    if (measured.size() != model.size()) {
        throw InvalidArgument("calibrate_scale: vectors differ in length");
    }
    double mm = 0.0;
    double mv = 0.0;
    for (std::size_t i = 0; i < measured.size(); ++i) {
        mm += measured[i] * measured[i];
        mv += measured[i] * model[i];
    }
    if (!(mm > 0.0)) throw InvalidArgument("calibrate_scale: measured vector is zero");
    return mv / mm;
}

double calibrate_scale(const MeasurementFrame& measured, const MeasurementFrame& model) {
    if (measured.electrodes != model.electrodes) {
        throw InvalidArgument("calibrate_scale: frames have different electrode counts");
    }
    std::vector<double> a;
    std::vector<double> b;
    for (int l = 0; l < measured.electrodes; ++l) {
        for (int k = 0; k < measured.electrodes; ++k) {
            if (measured.valid_mask(k, l) && model.valid_mask(k, l)) {
                a.push_back(measured.U(k, l));
                b.push_back(model.U(k, l));
            }
        }
    }
    return calibrate_scale(a, b);
}

namespace {

// Band unknowns: x(k) = U(k, k) and x(L + k) = U(k, k+1) = U(k+1, k).
// Row k sums the band as x(k) + x(L + k) + x(L + k - 1).
Eigen::MatrixXd band_row_sums(int n) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, 2 * n);
    for (int k = 0; k < n; ++k) {
        a(k, k) = 1.0;
        a(k, n + k) = 1.0;
        a(k, n + (k - 1 + n) % n) = 1.0;
    }
    return a;
}

void write_band(Eigen::MatrixXd& u, const Eigen::VectorXd& x) {
    const auto n = u.rows();
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index next = (k + 1) % n;
        u(k, k) = x(k);
        u(k, next) = u(next, k) = x(n + k);
    }
}

// Minimum-norm change of the band that zeroes every row sum of a symmetric matrix.
void correct_band(Eigen::MatrixXd& u) {
    const auto n = static_cast<int>(u.rows());
    Eigen::VectorXd x(2 * n);
    for (int k = 0; k < n; ++k) {
        x(k) = u(k, k);
        x(n + k) = u(k, (k + 1) % n);
    }
    const Eigen::MatrixXd a = band_row_sums(n);
    // A A^T = 3I + cyclic neighbours; its eigenvalues 3 + 2cos(theta) are >= 1.
    x -= a.transpose() * (a * a.transpose()).llt().solve(u.rowwise().sum());
    write_band(u, x);
}

// Fills the band of a symmetric matrix whose band entries are ignored. Minimises
// sum_k ||C u_k||^2 over the band, with C the periodic third difference along a row, subject to
// zero row sums.
void fill_band(Eigen::MatrixXd& u) {
    const int n = static_cast<int>(u.rows());
    constexpr std::array<double, 4> kStencil{-1.0, 3.0, -3.0, 1.0};
    auto difference = [&](const Eigen::MatrixXd& m) -> Eigen::VectorXd {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
        for (int l = 0; l < n; ++l) {
            for (int j = 0; j < 4; ++j) out.col(l) += kStencil[j] * m.col((l + j) % n);
        }
        return out.reshaped();
    };

    Eigen::MatrixXd known = u;
    write_band(known, Eigen::VectorXd::Zero(2 * n));
    const Eigen::VectorXd base = difference(known);
    Eigen::MatrixXd columns(n * n, 2 * n);
    for (int j = 0; j < 2 * n; ++j) {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
        write_band(e, Eigen::VectorXd::Unit(2 * n, j));
        columns.col(j) = difference(e);
    }

    // Equality-constrained least squares by the range-space method; H is SPD for n >= 4.
    const Eigen::MatrixXd h = columns.transpose() * columns;
    const Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) throw NumericalError("complete_frame: smoothness system is singular");
    const Eigen::MatrixXd a = band_row_sums(n);
    const Eigen::VectorXd free_fit = llt.solve(-columns.transpose() * base);
    const Eigen::MatrixXd h_inv_at = llt.solve(a.transpose());
    const Eigen::VectorXd target = -known.rowwise().sum();
    const Eigen::VectorXd x = free_fit + h_inv_at * (a * h_inv_at).llt().solve(target - a * free_fit);
    write_band(u, x);
}

}  // namespace

MeasurementFrame complete_frame(const MeasurementFrame& frame) {
    const int n_el = frame.electrodes;
    if (frame.U.rows() != n_el || frame.U.cols() != n_el) {
        throw InvalidArgument("complete_frame: matrix shape does not match the electrode count");
    }
    if (!frame.U.allFinite()) throw InvalidArgument("complete_frame: frame contains NaN or Inf");
    Eigen::MatrixXd u = 0.5 * (frame.U + frame.U.transpose());
    if (frame.is_complete()) {
        correct_band(u);
    } else {
        if (!frame.has_adjacent_mask()) {
            throw InvalidArgument("complete_frame: unexpected mask pattern (expected |k-l|<=1 missing)");
        }
        if (n_el < 6) throw InvalidArgument("complete_frame: need at least 6 electrodes to interpolate");
        fill_band(u);
    }

    MeasurementFrame out = frame;
    out.U = std::move(u);
    out.valid_mask = MeasurementFrame::full_mask(n_el);
    return out;
}

double noise_shift(const Eigen::MatrixXd& symmetric) {
    if (symmetric.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetric, Eigen::EigenvaluesOnly);
    return std::max(0.0, -eig.eigenvalues()(0));
}

DifferenceFrame build_difference(const MeasurementFrame& hom, const MeasurementFrame& inhom, double scale) {
    if (hom.electrodes != inhom.electrodes) {
        throw InvalidArgument("build_difference: frames have different electrode counts");
    }
    if (!hom.is_complete() || !inhom.is_complete()) {
        throw InvalidArgument("build_difference: frames must be completed first");
    }
    if (!std::isfinite(scale)) throw InvalidArgument("build_difference: scale must be finite");
    DifferenceFrame diff;
    diff.scale = scale;
    const Eigen::MatrixXd v = scale * (inhom.U - hom.U);
    diff.V = 0.5 * (v + v.transpose());
    diff.delta = noise_shift(diff.V);
    return diff;
}

}  // namespace eitmono
