#include "eitmono/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "eitmono/error.hpp"

namespace eitmono {

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw InvalidArgument(std::string(what) + " contains NaN or Inf");
}

std::vector<int> active_indices(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    std::vector<int> out;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x(i) == lo(i) || x(i) == hi(i)) out.push_back(static_cast<int>(i));
    }
    return out;
}

template <class Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(name) + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(name) + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string(name) + ": " + e.what());
    }
}

}  // namespace

double projected_gradient_norm(const Eigen::MatrixXd& s, const Eigen::VectorXd& v, const Eigen::VectorXd& kappa,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    const Eigen::VectorXd g = s.transpose() * (s * kappa - v);
    return (project(kappa - g, lower, upper) - kappa).norm();
}

namespace {

// Coordinates that are at a bound with the gradient pushing outwards.
std::vector<bool> binding_set(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                              const Eigen::VectorXd& hi) {
    std::vector<bool> bound(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        bound[static_cast<std::size_t>(i)] = (x(i) <= lo(i) && g(i) >= 0.0) || (x(i) >= hi(i) && g(i) <= 0.0);
    }
    return bound;
}

// Conjugate gradients for min ||S (x + d) - v||^2 over d supported on the free coordinates.
Eigen::VectorXd face_direction(const Eigen::MatrixXd& s, const Eigen::VectorXd& g, const std::vector<bool>& bound,
                               int max_steps, double tol) {
    const Eigen::Index n = g.size();
    auto restrict = [&](Eigen::VectorXd y) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (bound[static_cast<std::size_t>(i)]) y(i) = 0.0;
        }
        return y;
    };
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = restrict(-g);
    Eigen::VectorXd p = r;
    double rr = r.squaredNorm();
    const double stop = tol * tol * rr;
    for (int k = 0; k < max_steps && rr > stop; ++k) {
        const Eigen::VectorXd sp = s * p;
        const double curvature = sp.squaredNorm();
        if (!(curvature > 0.0)) break;
        const double a = rr / curvature;
        d += a * p;
        r -= a * restrict(s.transpose() * sp);
        const double rr_new = r.squaredNorm();
        p = r + (rr_new / rr) * p;
        rr = rr_new;
    }
    return d;
}

}  // namespace

namespace {

struct BoxState {
    Eigen::VectorXd x;
    int iterations = 0;
};

// Core of solve_box on column-scaled data. `done(x, g)` decides termination.
template <class Done>
BoxState box_iterations(const Eigen::MatrixXd& s, const Eigen::VectorXd& v, const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper, const SolverOptions& opts, Done&& done) {
    const Eigen::Index n = s.cols();
    Eigen::VectorXd x = project(Eigen::VectorXd::Zero(n), lower, upper);
    Eigen::VectorXd r = s * x - v;
    Eigen::VectorXd g = s.transpose() * r;
    double f = r.squaredNorm();

    // Objective changes come from the quadratic model 2 g.dx + ||S dx||^2, which stays accurate
    // long after differences of recomputed objectives have drowned in rounding.
    auto accept = [&](const Eigen::VectorXd& trial, double change) {
        if (opts.check_descent && change > 1e-14 * f) {
            throw NumericalError("solve_constrained: objective increased");
        }
        x = trial;
        r = s * x - v;
        g = s.transpose() * r;
        f = r.squaredNorm();
    };

    // Exact minimiser of the quadratic along a feasible direction d, capped at the full step.
    auto line_step = [&](const Eigen::VectorXd& d) {
        const Eigen::VectorXd sd = s * d;
        const double curvature = sd.squaredNorm();
        const double slope = g.dot(d);
        if (!(slope < 0.0) || !(curvature > 0.0)) return false;
        const double t = std::min(1.0, -slope / curvature);
        accept(project(x + t * d, lower, upper), t * (2.0 * slope + t * curvature));
        return true;
    };

    // Armijo backtracking along the projected path x(t) = P(x + t d). Returns the accepted t,
    // or 0 when no decrease was found.
    auto projected_search = [&](const Eigen::VectorXd& d) {
        for (double t = 1.0; t > 1e-12; t *= 0.5) {
            const Eigen::VectorXd trial = project(x + t * d, lower, upper);
            const Eigen::VectorXd dx = trial - x;
            const Eigen::VectorXd s_dx = s * dx;
            const double slope = g.dot(dx);
            const double change = 2.0 * slope + s_dx.squaredNorm();
            if (slope < 0.0 && change < 0.0 && change <= 2e-4 * slope) {
                accept(trial, change);
                return t;
            }
        }
        return 0.0;
    };

    double step = 1.0;
    {
        const double gs = (s * g).squaredNorm();
        if (gs > 0.0) step = g.squaredNorm() / gs;
    }

    std::vector<bool> previous_binding;
    int it = 0;
    while (!done(x, g) && it < opts.max_iterations) {
        ++it;
        const std::vector<bool> binding = binding_set(x, g, lower, upper);
        if (binding == previous_binding) {
            // The binding set has settled: minimise on the current face by conjugate gradients.
            const Eigen::VectorXd d = face_direction(s, g, binding, static_cast<int>(n), 1e-12);
            const double t = projected_search(d);
            if (t < 1.0) {
                // Blocked by the box: the next step is a gradient step that may change the face.
                previous_binding.clear();
                continue;
            }
        } else {
            // Projected Barzilai-Borwein step.
            const Eigen::VectorXd x_old = x;
            const Eigen::VectorXd g_old = g;
            if (!line_step(project(x - step * g, lower, upper) - x)) {
                if (step == 1.0 || !line_step(project(x - g, lower, upper) - x)) break;
            }
            const Eigen::VectorXd dx = x - x_old;
            const double sty = dx.dot(g - g_old);
            step = sty > 0.0 ? std::clamp(dx.squaredNorm() / sty, 1e-30, 1e30) : 1.0;
        }
        previous_binding = binding;
    }
    return {std::move(x), it};
}

}  // namespace

ReconstructionResult solve_box(const Eigen::MatrixXd& s, const Eigen::VectorXd& v, const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper, const SolverOptions& opts) {
    const Eigen::Index n = s.cols();
    if (v.size() != s.rows() || lower.size() != n || upper.size() != n) {
        throw InvalidArgument("solve_constrained: inconsistent dimensions");
    }
    check_finite(s, "sensitivity matrix");
    check_finite(v, "data vector");
    check_finite(lower, "lower bounds");
    check_finite(upper, "upper bounds");
    if ((lower.array() > upper.array()).any()) throw InvalidArgument("solve_constrained: lower bound above upper");

    const double threshold = opts.tol * (s.transpose() * v).norm();

    // Iterate on y = kappa / d with unit-norm columns; the box stays a box and the minimiser
    // is unchanged, but boundary and centre pixels no longer differ by orders of magnitude.
    Eigen::VectorXd d = s.colwise().norm().transpose();
    for (Eigen::Index i = 0; i < n; ++i) d(i) = d(i) > 0.0 ? 1.0 / d(i) : 1.0;
    const Eigen::MatrixXd scaled = s * d.asDiagonal();
    const Eigen::VectorXd lo = lower.cwiseQuotient(d);
    const Eigen::VectorXd hi = upper.cwiseQuotient(d);

    // Back to kappa, snapping coordinates that sit on a scaled bound exactly onto the bound.
    auto unscale = [&](const Eigen::VectorXd& y) {
        Eigen::VectorXd x = y.cwiseProduct(d);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (y(i) <= lo(i)) x(i) = lower(i);
            if (y(i) >= hi(i)) x(i) = upper(i);
        }
        return project(x, lower, upper);
    };
    // The test on kappa alone is not invariant under S, V -> tS, tV: its threshold grows like t^2
    // while the projected gradient is capped by the box width. The same test on y scales like t
    // on both sides, so require it too.
    const double scaled_threshold = opts.tol * (scaled.transpose() * v).norm();
    BoxState state = box_iterations(scaled, v, lo, hi, opts, [&](const Eigen::VectorXd& y, const Eigen::VectorXd& gy) {
        if ((project(y - gy, lo, hi) - y).norm() > scaled_threshold) return false;
        const Eigen::VectorXd x = unscale(y);
        return (project(x - gy.cwiseQuotient(d), lower, upper) - x).norm() <= threshold;
    });

    ReconstructionResult res;
    res.method = "monotonicity";
    res.kappa = unscale(state.x);
    res.iterations = state.iterations;
    res.projected_gradient = projected_gradient_norm(s, v, res.kappa, lower, upper);
    const Eigen::VectorXd gy = scaled.transpose() * (scaled * state.x - v);
    res.converged = res.projected_gradient <= threshold &&
                    (project(state.x - gy, lo, hi) - state.x).norm() <= scaled_threshold;
    res.objective = (s * res.kappa - v).squaredNorm();
    res.active_set = active_indices(res.kappa, lower, upper);
    return res;
}

ReconstructionResult solve_constrained(const Eigen::MatrixXd& s, const Eigen::VectorXd& v,
                                       const ConstraintSet& constraints, const SolverOptions& opts) {
    if (constraints.pixel_count() != s.cols()) {
        throw InvalidArgument("solve_constrained: constraint count differs from pixel count");
    }
    for (double u : constraints.upper) {
        if (!std::isfinite(u) || u < 0.0) throw InvalidArgument("solve_constrained: bounds must be finite and >= 0");
    }
    return solve_box(s, v, constraints.lower_bounds(), constraints.upper_bounds(), opts);
}

ReconstructionResult solve_tikhonov(const Eigen::MatrixXd& s, const Eigen::VectorXd& v, double alpha,
                                    TikhonovWeighting weighting) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("solve_tikhonov: alpha must be positive");
    if (v.size() != s.rows()) throw InvalidArgument("solve_tikhonov: inconsistent dimensions");
    check_finite(s, "sensitivity matrix");
    check_finite(v, "data vector");

    const Eigen::MatrixXd gram = s.transpose() * s;
    Eigen::MatrixXd system = gram;
    if (weighting == TikhonovWeighting::Identity) {
        system.diagonal().array() += alpha;
    } else {
        system.diagonal() += alpha * gram.diagonal();
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(system, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues()(0);
    const double lmax = eig.eigenvalues()(eig.eigenvalues().size() - 1);
    if (!(lmin > 0.0) || lmax / lmin > 1e14) {
        throw NumericalError("solve_tikhonov: regularized system is too ill-conditioned (condition " +
                             std::to_string(lmin > 0.0 ? lmax / lmin : INFINITY) + ")");
    }

    ReconstructionResult res;
    res.method = "tikhonov";
    res.kappa = system.ldlt().solve(s.transpose() * v);
    res.objective = (s * res.kappa - v).squaredNorm();
    res.iterations = 1;
    res.converged = true;
    return res;
}

namespace {

Reconstruction prepare(const MeasurementFrame& hom_in, const MeasurementFrame& inhom_in,
                       const ReconstructionConfig& config) {
    if (hom_in.electrodes != config.mesh.n_electrodes || inhom_in.electrodes != config.mesh.n_electrodes) {
        throw InvalidArgument("reconstruct: frames and configuration disagree on the electrode count");
    }
    Reconstruction rec;
    const double current = hom_in.current_amplitude;
    if (!(current > 0.0)) throw InvalidArgument("reconstruct: current amplitude must be positive");

    const auto [hom, inhom] = stage("completion", [&] {
        return std::pair{complete_frame(hom_in), complete_frame(inhom_in)};
    });

    rec.mesh = stage("geometry", [&] { return build_mesh(config.mesh); });
    rec.grid = stage("geometry", [&] { return build_pixel_grid(rec.mesh, config.grid); });

    const ForwardSolver background = stage("forward", [&] {
        return ForwardSolver(rec.mesh, uniform_field(rec.mesh, config.sigma0));
    });
    const PatternSolutions solutions = stage("forward", [&] { return background.solve_all(current); });

    if (config.calibrate) {
        rec.scale = stage("calibration", [&] {
            return calibrate_scale(hom_in, frame_from_solutions(rec.mesh, solutions));
        });
    }
    rec.difference = stage("difference", [&] { return build_difference(hom, inhom, rec.scale); });

    const SensitivityTensor tensor = stage("sensitivity", [&] {
        return sensitivity_from_solutions(rec.mesh, rec.grid, solutions, config.sigma0);
    });
    rec.sensitivity = vectorize(tensor);
    rec.data = vectorize_frame(rec.difference);

    if (config.method == Method::Monotonicity) {
        rec.constraints = stage("constraints", [&] {
            return build_constraints(tensor, rec.difference, config.sigma0, config.contrast_bound, config.polarity,
                                     config.manual_cap);
        });
    }
    return rec;
}

}  // namespace

Reconstruction prepare_constraints(const MeasurementFrame& hom, const MeasurementFrame& inhom,
                                   const ReconstructionConfig& config) {
    ReconstructionConfig c = config;
    c.method = Method::Monotonicity;
    return prepare(hom, inhom, c);
}

Reconstruction reconstruct(const MeasurementFrame& hom, const MeasurementFrame& inhom,
                           const ReconstructionConfig& config) {
    Reconstruction rec = prepare(hom, inhom, config);
    rec.result = stage("solve", [&] {
        if (config.method == Method::Monotonicity) {
            return solve_constrained(rec.sensitivity, rec.data, *rec.constraints, config.solver);
        }
        return solve_tikhonov(rec.sensitivity, rec.data, config.alpha, config.weighting);
    });
    return rec;
}

}  // namespace eitmono
