#include "eitmono/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/SparseCholesky>

#include "eitmono/error.hpp"
#include "parallel.hpp"

namespace eitmono {

void ConductivityField::validate(const DiskMesh& mesh) const {
    if (values.size() != mesh.triangle_count()) {
        throw InvalidArgument("conductivity field has " + std::to_string(values.size()) +
                              " values but the mesh has " + std::to_string(mesh.triangle_count()) +
                              " triangles");
    }
    for (double v : values) {
        if (!std::isfinite(v) || !(v > 0.0)) {
            throw InvalidArgument("conductivity must be finite and strictly positive");
        }
    }
}

ConductivityField uniform_field(const DiskMesh& mesh, double sigma) {
    return ConductivityField{std::vector<double>(mesh.triangle_count(), sigma)};
}

Inclusion Inclusion::disk(Point2 center, double radius, double contrast, int polarity) {
    return Inclusion{InclusionShape::Disk, center, radius, radius, contrast, polarity};
}

Inclusion Inclusion::ellipse(Point2 center, double rx, double ry, double contrast, int polarity) {
    return Inclusion{InclusionShape::Ellipse, center, rx, ry, contrast, polarity};
}

bool Inclusion::contains(const Point2& p) const {
    const double dx = (p.x() - center.x()) / radius_x;
    const double dy = (p.y() - center.y()) / radius_y;
    return dx * dx + dy * dy < 1.0;
}

void PhantomSpec::validate() const {
    if (!std::isfinite(background) || !(background > 0.0)) {
        throw InvalidArgument("phantom background conductivity must be positive");
    }
    for (const Inclusion& inc : inclusions) {
        if (!(inc.radius_x > 0.0) || !(inc.radius_y > 0.0)) {
            throw InvalidArgument("inclusion radii must be positive");
        }
        if (!std::isfinite(inc.contrast) || inc.contrast < 0.0) {
            throw InvalidArgument("inclusion contrast must be finite and non-negative");
        }
        if (inc.polarity != 1 && inc.polarity != -1) {
            throw InvalidArgument("inclusion polarity must be +1 or -1");
        }
        if (inc.polarity == -1 && !(inc.contrast < background)) {
            throw InvalidArgument("resistive inclusion contrast must stay below the background");
        }
    }
}

namespace {

bool intersects_disk(const Inclusion& inc, double radius) {
    if (inc.center.norm() < radius) return true;
    if (inc.contains(Point2::Zero())) return true;
    constexpr int kSamples = 256;
    for (int i = 0; i < kSamples; ++i) {
        const double t = 2.0 * std::numbers::pi * i / kSamples;
        const Point2 p(inc.center.x() + inc.radius_x * std::cos(t), inc.center.y() + inc.radius_y * std::sin(t));
        if (p.norm() < radius) return true;
    }
    return false;
}

}  // namespace

ConductivityField realize_phantom(const DiskMesh& mesh, const PhantomSpec& spec) {
    spec.validate();
    for (const Inclusion& inc : spec.inclusions) {
        if (!intersects_disk(inc, mesh.radius)) {
            throw InvalidArgument("inclusion lies entirely outside the disk");
        }
    }
    ConductivityField field = uniform_field(mesh, spec.background);
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const Point2 c = mesh.barycenter(t);
        for (const Inclusion& inc : spec.inclusions) {
            if (inc.contains(c)) {
                field.values[t] = spec.background + inc.polarity * inc.contrast;
                break;
            }
        }
    }
    return field;
}

BoolMatrix MeasurementFrame::adjacent_mask(int electrodes) {
    BoolMatrix mask = BoolMatrix::Constant(electrodes, electrodes, true);
    for (int k = 0; k < electrodes; ++k) {
        for (int d = -1; d <= 1; ++d) mask(k, (k + d + electrodes) % electrodes) = false;
    }
    return mask;
}

BoolMatrix MeasurementFrame::full_mask(int electrodes) {
    return BoolMatrix::Constant(electrodes, electrodes, true);
}

bool MeasurementFrame::has_adjacent_mask() const {
    return valid_mask.rows() == electrodes && valid_mask.cols() == electrodes &&
           (valid_mask == adjacent_mask(electrodes)).all();
}

double MeasurementFrame::max_abs_valid() const {
    double m = 0.0;
    for (int l = 0; l < U.cols(); ++l) {
        for (int k = 0; k < U.rows(); ++k) {
            if (valid_mask(k, l)) m = std::max(m, std::abs(U(k, l)));
        }
    }
    return m;
}

SystemMatrix assemble_system(const DiskMesh& mesh, const ConductivityField& field) {
    field.validate(mesh);
    const int n_el = mesh.electrode_count();
    SystemMatrix sys;
    sys.node_dof.assign(mesh.node_count(), -1);
    for (int l = 0; l < n_el; ++l) {
        for (int n : mesh.electrode_nodes[l]) {
            if (sys.node_dof[n] != -1) throw InvalidArgument("electrode node groups overlap");
            sys.node_dof[n] = l;
        }
    }
    int next = n_el;
    for (int& d : sys.node_dof) {
        if (d == -1) d = next++;
    }
    sys.dof_count = next;

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(mesh.triangle_count() * 9);
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto g = mesh.shape_gradients(t);
        const Eigen::Matrix3d local = (field.values[t] * mesh.signed_area(t)) * (g.transpose() * g);
        const auto& tri = mesh.triangles[t];
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                triplets.emplace_back(sys.node_dof[tri[a]], sys.node_dof[tri[b]], local(a, b));
            }
        }
    }
    sys.matrix.resize(sys.dof_count, sys.dof_count);
    sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return sys;
}

struct ForwardSolver::Factorization {
    SystemMatrix system;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
};

ForwardSolver::ForwardSolver(const DiskMesh& mesh, ConductivityField field)
    : mesh_(&mesh), field_(std::move(field)), factor_(std::make_unique<Factorization>()) {
    factor_->system = assemble_system(mesh, field_);
    const int n = factor_->system.dof_count;
    // Ground electrode 0 (dof 0); the mean shift is applied after each solve.
    const Eigen::SparseMatrix<double> reduced = factor_->system.matrix.bottomRightCorner(n - 1, n - 1);
    factor_->ldlt.compute(reduced);
    if (factor_->ldlt.info() != Eigen::Success) {
        throw NumericalError("forward: factorization of the shunt-model system failed (disconnected mesh?)");
    }
    const auto& d = factor_->ldlt.vectorD();
    if ((d.array() <= 0.0).any()) {
        throw NumericalError("forward: shunt-model system is singular or indefinite");
    }
}

ForwardSolver::~ForwardSolver() = default;
ForwardSolver::ForwardSolver(ForwardSolver&&) noexcept = default;
ForwardSolver& ForwardSolver::operator=(ForwardSolver&&) noexcept = default;

Eigen::VectorXd ForwardSolver::solve_currents(const Eigen::VectorXd& electrode_currents) const {
    const int n_el = mesh_->electrode_count();
    if (electrode_currents.size() != n_el) {
        throw InvalidArgument("forward: need one current per electrode");
    }
    const double scale = electrode_currents.cwiseAbs().sum();
    if (std::abs(electrode_currents.sum()) > 1e-12 * std::max(scale, 1e-300)) {
        throw InvalidArgument("forward: electrode currents must sum to zero");
    }
    const int n = factor_->system.dof_count;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n - 1);
    for (int l = 1; l < n_el; ++l) rhs(l - 1) = electrode_currents(l);
    Eigen::VectorXd dofs(n);
    dofs(0) = 0.0;
    dofs.tail(n - 1) = factor_->ldlt.solve(rhs);
    dofs.array() -= dofs.head(n_el).mean();

    Eigen::VectorXd nodal(mesh_->node_count());
    for (std::size_t i = 0; i < mesh_->node_count(); ++i) nodal(i) = dofs(factor_->system.node_dof[i]);
    return nodal;
}

Eigen::VectorXd ForwardSolver::solve_pattern(int k, double current) const {
    const int n_el = mesh_->electrode_count();
    if (k < 0 || k >= n_el) throw InvalidArgument("forward: pattern index out of range");
    Eigen::VectorXd currents = Eigen::VectorXd::Zero(n_el);
    currents(k) = current;
    currents((k + 1) % n_el) = -current;
    return solve_currents(currents);
}

PatternSolutions ForwardSolver::solve_all(double current) const {
    const int n_el = mesh_->electrode_count();
    PatternSolutions out;
    out.current = current;
    out.potentials.resize(static_cast<Eigen::Index>(mesh_->node_count()), n_el);
    detail::parallel_for(static_cast<std::size_t>(n_el), [&](std::size_t k) {
        out.potentials.col(static_cast<Eigen::Index>(k)) = solve_pattern(static_cast<int>(k), current);
    });
    return out;
}

Eigen::VectorXd ForwardSolver::electrode_potentials(const Eigen::VectorXd& nodal) const {
    const int n_el = mesh_->electrode_count();
    Eigen::VectorXd e(n_el);
    for (int l = 0; l < n_el; ++l) e(l) = nodal(mesh_->electrode_nodes[l].front());
    return e;
}

MeasurementFrame ForwardSolver::measure(double current) const {
    return frame_from_solutions(*mesh_, solve_all(current));
}

Eigen::VectorXd solve_pattern(const DiskMesh& mesh, const ConductivityField& field, int k, double current) {
    return ForwardSolver(mesh, field).solve_pattern(k, current);
}

MeasurementFrame frame_from_solutions(const DiskMesh& mesh, const PatternSolutions& solutions) {
    const int n_el = mesh.electrode_count();
    if (solutions.pattern_count() != n_el) throw InvalidArgument("forward: need one solution per pattern");
    MeasurementFrame frame;
    frame.electrodes = n_el;
    frame.current_amplitude = solutions.current;
    frame.U.resize(n_el, n_el);
    frame.valid_mask = MeasurementFrame::adjacent_mask(n_el);
    for (int k = 0; k < n_el; ++k) {
        for (int l = 0; l < n_el; ++l) {
            const int a = mesh.electrode_nodes[l].front();
            const int b = mesh.electrode_nodes[(l + 1) % n_el].front();
            frame.U(k, l) = solutions.potentials(a, k) - solutions.potentials(b, k);
        }
    }
    return frame;
}

MeasurementFrame measure_full(const DiskMesh& mesh, const ConductivityField& field, double current) {
    return ForwardSolver(mesh, field).measure(current);
}

MeasurementFrame add_noise(const MeasurementFrame& frame, double level, std::uint64_t seed) {
    if (!std::isfinite(level) || level < 0.0) throw InvalidArgument("noise level must be non-negative");
    MeasurementFrame out = frame;
    if (level == 0.0) return out;
    const double stddev = level * frame.max_abs_valid();
    if (!(stddev > 0.0)) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, stddev);
    for (int k = 0; k < out.U.rows(); ++k) {
        for (int l = 0; l < out.U.cols(); ++l) {
            if (out.valid_mask(k, l)) out.U(k, l) += normal(rng);
        }
    }
    return out;
}

}  // namespace eitmono
