#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "eitmono/geometry.hpp"

namespace eitmono {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Per-triangle conductivity in S/m.
struct ConductivityField {
    std::vector<double> values;

    // Throws InvalidArgument unless every value is finite and strictly positive and the size
    // matches the mesh.
    void validate(const DiskMesh& mesh) const;
};

ConductivityField uniform_field(const DiskMesh& mesh, double sigma);

enum class InclusionShape { Disk, Ellipse };

// Axis-aligned disk or ellipse with contrast gamma >= 0 and polarity +1 (more conductive)
// or -1 (less conductive).
struct Inclusion {
    InclusionShape shape = InclusionShape::Disk;
    Point2 center = Point2::Zero();
    double radius_x = 0.0;
    double radius_y = 0.0;
    double contrast = 0.0;
    int polarity = -1;

    static Inclusion disk(Point2 center, double radius, double contrast, int polarity);
    static Inclusion ellipse(Point2 center, double rx, double ry, double contrast, int polarity);

    [[nodiscard]] bool contains(const Point2& p) const;
};

struct PhantomSpec {
    double background = 1.0;
    std::vector<Inclusion> inclusions;

    void validate() const;
};

// sigma = background +/- contrast on triangles whose barycenter lies inside an inclusion.
// Overlapping inclusions do not stack; the first inclusion containing the barycenter wins.
ConductivityField realize_phantom(const DiskMesh& mesh, const PhantomSpec& spec);

// One adjacent-stimulation cycle. U(k, l) = u_k(E_l) - u_k(E_{l+1}), 0-based, indices mod L.
struct MeasurementFrame {
    int electrodes = 0;
    Eigen::MatrixXd U;
    // true where the entry is a genuine measurement.
    BoolMatrix valid_mask;
    double current_amplitude = 1e-3;

    // Mask of a device following the adjacent protocol: |k - l| <= 1 (mod L) is missing.
    static BoolMatrix adjacent_mask(int electrodes);
    static BoolMatrix full_mask(int electrodes);

    [[nodiscard]] bool is_complete() const { return valid_mask.all(); }
    [[nodiscard]] bool has_adjacent_mask() const;
    [[nodiscard]] double max_abs_valid() const;
};

// Galerkin system on the collapsed degrees of freedom: one unknown per electrode
// (dofs 0..L-1) followed by one per non-electrode node. Not grounded, so its kernel is
// the constants.
struct SystemMatrix {
    Eigen::SparseMatrix<double> matrix;
    std::vector<int> node_dof;
    int dof_count = 0;
};

SystemMatrix assemble_system(const DiskMesh& mesh, const ConductivityField& field);

// Nodal potentials of all L adjacent patterns at a given drive current, one column each.
struct PatternSolutions {
    double current = 0.0;
    Eigen::MatrixXd potentials;

    [[nodiscard]] int pattern_count() const { return static_cast<int>(potentials.cols()); }
};

// Shunt-model solver. Assembles and factors the grounded system once; the factorization is
// immutable so concurrent solves are safe. The mesh must outlive the solver.
class ForwardSolver {
public:
    ForwardSolver(const DiskMesh& mesh, ConductivityField field);
    ~ForwardSolver();
    ForwardSolver(ForwardSolver&&) noexcept;
    ForwardSolver& operator=(ForwardSolver&&) noexcept;
    ForwardSolver(const ForwardSolver&) = delete;
    ForwardSolver& operator=(const ForwardSolver&) = delete;

    [[nodiscard]] const DiskMesh& mesh() const { return *mesh_; }
    [[nodiscard]] const ConductivityField& field() const { return field_; }

    // Nodal potentials for arbitrary net electrode currents (must sum to zero), normalised so
    // that the electrode potentials have zero mean.
    [[nodiscard]] Eigen::VectorXd solve_currents(const Eigen::VectorXd& electrode_currents) const;

    // Pattern k (0-based): +current into electrode k, -current out of electrode k+1.
    [[nodiscard]] Eigen::VectorXd solve_pattern(int k, double current) const;

    [[nodiscard]] PatternSolutions solve_all(double current) const;

    [[nodiscard]] Eigen::VectorXd electrode_potentials(const Eigen::VectorXd& nodal) const;

    [[nodiscard]] MeasurementFrame measure(double current) const;

private:
    struct Factorization;
    const DiskMesh* mesh_;
    ConductivityField field_;
    std::unique_ptr<Factorization> factor_;
};

Eigen::VectorXd solve_pattern(const DiskMesh& mesh, const ConductivityField& field, int k, double current);

// Full frame; valid_mask marks what an adjacent-protocol device would deliver.
MeasurementFrame measure_full(const DiskMesh& mesh, const ConductivityField& field, double current);

MeasurementFrame frame_from_solutions(const DiskMesh& mesh, const PatternSolutions& solutions);

// Independent zero-mean Gaussian noise with standard deviation level * max|U| over the
// valid entries, added to every valid entry. Deterministic for a given seed.
MeasurementFrame add_noise(const MeasurementFrame& frame, double level, std::uint64_t seed);

}  // namespace eitmono
