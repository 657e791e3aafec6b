#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace eitmono {

using Point2 = Eigen::Vector2d;
using Triangle = std::array<int, 3>;

struct MeshParams {
    double radius = 0.1;
    int n_electrodes = 16;
    // Fraction of the circumference covered by ONE electrode.
    double electrode_arc_fraction = 0.0159;
    int refinement_level = 2;
};

// Triangulated disk with L boundary electrodes.
//
// The triangulation is built sector by sector (one sector per electrode) so the node set
// and connectivity are exactly invariant under rotation by 2*pi/L. Electrode l is centred
// at angle 2*pi*l/L; its node group is ordered counterclockwise.
struct DiskMesh {
    std::vector<Point2> nodes;
    std::vector<Triangle> triangles;
    double radius = 0.0;
    std::vector<std::vector<int>> electrode_nodes;
    // Boundary nodes in counterclockwise order starting at the first node of electrode 0.
    std::vector<int> boundary_nodes;
    // Nodes of the triangulation of one sector are mapped onto the next sector by this
    // permutation (node i -> rotation_map[i] under rotation by 2*pi/L).
    std::vector<int> rotation_map;

    [[nodiscard]] int electrode_count() const { return static_cast<int>(electrode_nodes.size()); }
    [[nodiscard]] std::size_t node_count() const { return nodes.size(); }
    [[nodiscard]] std::size_t triangle_count() const { return triangles.size(); }

    [[nodiscard]] double signed_area(std::size_t t) const;
    [[nodiscard]] Point2 barycenter(std::size_t t) const;
    [[nodiscard]] double total_area() const;

    // Gradients of the three P1 hat functions on triangle t, one per column.
    [[nodiscard]] Eigen::Matrix<double, 2, 3> shape_gradients(std::size_t t) const;
};

DiskMesh build_mesh(const MeshParams& params);

inline DiskMesh build_mesh(double radius, int n_electrodes, double arc_fraction, int refinement_level) {
    return build_mesh(MeshParams{radius, n_electrodes, arc_fraction, refinement_level});
}

// Square pixel grid clipped to the disk; kappa is piecewise constant on its pixels.
struct PixelGrid {
    int n_side = 0;
    double pixel_width = 0.0;
    // Retained pixels, row-major in (row, col). Row 0 is the top row (largest y).
    std::vector<int> pixel_row;
    std::vector<int> pixel_col;
    std::vector<Point2> pixel_centers;
    // Sum of the areas of the triangles assigned to each pixel.
    std::vector<double> pixel_area;
    // Triangles of each pixel in ascending index order.
    std::vector<std::vector<int>> pixel_triangles;
    // triangle index -> pixel index, or -1 ("outside").
    std::vector<int> triangle_pixel;

    [[nodiscard]] int pixel_count() const { return static_cast<int>(pixel_centers.size()); }
    // Pixel index at grid position, or std::nullopt if that square was not retained.
    [[nodiscard]] std::optional<int> pixel_at(int row, int col) const;
    [[nodiscard]] std::vector<int> grid_lookup() const;
};

// Pixels are assigned triangles by barycenter. A square is retained when at least one
// barycenter falls into it; building fails if a square whose clipped area is at least half
// a pixel receives no barycenter (mesh too coarse for the grid).
PixelGrid build_pixel_grid(const DiskMesh& mesh, int n_side);

// Area of the square [x0,x1]x[y0,y1] intersected with the disk of the given radius.
double clipped_square_area(double x0, double x1, double y0, double y1, double radius);

// Plain-text mesh dump:
//   # eitmono mesh v1
//   radius <R>
//   nodes <N>            then N lines "index x y"
//   triangles <T>        then T lines "index n0 n1 n2"
//   electrodes <L>       then L lines "index count n_0 n_1 ..."
void write_mesh_text(std::ostream& out, const DiskMesh& mesh);

}  // namespace eitmono
