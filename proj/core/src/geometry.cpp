#include "eitmono/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "eitmono/error.hpp"

namespace eitmono {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Largest boundary edge angle allowed at refinement level 0.
constexpr double kMaxBoundaryAngle = kTwoPi / 64.0;

struct Ring {
    double radius;
    int per_sector;
    std::vector<double> angles;  // per_sector + 1 local angles, last one == sector width
    int offset;
};

// Triangulates the band between two rings inside one sector by advancing along whichever
// ring has the smaller next angle.
void zip_sector(const Ring& inner, const Ring& outer, int sector, int n_sectors,
                std::vector<Triangle>& out) {
    auto node = [n_sectors, sector](const Ring& ring, int i) {
        int s = sector;
        if (i == ring.per_sector) {
            i = 0;
            s = (sector + 1) % n_sectors;
        }
        return ring.offset + s * ring.per_sector + i;
    };
    int ia = 0;
    int ib = 0;
    while (ia < inner.per_sector || ib < outer.per_sector) {
        bool advance_inner;
        if (ia == inner.per_sector) {
            advance_inner = false;
        } else if (ib == outer.per_sector) {
            advance_inner = true;
        } else {
            advance_inner = inner.angles[ia + 1] < outer.angles[ib + 1];
        }
        if (advance_inner) {
            out.push_back({node(inner, ia), node(outer, ib), node(inner, ia + 1)});
            ++ia;
        } else {
            out.push_back({node(inner, ia), node(outer, ib), node(outer, ib + 1)});
            ++ib;
        }
    }
}

}  // namespace

double DiskMesh::signed_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Point2 e1 = nodes[tri[1]] - nodes[tri[0]];
    const Point2 e2 = nodes[tri[2]] - nodes[tri[0]];
    return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

Point2 DiskMesh::barycenter(std::size_t t) const {
    const auto& tri = triangles[t];
    return (nodes[tri[0]] + nodes[tri[1]] + nodes[tri[2]]) / 3.0;
}

double DiskMesh::total_area() const {
    double sum = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) sum += signed_area(t);
    return sum;
}

Eigen::Matrix<double, 2, 3> DiskMesh::shape_gradients(std::size_t t) const {
    const auto& tri = triangles[t];
    const Point2& p0 = nodes[tri[0]];
    const Point2& p1 = nodes[tri[1]];
    const Point2& p2 = nodes[tri[2]];
    const double two_area = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    Eigen::Matrix<double, 2, 3> g;
    g(0, 0) = p1.y() - p2.y();
    g(1, 0) = p2.x() - p1.x();
    g(0, 1) = p2.y() - p0.y();
    g(1, 1) = p0.x() - p2.x();
    g(0, 2) = p0.y() - p1.y();
    g(1, 2) = p1.x() - p0.x();
    return g / two_area;
}

DiskMesh build_mesh(const MeshParams& params) {
    const int n_el = params.n_electrodes;
    if (!(params.radius > 0.0) || !std::isfinite(params.radius)) {
        throw InvalidArgument("build_mesh: radius must be positive and finite");
    }
    if (n_el < 4) throw InvalidArgument("build_mesh: at least 4 electrodes are required");
    if (params.refinement_level < 0 || params.refinement_level > 8) {
        throw InvalidArgument("build_mesh: refinement level must lie in [0, 8]");
    }
    const double covered = params.electrode_arc_fraction * n_el;
    if (!(params.electrode_arc_fraction > 0.0) || !(covered < 1.0)) {
        throw InvalidArgument("build_mesh: electrode arc fraction " +
                              std::to_string(params.electrode_arc_fraction) +
                              " gives overlapping or empty electrodes");
    }

    const double sector = kTwoPi / n_el;
    const double electrode_angle = kTwoPi * params.electrode_arc_fraction;
    const double gap_angle = sector - electrode_angle;
    const int scale = 1 << params.refinement_level;

    const int electrode_edges0 =
        std::max(2, static_cast<int>(std::ceil(electrode_angle / kMaxBoundaryAngle - 1e-12)));
    const double electrode_step = electrode_angle / electrode_edges0;
    const int gap_edges0 = std::max(1, static_cast<int>(std::lround(gap_angle / electrode_step)));
    const int electrode_edges = electrode_edges0 * scale;
    const int gap_edges = gap_edges0 * scale;
    const int boundary_per_sector = electrode_edges + gap_edges;
    const int boundary_total = boundary_per_sector * n_el;
    const int n_rings =
        std::max(2, static_cast<int>(std::lround(boundary_total / kTwoPi)));

    // Rings 1..n_rings; ring 0 is the centre node.
    std::vector<Ring> rings;
    rings.reserve(n_rings);
    int offset = 1;
    for (int j = 1; j <= n_rings; ++j) {
        Ring ring;
        ring.radius = params.radius * static_cast<double>(j) / n_rings;
        ring.offset = offset;
        if (j == n_rings) {
            ring.per_sector = boundary_per_sector;
            ring.angles.resize(boundary_per_sector + 1);
            for (int i = 0; i <= electrode_edges; ++i) ring.angles[i] = electrode_angle * i / electrode_edges;
            for (int i = 1; i <= gap_edges; ++i) {
                ring.angles[electrode_edges + i] = electrode_angle + gap_angle * i / gap_edges;
            }
            ring.angles.back() = sector;
        } else {
            ring.per_sector = std::max(
                1, static_cast<int>(std::lround(static_cast<double>(boundary_per_sector) * j / n_rings)));
            ring.angles.resize(ring.per_sector + 1);
            for (int i = 0; i <= ring.per_sector; ++i) ring.angles[i] = sector * i / ring.per_sector;
        }
        offset += ring.per_sector * n_el;
        rings.push_back(std::move(ring));
    }

    DiskMesh mesh;
    mesh.radius = params.radius;
    mesh.nodes.reserve(offset);
    mesh.rotation_map.reserve(offset);
    mesh.nodes.emplace_back(0.0, 0.0);
    mesh.rotation_map.push_back(0);

    // Sector s starts at angle 2*pi*s/L - electrode_angle/2 so electrode s is centred on 2*pi*s/L.
    const double start = -0.5 * electrode_angle;
    for (const Ring& ring : rings) {
        for (int s = 0; s < n_el; ++s) {
            for (int i = 0; i < ring.per_sector; ++i) {
                const double theta = start + s * sector + ring.angles[i];
                const double r = (&ring == &rings.back()) ? params.radius : ring.radius;
                mesh.nodes.emplace_back(r * std::cos(theta), r * std::sin(theta));
                mesh.rotation_map.push_back(ring.offset + ((s + 1) % n_el) * ring.per_sector + i);
            }
        }
    }

    const Ring& first = rings.front();
    for (int s = 0; s < n_el; ++s) {
        for (int i = 0; i < first.per_sector; ++i) {
            const int a = first.offset + s * first.per_sector + i;
            const int b = (i + 1 == first.per_sector)
                              ? first.offset + ((s + 1) % n_el) * first.per_sector
                              : a + 1;
            mesh.triangles.push_back({0, a, b});
        }
    }
    for (std::size_t j = 0; j + 1 < rings.size(); ++j) {
        for (int s = 0; s < n_el; ++s) zip_sector(rings[j], rings[j + 1], s, n_el, mesh.triangles);
    }

    const Ring& outer = rings.back();
    mesh.boundary_nodes.resize(boundary_total);
    for (int b = 0; b < boundary_total; ++b) mesh.boundary_nodes[b] = outer.offset + b;
    mesh.electrode_nodes.resize(n_el);
    for (int l = 0; l < n_el; ++l) {
        for (int i = 0; i <= electrode_edges; ++i) {
            mesh.electrode_nodes[l].push_back(outer.offset + l * boundary_per_sector + i);
        }
    }

    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (!(mesh.signed_area(t) > 0.0)) {
            throw NumericalError("build_mesh: produced a degenerate triangle (internal error)");
        }
    }
    return mesh;
}

double clipped_square_area(double x0, double x1, double y0, double y1, double radius) {
    const double r2 = radius * radius;
    auto primitive = [&](double x) {
        const double q = std::clamp(x / radius, -1.0, 1.0);
        return 0.5 * (x * std::sqrt(std::max(0.0, r2 - x * x)) + r2 * std::asin(q));
    };
    const double lo = std::max(x0, -radius);
    const double hi = std::min(x1, radius);
    if (!(hi > lo)) return 0.0;

    std::vector<double> cuts{lo, hi};
    for (double y : {y0, y1}) {
        if (std::abs(y) < radius) {
            const double x = std::sqrt(r2 - y * y);
            for (double c : {-x, x}) {
                if (c > lo && c < hi) cuts.push_back(c);
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());

    double area = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i];
        const double b = cuts[i + 1];
        if (!(b > a)) continue;
        const double m = 0.5 * (a + b);
        const double hm = std::sqrt(std::max(0.0, r2 - m * m));
        if (std::min(y1, hm) <= std::max(y0, -hm)) continue;
        const double arc = primitive(b) - primitive(a);
        const double top = (y1 < hm) ? y1 * (b - a) : arc;
        const double bottom = (y0 > -hm) ? y0 * (b - a) : -arc;
        area += top - bottom;
    }
    return area;
}

std::optional<int> PixelGrid::pixel_at(int row, int col) const {
    if (row < 0 || col < 0 || row >= n_side || col >= n_side) return std::nullopt;
    const auto it = std::lower_bound(
        pixel_row.begin(), pixel_row.end(), row);  // rows are sorted (row-major)
    for (auto k = static_cast<std::size_t>(it - pixel_row.begin());
         k < pixel_row.size() && pixel_row[k] == row; ++k) {
        if (pixel_col[k] == col) return static_cast<int>(k);
    }
    return std::nullopt;
}

std::vector<int> PixelGrid::grid_lookup() const {
    std::vector<int> lookup(static_cast<std::size_t>(n_side) * n_side, -1);
    for (int k = 0; k < pixel_count(); ++k) lookup[pixel_row[k] * n_side + pixel_col[k]] = k;
    return lookup;
}

PixelGrid build_pixel_grid(const DiskMesh& mesh, int n_side) {
    if (n_side < 2) throw InvalidArgument("build_pixel_grid: n_side must be at least 2");
    const double radius = mesh.radius;
    const double width = 2.0 * radius / n_side;

    std::vector<std::vector<int>> cell_triangles(static_cast<std::size_t>(n_side) * n_side);
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const Point2 c = mesh.barycenter(t);
        const int col = std::clamp(static_cast<int>(std::floor((c.x() + radius) / width)), 0, n_side - 1);
        const int row = std::clamp(static_cast<int>(std::floor((radius - c.y()) / width)), 0, n_side - 1);
        cell_triangles[row * n_side + col].push_back(static_cast<int>(t));
    }

    PixelGrid grid;
    grid.n_side = n_side;
    grid.pixel_width = width;
    grid.triangle_pixel.assign(mesh.triangle_count(), -1);
    for (int row = 0; row < n_side; ++row) {
        for (int col = 0; col < n_side; ++col) {
            auto& tris = cell_triangles[row * n_side + col];
            const double x0 = -radius + col * width;
            const double y1 = radius - row * width;
            if (tris.empty()) {
                const double clipped = clipped_square_area(x0, x0 + width, y1 - width, y1, radius);
                if (clipped >= 0.5 * width * width) {
                    throw InvalidArgument("build_pixel_grid: pixel (" + std::to_string(row) + ", " +
                                          std::to_string(col) +
                                          ") contains no triangle barycenter; refine the mesh");
                }
                continue;
            }
            const int index = grid.pixel_count();
            double area = 0.0;
            for (int t : tris) {
                area += mesh.signed_area(t);
                grid.triangle_pixel[t] = index;
            }
            grid.pixel_row.push_back(row);
            grid.pixel_col.push_back(col);
            grid.pixel_centers.emplace_back(x0 + 0.5 * width, y1 - 0.5 * width);
            grid.pixel_area.push_back(area);
            grid.pixel_triangles.push_back(std::move(tris));
        }
    }
    return grid;
}

void write_mesh_text(std::ostream& out, const DiskMesh& mesh) {
    out.precision(17);
    out << "# eitmono mesh v1\n";
    out << "radius " << mesh.radius << '\n';
    out << "nodes " << mesh.nodes.size() << '\n';
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        out << i << ' ' << mesh.nodes[i].x() << ' ' << mesh.nodes[i].y() << '\n';
    }
    out << "triangles " << mesh.triangles.size() << '\n';
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        out << t << ' ' << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
    }
    out << "electrodes " << mesh.electrode_nodes.size() << '\n';
    for (std::size_t l = 0; l < mesh.electrode_nodes.size(); ++l) {
        out << l << ' ' << mesh.electrode_nodes[l].size();
        for (int n : mesh.electrode_nodes[l]) out << ' ' << n;
        out << '\n';
    }
}

}  // namespace eitmono
