#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <doctest.h>

#include "eitmono/eitmono.hpp"

using namespace eitmono;

namespace {

double angle_of(const Point2& p) {
    const double a = std::atan2(p.y(), p.x());
    return a < 0.0 ? a + 2.0 * std::numbers::pi : a;
}

double angular_distance(double a, double b) {
    const double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
    return std::min(d, 2.0 * std::numbers::pi - d);
}

// Edge -> number of triangles using it.
std::map<std::pair<int, int>, int> edge_use(const DiskMesh& mesh) {
    std::map<std::pair<int, int>, int> use;
    for (const Triangle& t : mesh.triangles) {
        for (int a = 0; a < 3; ++a) {
            const int i = t[a];
            const int j = t[(a + 1) % 3];
            ++use[{std::min(i, j), std::max(i, j)}];
        }
    }
    return use;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("default geometry has 16 electrodes centred at 2 pi k / 16") {
    const DiskMesh mesh = build_mesh(0.1, 16, 0.0159, 2);
    REQUIRE(mesh.electrode_count() == 16);
    for (int l = 0; l < 16; ++l) {
        const auto& group = mesh.electrode_nodes[l];
        REQUIRE(group.size() >= 3);
        const double first = angle_of(mesh.nodes[group.front()]);
        const double last = angle_of(mesh.nodes[group.back()]);
        Point2 mid = 0.5 * (mesh.nodes[group.front()] + mesh.nodes[group.back()]);
        CHECK(angular_distance(angle_of(mid), 2.0 * std::numbers::pi * l / 16) < 1e-12);
        // Span equals the arc fraction of the circumference.
        CHECK(angular_distance(first, last) == doctest::Approx(0.0159 * 2.0 * std::numbers::pi).epsilon(1e-9));
    }
}

TEST_CASE("four-electrode unit disk has disjoint groups of the requested arc") {
    const DiskMesh mesh = build_mesh(1.0, 4, 0.05, 0);
    REQUIRE(mesh.electrode_count() == 4);
    std::set<int> seen;
    for (const auto& group : mesh.electrode_nodes) {
        for (int n : group) CHECK(seen.insert(n).second);
        double length = 0.0;
        for (std::size_t i = 1; i < group.size(); ++i) {
            const double a = angular_distance(angle_of(mesh.nodes[group[i - 1]]), angle_of(mesh.nodes[group[i]]));
            length += a * mesh.radius;
        }
        CHECK(length == doctest::Approx(0.05 * 2.0 * std::numbers::pi).epsilon(1e-9));
    }
}

TEST_CASE("mesh area approaches the disk area") {
    const double r = 0.1;
    const double disk = std::numbers::pi * r * r;
    CHECK(std::abs(build_mesh(r, 16, 0.0159, 0).total_area() - disk) <= 0.01 * disk);
    CHECK(std::abs(build_mesh(r, 16, 0.0159, 2).total_area() - disk) <= 0.001 * disk);
    CHECK(std::abs(build_mesh(1.0, 4, 0.05, 0).total_area() - std::numbers::pi) <= 0.01 * std::numbers::pi);
}

TEST_CASE("mesh invariants") {
    for (int level = 0; level <= 2; ++level) {
        CAPTURE(level);
        const DiskMesh mesh = build_mesh(0.1, 16, 0.0159, level);

        for (std::size_t t = 0; t < mesh.triangle_count(); ++t) REQUIRE(mesh.signed_area(t) > 0.0);

        // Conforming: interior edges are shared by two triangles, boundary edges by one, and
        // the single-use edges are exactly the boundary polygon.
        const auto use = edge_use(mesh);
        std::size_t boundary_edges = 0;
        for (const auto& [edge, count] : use) {
            REQUIRE((count == 1 || count == 2));
            if (count == 1) ++boundary_edges;
        }
        CHECK(boundary_edges == mesh.boundary_nodes.size());
        for (std::size_t i = 0; i < mesh.boundary_nodes.size(); ++i) {
            const int a = mesh.boundary_nodes[i];
            const int b = mesh.boundary_nodes[(i + 1) % mesh.boundary_nodes.size()];
            CHECK(use.at({std::min(a, b), std::max(a, b)}) == 1);
            CHECK(mesh.nodes[a].norm() == doctest::Approx(mesh.radius).epsilon(1e-12));
        }

        // Electrode groups: disjoint, contiguous along the boundary, counterclockwise, with at
        // least two boundary edges each.
        std::map<int, std::size_t> position;
        for (std::size_t i = 0; i < mesh.boundary_nodes.size(); ++i) position[mesh.boundary_nodes[i]] = i;
        std::set<int> seen;
        for (const auto& group : mesh.electrode_nodes) {
            CHECK(group.size() >= 3);
            for (std::size_t i = 0; i < group.size(); ++i) {
                REQUIRE(position.count(group[i]) == 1);
                CHECK(seen.insert(group[i]).second);
                if (i > 0) {
                    CHECK(position[group[i]] == (position[group[i - 1]] + 1) % mesh.boundary_nodes.size());
                }
            }
        }
    }
}

TEST_CASE("node count grows about fourfold per level") {
    std::size_t previous = build_mesh(0.1, 16, 0.0159, 0).node_count();
    for (int level = 1; level <= 3; ++level) {
        const std::size_t n = build_mesh(0.1, 16, 0.0159, level).node_count();
        const double ratio = static_cast<double>(n) / static_cast<double>(previous);
        CHECK(ratio > 3.5);
        CHECK(ratio < 4.5);
        previous = n;
    }
}

TEST_CASE("rotation map is a rotation by 2 pi / L") {
    const DiskMesh mesh = build_mesh(0.1, 16, 0.0159, 1);
    const double a = 2.0 * std::numbers::pi / 16;
    Eigen::Matrix2d rot;
    rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    REQUIRE(mesh.rotation_map.size() == mesh.node_count());
    std::set<int> image(mesh.rotation_map.begin(), mesh.rotation_map.end());
    CHECK(image.size() == mesh.node_count());
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        CHECK((mesh.nodes[mesh.rotation_map[i]] - rot * mesh.nodes[i]).norm() <= 1e-14);
    }
    std::set<std::array<int, 3>> tris;
    for (Triangle t : mesh.triangles) {
        std::sort(t.begin(), t.end());
        tris.insert(t);
    }
    for (const Triangle& t : mesh.triangles) {
        std::array<int, 3> r{mesh.rotation_map[t[0]], mesh.rotation_map[t[1]], mesh.rotation_map[t[2]]};
        std::sort(r.begin(), r.end());
        CHECK(tris.count(r) == 1);
    }
    for (int l = 0; l < 16; ++l) {
        const auto& g = mesh.electrode_nodes[l];
        const auto& next = mesh.electrode_nodes[(l + 1) % 16];
        REQUIRE(g.size() == next.size());
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(mesh.rotation_map[g[i]] == next[i]);
    }
}

TEST_CASE("build_mesh rejects bad parameters") {
    CHECK_THROWS_AS(build_mesh(0.1, 3, 0.01, 0), InvalidArgument);
    CHECK_THROWS_AS(build_mesh(0.1, 16, 1.0 / 16, 0), InvalidArgument);
    CHECK_THROWS_AS(build_mesh(0.1, 16, 0.07, 0), InvalidArgument);
    CHECK_THROWS_AS(build_mesh(0.1, 16, 0.0, 0), InvalidArgument);
    CHECK_THROWS_AS(build_mesh(0.1, 16, 0.0159, -1), InvalidArgument);
    CHECK_THROWS_AS(build_mesh(-0.1, 16, 0.0159, 0), InvalidArgument);
}

TEST_CASE("two-by-two grid on the unit disk gives four quarter disks") {
    const DiskMesh mesh = build_mesh(1.0, 16, 0.0159, 2);
    const PixelGrid grid = build_pixel_grid(mesh, 2);
    REQUIRE(grid.pixel_count() == 4);
    for (int p = 0; p < 4; ++p) {
        CHECK(grid.pixel_area[p] == doctest::Approx(mesh.total_area() / 4).epsilon(1e-12));
    }
    // Row 0 is the top row.
    CHECK(grid.pixel_centers[0].y() > 0.0);
    CHECK(grid.pixel_centers[0].x() < 0.0);
    CHECK(grid.pixel_centers[3].y() < 0.0);
    CHECK(grid.pixel_centers[3].x() > 0.0);
}

TEST_CASE("pixel partition") {
    const DiskMesh mesh = build_mesh(0.1, 16, 0.0159, 3);
    const PixelGrid grid = build_pixel_grid(mesh, 32);
    CHECK(grid.pixel_count() <= 32 * 32);

    double sum = 0.0;
    std::vector<int> count(grid.pixel_count(), 0);
    REQUIRE(grid.triangle_pixel.size() == mesh.triangle_count());
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const int p = grid.triangle_pixel[t];
        REQUIRE(p >= 0);
        ++count[p];
        // The barycenter lies in the square of its pixel.
        const Point2 b = mesh.barycenter(t);
        const Point2 c = grid.pixel_centers[p];
        CHECK(std::abs(b.x() - c.x()) <= 0.5 * grid.pixel_width * (1 + 1e-12));
        CHECK(std::abs(b.y() - c.y()) <= 0.5 * grid.pixel_width * (1 + 1e-12));
    }
    for (int p = 0; p < grid.pixel_count(); ++p) {
        CHECK(count[p] > 0);
        REQUIRE(grid.pixel_triangles[p].size() == static_cast<std::size_t>(count[p]));
        CHECK(std::is_sorted(grid.pixel_triangles[p].begin(), grid.pixel_triangles[p].end()));
        double area = 0.0;
        for (int t : grid.pixel_triangles[p]) area += mesh.signed_area(t);
        CHECK(grid.pixel_area[p] == doctest::Approx(area).epsilon(1e-12));
        sum += grid.pixel_area[p];
    }
    CHECK(std::abs(sum - mesh.total_area()) <= 1e-8 * mesh.total_area());

    // Row-major order.
    for (int p = 1; p < grid.pixel_count(); ++p) {
        const int prev = grid.pixel_row[p - 1] * 32 + grid.pixel_col[p - 1];
        CHECK(prev < grid.pixel_row[p] * 32 + grid.pixel_col[p]);
    }
    for (int p = 0; p < grid.pixel_count(); ++p) {
        CHECK(grid.pixel_at(grid.pixel_row[p], grid.pixel_col[p]) == p);
    }
}

TEST_CASE("pixel areas track the clipped square areas") {
    const DiskMesh mesh = build_mesh(0.1, 16, 0.0159, 3);
    const PixelGrid grid = build_pixel_grid(mesh, 24);
    const double h = grid.pixel_width;
    for (int p = 0; p < grid.pixel_count(); ++p) {
        const Point2 c = grid.pixel_centers[p];
        const double exact = clipped_square_area(c.x() - h / 2, c.x() + h / 2, c.y() - h / 2, c.y() + h / 2, 0.1);
        if (c.norm() + h < 0.1) {
            // Interior squares: barycenter assignment still shifts a sliver of area across edges.
            CHECK(std::abs(grid.pixel_area[p] - exact) <= 0.1 * h * h);
        }
        CHECK(exact > 0.0);
    }
}

TEST_CASE("clipped square area") {
    CHECK(clipped_square_area(-2, 2, -2, 2, 1.0) == doctest::Approx(std::numbers::pi).epsilon(1e-12));
    CHECK(clipped_square_area(0, 2, 0, 2, 1.0) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-12));
    CHECK(clipped_square_area(-0.1, 0.1, -0.1, 0.1, 1.0) == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(clipped_square_area(2, 3, 2, 3, 1.0) == 0.0);
}

TEST_CASE("grid too fine for the mesh is rejected") {
    const DiskMesh mesh = build_mesh(0.1, 16, 0.0159, 0);
    CHECK_THROWS_AS(build_pixel_grid(mesh, 64), InvalidArgument);
    CHECK_THROWS_AS(build_pixel_grid(mesh, 1), InvalidArgument);
}

TEST_CASE("mesh text dump lists every node, triangle and electrode") {
    const DiskMesh mesh = build_mesh(1.0, 4, 0.05, 0);
    std::ostringstream out;
    write_mesh_text(out, mesh);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "# eitmono mesh v1");
    std::string key;
    double radius = 0.0;
    in >> key >> radius;
    CHECK(key == "radius");
    CHECK(radius == 1.0);
    std::size_t n = 0;
    in >> key >> n;
    CHECK(key == "nodes");
    CHECK(n == mesh.node_count());
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t idx = 0;
        double x = 0.0;
        double y = 0.0;
        in >> idx >> x >> y;
        CHECK(idx == i);
        CHECK(x == doctest::Approx(mesh.nodes[i].x()).epsilon(1e-15));
    }
    in >> key >> n;
    CHECK(key == "triangles");
    CHECK(n == mesh.triangle_count());
}

}  // TEST_SUITE
