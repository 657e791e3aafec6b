#include <sstream>

#include <doctest.h>

#include "eitmono/eitmono.hpp"

using namespace eitmono;

TEST_SUITE("io") {

TEST_CASE("measurement JSON round-trips losslessly") {
    const DiskMesh mesh = build_mesh(0.1, 16, 0.0159, 1);
    const MeasurementFrame f = add_noise(measure_full(mesh, uniform_field(mesh, 1.0), 2e-3), 1e-3, 9);
    std::stringstream buf;
    write_measurement_json(buf, f);
    const MeasurementFrame g = read_measurement_json(buf);
    CHECK(g.electrodes == 16);
    CHECK(g.current_amplitude == f.current_amplitude);
    CHECK((g.U.array() == f.U.array()).all());
    CHECK((g.valid_mask == f.valid_mask).all());
}

TEST_CASE("measurement JSON rejects bad files") {
    auto read = [](const std::string& text) {
        std::istringstream in(text);
        return read_measurement_json(in);
    };
    const std::string ok_tail = R"(, "L": 4, "current_amplitude": 0.001, "unit": "V",
        "valid_mask": [1,1,1,1, 1,1,1,1, 1,1,1,1, 1,1,1,1],
        "U": [0,1,2,3, 4,5,6,7, 8,9,10,11, 12,13,14,15]})";
    CHECK(read(R"({"format": "eitmono-measurement", "version": 1)" + ok_tail).U(1, 2) == 6.0);
    CHECK_THROWS_AS(read(R"({"format": "eitmono-measurement", "version": 2)" + ok_tail), ConfigError);
    CHECK_THROWS_AS(read(R"({"format": "other", "version": 1)" + ok_tail), ConfigError);
    CHECK_THROWS_AS(read("{not json"), ConfigError);
    CHECK_THROWS_AS(read(R"({"version": 1, "L": 4, "current_amplitude": 0.001, "valid_mask": [1], "U": [1]})"),
                    ConfigError);
    CHECK_THROWS_AS(read(R"({"version": 1, "L": 4, "current_amplitude": -1, "valid_mask": [], "U": []})"), ConfigError);
}

TEST_CASE("measurement CSV") {
    std::istringstream in("0, 1, -1, 0\n1,0,0,-1\n-1,0,0,1\n0,-1,1,0\n");
    const MeasurementFrame f = read_measurement_csv(in, 5e-3);
    CHECK(f.electrodes == 4);
    CHECK(f.is_complete());
    CHECK(f.current_amplitude == 5e-3);
    CHECK(f.U(0, 2) == -1.0);
    std::istringstream ragged("1,2,3,4\n1,2,3\n1,2,3,4\n1,2,3,4\n");
    CHECK_THROWS_AS(read_measurement_csv(ragged, 1e-3), ConfigError);
    std::istringstream junk("1,2,x,4\n1,2,3,4\n1,2,3,4\n1,2,3,4\n");
    CHECK_THROWS_AS(read_measurement_csv(junk, 1e-3), ConfigError);
    CHECK_THROWS_AS(load_measurement("/nonexistent/frame.json"), ConfigError);
}

TEST_CASE("gray mapping and PGM output") {
    const GrayMapping m{-2.0, 2.0};
    CHECK(m(-2.0) == 0);
    CHECK(m(2.0) == 255);
    CHECK(m(0.0) == 128);
    CHECK(m(5.0) == 255);
    const GrayMapping flat{1.0, 1.0};
    CHECK(flat(1.0) == 128);
    CHECK(flat(-7.0) == 128);
    const std::vector<double> values{3.0, -1.0, 0.5};
    const GrayMapping span = GrayMapping::spanning(values);
    CHECK(span.value_min == -1.0);
    CHECK(span.value_max == 3.0);

    const DiskMesh mesh = build_mesh(1.0, 16, 0.0159, 1);
    const PixelGrid grid = build_pixel_grid(mesh, 2);
    const std::vector<double> kappa{0.0, 1.0, -1.0, 0.0};
    const GrayImage img = render_pixel_map(grid, kappa, GrayMapping{-1.0, 1.0});
    std::ostringstream out;
    write_pgm(out, img);
    CHECK(out.str() == "P2\n2 2\n255\n128 255\n0 128\n");
    CHECK_THROWS_AS(render_pixel_map(grid, std::vector<double>{1.0}, m), InvalidArgument);
}

}  // TEST_SUITE
