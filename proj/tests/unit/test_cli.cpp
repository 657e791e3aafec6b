#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "app/run_config.hpp"
#include "eitmono/eitmono.hpp"

using namespace eitmono;
namespace fs = std::filesystem;

namespace {

// Grid distance (max of row and column offsets) between a pixel and the square holding p.
int grid_distance(const eitmono::PixelGrid& grid, int pixel, const eitmono::Point2& p, double radius) {
    const int row = static_cast<int>(std::floor((radius - p.y()) / grid.pixel_width));
    const int col = static_cast<int>(std::floor((p.x() + radius) / grid.pixel_width));
    return std::max(std::abs(grid.pixel_row[pixel] - row), std::abs(grid.pixel_col[pixel] - col));
}

// Smallest grid distance from p to a pixel where kappa attains its minimum; the minimum is
// usually shared by every pixel sitting on the lower bound.
int darkest_distance(const eitmono::PixelGrid& grid, const Eigen::VectorXd& kappa, const eitmono::Point2& p,
                     double radius) {
    int best = grid.n_side;
    for (int q = 0; q < grid.pixel_count(); ++q) {
        if (kappa(q) == kappa.minCoeff()) best = std::min(best, grid_distance(grid, q, p, radius));
    }
    return best;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path(EITMONO_TEST_TMP) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = std::string("\"") + EITMONO_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// Small, fast geometry; everything else at its default.
nlohmann::json base_config(const fs::path& dir) {
    return {{"geometry", {{"simulation_level", 2}, {"reconstruction_level", 1}, {"grid", 12}}},
            {"phantom",
             {{"background", 1.0},
              {"inclusions", {{{"shape", "disk"}, {"center", {0.04, 0.02}}, {"radius", 0.02}, {"contrast", 0.99},
                               {"polarity", "resistive"}}}}}},
            {"protocol", {{"noise_level", 0.001}, {"seed", 4}}},
            {"output", {{"directory", dir.string()}}}};
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j, const std::string& name = "run.json") {
    const fs::path p = dir / name;
    std::ofstream(p) << j.dump(2);
    return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("configuration parsing") {
    SUBCASE("defaults") {
        std::istringstream in("{}");
        const app::RunConfig c = app::parse_run_config(in);
        CHECK(c.geometry.electrodes == 16);
        CHECK(c.geometry.simulation_level == 3);
        CHECK(c.geometry.reconstruction_level == 2);
        CHECK(c.geometry.grid == 24);
        CHECK(c.inversion.contrast_bound == 0.99);
        CHECK(c.inversion.alpha == 0.03);
        CHECK(c.protocol.current_amplitude == 1e-3);
    }
    SUBCASE("unknown keys are rejected at every level") {
        for (const char* text : {R"({"geometri": {}})", R"({"geometry": {"radius": 0.1, "levels": 2}})",
                                 R"({"phantom": {"inclusions": [{"center": [0, 0], "radius": 0.01, "contrast": 0.5, "colour": 1}]}})",
                                 R"({"inversion": {"methd": "tikhonov"}})", R"({"output": {"dir": "x"}})"}) {
            std::istringstream in(text);
            CHECK_THROWS_AS(app::parse_run_config(in), ConfigError);
        }
    }
    SUBCASE("bad values") {
        for (const char* text : {R"({"geometry": {"radius": -1}})", R"({"inversion": {"method": "greit"}})",
                                 R"({"inversion": {"polarity": "both"}})", R"({"protocol": {"noise_level": -0.1}})",
                                 R"({"phantom": {"background": 1, "inclusions": [{"center": [0, 0], "radius": 0.01, "contrast": 1.5}]}})",
                                 R"({"geometry": {"grid": "big"}})", "[1, 2]", "{"}) {
            CAPTURE(text);
            std::istringstream in(text);
            CHECK_THROWS_AS(app::parse_run_config(in), ConfigError);
        }
    }
}

TEST_CASE("exit codes") {
    const fs::path dir = scratch("exit_codes");
    CHECK(run("") == 2);
    CHECK(run("simulate") == 2);
    CHECK(run("simulate -c " + (dir / "missing.json").string()) == 2);
    CHECK(run("bogus") == 2);
    const fs::path bad = write_config(dir, {{"geometry", {{"radius", 0.1}, {"unknown", 1}}}}, "bad.json");
    CHECK(run("simulate -c " + bad.string()) == 2);
    const fs::path cfg = write_config(dir, base_config(dir));
    CHECK(run("reconstruct -c " + cfg.string() + " --method greit") == 2);
    // Frames not written yet.
    CHECK(run("reconstruct -c " + cfg.string()) == 2);

    // More pixels than independent measurements, and a vanishing alpha: S^T S stays singular.
    nlohmann::json tiny = base_config(dir);
    tiny["geometry"]["reconstruction_level"] = 2;
    tiny["geometry"]["grid"] = 24;
    tiny["inversion"] = {{"method", "tikhonov"}, {"weighting", "identity"}, {"alpha", 1e-300}};
    const fs::path tiny_cfg = write_config(dir, tiny, "tiny.json");
    CHECK(run("simulate -c " + tiny_cfg.string()) == 0);
    CHECK(run("reconstruct -c " + tiny_cfg.string()) == 3);
}

TEST_CASE("simulate is deterministic and round-trips") {
    const fs::path dir = scratch("simulate");
    nlohmann::json j = base_config(dir);
    j["protocol"]["noise_level"] = 0.0;
    const fs::path cfg = write_config(dir, j);
    REQUIRE(run("simulate -c " + cfg.string()) == 0);
    const std::string first = slurp(dir / "inhom.json");
    REQUIRE(run("simulate -c " + cfg.string()) == 0);
    CHECK(slurp(dir / "inhom.json") == first);

    // The written frame equals the in-process simulation bit for bit.
    const MeasurementFrame read = load_measurement(dir / "inhom.json");
    const DiskMesh mesh = build_mesh(0.1, 16, 0.0159, 2);
    const PhantomSpec phantom{1.0, {Inclusion::disk({0.04, 0.02}, 0.02, 0.99, -1)}};
    const MeasurementFrame direct = measure_full(mesh, realize_phantom(mesh, phantom), 1e-3);
    CHECK((read.U.array() == direct.U.array()).all());
    CHECK((read.valid_mask == direct.valid_mask).all());

    // A different seed changes only the noisy entries.
    j["protocol"]["noise_level"] = 0.001;
    j["protocol"]["seed"] = 1;
    REQUIRE(run("simulate -c " + write_config(dir, j).string()) == 0);
    const MeasurementFrame a = load_measurement(dir / "inhom.json");
    j["protocol"]["seed"] = 2;
    REQUIRE(run("simulate -c " + write_config(dir, j).string()) == 0);
    const MeasurementFrame b = load_measurement(dir / "inhom.json");
    for (int k = 0; k < 16; ++k) {
        for (int l = 0; l < 16; ++l) {
            if (a.valid_mask(k, l)) {
                CHECK(a.U(k, l) != b.U(k, l));
            } else {
                CHECK(a.U(k, l) == b.U(k, l));
            }
        }
    }
}

TEST_CASE("reconstruct writes consistent outputs") {
    const fs::path dir = scratch("reconstruct");
    const fs::path cfg = write_config(dir, base_config(dir));
    REQUIRE(run("simulate -c " + cfg.string()) == 0);
    REQUIRE(run("reconstruct -c " + cfg.string()) == 0);

    const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(report["format"] == "eitmono-report");
    CHECK(report["method"] == "monotonicity");
    CHECK(report["converged"] == true);

    // Recompute ||S kappa - V||^2 from kappa.csv and the measurement files.
    const auto rows = read_csv(dir / "kappa.csv");
    REQUIRE(rows.size() > 1);
    CHECK(rows[0] == std::vector<std::string>{"pixel", "row", "col", "x", "y", "kappa"});
    const DiskMesh mesh = build_mesh(0.1, 16, 0.0159, 1);
    const PixelGrid grid = build_pixel_grid(mesh, 12);
    REQUIRE(static_cast<int>(rows.size()) - 1 == grid.pixel_count());
    Eigen::VectorXd kappa(grid.pixel_count());
    for (int p = 0; p < grid.pixel_count(); ++p) {
        CHECK(std::stoi(rows[p + 1][1]) == grid.pixel_row[p]);
        CHECK(std::stoi(rows[p + 1][2]) == grid.pixel_col[p]);
        kappa(p) = std::stod(rows[p + 1][5]);
    }
    const MeasurementFrame hom = load_measurement(dir / "hom.json");
    const MeasurementFrame inhom = load_measurement(dir / "inhom.json");
    const DifferenceFrame diff = build_difference(complete_frame(hom), complete_frame(inhom));
    const Eigen::MatrixXd s = vectorize(assemble_sensitivity(mesh, grid, 1.0, hom.current_amplitude));
    const double objective = (s * kappa - vectorize_frame(diff)).squaredNorm();
    CHECK(std::abs(report["objective"].get<double>() - objective) <= 1e-8 * objective);
    CHECK(report["delta"].get<double>() == doctest::Approx(diff.delta).epsilon(1e-12));

    // Darkest pixel within one pixel of the rod centre.
    CHECK(darkest_distance(grid, kappa, Point2(0.04, 0.02), 0.1) <= 1);

    // Image matches the recorded mapping.
    const std::string pgm = slurp(dir / "recon.pgm");
    CHECK(pgm.rfind("P2\n12 12\n255\n", 0) == 0);
    const GrayMapping mapping{report["gray_mapping"]["value_min"].get<double>(),
                              report["gray_mapping"]["value_max"].get<double>()};
    std::vector<double> values(kappa.data(), kappa.data() + kappa.size());
    std::ostringstream expected;
    write_pgm(expected, render_pixel_map(grid, values, mapping));
    CHECK(pgm == expected.str());

    REQUIRE(run("reconstruct -c " + cfg.string() + " --method tikhonov") == 0);
    CHECK(nlohmann::json::parse(slurp(dir / "report.json"))["method"] == "tikhonov");
}

TEST_CASE("identical frames give a flat gray image") {
    const fs::path dir = scratch("flat");
    const fs::path cfg = write_config(dir, base_config(dir));
    REQUIRE(run("simulate -c " + cfg.string()) == 0);
    const std::string hom = (dir / "hom.json").string();
    REQUIRE(run("reconstruct -c " + cfg.string() + " --hom " + hom + " --inhom " + hom) == 0);
    for (const auto& row : read_csv(dir / "kappa.csv")) {
        if (row[0] != "pixel") CHECK(std::stod(row[5]) == 0.0);
    }
    std::istringstream pgm(slurp(dir / "recon.pgm"));
    std::string magic;
    int w = 0;
    int h = 0;
    int maxval = 0;
    pgm >> magic >> w >> h >> maxval;
    int value = 0;
    int count = 0;
    while (pgm >> value) {
        CHECK(value == 128);
        ++count;
    }
    CHECK(count == w * h);

    REQUIRE(run("constraints -c " + cfg.string() + " --hom " + hom + " --inhom " + hom) == 0);
    const auto rows = read_csv(dir / "beta.csv");
    for (const auto& row : rows) {
        if (row[0] != "pixel") CHECK(std::stod(row[5]) == 0.0);
    }
}

TEST_CASE("constraints dump") {
    const fs::path dir = scratch("constraints");
    nlohmann::json j = base_config(dir);
    j["protocol"] = {{"noise_level", 0.0}, {"mask_driving_electrodes", false}};
    j["geometry"]["simulation_level"] = 1;
    j["phantom"]["inclusions"][0]["radius"] = 0.045;
    j["phantom"]["inclusions"][0]["center"] = {0.02, 0.01};
    const fs::path cfg = write_config(dir, j);
    REQUIRE(run("simulate -c " + cfg.string()) == 0);
    REQUIRE(run("constraints -c " + cfg.string()) == 0);
    const auto rows = read_csv(dir / "beta.csv");
    const DiskMesh mesh = build_mesh(0.1, 16, 0.0159, 1);
    const PixelGrid grid = build_pixel_grid(mesh, 12);
    REQUIRE(static_cast<int>(rows.size()) - 1 == grid.pixel_count());
    CHECK(rows[0] == std::vector<std::string>{"pixel", "row", "col", "x", "y", "beta", "upper"});

    // Same mesh for simulation and reconstruction, no noise: beta >= a_minus inside the rod.
    const auto field = realize_phantom(mesh, PhantomSpec{1.0, {Inclusion::disk({0.02, 0.01}, 0.045, 0.99, -1)}});
    int inside = 0;
    for (int p = 0; p < grid.pixel_count(); ++p) {
        bool all = true;
        for (int t : grid.pixel_triangles[p]) all = all && field.values[t] != 1.0;
        if (!all) continue;
        ++inside;
        CHECK(std::stod(rows[p + 1][5]) >= 0.99);
        CHECK(std::stod(rows[p + 1][6]) == 0.99);
    }
    CHECK(inside >= 3);
    CHECK(slurp(dir / "beta.pgm").rfind("P2\n12 12\n255\n", 0) == 0);
}

TEST_CASE("forward and calibrate") {
    const fs::path dir = scratch("forward");
    nlohmann::json j = base_config(dir);
    j["output"]["mesh"] = "mesh.txt";
    j["output"]["sensitivity"] = "sens.txt";
    const fs::path cfg = write_config(dir, j);
    REQUIRE(run("forward -c " + cfg.string()) == 0);
    CHECK(fs::exists(dir / "forward.json"));
    CHECK(slurp(dir / "mesh.txt").rfind("# eitmono mesh v1", 0) == 0);
    CHECK(slurp(dir / "sens.txt").rfind("# eitmono sensitivity v1", 0) == 0);
    CHECK(load_measurement(dir / "forward.json").is_complete());

    // measured = 2 * model gives 0.5.
    std::ofstream(dir / "model.csv") << "0,1,-1,0\n1,0,0,-1\n-1,0,0,1\n0,-1,1,0\n";
    std::ofstream(dir / "measured.csv") << "0,2,-2,0\n2,0,0,-2\n-2,0,0,2\n0,-2,2,0\n";
    const std::string cmd = std::string("\"") + EITMONO_CLI_PATH + "\" calibrate " + (dir / "measured.csv").string() +
                            " " + (dir / "model.csv").string() + " > " + (dir / "cal.txt").string();
    REQUIRE(std::system(cmd.c_str()) == 0);
    std::istringstream out(slurp(dir / "cal.txt"));
    std::string key;
    double scale = 0.0;
    double before = 0.0;
    double after = 0.0;
    out >> key >> scale >> key >> before >> key >> after;
    CHECK(scale == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(before > 0.0);
    CHECK(after == doctest::Approx(0.0));
    std::ofstream(dir / "zero.csv") << "0,0,0,0\n0,0,0,0\n0,0,0,0\n0,0,0,0\n";
    CHECK(run("calibrate " + (dir / "zero.csv").string() + " " + (dir / "model.csv").string()) == 2);
}

}  // TEST_SUITE
