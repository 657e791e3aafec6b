#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "eitmono/error.hpp"
#include "eitmono/monotonicity.hpp"
#include "eitmono/protocol.hpp"
#include "eitmono/sensitivity.hpp"

namespace eitmono::app {

namespace {

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

void prepare_output_dir(const RunConfig& config) {
    std::error_code ec;
    std::filesystem::create_directories(config.output.directory, ec);
    if (ec) throw ConfigError("cannot create output directory " + config.output.directory.string() + ": " + ec.message());
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw ConfigError("error while writing " + path.string());
}

void save_image(const std::filesystem::path& path, const PixelGrid& grid, std::span<const double> values,
                const GrayMapping& mapping) {
    auto out = open_output(path);
    write_pgm(out, render_pixel_map(grid, values, mapping));
    finish(out, path);
}

void write_pixel_prefix(std::ostream& out, const PixelGrid& grid, int p) {
    const auto& c = grid.pixel_centers[static_cast<std::size_t>(p)];
    out << p << ',' << grid.pixel_row[static_cast<std::size_t>(p)] << ',' << grid.pixel_col[static_cast<std::size_t>(p)]
        << ',' << fmt(c.x()) << ',' << fmt(c.y());
}

}  // namespace

SimulatedFrames simulate_frames(const RunConfig& config) {
    const DiskMesh mesh = build_mesh(config.simulation_mesh());
    const double current = config.protocol.current_amplitude;
    MeasurementFrame hom = measure_full(mesh, uniform_field(mesh, config.phantom.background), current);
    MeasurementFrame inhom = measure_full(mesh, realize_phantom(mesh, config.phantom), current);
    if (!config.protocol.mask_driving_electrodes) {
        hom.valid_mask = inhom.valid_mask = MeasurementFrame::full_mask(mesh.electrode_count());
    }
    const auto seed = config.protocol.seed;
    return {add_noise(hom, config.protocol.noise_level, seed), add_noise(inhom, config.protocol.noise_level, seed + 1)};
}

void cmd_simulate(const RunConfig& config, std::ostream& log) {
    const SimulatedFrames frames = simulate_frames(config);
    prepare_output_dir(config);
    save_measurement(config.out(config.output.hom), frames.hom);
    save_measurement(config.out(config.output.inhom), frames.inhom);
    log << "wrote " << config.out(config.output.hom).string() << " and " << config.out(config.output.inhom).string()
        << " (L=" << frames.hom.electrodes << ", noise " << config.protocol.noise_level << ")\n";
}

void write_kappa_csv(std::ostream& out, const PixelGrid& grid, std::span<const double> kappa) {
    if (static_cast<int>(kappa.size()) != grid.pixel_count()) {
        throw InvalidArgument("kappa has " + std::to_string(kappa.size()) + " values for " +
                              std::to_string(grid.pixel_count()) + " pixels");
    }
    out << "pixel,row,col,x,y,kappa\n";
    for (int p = 0; p < grid.pixel_count(); ++p) {
        write_pixel_prefix(out, grid, p);
        out << ',' << fmt(kappa[static_cast<std::size_t>(p)]) << '\n';
    }
}

void write_beta_csv(std::ostream& out, const PixelGrid& grid, const ConstraintSet& constraints) {
    if (constraints.pixel_count() != grid.pixel_count()) throw InvalidArgument("constraint count differs from pixels");
    out << "pixel,row,col,x,y,beta,upper\n";
    for (int p = 0; p < grid.pixel_count(); ++p) {
        write_pixel_prefix(out, grid, p);
        const auto i = static_cast<std::size_t>(p);
        out << ',' << fmt(constraints.beta[i]) << ',' << fmt(constraints.upper[i]) << '\n';
    }
}

void cmd_reconstruct(const RunConfig& config, const std::filesystem::path& hom_path,
                     const std::filesystem::path& inhom_path, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    const MeasurementFrame hom = load_measurement(hom_path, config.protocol.current_amplitude);
    const MeasurementFrame inhom = load_measurement(inhom_path, config.protocol.current_amplitude);
    const Reconstruction rec = reconstruct(hom, inhom, config.reconstruction());
    const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const auto& kappa = rec.result.kappa;
    const std::span<const double> values(kappa.data(), static_cast<std::size_t>(kappa.size()));
    const GrayMapping mapping = GrayMapping::spanning(values);

    const auto kappa_path = config.out(config.output.kappa);
    auto kappa_out = open_output(kappa_path);
    write_kappa_csv(kappa_out, rec.grid, values);
    finish(kappa_out, kappa_path);

    save_image(config.out(config.output.image), rec.grid, values, mapping);

    nlohmann::ordered_json report;
    report["format"] = "eitmono-report";
    report["version"] = 1;
    report["method"] = rec.result.method;
    report["objective"] = rec.result.objective;
    report["iterations"] = rec.result.iterations;
    report["converged"] = rec.result.converged;
    report["projected_gradient"] = rec.result.projected_gradient;
    report["delta"] = rec.difference.delta;
    report["scale"] = rec.scale;
    report["sigma0"] = config.inversion.sigma0;
    report["a_plus"] = a_plus(config.inversion.sigma0, config.inversion.contrast_bound);
    report["a_minus"] = a_minus(config.inversion.contrast_bound);
    if (rec.constraints) {
        report["polarity"] = to_string(rec.constraints->polarity);
        report["cap"] = rec.constraints->cap();
        report["active_pixels"] = rec.result.active_set.size();
    } else {
        report["alpha"] = config.inversion.alpha;
        report["weighting"] = config.inversion.weighting == TikhonovWeighting::Noser ? "noser" : "identity";
    }
    report["pixels"] = rec.grid.pixel_count();
    report["grid"] = rec.grid.n_side;
    report["kappa_min"] = kappa.size() ? kappa.minCoeff() : 0.0;
    report["kappa_max"] = kappa.size() ? kappa.maxCoeff() : 0.0;
    report["gray_mapping"] = {{"value_min", mapping.value_min}, {"value_max", mapping.value_max},
                              {"gray_min", 0}, {"gray_max", 255}};
    report["runtime_seconds"] = runtime;

    const auto report_path = config.out(config.output.report);
    auto report_out = open_output(report_path);
    report_out << report.dump(2) << '\n';
    finish(report_out, report_path);

    log << to_string(config.inversion.method) << ": " << rec.grid.pixel_count() << " pixels, objective "
        << fmt(rec.result.objective) << ", " << rec.result.iterations << " iterations"
        << (rec.result.converged ? "" : " (not converged)") << ", " << runtime << " s\n";
}

void cmd_constraints(const RunConfig& config, const std::filesystem::path& hom_path,
                     const std::filesystem::path& inhom_path, std::ostream& log) {
    const MeasurementFrame hom = load_measurement(hom_path, config.protocol.current_amplitude);
    const MeasurementFrame inhom = load_measurement(inhom_path, config.protocol.current_amplitude);
    const Reconstruction rec = prepare_constraints(hom, inhom, config.reconstruction());
    const ConstraintSet& constraints = *rec.constraints;

    const auto beta_path = config.out(config.output.beta);
    auto out = open_output(beta_path);
    write_beta_csv(out, rec.grid, constraints);
    finish(out, beta_path);

    const std::span<const double> upper(constraints.upper);
    const GrayMapping mapping = GrayMapping::spanning(upper);
    save_image(config.out(config.output.beta_image), rec.grid, upper, mapping);

    log << "constraints: " << constraints.pixel_count() << " pixels, delta " << fmt(constraints.delta) << ", cap "
        << fmt(constraints.cap()) << ", upper bound image range [" << fmt(mapping.value_min) << ", "
        << fmt(mapping.value_max) << "]\n";
}

void cmd_forward(const RunConfig& config, std::ostream& log) {
    const DiskMesh mesh = build_mesh(config.simulation_mesh());
    MeasurementFrame frame = measure_full(mesh, realize_phantom(mesh, config.phantom),
                                          config.protocol.current_amplitude);
    frame.valid_mask = MeasurementFrame::full_mask(frame.electrodes);
    prepare_output_dir(config);
    save_measurement(config.out(config.output.forward), frame);
    log << "wrote " << config.out(config.output.forward).string() << " (" << mesh.node_count() << " nodes, "
        << mesh.triangle_count() << " triangles)\n";

    if (!config.output.mesh.empty()) {
        const auto path = config.out(config.output.mesh);
        auto out = open_output(path);
        write_mesh_text(out, mesh);
        finish(out, path);
        log << "wrote " << path.string() << '\n';
    }
    if (!config.output.sensitivity.empty()) {
        const ReconstructionConfig rc = config.reconstruction();
        const DiskMesh recon_mesh = build_mesh(rc.mesh);
        const PixelGrid grid = build_pixel_grid(recon_mesh, rc.grid);
        const SensitivityTensor tensor =
            assemble_sensitivity(recon_mesh, grid, rc.sigma0, config.protocol.current_amplitude);
        const auto path = config.out(config.output.sensitivity);
        auto out = open_output(path);
        write_sensitivity_text(out, tensor);
        finish(out, path);
        log << "wrote " << path.string() << " (" << tensor.pixel_count() << " pixels)\n";
    }
}

void cmd_calibrate(const std::filesystem::path& measured_path, const std::filesystem::path& model_path,
                   std::ostream& out) {
    const MeasurementFrame measured = load_measurement(measured_path);
    const MeasurementFrame model = load_measurement(model_path);
    const double c = calibrate_scale(measured, model);
    double before = 0.0;
    double after = 0.0;
    for (int l = 0; l < measured.electrodes; ++l) {
        for (int k = 0; k < measured.electrodes; ++k) {
            if (!measured.valid_mask(k, l) || !model.valid_mask(k, l)) continue;
            before += std::pow(measured.U(k, l) - model.U(k, l), 2);
            after += std::pow(c * measured.U(k, l) - model.U(k, l), 2);
        }
    }
    out << "scale " << fmt(c) << '\n'
        << "residual_before " << fmt(std::sqrt(before)) << '\n'
        << "residual_after " << fmt(std::sqrt(after)) << '\n';
}

}  // namespace eitmono::app
