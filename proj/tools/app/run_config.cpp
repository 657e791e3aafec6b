#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "eitmono/error.hpp"

namespace eitmono::app {

namespace {

using nlohmann::json;

// Reads the keys of one JSON object and complains about anything left over.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
    }
    Section(const Section&) = delete;
    Section& operator=(const Section&) = delete;

    // Rejects keys that were never asked for.
    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
        }
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    std::string where(const std::string& key) const { return path_ + "." + key; }

    template <class T>
    void get(const std::string& key, T& target) {
        const json* v = find(key);
        if (!v) return;
        try {
            target = v->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where(key) + ": wrong type");
        }
    }

    void positive(const std::string& key, double& target) {
        get(key, target);
        if (!std::isfinite(target) || !(target > 0.0)) throw ConfigError(where(key) + ": must be positive");
    }

    void at_least(const std::string& key, int& target, int lowest) {
        get(key, target);
        if (target < lowest) throw ConfigError(where(key) + ": must be at least " + std::to_string(lowest));
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

Polarity parse_polarity(const std::string& name, const std::string& where) {
    if (name == "resistive") return Polarity::Resistive;
    if (name == "conductive") return Polarity::Conductive;
    throw ConfigError(where + ": expected 'resistive' or 'conductive', got '" + name + "'");
}

Point2 parse_point(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(where + ": expected [x, y]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
}

Inclusion parse_inclusion(const json& node, const std::string& path) {
    Section s(node, path);
    Inclusion inc;
    std::string shape = "disk";
    s.get("shape", shape);
    if (shape == "disk") {
        inc.shape = InclusionShape::Disk;
    } else if (shape == "ellipse") {
        inc.shape = InclusionShape::Ellipse;
    } else {
        throw ConfigError(s.where("shape") + ": expected 'disk' or 'ellipse'");
    }
    const json* center = s.find("center");
    if (!center) throw ConfigError(path + ": missing 'center'");
    inc.center = parse_point(*center, s.where("center"));

    const json* radius = s.find("radius");
    const json* radii = s.find("radii");
    if (inc.shape == InclusionShape::Disk) {
        if (!radius || !radius->is_number() || radii) throw ConfigError(path + ": a disk needs a numeric 'radius'");
        inc.radius_x = inc.radius_y = radius->get<double>();
    } else {
        if (!radii || radius) throw ConfigError(path + ": an ellipse needs 'radii': [rx, ry]");
        const Point2 r = parse_point(*radii, s.where("radii"));
        inc.radius_x = r.x();
        inc.radius_y = r.y();
    }
    if (!(inc.radius_x > 0.0) || !(inc.radius_y > 0.0)) throw ConfigError(path + ": radii must be positive");

    const json* contrast = s.find("contrast");
    if (!contrast || !contrast->is_number()) throw ConfigError(path + ": missing numeric 'contrast'");
    inc.contrast = contrast->get<double>();

    std::string polarity = "resistive";
    s.get("polarity", polarity);
    inc.polarity = parse_polarity(polarity, s.where("polarity")) == Polarity::Resistive ? -1 : 1;
    s.finish();
    return inc;
}

void file_name(Section& s, const std::string& key, std::string& target, bool allow_empty) {
    s.get(key, target);
    if (!allow_empty && target.empty()) throw ConfigError(s.where(key) + ": must not be empty");
}

}  // namespace

Method parse_method(const std::string& name) {
    if (name == "monotonicity") return Method::Monotonicity;
    if (name == "tikhonov") return Method::Tikhonov;
    throw ConfigError("unknown method '" + name + "' (expected monotonicity or tikhonov)");
}

std::string to_string(Method method) { return method == Method::Monotonicity ? "monotonicity" : "tikhonov"; }

std::string to_string(Polarity polarity) { return polarity == Polarity::Resistive ? "resistive" : "conductive"; }

MeshParams RunConfig::simulation_mesh() const {
    return MeshParams{geometry.radius, geometry.electrodes, geometry.electrode_arc_fraction, geometry.simulation_level};
}

ReconstructionConfig RunConfig::reconstruction() const {
    ReconstructionConfig c;
    c.mesh = MeshParams{geometry.radius, geometry.electrodes, geometry.electrode_arc_fraction,
                        geometry.reconstruction_level};
    c.grid = geometry.grid;
    c.sigma0 = inversion.sigma0;
    c.contrast_bound = inversion.contrast_bound;
    c.polarity = inversion.polarity;
    c.method = inversion.method;
    c.alpha = inversion.alpha;
    c.weighting = inversion.weighting;
    c.manual_cap = inversion.manual_cap;
    c.calibrate = inversion.calibrate;
    c.solver.tol = inversion.tolerance;
    c.solver.max_iterations = inversion.max_iterations;
    return c;
}

RunConfig parse_run_config(std::istream& in) {
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig cfg;
    Section top(root, "config");

    if (const json* node = top.find("geometry")) {
        auto& g = cfg.geometry;
        Section s(*node, "geometry");
        s.positive("radius", g.radius);
        s.at_least("electrodes", g.electrodes, 6);
        s.positive("electrode_arc_fraction", g.electrode_arc_fraction);
        if (g.electrode_arc_fraction * g.electrodes >= 1.0) {
            throw ConfigError("geometry.electrode_arc_fraction: electrodes would overlap");
        }
        s.at_least("simulation_level", g.simulation_level, 0);
        s.at_least("reconstruction_level", g.reconstruction_level, 0);
        s.at_least("grid", g.grid, 2);
        s.finish();
    }

    if (const json* node = top.find("phantom")) {
        Section s(*node, "phantom");
        s.positive("background", cfg.phantom.background);
        if (const json* list = s.find("inclusions")) {
            if (!list->is_array()) throw ConfigError("phantom.inclusions: expected an array");
            for (std::size_t i = 0; i < list->size(); ++i) {
                cfg.phantom.inclusions.push_back(
                    parse_inclusion((*list)[i], "phantom.inclusions[" + std::to_string(i) + "]"));
            }
        }
        s.finish();
        try {
            cfg.phantom.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("phantom: ") + e.what());
        }
    }

    if (const json* node = top.find("protocol")) {
        auto& p = cfg.protocol;
        Section s(*node, "protocol");
        s.positive("current_amplitude", p.current_amplitude);
        s.get("noise_level", p.noise_level);
        if (!std::isfinite(p.noise_level) || p.noise_level < 0.0) {
            throw ConfigError("protocol.noise_level: must be non-negative");
        }
        s.get("seed", p.seed);
        s.get("mask_driving_electrodes", p.mask_driving_electrodes);
        s.finish();
    }

    if (const json* node = top.find("inversion")) {
        auto& v = cfg.inversion;
        Section s(*node, "inversion");
        std::string name = to_string(v.method);
        s.get("method", name);
        v.method = parse_method(name);
        name = to_string(v.polarity);
        s.get("polarity", name);
        v.polarity = parse_polarity(name, "inversion.polarity");
        s.positive("sigma0", v.sigma0);
        s.positive("contrast_bound", v.contrast_bound);
        s.positive("alpha", v.alpha);
        name = v.weighting == TikhonovWeighting::Noser ? "noser" : "identity";
        s.get("weighting", name);
        if (name == "noser") {
            v.weighting = TikhonovWeighting::Noser;
        } else if (name == "identity") {
            v.weighting = TikhonovWeighting::Identity;
        } else {
            throw ConfigError("inversion.weighting: expected 'noser' or 'identity'");
        }
        if (const json* cap = s.find("manual_cap"); cap && !cap->is_null()) {
            if (!cap->is_number() || !(cap->get<double>() > 0.0)) {
                throw ConfigError("inversion.manual_cap: must be a positive number or null");
            }
            v.manual_cap = cap->get<double>();
        }
        s.get("calibrate", v.calibrate);
        s.positive("tolerance", v.tolerance);
        s.at_least("max_iterations", v.max_iterations, 1);
        s.finish();
    }

    if (const json* node = top.find("output")) {
        auto& o = cfg.output;
        Section s(*node, "output");
        std::string dir = o.directory.string();
        s.get("directory", dir);
        if (dir.empty()) throw ConfigError("output.directory: must not be empty");
        o.directory = dir;
        file_name(s, "hom", o.hom, false);
        file_name(s, "inhom", o.inhom, false);
        file_name(s, "kappa", o.kappa, false);
        file_name(s, "image", o.image, false);
        file_name(s, "report", o.report, false);
        file_name(s, "beta", o.beta, false);
        file_name(s, "beta_image", o.beta_image, false);
        file_name(s, "forward", o.forward, false);
        file_name(s, "mesh", o.mesh, true);
        file_name(s, "sensitivity", o.sensitivity, true);
        s.finish();
    }
    top.finish();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_run_config(in);
}

}  // namespace eitmono::app
