#include "eitmono/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "eitmono/error.hpp"

namespace eitmono {

using nlohmann::json;

void write_measurement_json(std::ostream& out, const MeasurementFrame& frame) {
    const int n = frame.electrodes;
    json j;
    j["format"] = "eitmono-measurement";
    j["version"] = kMeasurementFormatVersion;
    j["L"] = n;
    j["current_amplitude"] = frame.current_amplitude;
    j["unit"] = "V";
    std::vector<int> mask;
    std::vector<double> values;
    mask.reserve(static_cast<std::size_t>(n) * n);
    values.reserve(static_cast<std::size_t>(n) * n);
    for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
            mask.push_back(frame.valid_mask(k, l) ? 1 : 0);
            values.push_back(frame.U(k, l));
        }
    }
    j["valid_mask"] = mask;
    j["U"] = values;
    out << j.dump(1) << '\n';
}

MeasurementFrame read_measurement_json(std::istream& in) {
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("measurement file is not valid JSON: ") + e.what());
    }
    try {
        if (!j.contains("version") || j.at("version").get<int>() != kMeasurementFormatVersion) {
            throw ConfigError("unsupported measurement file version");
        }
        if (j.contains("format") && j.at("format").get<std::string>() != "eitmono-measurement") {
            throw ConfigError("not an eitmono measurement file");
        }
        if (j.contains("unit") && j.at("unit").get<std::string>() != "V") {
            throw ConfigError("measurement unit must be V");
        }
        MeasurementFrame frame;
        frame.electrodes = j.at("L").get<int>();
        const int n = frame.electrodes;
        if (n < 4) throw ConfigError("measurement file: L must be at least 4");
        frame.current_amplitude = j.at("current_amplitude").get<double>();
        if (!(frame.current_amplitude > 0.0)) throw ConfigError("measurement file: current_amplitude must be > 0");
        const auto values = j.at("U").get<std::vector<double>>();
        const auto mask = j.at("valid_mask").get<std::vector<int>>();
        const auto expected = static_cast<std::size_t>(n) * n;
        if (values.size() != expected || mask.size() != expected) {
            throw ConfigError("measurement file: U and valid_mask must hold L*L entries");
        }
        frame.U.resize(n, n);
        frame.valid_mask.resize(n, n);
        for (int k = 0; k < n; ++k) {
            for (int l = 0; l < n; ++l) {
                const auto i = static_cast<std::size_t>(k) * n + l;
                if (mask[i] != 0 && mask[i] != 1) throw ConfigError("measurement file: valid_mask entries are 0 or 1");
                if (!std::isfinite(values[i])) throw ConfigError("measurement file: non-finite value");
                frame.U(k, l) = values[i];
                frame.valid_mask(k, l) = mask[i] == 1;
            }
        }
        return frame;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("measurement file: ") + e.what());
    }
}

MeasurementFrame read_measurement_csv(std::istream& in, double current_amplitude) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ConfigError("measurement CSV: cannot parse '" + cell + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    const auto n = static_cast<int>(rows.size());
    if (n < 4) throw ConfigError("measurement CSV: need at least 4 rows");
    MeasurementFrame frame;
    frame.electrodes = n;
    frame.current_amplitude = current_amplitude;
    frame.U.resize(n, n);
    for (int k = 0; k < n; ++k) {
        if (static_cast<int>(rows[k].size()) != n) throw ConfigError("measurement CSV: matrix must be L x L");
        for (int l = 0; l < n; ++l) frame.U(k, l) = rows[k][l];
    }
    frame.valid_mask = MeasurementFrame::full_mask(n);
    return frame;
}

MeasurementFrame load_measurement(const std::filesystem::path& path, double csv_current_amplitude) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open measurement file " + path.string());
    if (path.extension() == ".csv") return read_measurement_csv(in, csv_current_amplitude);
    return read_measurement_json(in);
}

void save_measurement(const std::filesystem::path& path, const MeasurementFrame& frame) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write measurement file " + path.string());
    write_measurement_json(out, frame);
    if (!out) throw ConfigError("error while writing " + path.string());
}

std::uint8_t GrayMapping::operator()(double value) const {
    if (!(value_max > value_min)) return 128;
    const double t = (value - value_min) / (value_max - value_min);
    return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(t, 0.0, 1.0)));
}

GrayMapping GrayMapping::spanning(std::span<const double> values) {
    GrayMapping m;
    if (values.empty()) return m;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    m.value_min = *lo;
    m.value_max = *hi;
    return m;
}

GrayImage render_pixel_map(const PixelGrid& grid, std::span<const double> values, const GrayMapping& mapping) {
    if (static_cast<int>(values.size()) != grid.pixel_count()) {
        throw InvalidArgument("render_pixel_map: one value per retained pixel required");
    }
    GrayImage img;
    img.width = grid.n_side;
    img.height = grid.n_side;
    img.pixels.assign(static_cast<std::size_t>(grid.n_side) * grid.n_side, mapping(0.0));
    for (int p = 0; p < grid.pixel_count(); ++p) {
        img.pixels[static_cast<std::size_t>(grid.pixel_row[p]) * grid.n_side + grid.pixel_col[p]] = mapping(values[p]);
    }
    return img;
}

void write_pgm(std::ostream& out, const GrayImage& image) {
    out << "P2\n" << image.width << ' ' << image.height << "\n255\n";
    for (int r = 0; r < image.height; ++r) {
        for (int c = 0; c < image.width; ++c) {
            if (c) out << ((c % 16 == 0) ? '\n' : ' ');
            out << static_cast<int>(image.pixels[static_cast<std::size_t>(r) * image.width + c]);
        }
        out << '\n';
    }
}

}  // namespace eitmono
