#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "eitmono/forward.hpp"
#include "eitmono/geometry.hpp"

namespace eitmono {

inline constexpr int kMeasurementFormatVersion = 1;

// Measurement file (JSON):
//   {"format": "eitmono-measurement", "version": 1, "L": 16, "current_amplitude": 0.001,
//    "unit": "V", "valid_mask": [L*L of 0/1, row-major], "U": [L*L numbers, row-major]}
// Row index is the current pattern k, column index the measuring pair l.
void write_measurement_json(std::ostream& out, const MeasurementFrame& frame);
MeasurementFrame read_measurement_json(std::istream& in);

// L lines of L comma-separated values; every entry is treated as measured.
MeasurementFrame read_measurement_csv(std::istream& in, double current_amplitude);

// Dispatch on extension (.json or .csv). Throws ConfigError on I/O or format problems.
MeasurementFrame load_measurement(const std::filesystem::path& path, double csv_current_amplitude = 1e-3);
void save_measurement(const std::filesystem::path& path, const MeasurementFrame& frame);

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, row 0 at the top
};

// Linear map of [value_min, value_max] onto [0, 255]. When the range is empty every value
// maps to 128.
struct GrayMapping {
    double value_min = 0.0;
    double value_max = 0.0;

    [[nodiscard]] std::uint8_t operator()(double value) const;
    static GrayMapping spanning(std::span<const double> values);
};

// One image pixel per grid square. Squares that were not retained take the gray level of 0.
GrayImage render_pixel_map(const PixelGrid& grid, std::span<const double> values, const GrayMapping& mapping);

// Plain PGM (P2), maxval 255, 16 values per line.
void write_pgm(std::ostream& out, const GrayImage& image);

}  // namespace eitmono
