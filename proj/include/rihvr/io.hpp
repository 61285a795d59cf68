#pragma once

#include "rihvr/metrics.hpp"
#include "rihvr/track.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace rihvr {

// --- images --------------------------------------------------------------------

/// Loads a grayscale image. PNG and TIFF (8 or 16 bit, uncompressed TIFF only) are scaled to
/// [0, 1]; `.f32`/`.raw` files are little-endian float32 with a `<file>.json` sidecar holding
/// {"rows": R, "cols": C} and are returned unscaled. Throws std::runtime_error on bad input.
RPlane read_image(const std::string& path);

/// 16-bit PNG with `full_scale` mapped to 65535 (values clamped to [0, full_scale]).
void write_png16(const std::string& path, const RPlane& image, double full_scale);
/// Uncompressed single-strip 16-bit little-endian TIFF, same scaling as write_png16.
void write_tiff16(const std::string& path, const RPlane& image, double full_scale);
/// float32 little-endian samples plus the JSON sidecar.
void write_f32(const std::string& path, const RPlane& image);

/// Paths matching a shell glob, sorted. Empty when nothing matches.
std::vector<std::string> glob_paths(const std::string& pattern);

// --- tables --------------------------------------------------------------------
// Tab-separated text with one header line. Positions are meters unless stated.

struct TruthRow {
    std::size_t frame = 0;
    std::uint32_t id = 0;
    Vec3 position{};
    double diameter = 0.0;
    std::optional<Vec3> axis;  // rods only
};

struct ParticleRow {
    std::size_t frame = 0;
    std::uint32_t id = 0;
    Vec3 position{};  // m
    Vec3 voxel{};     // (col, row, plane)
    std::size_t volume = 0;
    double peak = 0.0;
    std::optional<AxisEstimate> orientation;
};

void write_truth_table(std::ostream& os, const std::vector<TruthRow>& rows);
std::vector<TruthRow> read_truth_table(std::istream& is);

void write_particle_table(std::ostream& os, const std::vector<ParticleRow>& rows);
std::vector<ParticleRow> read_particle_table(std::istream& is);

/// Trajectory rows: track, frame, detection, smoothed x y z, raw x y z, velocity u v w (m/s),
/// orientation p and rotation rate |dp/dt| (1/s; "-" where orientations are missing).
void write_trajectory_table(std::ostream& os, const std::vector<Trajectory>& smoothed,
                            const std::vector<Trajectory>& raw, double frame_interval);
std::vector<Trajectory> read_trajectory_table(std::istream& is);

/// Groups particle rows into per-frame detections (frames 0 .. max frame; ids preserved).
std::vector<DetectionFrame> detections_by_frame(const std::vector<ParticleRow>& rows, std::size_t frame_count);

/// File helpers that throw with the path in the message.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace rihvr
