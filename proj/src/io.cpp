#include "rihvr/io.hpp"

#include <glob.h>
#include <json.hpp>
#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rihvr {

namespace {

std::string lower_extension(const std::string& path)
{
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return {};
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

std::vector<unsigned char> read_bytes(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint16_t quantize16(double v, double full_scale)
{
    const double s = std::clamp(v / full_scale, 0.0, 1.0);
    return static_cast<std::uint16_t>(std::lround(s * 65535.0));
}

// --- PNG ---

struct PngFile {
    std::FILE* fp = nullptr;
    ~PngFile()
    {
        if (fp) std::fclose(fp);
    }
};

RPlane read_png(const std::string& path)
{
    PngFile file;
    file.fp = std::fopen(path.c_str(), "rb");
    if (!file.fp) throw std::runtime_error("cannot open '" + path + "'");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, file.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw std::runtime_error("'" + path + "' is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) throw std::runtime_error("libpng initialisation failed");
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};
    if (setjmp(png_jmpbuf(png))) throw std::runtime_error("corrupt PNG '" + path + "'");

    png_init_io(png, file.fp);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY || (depth != 8 && depth != 16))
        throw std::runtime_error("'" + path + "': only 8/16-bit grayscale PNG is supported");
    if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
    png_read_update_info(png, info);

    const std::size_t bytes = depth / 8;
    std::vector<unsigned char> buffer(static_cast<std::size_t>(width) * height * bytes);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = buffer.data() + static_cast<std::size_t>(r) * width * bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);

    RPlane out(height, width);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (bytes == 1) {
            out.data[i] = buffer[i] / 255.0;
        } else {
            std::uint16_t v;
            std::memcpy(&v, buffer.data() + 2 * i, 2);
            out.data[i] = v / 65535.0;
        }
    }
    return out;
}

// --- TIFF (uncompressed grayscale only) ---

class ByteReader {
public:
    ByteReader(const std::vector<unsigned char>& b, bool little, const std::string& path)
        : b_(b), little_(little), path_(path)
    {
    }
    std::uint32_t u(std::size_t off, int width) const
    {
        if (off + static_cast<std::size_t>(width) > b_.size()) throw std::runtime_error("truncated TIFF '" + path_ + "'");
        std::uint32_t v = 0;
        for (int i = 0; i < width; ++i) {
            const int shift = little_ ? 8 * i : 8 * (width - 1 - i);
            v |= static_cast<std::uint32_t>(b_[off + static_cast<std::size_t>(i)]) << shift;
        }
        return v;
    }

private:
    const std::vector<unsigned char>& b_;
    bool little_;
    const std::string& path_;
};

RPlane read_tiff(const std::string& path)
{
    const auto bytes = read_bytes(path);
    if (bytes.size() < 8) throw std::runtime_error("'" + path + "' is not a TIFF file");
    bool little;
    if (bytes[0] == 'I' && bytes[1] == 'I')
        little = true;
    else if (bytes[0] == 'M' && bytes[1] == 'M')
        little = false;
    else
        throw std::runtime_error("'" + path + "' is not a TIFF file");
    const ByteReader rd(bytes, little, path);
    if (rd.u(2, 2) != 42) throw std::runtime_error("'" + path + "' is not a classic TIFF file");

    const std::size_t ifd = rd.u(4, 4);
    const std::uint32_t count = rd.u(ifd, 2);
    std::uint32_t width = 0, height = 0, bits = 1, compression = 1, photometric = 1, samples = 1;
    std::uint32_t rows_per_strip = 0xffffffffu;
    std::vector<std::uint32_t> offsets, counts;

    auto values = [&](std::size_t entry) {
        const std::uint32_t type = rd.u(entry + 2, 2);
        const std::uint32_t n = rd.u(entry + 4, 4);
        const int width_bytes = type == 3 ? 2 : type == 4 ? 4 : 0;
        if (width_bytes == 0) throw std::runtime_error("unsupported TIFF field type in '" + path + "'");
        const std::size_t total = static_cast<std::size_t>(n) * static_cast<std::size_t>(width_bytes);
        const std::size_t base = total <= 4 ? entry + 8 : rd.u(entry + 8, 4);
        std::vector<std::uint32_t> out(n);
        for (std::uint32_t i = 0; i < n; ++i) out[i] = rd.u(base + i * static_cast<std::size_t>(width_bytes), width_bytes);
        return out;
    };

    for (std::uint32_t e = 0; e < count; ++e) {
        const std::size_t entry = ifd + 2 + 12 * static_cast<std::size_t>(e);
        const std::uint32_t tag = rd.u(entry, 2);
        switch (tag) {
        case 256: width = values(entry).at(0); break;
        case 257: height = values(entry).at(0); break;
        case 258: bits = values(entry).at(0); break;
        case 259: compression = values(entry).at(0); break;
        case 262: photometric = values(entry).at(0); break;
        case 273: offsets = values(entry); break;
        case 277: samples = values(entry).at(0); break;
        case 278: rows_per_strip = values(entry).at(0); break;
        case 279: counts = values(entry); break;
        default: break;
        }
    }
    if (compression != 1) throw std::runtime_error("'" + path + "': compressed TIFF is not supported");
    if (samples != 1 || (bits != 8 && bits != 16) || photometric > 1)
        throw std::runtime_error("'" + path + "': only 8/16-bit grayscale TIFF is supported");
    if (width == 0 || height == 0 || offsets.empty() || offsets.size() != counts.size())
        throw std::runtime_error("'" + path + "': malformed TIFF directory");

    const std::size_t bps = bits / 8;
    const std::size_t row_bytes = static_cast<std::size_t>(width) * bps;
    RPlane out(height, width);
    const double full = bits == 8 ? 255.0 : 65535.0;
    std::size_t row = 0;
    for (std::size_t s = 0; s < offsets.size() && row < height; ++s) {
        const std::size_t strip_rows = std::min<std::size_t>(rows_per_strip, height - row);
        if (counts[s] < strip_rows * row_bytes) throw std::runtime_error("truncated TIFF strip in '" + path + "'");
        for (std::size_t r = 0; r < strip_rows; ++r, ++row) {
            for (std::size_t c = 0; c < width; ++c) {
                const double v = rd.u(offsets[s] + r * row_bytes + c * bps, static_cast<int>(bps)) / full;
                out(row, c) = photometric == 0 ? 1.0 - v : v;
            }
        }
    }
    if (row != height) throw std::runtime_error("TIFF strips do not cover the image in '" + path + "'");
    return out;
}

// --- raw float32 ---

RPlane read_f32(const std::string& path)
{
    const std::string sidecar = path + ".json";
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(sidecar));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad sidecar '" + sidecar + "': " + e.what());
    }
    if (!meta.contains("rows") || !meta.contains("cols"))
        throw std::runtime_error("sidecar '" + sidecar + "' needs \"rows\" and \"cols\"");
    const auto rows = meta["rows"].get<std::size_t>();
    const auto cols = meta["cols"].get<std::size_t>();
    const auto bytes = read_bytes(path);
    if (bytes.size() != rows * cols * 4)
        throw std::runtime_error("'" + path + "' holds " + std::to_string(bytes.size()) + " bytes, expected " +
                                 std::to_string(rows * cols * 4));
    RPlane out(rows, cols);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[4 * i + static_cast<std::size_t>(b)]) << (8 * b);
        const float f = std::bit_cast<float>(u);
        if (!std::isfinite(f)) throw std::runtime_error("'" + path + "' contains non-finite samples");
        out.data[i] = f;
    }
    return out;
}

// --- tables ---

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::vector<std::string> split_tabs(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return out;
}

class TableReader {
public:
    TableReader(std::istream& is, const std::string& header, const char* what) : is_(is), what_(what)
    {
        std::string line;
        if (!std::getline(is_, line)) throw std::runtime_error(what_ + " table is empty");
        if (line != header) throw std::runtime_error(what_ + " table has an unexpected header: '" + line + "'");
        columns_ = split_tabs(header).size();
    }

    bool next(std::vector<std::string>& fields)
    {
        std::string line;
        while (std::getline(is_, line)) {
            ++line_no_;
            if (line.empty()) continue;
            fields = split_tabs(line);
            if (fields.size() != columns_)
                throw std::runtime_error(what_ + " table line " + std::to_string(line_no_ + 1) + ": expected " +
                                         std::to_string(columns_) + " columns");
            return true;
        }
        return false;
    }

    double real(const std::string& s) const
    {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || *end != '\0') throw std::runtime_error(what_ + " table: bad number '" + s + "'");
        return v;
    }

    std::uint64_t count(const std::string& s) const
    {
        char* end = nullptr;
        const auto v = std::strtoull(s.c_str(), &end, 10);
        if (s.empty() || *end != '\0' || s[0] == '-') throw std::runtime_error(what_ + " table: bad integer '" + s + "'");
        return v;
    }

private:
    std::istream& is_;
    std::string what_;
    std::size_t columns_ = 0;
    std::size_t line_no_ = 0;
};

const char* const kTruthHeader = "frame\tid\tx\ty\tz\tdiameter\tp_x\tp_y\tp_z";
const char* const kParticleHeader =
    "frame\tid\tx\ty\tz\tcol\trow\tplane\tvoxels\tpeak\taxis_x\taxis_y\taxis_z\telongation";
const char* const kTrajectoryHeader =
    "track\tframe\tdetection\tx\ty\tz\traw_x\traw_y\traw_z\tu\tv\tw\tp_x\tp_y\tp_z\trotation_rate";

void write_optional_axis(std::ostream& os, const std::optional<Vec3>& axis)
{
    if (axis)
        for (double v : *axis) os << '\t' << num(v);
    else
        os << "\t-\t-\t-";
}

/// Unit vector from three columns, or nothing for "-" placeholders; renormalized after the
/// round trip through text.
std::optional<Vec3> read_optional_axis(const TableReader& t, const std::vector<std::string>& f, std::size_t first)
{
    if (f[first] == "-") return std::nullopt;
    Vec3 a{t.real(f[first]), t.real(f[first + 1]), t.real(f[first + 2])};
    const double n = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    if (!(std::abs(n - 1.0) < 1e-6)) throw std::runtime_error("orientation is not a unit vector");
    for (double& v : a) v /= n;
    return a;
}

}  // namespace

RPlane read_image(const std::string& path)
{
    const std::string ext = lower_extension(path);
    if (ext == "png") return read_png(path);
    if (ext == "tif" || ext == "tiff") return read_tiff(path);
    if (ext == "f32" || ext == "raw") return read_f32(path);
    throw std::runtime_error("unsupported image type '" + path + "' (expected .png, .tif/.tiff, .f32/.raw)");
}

void write_png16(const std::string& path, const RPlane& image, double full_scale)
{
    if (!(full_scale > 0.0)) throw std::invalid_argument("full_scale must be positive");
    PngFile file;
    file.fp = std::fopen(path.c_str(), "wb");
    if (!file.fp) throw std::runtime_error("cannot write '" + path + "'");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) throw std::runtime_error("libpng initialisation failed");
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};
    if (setjmp(png_jmpbuf(png))) throw std::runtime_error("failed writing PNG '" + path + "'");

    png_init_io(png, file.fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.cols), static_cast<png_uint_32>(image.rows), 16,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> row(image.cols * 2);
    for (std::size_t r = 0; r < image.rows; ++r) {
        for (std::size_t c = 0; c < image.cols; ++c) {
            const std::uint16_t v = quantize16(image(r, c), full_scale);
            row[2 * c] = static_cast<unsigned char>(v >> 8);  // PNG is big-endian
            row[2 * c + 1] = static_cast<unsigned char>(v & 0xff);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
}

void write_tiff16(const std::string& path, const RPlane& image, double full_scale)
{
    if (!(full_scale > 0.0)) throw std::invalid_argument("full_scale must be positive");
    std::vector<unsigned char> out;
    auto put = [&](std::uint32_t v, int width) {
        for (int i = 0; i < width; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
    };
    const auto width = static_cast<std::uint32_t>(image.cols);
    const auto height = static_cast<std::uint32_t>(image.rows);
    const std::uint32_t data_bytes = width * height * 2;
    const std::uint32_t entries = 9;
    const std::uint32_t ifd = 8;
    const std::uint32_t data_offset = ifd + 2 + entries * 12 + 4;

    out.insert(out.end(), {'I', 'I'});
    put(42, 2);
    put(ifd, 4);
    put(entries, 2);
    auto entry = [&](std::uint32_t tag, std::uint32_t type, std::uint32_t value) {
        put(tag, 2);
        put(type, 2);
        put(1, 4);
        put(value, 4);
    };
    entry(256, 4, width);
    entry(257, 4, height);
    entry(258, 3, 16);
    entry(259, 3, 1);
    entry(262, 3, 1);
    entry(273, 4, data_offset);
    entry(277, 3, 1);
    entry(278, 4, height);
    entry(279, 4, data_bytes);
    put(0, 4);
    for (double v : image.data) put(quantize16(v, full_scale), 2);

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

void write_f32(const std::string& path, const RPlane& image)
{
    std::vector<unsigned char> out(image.size() * 4);
    for (std::size_t i = 0; i < image.size(); ++i) {
        const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(image.data[i]));
        for (int b = 0; b < 4; ++b) out[4 * i + static_cast<std::size_t>(b)] = static_cast<unsigned char>((u >> (8 * b)) & 0xff);
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!os) throw std::runtime_error("failed writing '" + path + "'");
    write_text_file(path + ".json", nlohmann::json{{"rows", image.rows}, {"cols", image.cols}}.dump() + "\n");
}

std::vector<std::string> glob_paths(const std::string& pattern)
{
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    std::vector<std::string> out;
    if (rc == 0)
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    globfree(&g);
    if (rc != 0 && rc != GLOB_NOMATCH) throw std::runtime_error("glob failed for '" + pattern + "'");
    std::sort(out.begin(), out.end());
    return out;
}

void write_truth_table(std::ostream& os, const std::vector<TruthRow>& rows)
{
    os << kTruthHeader << '\n';
    for (const auto& r : rows) {
        os << r.frame << '\t' << r.id << '\t' << num(r.position[0]) << '\t' << num(r.position[1]) << '\t'
           << num(r.position[2]) << '\t' << num(r.diameter);
        write_optional_axis(os, r.axis);
        os << '\n';
    }
}

std::vector<TruthRow> read_truth_table(std::istream& is)
{
    TableReader t(is, kTruthHeader, "truth");
    std::vector<TruthRow> rows;
    std::vector<std::string> f;
    while (t.next(f)) {
        TruthRow r;
        r.frame = t.count(f[0]);
        r.id = static_cast<std::uint32_t>(t.count(f[1]));
        r.position = {t.real(f[2]), t.real(f[3]), t.real(f[4])};
        r.diameter = t.real(f[5]);
        r.axis = read_optional_axis(t, f, 6);
        rows.push_back(r);
    }
    return rows;
}

void write_particle_table(std::ostream& os, const std::vector<ParticleRow>& rows)
{
    os << kParticleHeader << '\n';
    for (const auto& r : rows) {
        os << r.frame << '\t' << r.id;
        for (double v : r.position) os << '\t' << num(v);
        for (double v : r.voxel) os << '\t' << num(v);
        os << '\t' << r.volume << '\t' << num(r.peak);
        if (r.orientation) {
            for (double v : r.orientation->axis) os << '\t' << num(v);
            os << '\t' << num(r.orientation->elongation);
        } else {
            os << "\t-\t-\t-\t-";
        }
        os << '\n';
    }
}

std::vector<ParticleRow> read_particle_table(std::istream& is)
{
    TableReader t(is, kParticleHeader, "particle");
    std::vector<ParticleRow> rows;
    std::vector<std::string> f;
    while (t.next(f)) {
        ParticleRow r;
        r.frame = t.count(f[0]);
        r.id = static_cast<std::uint32_t>(t.count(f[1]));
        r.position = {t.real(f[2]), t.real(f[3]), t.real(f[4])};
        r.voxel = {t.real(f[5]), t.real(f[6]), t.real(f[7])};
        r.volume = t.count(f[8]);
        r.peak = t.real(f[9]);
        if (f[10] != "-") {
            AxisEstimate a;
            a.axis = {t.real(f[10]), t.real(f[11]), t.real(f[12])};
            a.elongation = t.real(f[13]);
            r.orientation = a;
        }
        rows.push_back(r);
    }
    return rows;
}

void write_trajectory_table(std::ostream& os, const std::vector<Trajectory>& smoothed, const std::vector<Trajectory>& raw,
                            double frame_interval)
{
    if (smoothed.size() != raw.size()) throw std::invalid_argument("smoothed and raw trajectory counts differ");
    if (!(frame_interval > 0.0)) throw std::invalid_argument("frame interval must be positive");
    os << kTrajectoryHeader << '\n';
    for (std::size_t t = 0; t < smoothed.size(); ++t) {
        const auto& s = smoothed[t];
        const auto& r = raw[t];
        if (s.samples.size() != r.samples.size()) throw std::invalid_argument("smoothed and raw trajectories differ");
        const auto velocity = s.velocities();
        const bool oriented = std::all_of(s.samples.begin(), s.samples.end(),
                                          [](const TrackSample& x) { return x.orientation.has_value(); });
        const auto rate = oriented ? rotation_rate(s, frame_interval) : std::vector<double>{};
        for (std::size_t i = 0; i < s.samples.size(); ++i) {
            os << s.id << '\t' << s.samples[i].frame << '\t' << s.samples[i].detection;
            for (double v : s.samples[i].position) os << '\t' << num(v);
            for (double v : r.samples[i].position) os << '\t' << num(v);
            for (double v : velocity[i]) os << '\t' << num(v / frame_interval);
            write_optional_axis(os, s.samples[i].orientation);
            if (oriented)
                os << '\t' << num(rate[i]);
            else
                os << "\t-";
            os << '\n';
        }
    }
}

std::vector<Trajectory> read_trajectory_table(std::istream& is)
{
    TableReader t(is, kTrajectoryHeader, "trajectory");
    std::vector<Trajectory> out;
    std::vector<std::string> f;
    while (t.next(f)) {
        const auto id = static_cast<std::uint32_t>(t.count(f[0]));
        if (out.empty() || out.back().id != id) {
            Trajectory tr;
            tr.id = id;
            out.push_back(std::move(tr));
        }
        TrackSample s;
        s.frame = t.count(f[1]);
        s.detection = static_cast<std::uint32_t>(t.count(f[2]));
        s.position = {t.real(f[3]), t.real(f[4]), t.real(f[5])};
        s.orientation = read_optional_axis(t, f, 12);
        out.back().samples.push_back(s);
    }
    for (const auto& tr : out) tr.check_invariants();
    return out;
}

std::vector<DetectionFrame> detections_by_frame(const std::vector<ParticleRow>& rows, std::size_t frame_count)
{
    std::vector<DetectionFrame> frames(frame_count);
    for (const auto& r : rows) {
        if (r.frame >= frame_count)
            throw std::runtime_error("particle row references frame " + std::to_string(r.frame) + " of " +
                                     std::to_string(frame_count));
        Detection d;
        d.id = r.id;
        d.position = r.position;
        if (r.orientation) d.orientation = r.orientation->axis;
        frames[r.frame].push_back(d);
    }
    return frames;
}

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    os << text;
    if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace rihvr
