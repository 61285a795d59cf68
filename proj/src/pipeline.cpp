#include "rihvr/pipeline.hpp"

#include "rihvr/io.hpp"
#include "rihvr/preprocess.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace rihvr {

namespace {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The exception of the lowest failing
/// index is rethrown, so failures report the same way whatever the scheduling.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn fn)
{
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
    for (long i = 0; i < static_cast<long>(n); ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string frame_name(std::size_t frame, const char* ext)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "frame_%05zu.%s", frame, ext);
    return buf;
}

std::uint64_t frame_seed(std::uint64_t seed, std::size_t frame)
{
    // splitmix64 step so neighbouring frames get unrelated noise streams
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(frame) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void ensure_directory(const std::string& path)
{
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw std::runtime_error("cannot create directory '" + path + "': " + ec.message());
}

template <class Writer>
void write_table(const std::string& path, Writer writer)
{
    std::ostringstream os;
    writer(os);
    write_text_file(path, os.str());
}

std::vector<ParticleRow> load_particles(const OutputLayout& out)
{
    std::istringstream is(read_text_file(out.particles()));
    return read_particle_table(is);
}

std::size_t frame_count(const std::vector<ParticleRow>& rows)
{
    std::size_t n = 0;
    for (const auto& r : rows) n = std::max(n, r.frame + 1);
    return n;
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// Ground-truth tracks by particle id, split where a particle wraps around the periodic domain.
std::vector<Trajectory> truth_trajectories(const std::vector<TruthRow>& rows, const VolumeGeometry& g)
{
    std::map<std::uint32_t, std::vector<const TruthRow*>> by_id;
    for (const auto& r : rows) by_id[r.id].push_back(&r);
    const auto b = scene_bounds(g);
    std::vector<Trajectory> out;
    for (auto& [id, list] : by_id) {
        std::sort(list.begin(), list.end(), [](const TruthRow* a, const TruthRow* c) { return a->frame < c->frame; });
        Trajectory t;
        t.id = id;
        for (const auto* r : list) {
            bool split = false;
            if (!t.samples.empty()) {
                const auto& prev = t.samples.back();
                split = r->frame != prev.frame + 1;
                for (int a = 0; a < 3; ++a)
                    split = split || std::abs(r->position[a] - prev.position[a]) > 0.5 * (b.hi[a] - b.lo[a]);
            }
            if (split) {
                out.push_back(t);
                t.samples.clear();
            }
            t.samples.push_back({r->frame, r->id, r->position, std::nullopt});
        }
        if (!t.samples.empty()) out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

Scene scene_at_frame(const Scene& initial, const MotionConfig& motion, std::size_t frame)
{
    Scene out = initial;
    if (motion.kind == MotionKind::none) return out;
    const double t = static_cast<double>(frame);
    const auto& g = initial.geom;
    const double xc = 0.5 * static_cast<double>(g.nx) * g.pitch;
    const double yc = 0.5 * static_cast<double>(g.ny) * g.pitch;
    const double angle = motion.kind == MotionKind::swirl ? motion.angular_rate * t : 0.0;
    const double c = std::cos(angle), s = std::sin(angle);
    for (auto& p : out.particles) {
        const double dx = p.position[0] - xc;
        const double dy = p.position[1] - yc;
        const Vec3 moved{xc + c * dx - s * dy + motion.velocity[0] * t, yc + s * dx + c * dy + motion.velocity[1] * t,
                         p.position[2] + motion.velocity[2] * t};
        p.position = wrap_position(g, moved);
        if (p.rod) {
            const Vec3 a = p.rod->axis;
            p.rod->axis = {c * a[0] - s * a[1], s * a[0] + c * a[1], a[2]};
        }
    }
    return out;
}

void run_synthesize(const PipelineConfig& cfg)
{
    cfg.validate();
    const OutputLayout out{cfg.paths.output};
    ensure_directory(out.holograms());
    const auto& syn = cfg.synthesis;
    const Scene initial = generate_scene(syn.particles, cfg.geometry, syn.diameter, cfg.seed);

    std::vector<Scene> scenes(syn.frames);
    std::vector<RPlane> images(syn.frames);
    parallel_for(syn.frames, cfg.workers, [&](std::size_t f) {
        scenes[f] = scene_at_frame(initial, syn.motion, f);
        images[f] = add_noise(render_hologram(scenes[f]), syn.noise_sigma, frame_seed(cfg.seed, f));
    });

    for (std::size_t f = 0; f < syn.frames; ++f) {
        const std::string base = out.holograms() + "/";
        switch (syn.format) {
        case ImageFormat::f32: write_f32(base + frame_name(f, "f32"), images[f]); break;
        // intensity 2 (the brightest constructive fringe of an opaque object) maps to full scale
        case ImageFormat::png16: write_png16(base + frame_name(f, "png"), images[f], 2.0); break;
        case ImageFormat::tiff16: write_tiff16(base + frame_name(f, "tif"), images[f], 2.0); break;
        }
    }
    std::vector<TruthRow> truth;
    for (std::size_t f = 0; f < syn.frames; ++f)
        for (const auto& p : scenes[f].particles)
            truth.push_back({f, p.id, p.position, p.diameter, p.rod ? std::optional<Vec3>(p.rod->axis) : std::nullopt});
    write_table(out.truth(), [&](std::ostream& os) { write_truth_table(os, truth); });
    write_text_file(out.config(), serialize_config(cfg));
    std::cout << "synthesized " << syn.frames << " frame(s) with " << syn.particles << " particle(s) into "
              << out.root << "\n";
}

void run_reconstruct(const PipelineConfig& cfg)
{
    cfg.validate();
    if (cfg.paths.input.empty()) throw std::invalid_argument("paths.input must name the holograms to reconstruct");
    const auto files = glob_paths(cfg.paths.input);
    if (files.empty()) throw std::runtime_error("no holograms match '" + cfg.paths.input + "'");
    const auto& g = cfg.geometry;

    std::vector<RPlane> images(files.size());
    parallel_for(files.size(), cfg.workers, [&](std::size_t f) {
        images[f] = read_image(files[f]);
        if (images[f].rows != g.ny || images[f].cols != g.nx)
            throw std::runtime_error("'" + files[f] + "' is " + std::to_string(images[f].cols) + "x" +
                                     std::to_string(images[f].rows) + ", geometry expects " + std::to_string(g.nx) +
                                     "x" + std::to_string(g.ny));
    });

    std::vector<RPlane> residuals;
    if (cfg.preprocessing.normalization == Normalization::background) {
        residuals = preprocess_background(images, cfg.preprocessing.window);
    } else {
        residuals.resize(images.size());
        for (std::size_t f = 0; f < images.size(); ++f) residuals[f] = normalize_mean(images[f]);
    }
    images.clear();

    const OutputLayout out{cfg.paths.output};
    ensure_directory(out.volumes());
    ensure_directory(out.objective());

    const HoloOperator op(g, cfg.solver.optics);
    SegmentationConfig seg = cfg.segmentation;
    seg.axis_scale = Vec3{g.pitch, g.pitch, g.dz};

    std::vector<std::vector<ParticleRow>> rows(files.size());
    parallel_for(files.size(), cfg.workers, [&](std::size_t f) {
        const auto result = fista(op, residuals[f], cfg.solver);
        write_volume(out.volumes() + "/" + frame_name(f, "rihv"), result.volume);
        write_table(out.objective() + "/" + frame_name(f, "tsv"),
                    [&](std::ostream& os) { write_objective_history(os, result.report); });
        const auto blobs = segment(result.volume, seg);
        for (std::size_t i = 0; i < blobs.size(); ++i) {
            ParticleRow r;
            r.frame = f;
            r.id = static_cast<std::uint32_t>(i);
            r.voxel = blobs[i].centroid;
            r.position = to_meters(g, blobs[i].centroid);
            r.volume = blobs[i].volume();
            r.peak = blobs[i].peak;
            r.orientation = blobs[i].orientation;
            rows[f].push_back(r);
        }
        std::cerr << "frame " << f << ": " << blobs.size() << " particle(s), sparsity " << result.report.final_sparsity
                  << ", " << result.report.wall_seconds << " s\n";
    });

    std::vector<ParticleRow> all;
    for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
    write_table(out.particles(), [&](std::ostream& os) { write_particle_table(os, all); });
    std::cout << "reconstructed " << files.size() << " frame(s), " << all.size() << " particle(s)\n";
}

void run_track(const PipelineConfig& cfg)
{
    cfg.validate();
    const OutputLayout out{cfg.paths.output};
    const auto rows = load_particles(out);
    const auto frames = detections_by_frame(rows, frame_count(rows));
    const auto raw = filter_min_duration(link_frames(frames, cfg.tracking.max_disp), cfg.tracking.min_frames);
    std::vector<Trajectory> smoothed;
    smoothed.reserve(raw.size());
    for (const auto& t : raw) smoothed.push_back(smooth_trajectory(t, cfg.tracking.smoothing));
    write_table(out.trajectories(), [&](std::ostream& os) { write_trajectory_table(os, smoothed, raw, cfg.tracking.frame_interval); });
    std::cout << "linked " << raw.size() << " trajectory(ies) of at least " << cfg.tracking.min_frames
              << " frame(s)\n";
}

void run_evaluate(const PipelineConfig& cfg)
{
    cfg.validate();
    const OutputLayout out{cfg.paths.output};
    const auto& g = cfg.geometry;
    std::vector<TruthRow> truth;
    {
        std::istringstream is(read_text_file(out.truth()));
        truth = read_truth_table(is);
    }
    const auto particles = load_particles(out);
    std::vector<Trajectory> trajectories;
    {
        std::istringstream is(read_text_file(out.trajectories()));
        trajectories = read_trajectory_table(is);
    }

    std::size_t frames = frame_count(particles);
    for (const auto& t : truth) frames = std::max(frames, t.frame + 1);
    std::vector<std::vector<Vec3>> truth_vox(frames), found_vox(frames);
    for (const auto& t : truth) truth_vox[t.frame].push_back(to_voxel(g, t.position));
    for (const auto& p : particles) found_vox[p.frame].push_back(p.voxel);

    std::size_t truth_count = 0, detected = 0, matched = 0, false_pos = 0;
    std::array<std::vector<double>, 3> errors;
    for (std::size_t f = 0; f < frames; ++f) {
        const auto m = match_particles(truth_vox[f], found_vox[f], cfg.tolerance);
        truth_count += m.truth_count;
        detected += m.detected_count;
        matched += m.pairs.size();
        false_pos += m.false_positives;
        for (int a = 0; a < 3; ++a) {
            const auto e = m.abs_errors(a);
            errors[static_cast<std::size_t>(a)].insert(errors[static_cast<std::size_t>(a)].end(), e.begin(), e.end());
        }
    }

    write_table(out.errors(), [&](std::ostream& os) {
        os << "axis\tpercentile\terror\n";
        const char* names[] = {"x", "y", "z"};
        for (int a = 0; a < 3; ++a) {
            const auto& e = errors[static_cast<std::size_t>(a)];
            if (e.empty()) continue;
            for (double q : {25.0, 50.0, 75.0, 90.0}) os << names[a] << '\t' << num(q) << '\t' << num(percentile(e, q)) << '\n';
        }
    });

    const auto truth_tracks = truth_trajectories(truth, g);
    write_table(out.metrics(), [&](std::ostream& os) {
        os << "metric\tvalue\n";
        os << "frames\t" << frames << '\n';
        os << "truth_particles\t" << truth_count << '\n';
        os << "detected_particles\t" << detected << '\n';
        os << "matched\t" << matched << '\n';
        os << "false_positives\t" << false_pos << '\n';
        os << "extraction_rate\t" << num(truth_count ? static_cast<double>(matched) / truth_count : 0.0) << '\n';
        os << "trajectories\t" << trajectories.size() << '\n';
        const char* names[] = {"u", "v", "w"};
        for (int a = 0; a < 3; ++a) {
            bool truth_ok = false, measured_ok = false;
            double rt = 0.0, rm = 0.0;
            try {
                rt = rms_velocity(truth_tracks, a);
                truth_ok = true;
            } catch (const std::invalid_argument&) {
            }
            try {
                rm = rms_velocity(trajectories, a);
                measured_ok = true;
            } catch (const std::invalid_argument&) {
            }
            if (truth_ok) os << "rms_" << names[a] << "_truth\t" << num(rt) << '\n';
            if (measured_ok) os << "rms_" << names[a] << "_measured\t" << num(rm) << '\n';
            if (truth_ok && measured_ok && rt > 0.0)
                os << "rms_" << names[a] << "_relative_error\t" << num(std::abs(rm - rt) / rt) << '\n';
        }
    });
    std::cout << "evaluated " << frames << " frame(s): extraction rate "
              << (truth_count ? static_cast<double>(matched) / truth_count : 0.0) << "\n";
}

}  // namespace rihvr
