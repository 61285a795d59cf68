#include "rihvr/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rihvr {

using nlohmann::json;

namespace {

template <class E>
struct EnumNames;

template <>
struct EnumNames<StepPolicy> {
    static constexpr std::pair<StepPolicy, const char*> table[] = {{StepPolicy::fixed, "fixed"},
                                                                   {StepPolicy::backtracking, "backtracking"}};
};
template <>
struct EnumNames<ValueDomain> {
    static constexpr std::pair<ValueDomain, const char*> table[] = {
        {ValueDomain::complex, "complex"}, {ValueDomain::real, "real"}, {ValueDomain::nonnegative, "nonnegative"}};
};
template <>
struct EnumNames<Carrier> {
    static constexpr std::pair<Carrier, const char*> table[] = {{Carrier::keep, "keep"}, {Carrier::remove, "remove"}};
};
template <>
struct EnumNames<Normalization> {
    static constexpr std::pair<Normalization, const char*> table[] = {{Normalization::background, "background"},
                                                                      {Normalization::mean, "mean"}};
};
template <>
struct EnumNames<MotionKind> {
    static constexpr std::pair<MotionKind, const char*> table[] = {
        {MotionKind::none, "none"}, {MotionKind::uniform, "uniform"}, {MotionKind::swirl, "swirl"}};
};
template <>
struct EnumNames<ImageFormat> {
    static constexpr std::pair<ImageFormat, const char*> table[] = {
        {ImageFormat::f32, "f32"}, {ImageFormat::png16, "png16"}, {ImageFormat::tiff16, "tiff16"}};
};

template <class E>
std::string enum_name(E value)
{
    for (const auto& [v, name] : EnumNames<E>::table)
        if (v == value) return name;
    throw std::logic_error("unnamed enum value");
}

template <class E>
E enum_value(const std::string& name, const std::string& where)
{
    for (const auto& [v, n] : EnumNames<E>::table)
        if (name == n) return v;
    std::string allowed;
    for (const auto& entry : EnumNames<E>::table) allowed += std::string(allowed.empty() ? "" : ", ") + entry.second;
    throw std::invalid_argument(where + ": unknown value '" + name + "' (expected one of: " + allowed + ")");
}

/// Reads one JSON object, remembering which keys were consumed so leftovers can be rejected.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw std::invalid_argument(where() + " must be an object");
    }

    template <class T>
    void get(const char* key, T& out)
    {
        const auto it = j_.find(key);
        seen_.insert(key);
        if (it == j_.end()) return;
        try {
            if constexpr (std::is_enum_v<T>) {
                out = enum_value<T>(it->template get<std::string>(), where(key));
            } else {
                out = it->template get<T>();
            }
        } catch (const json::exception& e) {
            throw std::invalid_argument(where(key) + ": " + e.what());
        }
    }

    /// Child object, or nullptr-like empty object when absent.
    std::optional<Section> child(const char* key)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return std::nullopt;
        return Section(*it, where(key));
    }

    bool has(const char* key) const { return j_.contains(key); }

    void finish() const
    {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) throw std::invalid_argument("unknown config key '" + where(key.c_str()) + "'");
    }

private:
    std::string where(const char* key = nullptr) const
    {
        std::string w = path_;
        if (key) w += (w.empty() ? "" : ".") + std::string(key);
        return w.empty() ? "config" : w;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json smoothing_to_json(const Smoothing& s)
{
    if (const auto* sg = std::get_if<SavitzkyGolay>(&s))
        return {{"method", "savitzky_golay"}, {"window", sg->window}, {"order", sg->order}};
    return {{"method", "tv"}, {"weight", std::get<TvSmoothing>(s).weight}};
}

Smoothing smoothing_from_json(Section& s, const Smoothing& fallback)
{
    std::string method = std::holds_alternative<SavitzkyGolay>(fallback) ? "savitzky_golay" : "tv";
    s.get("method", method);
    if (method == "savitzky_golay") {
        SavitzkyGolay sg = std::holds_alternative<SavitzkyGolay>(fallback) ? std::get<SavitzkyGolay>(fallback)
                                                                           : SavitzkyGolay{};
        s.get("window", sg.window);
        s.get("order", sg.order);
        if (s.has("weight")) throw std::invalid_argument("tracking.smoothing.weight applies to method 'tv' only");
        return sg;
    }
    if (method == "tv") {
        TvSmoothing tv = std::holds_alternative<TvSmoothing>(fallback) ? std::get<TvSmoothing>(fallback) : TvSmoothing{};
        s.get("weight", tv.weight);
        if (s.has("window") || s.has("order"))
            throw std::invalid_argument("tracking.smoothing.window/order apply to method 'savitzky_golay' only");
        return tv;
    }
    throw std::invalid_argument("tracking.smoothing.method: unknown value '" + method +
                                "' (expected one of: savitzky_golay, tv)");
}

json to_json(const PipelineConfig& c)
{
    const auto& g = c.geometry;
    const auto& s = c.solver;
    json j;
    j["geometry"] = {{"nx", g.nx},     {"ny", g.ny}, {"nz", g.nz},
                     {"pitch", g.pitch}, {"dz", g.dz}, {"z0", g.z0},
                     {"wavelength", g.wavelength}};
    j["solver"] = {{"lambda_l1", s.weights.lambda_l1},
                   {"lambda_tv", s.weights.lambda_tv},
                   {"max_iters", s.max_iters},
                   {"tv_inner_iters", s.tv_inner_iters},
                   {"step_policy", enum_name(s.step_policy)},
                   {"step", s.step},
                   {"shrink", s.shrink},
                   {"power_iters", s.power_iters},
                   {"stop_tol", s.stop_tol},
                   {"restart", s.restart},
                   {"domain", enum_name(s.domain)},
                   {"carrier", enum_name(s.optics.carrier)},
                   {"padding", s.optics.padding},
                   {"max_concurrent_planes", s.max_concurrent_planes}};
    j["segmentation"] = {{"rel_tol", c.segmentation.rel_tol}, {"min_vox", c.segmentation.min_vox}};
    j["tracking"] = {{"max_disp", c.tracking.max_disp},
                     {"min_frames", c.tracking.min_frames},
                     {"smoothing", smoothing_to_json(c.tracking.smoothing)},
                     {"frame_interval", c.tracking.frame_interval}};
    j["preprocessing"] = {{"normalization", enum_name(c.preprocessing.normalization)},
                          {"window", c.preprocessing.window}};
    j["paths"] = {{"input", c.paths.input}, {"output", c.paths.output}};
    const auto& m = c.synthesis.motion;
    j["synthesis"] = {{"particles", c.synthesis.particles},
                      {"diameter", c.synthesis.diameter},
                      {"frames", c.synthesis.frames},
                      {"noise_sigma", c.synthesis.noise_sigma},
                      {"format", enum_name(c.synthesis.format)},
                      {"motion",
                       {{"kind", enum_name(m.kind)}, {"velocity", m.velocity}, {"angular_rate", m.angular_rate}}}};
    j["evaluation"] = {{"match_lateral", c.tolerance.lateral}, {"match_axial", c.tolerance.axial}};
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    return j;
}

PipelineConfig from_json(const json& root)
{
    PipelineConfig c;
    Section top(root, "");
    if (auto s = top.child("geometry")) {
        auto& g = c.geometry;
        s->get("nx", g.nx);
        s->get("ny", g.ny);
        s->get("nz", g.nz);
        s->get("pitch", g.pitch);
        s->get("dz", g.dz);
        s->get("z0", g.z0);
        s->get("wavelength", g.wavelength);
        s->finish();
    }
    if (auto s = top.child("solver")) {
        auto& v = c.solver;
        s->get("lambda_l1", v.weights.lambda_l1);
        s->get("lambda_tv", v.weights.lambda_tv);
        s->get("max_iters", v.max_iters);
        s->get("tv_inner_iters", v.tv_inner_iters);
        s->get("step_policy", v.step_policy);
        s->get("step", v.step);
        s->get("shrink", v.shrink);
        s->get("power_iters", v.power_iters);
        s->get("stop_tol", v.stop_tol);
        s->get("restart", v.restart);
        s->get("domain", v.domain);
        s->get("carrier", v.optics.carrier);
        s->get("padding", v.optics.padding);
        s->get("max_concurrent_planes", v.max_concurrent_planes);
        s->finish();
    }
    if (auto s = top.child("segmentation")) {
        s->get("rel_tol", c.segmentation.rel_tol);
        s->get("min_vox", c.segmentation.min_vox);
        s->finish();
    }
    if (auto s = top.child("tracking")) {
        s->get("max_disp", c.tracking.max_disp);
        s->get("min_frames", c.tracking.min_frames);
        s->get("frame_interval", c.tracking.frame_interval);
        if (auto sm = s->child("smoothing")) {
            c.tracking.smoothing = smoothing_from_json(*sm, c.tracking.smoothing);
            sm->finish();
        }
        s->finish();
    }
    if (auto s = top.child("preprocessing")) {
        s->get("normalization", c.preprocessing.normalization);
        s->get("window", c.preprocessing.window);
        s->finish();
    }
    if (auto s = top.child("paths")) {
        s->get("input", c.paths.input);
        s->get("output", c.paths.output);
        s->finish();
    }
    if (auto s = top.child("synthesis")) {
        auto& y = c.synthesis;
        s->get("particles", y.particles);
        s->get("diameter", y.diameter);
        s->get("frames", y.frames);
        s->get("noise_sigma", y.noise_sigma);
        s->get("format", y.format);
        if (auto m = s->child("motion")) {
            m->get("kind", y.motion.kind);
            m->get("velocity", y.motion.velocity);
            m->get("angular_rate", y.motion.angular_rate);
            m->finish();
        }
        s->finish();
    }
    if (auto s = top.child("evaluation")) {
        s->get("match_lateral", c.tolerance.lateral);
        s->get("match_axial", c.tolerance.axial);
        s->finish();
    }
    top.get("seed", c.seed);
    top.get("workers", c.workers);
    top.finish();
    return c;
}

}  // namespace

void PipelineConfig::validate() const
{
    geometry.validate();
    solver.validate();
    if (solver.optics.padding != 1 && solver.optics.padding != 2)
        throw std::invalid_argument("solver.padding must be 1 or 2");
    if (!(segmentation.rel_tol >= 0.0 && segmentation.rel_tol < 1.0))
        throw std::invalid_argument("segmentation.rel_tol must be in [0, 1)");
    if (!(tracking.max_disp > 0.0)) throw std::invalid_argument("tracking.max_disp must be positive");
    if (tracking.min_frames < 1) throw std::invalid_argument("tracking.min_frames must be >= 1");
    if (!(tracking.frame_interval > 0.0)) throw std::invalid_argument("tracking.frame_interval must be positive");
    if (const auto* sg = std::get_if<SavitzkyGolay>(&tracking.smoothing)) {
        if (sg->window < 1) throw std::invalid_argument("tracking.smoothing.window must be >= 1");
        if (sg->order < 0 || sg->order >= sg->window)
            throw std::invalid_argument("tracking.smoothing.order must be in [0, window)");
    } else if (!(std::get<TvSmoothing>(tracking.smoothing).weight >= 0.0)) {
        throw std::invalid_argument("tracking.smoothing.weight must be >= 0");
    }
    if (preprocessing.window < 3 || preprocessing.window % 2 == 0)
        throw std::invalid_argument("preprocessing.window must be odd and >= 3");
    if (paths.output.empty()) throw std::invalid_argument("paths.output must not be empty");
    if (!(synthesis.diameter > 0.0)) throw std::invalid_argument("synthesis.diameter must be positive");
    if (synthesis.frames < 1) throw std::invalid_argument("synthesis.frames must be >= 1");
    if (!(synthesis.noise_sigma >= 0.0)) throw std::invalid_argument("synthesis.noise_sigma must be >= 0");
    if (!(tolerance.lateral > 0.0) || !(tolerance.axial > 0.0))
        throw std::invalid_argument("evaluation match tolerances must be positive");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
}

PipelineConfig parse_config(const std::string& text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(root);
}

PipelineConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const PipelineConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

bool operator==(const PipelineConfig& a, const PipelineConfig& b) { return to_json(a) == to_json(b); }

}  // namespace rihvr
