#include "msrds/cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "msrds/errors.hpp"

namespace msrds::cli {

using json = nlohmann::json;
using numerics::Matrix;
using numerics::Vector;

namespace {

[[noreturn]] void fail(const std::string& message) { throw ConfigError(message); }

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            fail(context + ": unknown key \"" + key + "\"");
    }
}

double get_number(const json& obj, const std::string& key, const std::string& context) {
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(context + "." + key + ": expected a number");
    return v.get<double>();
}

double get_number_or(const json& obj, const std::string& key, double fallback,
                     const std::string& context) {
    if (!obj.contains(key)) return fallback;
    return get_number(obj, key, context);
}

std::size_t get_count_or(const json& obj, const std::string& key, std::size_t fallback,
                         const std::string& context) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        fail(context + "." + key + ": expected a non-negative integer");
    return v.get<std::size_t>();
}

Matrix get_matrix(const json& obj, const std::string& key, std::size_t d,
                  const std::string& context) {
    const auto& v = obj.at(key);
    const std::string name = context + "." + key;
    if (!v.is_array() || v.size() != d)
        fail(name + ": expected a " + std::to_string(d) + "x" + std::to_string(d) +
             " matrix (row-major nested arrays)");
    Matrix m(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        const auto& row = v.at(i);
        if (!row.is_array() || row.size() != d)
            fail(name + ": row " + std::to_string(i) + " does not have " +
                 std::to_string(d) + " entries");
        for (std::size_t j = 0; j < d; ++j) {
            if (!row.at(j).is_number()) fail(name + ": non-numeric entry");
            m(i, j) = row.at(j).get<double>();
        }
    }
    return m;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

void parse_model(const json& model, RunConfig& config) {
    if (!model.is_object()) fail("model: expected an object");
    if (!model.contains("kind")) fail("model.kind: required");
    const std::string kind = model.at("kind").is_string()
                                 ? model.at("kind").get<std::string>()
                                 : std::string();

    if (kind == "pitchfork") {
        check_keys(model, {"kind", "alpha", "beta"}, "model");
        if (!model.contains("alpha")) fail("model.alpha: required for pitchfork models");
        config.kind = RunConfig::ModelKind::kPitchfork;
        config.alpha = get_number(model, "alpha", "model");
        config.beta = get_number_or(model, "beta", 1.0, "model");
        config.dimension = 1;
        return;
    }
    if (kind != "linear") fail("model.kind: expected \"linear\" or \"pitchfork\"");

    check_keys(model, {"kind", "d", "A", "B", "C", "D", "schedule", "bound"}, "model");
    config.kind = RunConfig::ModelKind::kLinear;
    if (!model.contains("d")) fail("model.d: required for linear models");
    const std::size_t d = get_count_or(model, "d", 0, "model");
    if (d < 1 || d > 7) fail("model.d: must be between 1 and 7");
    config.dimension = d;
    const double bound = get_number_or(model, "bound", -1.0, "model");

    try {
        if (model.contains("schedule")) {
            for (const char* k : {"A", "B", "C", "D"})
                if (model.contains(k))
                    fail(std::string("model.") + k +
                         ": direct matrices and a schedule are mutually exclusive");
            const auto& sched = model.at("schedule");
            if (!sched.is_array() || sched.empty())
                fail("model.schedule: expected a non-empty array of segments");
            std::vector<moment_dynamics::CoefficientSegment> segments;
            for (std::size_t k = 0; k < sched.size(); ++k) {
                const auto& seg = sched.at(k);
                const std::string ctx = "model.schedule[" + std::to_string(k) + "]";
                if (!seg.is_object()) fail(ctx + ": expected an object");
                check_keys(seg, {"start", "A", "B", "C", "D"}, ctx);
                for (const char* key : {"start", "A", "B", "C", "D"})
                    if (!seg.contains(key)) fail(ctx + "." + key + ": required");
                segments.push_back(moment_dynamics::CoefficientSegment{
                    get_number(seg, "start", ctx), get_matrix(seg, "A", d, ctx),
                    get_matrix(seg, "B", d, ctx), get_matrix(seg, "C", d, ctx),
                    get_matrix(seg, "D", d, ctx)});
            }
            config.coeffs =
                moment_dynamics::CoefficientSystem::piecewise(std::move(segments), bound);
        } else {
            for (const char* key : {"A", "B", "C", "D"})
                if (!model.contains(key))
                    fail(std::string("model.") + key + ": required for linear models");
            config.coeffs = moment_dynamics::CoefficientSystem::autonomous(
                get_matrix(model, "A", d, "model"), get_matrix(model, "B", d, "model"),
                get_matrix(model, "C", d, "model"), get_matrix(model, "D", d, "model"),
                bound);
        }
    } catch (const std::invalid_argument& e) {
        fail(std::string("model: ") + e.what());
    }
}

void parse_spectrum(const json& obj, RunConfig& config) {
    check_keys(obj, {"method", "horizon", "samples", "cluster_width"}, "spectrum");
    auto& p = config.spectrum;
    if (obj.contains("method")) {
        if (!obj.at("method").is_string()) fail("spectrum.method: expected a string");
        p.method = obj.at("method").get<std::string>();
        if (p.method != "eigen-lift" && p.method != "finite-time" && p.method != "both")
            fail("spectrum.method: expected eigen-lift, finite-time or both");
    }
    p.horizon = get_number_or(obj, "horizon", p.horizon, "spectrum");
    if (!(p.horizon >= 10.0)) fail("spectrum.horizon: must be at least 10");
    p.samples = get_count_or(obj, "samples", p.samples, "spectrum");
    if (p.samples < 16) fail("spectrum.samples: must be at least 16");
    p.cluster_width = get_number_or(obj, "cluster_width", p.cluster_width, "spectrum");
    if (!(p.cluster_width > 0.0)) fail("spectrum.cluster_width: must be positive");
}

void parse_simulate(const json& obj, RunConfig& config) {
    check_keys(obj, {"t0", "t1", "dt", "particles", "output_every", "init"}, "simulate");
    auto& p = config.simulate;
    p.t0 = get_number_or(obj, "t0", p.t0, "simulate");
    p.t1 = get_number_or(obj, "t1", p.t1, "simulate");
    if (!(p.t1 >= p.t0)) fail("simulate.t1: must be >= t0");
    p.dt = get_number_or(obj, "dt", p.dt, "simulate");
    if (!(p.dt > 0.0 && p.dt <= 1e-2)) fail("simulate.dt: must be in (0, 1e-2]");
    p.particles = get_count_or(obj, "particles", p.particles, "simulate");
    if (p.particles < 100) fail("simulate.particles: must be at least 100");
    p.output_every = get_count_or(obj, "output_every", p.output_every, "simulate");
    if (p.output_every < 1) fail("simulate.output_every: must be at least 1");

    const std::size_t d = config.dimension;
    if (obj.contains("init")) {
        const auto& init = obj.at("init");
        if (!init.is_object()) fail("simulate.init: expected an object");
        check_keys(init, {"mean", "second_moment"}, "simulate.init");
        if (!init.contains("mean") || !init.contains("second_moment"))
            fail("simulate.init: both mean and second_moment are required");
        const auto& mean = init.at("mean");
        if (!mean.is_array() || mean.size() != d)
            fail("simulate.init.mean: expected " + std::to_string(d) + " entries");
        p.mean.assign(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            if (!mean.at(i).is_number()) fail("simulate.init.mean: non-numeric entry");
            p.mean[i] = mean.at(i).get<double>();
        }
        p.second_moment = get_matrix(init, "second_moment", d, "simulate.init");
        try {
            moment_dynamics::validate_moment_state({p.mean, p.second_moment});
        } catch (const std::exception& e) {
            fail(std::string("simulate.init: ") + e.what());
        }
    } else {
        p.mean.assign(d, 0.0);
        p.second_moment = Matrix::identity(d);
    }
}

void parse_pullback(const json& obj, RunConfig& config) {
    check_keys(obj, {"end_time", "start_times", "init"}, "pullback");
    auto& p = config.pullback;
    p.end_time = get_number_or(obj, "end_time", p.end_time, "pullback");
    if (obj.contains("start_times")) {
        const auto& st = obj.at("start_times");
        if (!st.is_array() || st.empty())
            fail("pullback.start_times: expected a non-empty array");
        p.start_times.clear();
        for (const auto& v : st) {
            if (!v.is_number()) fail("pullback.start_times: non-numeric entry");
            p.start_times.push_back(v.get<double>());
        }
    }
    for (std::size_t k = 0; k + 1 < p.start_times.size(); ++k)
        if (!(p.start_times[k] > p.start_times[k + 1]))
            fail("pullback.start_times: must be strictly decreasing");
    if (!(p.start_times.front() <= p.end_time))
        fail("pullback.start_times: must not exceed end_time");
    if (obj.contains("init")) {
        const auto& init = obj.at("init");
        check_keys(init, {"x", "y"}, "pullback.init");
        p.x = get_number_or(init, "x", p.x, "pullback.init");
        p.y = get_number_or(init, "y", p.y, "pullback.init");
    }
    if (p.y < p.x * p.x - 1e-9) fail("pullback.init: requires y >= x^2");
}

void parse_bifurcate(const json& obj, RunConfig& config) {
    check_keys(obj, {"alpha_grid", "init", "depth"}, "bifurcate");
    auto& p = config.bifurcate;
    if (obj.contains("alpha_grid")) {
        const auto& grid = obj.at("alpha_grid");
        if (!grid.is_array() || grid.empty())
            fail("bifurcate.alpha_grid: expected a non-empty array");
        p.alpha_grid.clear();
        for (const auto& v : grid) {
            if (!v.is_number()) fail("bifurcate.alpha_grid: non-numeric entry");
            p.alpha_grid.push_back(v.get<double>());
        }
    }
    if (obj.contains("init")) {
        const auto& init = obj.at("init");
        check_keys(init, {"x", "y"}, "bifurcate.init");
        p.x = get_number_or(init, "x", p.x, "bifurcate.init");
        p.y = get_number_or(init, "y", p.y, "bifurcate.init");
    }
    if (p.y < p.x * p.x - 1e-9) fail("bifurcate.init: requires y >= x^2");
    p.depth = get_number_or(obj, "depth", p.depth, "bifurcate");
    if (!(p.depth >= 40.0)) fail("bifurcate.depth: must be at least 40");
}

void parse_output(const json& obj, RunConfig& config) {
    check_keys(obj, {"directory", "formats"}, "output");
    if (obj.contains("directory")) {
        if (!obj.at("directory").is_string()) fail("output.directory: expected a string");
        config.out_dir = obj.at("directory").get<std::string>();
    }
    if (obj.contains("formats")) {
        const auto& fmts = obj.at("formats");
        if (!fmts.is_array() || fmts.empty())
            fail("output.formats: expected a non-empty array");
        config.formats.clear();
        for (const auto& f : fmts) {
            if (!f.is_string() ||
                (f.get<std::string>() != "csv" && f.get<std::string>() != "svg"))
                fail("output.formats: entries must be \"csv\" or \"svg\"");
            config.formats.push_back(f.get<std::string>());
        }
    }
}

json effective_to_json(const RunConfig& config) {
    json doc;
    json model;
    if (config.kind == RunConfig::ModelKind::kPitchfork) {
        model["kind"] = "pitchfork";
        model["alpha"] = config.alpha;
        model["beta"] = config.beta;
    } else {
        model["kind"] = "linear";
        model["d"] = config.dimension;
        model["bound"] = config.coeffs->bound();
        json schedule = json::array();
        for (const auto& seg : config.coeffs->segments()) {
            json s;
            s["start"] = std::isinf(seg.start) ? json("-inf") : json(seg.start);
            s["A"] = matrix_to_json(seg.a);
            s["B"] = matrix_to_json(seg.b);
            s["C"] = matrix_to_json(seg.c);
            s["D"] = matrix_to_json(seg.d);
            schedule.push_back(s);
        }
        model["schedule"] = schedule;
    }
    doc["model"] = model;

    doc["spectrum"] = {{"method", config.spectrum.method},
                       {"horizon", config.spectrum.horizon},
                       {"samples", config.spectrum.samples},
                       {"cluster_width", config.spectrum.cluster_width}};
    doc["simulate"] = {{"t0", config.simulate.t0},
                       {"t1", config.simulate.t1},
                       {"dt", config.simulate.dt},
                       {"particles", config.simulate.particles},
                       {"output_every", config.simulate.output_every},
                       {"init",
                        {{"mean", config.simulate.mean},
                         {"second_moment", matrix_to_json(config.simulate.second_moment)}}}};
    doc["pullback"] = {{"end_time", config.pullback.end_time},
                       {"start_times", config.pullback.start_times},
                       {"init", {{"x", config.pullback.x}, {"y", config.pullback.y}}}};
    doc["bifurcate"] = {{"alpha_grid", config.bifurcate.alpha_grid},
                        {"init", {{"x", config.bifurcate.x}, {"y", config.bifurcate.y}}},
                        {"depth", config.bifurcate.depth}};
    doc["seed"] = config.seed;
    doc["output"] = {{"directory", config.out_dir}, {"formats", config.formats}};
    return doc;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void refresh_hash(RunConfig& config) {
    json doc = effective_to_json(config);
    config.effective_json = doc.dump();
    // the hash covers the inputs of the computation; where the results are
    // written is not one of them
    doc.erase("output");
    const std::string hashed = doc.dump();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(hashed)));
    config.config_hash = buf;
}

RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // translate the byte offset into line/column
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        fail("parse error at line " + std::to_string(line) + ", column " +
             std::to_string(col) + ": " + e.what());
    }
    if (!doc.is_object()) fail("top level: expected a JSON object");
    check_keys(doc, {"model", "spectrum", "simulate", "pullback", "bifurcate", "seed",
                     "output"},
               "top level");
    if (!doc.contains("model")) fail("model: required");

    RunConfig config;
    parse_model(doc.at("model"), config);
    if (doc.contains("spectrum")) parse_spectrum(doc.at("spectrum"), config);
    parse_simulate(doc.contains("simulate") ? doc.at("simulate") : json::object(), config);
    if (doc.contains("pullback")) parse_pullback(doc.at("pullback"), config);
    if (doc.contains("bifurcate")) parse_bifurcate(doc.at("bifurcate"), config);
    if (doc.contains("seed")) {
        const auto& s = doc.at("seed");
        if (!s.is_number_integer() || s.get<long long>() < 0)
            fail("seed: expected a non-negative integer");
        config.seed = s.get<std::uint64_t>();
    }
    if (doc.contains("output")) parse_output(doc.at("output"), config);

    refresh_hash(config);
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace msrds::cli
