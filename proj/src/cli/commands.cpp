#include "msrds/cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <thread>

#include "CLI11.hpp"
#include "msrds/cli/emit.hpp"
#include "msrds/errors.hpp"
#include "msrds/mc_sim.hpp"
#include "msrds/pitchfork.hpp"
#include "msrds/spectrum.hpp"

namespace msrds::cli {

namespace {

using moment_dynamics::CoefficientSystem;
using moment_dynamics::MomentState;
using numerics::Matrix;
using numerics::Vector;

constexpr double kMethodEigen = 0.0;
constexpr double kMethodFiniteTime = 1.0;
constexpr double kMethodAnalytic = 2.0;

double verdict_code(spectrum::ConeVerdict v) {
    switch (v) {
        case spectrum::ConeVerdict::kRetained: return 0.0;
        case spectrum::ConeVerdict::kRejected: return 1.0;
        default: return 2.0;
    }
}

double class_code(pitchfork::BranchClass c) {
    switch (c) {
        case pitchfork::BranchClass::kTrivial: return 0.0;
        case pitchfork::BranchClass::kPositiveBranch: return 1.0;
        case pitchfork::BranchClass::kNegativeBranch: return 2.0;
        default: return 3.0;
    }
}

std::vector<std::pair<std::string, std::string>> provenance(const std::string& command,
                                                            const RunConfig& config) {
    return {{"tool", kToolVersion},
            {"command", command},
            {"config-hash", config.config_hash},
            {"seed", std::to_string(config.seed)}};
}

CoefficientSystem spectrum_system(const RunConfig& config) {
    if (config.kind == RunConfig::ModelKind::kLinear) return *config.coeffs;
    // linearization of the pitchfork model along the trivial solution
    return CoefficientSystem::autonomous(Matrix{{config.alpha}}, Matrix{{config.beta}},
                                         Matrix{{1.0}}, Matrix{{0.0}});
}

void append_estimate(ResultTable& table, const spectrum::SpectrumEstimate& est,
                     double method_code, double gamma) {
    for (const auto& iv : est.intervals) {
        std::size_t mult = 0;
        for (const auto& cand : est.details)
            if (cand.verdict == spectrum::ConeVerdict::kRetained &&
                cand.rate_hi >= iv.lower - 1e-12 && cand.rate_lo <= iv.upper + 1e-12)
                mult += cand.multiplicity;
        table.add_row({iv.lower, iv.upper, method_code, static_cast<double>(mult), 0.0,
                       gamma});
    }
    // inconclusive candidates are flagged rather than silently dropped
    for (const auto& cand : est.details)
        if (cand.verdict == spectrum::ConeVerdict::kInconclusive)
            table.add_row({cand.rate_lo, cand.rate_hi, method_code,
                           static_cast<double>(cand.multiplicity),
                           verdict_code(cand.verdict), gamma});
}

}  // namespace

ResultTable cmd_spectrum(const RunConfig& config) {
    ResultTable table;
    table.columns = {"lower", "upper", "method", "multiplicity", "admissibility_verdict",
                     "gamma"};
    table.provenance = provenance("spectrum", config);

    const CoefficientSystem system = spectrum_system(config);
    const double gamma = spectrum::gamma_bound(system);
    const auto& p = config.spectrum;

    if (config.kind == RunConfig::ModelKind::kPitchfork) {
        const auto analytic =
            pitchfork::analytic_spectrum({config.alpha, config.beta});
        append_estimate(table, analytic, kMethodAnalytic, analytic.gamma_bound);
    }

    const bool want_eigen = p.method != "finite-time";
    const bool want_finite =
        p.method != "eigen-lift" || !system.is_autonomous();
    if (want_eigen) {
        if (!system.is_autonomous()) {
            if (p.method == "eigen-lift")
                throw ConfigError(
                    "spectrum.method: eigen-lift requires an autonomous model; "
                    "time-dependent schedules only support finite-time");
        } else {
            append_estimate(table, spectrum::autonomous_spectrum(system), kMethodEigen,
                            gamma);
        }
    }
    if (want_finite && p.method != "eigen-lift") {
        spectrum::FiniteTimeOptions opt;
        opt.horizon = p.horizon;
        opt.n_samples = p.samples;
        opt.cluster_width = p.cluster_width;
        opt.seed = config.seed;
        append_estimate(table, spectrum::finite_time_estimate(system, opt),
                        kMethodFiniteTime, gamma);
    }
    return table;
}

ResultTable cmd_simulate(const RunConfig& config) {
    const auto& p = config.simulate;
    const mc_sim::ModelSpec model =
        config.kind == RunConfig::ModelKind::kLinear
            ? mc_sim::ModelSpec::linear(*config.coeffs)
            : mc_sim::ModelSpec::pitchfork(config.alpha, config.beta);
    const std::size_t d = config.dimension;
    const MomentState init = moment_dynamics::make_moment_state(p.mean, p.second_moment);

    ResultTable table;
    table.provenance = provenance("simulate", config);
    const auto pairs = moment_dynamics::index_map(d);
    table.columns.push_back("t");
    auto push_cols = [&](const std::string& prefix, bool matrix) {
        if (!matrix) {
            for (std::size_t i = 0; i < d; ++i)
                table.columns.push_back(prefix + "_" + std::to_string(i + 1));
        } else {
            for (const auto& [i, j] : pairs)
                table.columns.push_back(prefix + "_" + std::to_string(i + 1) +
                                        std::to_string(j + 1));
        }
    };
    push_cols("mean", false);
    push_cols("secmom", true);
    push_cols("se_mean", false);
    push_cols("se_secmom", true);
    push_cols("ode_mean", false);
    push_cols("ode_secmom", true);
    push_cols("z_mean", false);
    push_cols("z_secmom", true);

    mc_sim::SimOptions opt;
    opt.threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());

    MomentState ode = init;
    double ode_time = p.t0;
    const auto emit_row = [&](double t, const mc_sim::Ensemble& ens) {
        const auto est = mc_sim::estimate_moments(ens, opt);
        ode = mc_sim::moment_reference(model, ode, ode_time, t);
        ode_time = t;
        std::vector<double> row{t};
        for (std::size_t i = 0; i < d; ++i) row.push_back(est.state.m[i]);
        for (const auto& [i, j] : pairs) row.push_back(est.state.s(i, j));
        for (std::size_t i = 0; i < d; ++i) row.push_back(est.se_mean[i]);
        for (const auto& [i, j] : pairs) row.push_back(est.se_secmom(i, j));
        for (std::size_t i = 0; i < d; ++i) row.push_back(ode.m[i]);
        for (const auto& [i, j] : pairs) row.push_back(ode.s(i, j));
        for (std::size_t i = 0; i < d; ++i) {
            const double se = est.se_mean[i];
            const double diff = est.state.m[i] - ode.m[i];
            row.push_back(se == 0.0 ? (diff == 0.0 ? 0.0 : HUGE_VAL) : diff / se);
        }
        for (const auto& [i, j] : pairs) {
            const double se = est.se_secmom(i, j);
            const double diff = est.state.s(i, j) - ode.s(i, j);
            row.push_back(se == 0.0 ? (diff == 0.0 ? 0.0 : HUGE_VAL) : diff / se);
        }
        table.add_row(std::move(row));
    };

    const std::size_t n_steps =
        p.t1 == p.t0
            ? 0
            : static_cast<std::size_t>(std::ceil((p.t1 - p.t0) / p.dt - 1e-9));
    mc_sim::simulate_ensemble(
        model, init, p.t0, p.t1, p.dt, p.particles, config.seed,
        [&](std::size_t step, double t, const mc_sim::Ensemble& ens) {
            if (step == 0 || step == n_steps || step % p.output_every == 0)
                emit_row(t, ens);
        },
        opt);
    return table;
}

namespace {

void require_pitchfork_reduced(const RunConfig& config, const char* command) {
    if (config.kind != RunConfig::ModelKind::kPitchfork)
        throw ConfigError(std::string(command) + ": requires a pitchfork model");
    if (config.beta != 1.0)
        throw ConfigError(std::string(command) +
                          ": the reduced moment system is defined for beta = 1");
}

}  // namespace

ResultTable cmd_pullback(const RunConfig& config) {
    require_pitchfork_reduced(config, "pullback");
    const auto& p = config.pullback;
    const pitchfork::PitchforkParams params{config.alpha, 1.0};
    const pitchfork::ReducedState init{p.x, p.y};
    const auto run = pitchfork::pullback_run(params, init, p.end_time, p.start_times);

    ResultTable table;
    table.columns = {"s", "limit_x", "limit_y", "classification"};
    table.provenance = provenance("pullback", config);
    for (std::size_t k = 0; k < run.start_times.size(); ++k) {
        const auto& lim = run.limits[k];
        const auto cls = pitchfork::classify_limit(params, lim);
        table.add_row({run.start_times[k], lim.x, lim.y, class_code(cls)});
    }
    return table;
}

ResultTable cmd_bifurcate(const RunConfig& config) {
    require_pitchfork_reduced(config, "bifurcate");
    const auto& p = config.bifurcate;
    const auto sweep =
        pitchfork::bifurcation_sweep(p.alpha_grid, {p.x, p.y}, p.depth);

    ResultTable table;
    table.columns = {"alpha", "classification", "limit_x", "limit_y", "ms_norm"};
    table.provenance = provenance("bifurcate", config);
    for (const auto& point : sweep)
        table.add_row({point.alpha, class_code(point.classification), point.limit.x,
                       point.limit.y, point.ms_norm});
    return table;
}

namespace {

std::vector<SvgSeries> svg_series_for(const std::string& command,
                                      const ResultTable& table) {
    std::vector<SvgSeries> series;
    if (command == "spectrum") {
        // each interval as a horizontal segment at height = method code
        const std::size_t lo = table.column_index("lower");
        const std::size_t hi = table.column_index("upper");
        const std::size_t me = table.column_index("method");
        for (const auto& row : table.rows)
            series.push_back(SvgSeries{
                "interval", {{row[lo], row[me]}, {row[hi], row[me]}}});
    } else if (command == "simulate") {
        const std::size_t tc = table.column_index("t");
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            const auto& name = table.columns[c];
            if (name.rfind("mean_", 0) == 0 || name.rfind("secmom_", 0) == 0) {
                SvgSeries s{name, {}};
                for (const auto& row : table.rows) s.points.push_back({row[tc], row[c]});
                series.push_back(std::move(s));
            }
        }
    } else if (command == "pullback") {
        const std::size_t sc = table.column_index("s");
        for (const char* col : {"limit_x", "limit_y"}) {
            SvgSeries s{col, {}};
            const std::size_t c = table.column_index(col);
            for (const auto& row : table.rows) s.points.push_back({row[sc], row[c]});
            series.push_back(std::move(s));
        }
    } else if (command == "bifurcate") {
        // one polyline per branch present in the table
        const std::size_t ac = table.column_index("alpha");
        const std::size_t cc = table.column_index("classification");
        const std::size_t nc = table.column_index("ms_norm");
        std::map<int, SvgSeries> by_class;
        const char* names[] = {"trivial", "positive-branch", "negative-branch", "none"};
        for (const auto& row : table.rows) {
            const int code = static_cast<int>(row[cc]);
            auto& s = by_class[code];
            if (s.label.empty()) s.label = names[code & 3];
            s.points.push_back({row[ac], row[nc]});
        }
        for (auto& [code, s] : by_class) series.push_back(std::move(s));
    }
    return series;
}

const char* svg_axis_x(const std::string& command) {
    if (command == "spectrum") return "growth rate";
    if (command == "simulate") return "t";
    if (command == "pullback") return "start time s";
    return "alpha";
}

const char* svg_axis_y(const std::string& command) {
    if (command == "spectrum") return "method";
    if (command == "simulate") return "moment";
    if (command == "pullback") return "limit";
    return "ms-norm";
}

}  // namespace

std::vector<std::string> write_outputs(const std::string& command, const RunConfig& config,
                                       const ResultTable& table) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + config.out_dir);

    std::vector<std::string> written;
    for (const auto& format : config.formats) {
        const std::string path = (fs::path(config.out_dir) / (command + "." + format)).string();
        if (format == "csv") {
            emit_csv(table, path);
        } else {
            emit_svg(svg_series_for(command, table), svg_axis_x(command),
                     svg_axis_y(command), table.provenance, path);
        }
        written.push_back(path);
    }
    return written;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"mean-square dichotomy spectra and attractors of linear mean-field SDEs"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string format;
    std::uint64_t seed = 0;
    bool quiet = false;

    const char* names[] = {"spectrum", "simulate", "pullback", "bifurcate"};
    const char* descs[] = {"dichotomy-spectrum estimates",
                           "interacting-particle simulation with moment-ODE cross-check",
                           "pullback limits of the reduced moment system",
                           "attractor branch sweep over alpha"};
    std::map<std::string, CLI::App*> subs;
    for (int k = 0; k < 4; ++k) {
        CLI::App* sub = app.add_subcommand(names[k], descs[k]);
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (default from config)");
        sub->add_option("--format", format, "csv[,svg]");
        sub->add_option("--seed", seed, "seed override");
        sub->add_flag("--quiet", quiet, "suppress diagnostics");
        subs[names[k]] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    std::string command;
    for (const auto& [name, sub] : subs)
        if (sub->parsed()) command = name;

    try {
        RunConfig config = load_config(config_path);
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (!format.empty()) {
            config.formats.clear();
            std::size_t begin = 0;
            while (begin <= format.size()) {
                const auto comma = format.find(',', begin);
                const std::string f = format.substr(begin, comma - begin);
                if (f != "csv" && f != "svg")
                    throw ConfigError("--format: entries must be csv or svg");
                config.formats.push_back(f);
                if (comma == std::string::npos) break;
                begin = comma + 1;
            }
        }
        if (subs[command]->count("--seed")) config.seed = seed;
        refresh_hash(config);

        if (!quiet) std::cerr << "effective config: " << config.effective_json << "\n";

        ResultTable table;
        if (command == "spectrum")
            table = cmd_spectrum(config);
        else if (command == "simulate")
            table = cmd_simulate(config);
        else if (command == "pullback")
            table = cmd_pullback(config);
        else
            table = cmd_bifurcate(config);

        const auto written = write_outputs(command, config, table);
        if (!quiet)
            for (const auto& path : written) std::cerr << "wrote " << path << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace msrds::cli
