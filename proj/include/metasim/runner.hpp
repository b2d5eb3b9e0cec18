#pragma once

// Scenario and sweep execution with on-disk artifacts.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "metasim/errors.hpp"
#include "metasim/output.hpp"
#include "metasim/scenario.hpp"
#include "metasim/simulation.hpp"
#include "metasim/spectral.hpp"
#include "metasim/svg_plot.hpp"

namespace metasim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBlowup = 3;
inline constexpr int kExitIo = 4;

/// Maps an exception to the CLI exit status.
inline int exit_code_for(const std::exception& ex)
{
    if (dynamic_cast<const ConfigError*>(&ex) != nullptr) return kExitConfig;
    if (dynamic_cast<const IntegrationBlowupError*>(&ex) != nullptr) return kExitBlowup;
    if (dynamic_cast<const IoError*>(&ex) != nullptr) return kExitIo;
    return 1;
}

struct RunReport {
    SimulationResult result;
    OscillationMetrics metrics;
    std::optional<double> largest_volume; ///< max over post-transient samples
    std::optional<double> lambda0;        ///< linear model only
    double max_M = 0.0;                   ///< max over post-transient samples
    double max_conservation_residual = 0.0;
    std::filesystem::path directory;
};

/// Largest |born_cum - exited_cum - N| over the samples.
inline double max_conservation_residual(const Trajectory& traj)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        worst = std::max(worst, std::fabs(traj.born_cum[i] - traj.exited_cum[i] - traj.N[i]));
    }
    return worst;
}

/// Simulation plus derived metrics, no file output.
inline RunReport evaluate_scenario(const Scenario& sc)
{
    validate(sc.params);
    RunReport rep;
    SimulationOptions opts;
    opts.histogram_bins = sc.histogram_bins;
    rep.result = simulate(sc.params, sc.settings, sc.initial_cohorts, opts);
    const Trajectory& traj = rep.result.trajectory;

    const double transient = sc.transient_time();
    try {
        rep.metrics = oscillation_metrics(traj, transient);
    } catch (const DomainError& err) {
        throw ConfigError(err.what(), "/transient");
    }
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.times[i] < transient) {
            continue;
        }
        rep.max_M = std::max(rep.max_M, traj.M[i]);
        if (traj.largest_volume[i] > 0.0) {
            rep.largest_volume = std::max(rep.largest_volume.value_or(0.0), traj.largest_volume[i]);
        }
    }
    if (sc.params.e == 0.0 && sc.params.m > 0.0) {
        rep.lambda0 = malthus_exponent(sc.params).lambda0;
    }
    rep.max_conservation_residual = max_conservation_residual(traj);
    return rep;
}

namespace detail {

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j)
{
    auto os = open_output(path);
    os << j.dump(2) << '\n';
    finish_output(os, path);
}

inline void write_plots(const std::filesystem::path& dir, const Trajectory& traj, bool log_y)
{
    struct Series {
        const char* file;
        const char* label;
        const std::vector<double>* y;
    };
    const Series series[] = {{"M.svg", "M", &traj.M}, {"N.svg", "N", &traj.N}, {"I.svg", "I", &traj.I},
                             {"Vp.svg", "Vp", &traj.Vp}};
    PlotStyle style;
    style.log_y = log_y;
    for (const auto& s : series) {
        try {
            std::ofstream os(dir / s.file, std::ios::binary | std::ios::trunc);
            if (os) {
                write_line_plot(os, traj.times, *s.y, s.label + std::string("(t)"), s.label, style);
            }
        } catch (const std::exception&) {
            // plots never affect the exit status
        }
    }
}

inline nlohmann::json meta_json(const Scenario& sc, const RunReport* rep)
{
    nlohmann::json j;
    j["scenario"] = to_json(sc);
    j["transient"] = sc.transient_time();
    j["note"] = "t_end, dt, sample_every and the transient length are metasim defaults chosen for this tool, "
                "not values taken from an external source";
    if (rep != nullptr) {
        j["samples"] = rep->result.trajectory.size();
        j["final_cohorts"] = rep->result.final_state.cohorts.size();
        j["max_conservation_residual"] = rep->max_conservation_residual;
    }
    return j;
}

} // namespace detail

/// Runs one scenario and writes its artifacts into out_root/<name>/. On
/// integration blowup an error.json is written before the error propagates.
inline RunReport run_scenario(const Scenario& sc, const std::filesystem::path& out_root)
{
    const std::filesystem::path dir = out_root / sc.name;
    ensure_directory(dir);

    RunReport rep;
    try {
        rep = evaluate_scenario(sc);
    } catch (const IntegrationBlowupError& err) {
        nlohmann::json j;
        j["error"] = "integration_blowup";
        j["message"] = err.what();
        j["time"] = err.time();
        j["scenario"] = to_json(sc);
        detail::write_json_file(dir / "error.json", j);
        throw;
    }
    rep.directory = dir;
    const Trajectory& traj = rep.result.trajectory;

    if (sc.outputs.timeseries) {
        const auto path = dir / "timeseries.csv";
        auto os = open_output(path);
        write_timeseries_csv(os, traj);
        finish_output(os, path);
    }
    if (sc.outputs.histogram) {
        const auto path = dir / "histogram.csv";
        auto os = open_output(path);
        write_histogram_csv(os, traj.final_histogram);
        finish_output(os, path);
    }
    if (sc.outputs.metrics) {
        detail::write_json_file(dir / "metrics.json", metrics_json(rep.metrics, rep.largest_volume, rep.lambda0));
    }
    detail::write_json_file(dir / "meta.json", detail::meta_json(sc, &rep));
    if (sc.outputs.plots) {
        detail::write_plots(dir, traj, sc.outputs.log_scale);
    }
    return rep;
}

struct SweepRow {
    double value = 0.0;
    std::optional<double> lambda0;
    std::optional<double> mean_period;
    std::optional<double> amplitude;
    std::optional<double> min_after_transient;
    std::optional<double> max_M;
    std::optional<double> largest_volume;
    std::string error;
    int exit_code = kExitOk;

    [[nodiscard]] bool ok() const noexcept { return error.empty(); }
};

struct SweepReport {
    std::vector<SweepRow> rows;
    std::filesystem::path directory;

    [[nodiscard]] bool all_failed() const
    {
        return std::none_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok(); });
    }
};

inline constexpr const char* kSweepSummaryHeader =
    "value,lambda0,mean_period,amplitude,min_after_transient,max_M,largest_volume,error";

/// Name of the per-run directory for one sweep value.
inline std::string sweep_run_name(const std::string& axis, double value)
{
    return axis + "=" + format_number(value);
}

namespace detail {

inline std::string csv_optional(const std::optional<double>& v)
{
    return v ? format_number(*v) : std::string();
}

inline std::string csv_quote(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += (c == '\n' || c == '\r') ? ' ' : c;
    }
    return out + "\"";
}

} // namespace detail

inline void write_sweep_summary(std::ostream& os, const SweepReport& rep)
{
    os << kSweepSummaryHeader << '\n';
    for (const auto& r : rep.rows) {
        os << format_number(r.value) << ',' << detail::csv_optional(r.lambda0) << ','
           << detail::csv_optional(r.mean_period) << ',' << detail::csv_optional(r.amplitude) << ','
           << detail::csv_optional(r.min_after_transient) << ',' << detail::csv_optional(r.max_M) << ','
           << detail::csv_optional(r.largest_volume) << ',' << detail::csv_quote(r.error) << '\n';
    }
}

/// Runs every sweep value with at most `jobs` (default: the sweep file's
/// parallelism) concurrent simulations. Per-run artifacts go to
/// out_root/<sweep name>/<axis>=<value>/, the summary to
/// out_root/<sweep name>/summary.csv once all runs have joined.
inline SweepReport run_sweep(const SweepSpec& sw, const std::filesystem::path& out_root,
                             std::optional<std::size_t> jobs = std::nullopt)
{
    SweepReport rep;
    rep.directory = out_root / sw.name;
    ensure_directory(rep.directory);
    rep.rows.resize(sw.values.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < sw.values.size(); i = next.fetch_add(1)) {
            SweepRow& row = rep.rows[i];
            row.value = sw.values[i];
            try {
                Scenario sc = sw.base;
                set_parameter(sc, sw.axis, sw.values[i]);
                sc.name = sweep_run_name(sw.axis, sw.values[i]);
                const RunReport run = run_scenario(sc, rep.directory);
                row.lambda0 = run.lambda0;
                row.mean_period = run.metrics.mean_period;
                row.amplitude = run.metrics.amplitude;
                row.min_after_transient = run.metrics.min_after_transient;
                row.max_M = run.max_M;
                row.largest_volume = run.largest_volume;
            } catch (const std::exception& ex) {
                row.error = ex.what();
                row.exit_code = exit_code_for(ex);
                if (row.error.empty()) {
                    row.error = "unknown error";
                }
            }
        }
    };

    const std::size_t n_threads = std::clamp<std::size_t>(jobs.value_or(sw.parallelism), 1, sw.values.size());
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) {
            pool.emplace_back(worker);
        }
    }

    const auto path = rep.directory / "summary.csv";
    auto os = open_output(path);
    write_sweep_summary(os, rep);
    finish_output(os, path);
    return rep;
}

} // namespace metasim
