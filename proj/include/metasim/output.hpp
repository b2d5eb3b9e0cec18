#pragma once

// Flat-file artifacts: timeseries and histogram CSVs, metrics JSON.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <system_error>

#include "json.hpp"

#include "metasim/errors.hpp"
#include "metasim/observables.hpp"

namespace metasim {

/// Shortest decimal form that round-trips to the same double.
inline std::string format_number(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, res.ptr};
}

inline constexpr const char* kTimeseriesHeader = "t,M,N,I,Vp,born_cum,exited_cum";
inline constexpr const char* kHistogramHeader = "bin_lo,bin_hi,mass";

inline void write_timeseries_csv(std::ostream& os, const Trajectory& traj)
{
    os << kTimeseriesHeader << '\n';
    for (std::size_t i = 0; i < traj.size(); ++i) {
        os << format_number(traj.times[i]) << ',' << format_number(traj.M[i]) << ',' << format_number(traj.N[i])
           << ',' << format_number(traj.I[i]) << ',' << format_number(traj.Vp[i]) << ','
           << format_number(traj.born_cum[i]) << ',' << format_number(traj.exited_cum[i]) << '\n';
    }
}

inline void write_histogram_csv(std::ostream& os, const VolumeHistogram& h)
{
    os << kHistogramHeader << '\n';
    for (std::size_t i = 0; i < h.mass.size(); ++i) {
        os << format_number(h.bin_edges[i]) << ',' << format_number(h.bin_edges[i + 1]) << ','
           << format_number(h.mass[i]) << '\n';
    }
}

/// Metrics document: peaks:[{t,M}], mean_period, amplitude,
/// min_after_transient, largest_volume, and lambda0 for linear runs.
inline nlohmann::json metrics_json(const OscillationMetrics& m, std::optional<double> largest_volume,
                                   std::optional<double> lambda0)
{
    nlohmann::json j;
    j["peaks"] = nlohmann::json::array();
    for (std::size_t i = 0; i < m.peak_times.size(); ++i) {
        j["peaks"].push_back({{"t", m.peak_times[i]}, {"M", m.peak_values[i]}});
    }
    j["mean_period"] = m.mean_period ? nlohmann::json(*m.mean_period) : nlohmann::json(nullptr);
    j["amplitude"] = m.amplitude;
    j["min_after_transient"] = m.min_after_transient;
    j["largest_volume"] = largest_volume ? nlohmann::json(*largest_volume) : nlohmann::json(nullptr);
    if (lambda0) {
        j["lambda0"] = *lambda0;
    }
    return j;
}

/// Opens a file for writing or throws IoError.
inline std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    return os;
}

inline void finish_output(std::ofstream& os, const std::filesystem::path& path)
{
    os.flush();
    if (!os) {
        throw IoError("write failed: " + path.string());
    }
}

inline void ensure_directory(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create directory " + dir.string() + (ec ? ": " + ec.message() : ""));
    }
}

} // namespace metasim
