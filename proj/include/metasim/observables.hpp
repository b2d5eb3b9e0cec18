#pragma once

// Macroscopic observables: time series of burden, count, inhibitor and
// primary volume, end-state volume histograms, and oscillation metrics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "metasim/cohort_engine.hpp"
#include "metasim/errors.hpp"
#include "metasim/exact_sum.hpp"

namespace metasim {

struct ObservationRow {
    double t = 0.0;
    double M = 0.0;  ///< total metastatic burden
    double N = 0.0;  ///< number of metastases
    double I = 0.0;
    double Vp = 0.0;
    double born = 0.0;
    double exited = 0.0;
    std::optional<double> largest_volume; ///< absent without live cohorts
};

namespace detail {

struct BoundarySlab {
    double birth_time;
    double span;
    double weight;
    double exit_time;
    double volume;
    bool live;
};

/// Cohorts about to cross V = V0 and those that just did. A spawned cohort
/// stands for the mass born over its birth span, and that mass leaves over
/// an exit window of length span * |d t_exit / d t_birth| centred on the
/// cohort's own crossing; the slope comes from neighbouring crossings.
inline std::vector<BoundarySlab> boundary_slabs(const SystemState& s)
{
    std::vector<BoundarySlab> slabs;
    const double V0 = s.exit_volume;
    for (const auto& r : s.recent_exits) {
        slabs.push_back({r.birth_time, r.birth_span, r.weight, r.exit_time, V0, false});
    }
    for (const auto& c : s.cohorts) {
        if (!(c.birth_span > 0.0) || !(c.state.K < c.state.V)) {
            continue;
        }
        const double speed = c.state.V * std::log(c.state.V / c.state.K);
        const double eta = (c.state.V - V0) / speed;
        if (eta <= 2.0 * Stepper::kExitMemory * c.birth_span) {
            slabs.push_back({c.birth_time, c.birth_span, c.weight, s.t + eta, c.state.V, true});
        }
    }
    std::sort(slabs.begin(), slabs.end(),
              [](const BoundarySlab& a, const BoundarySlab& b) { return a.birth_time < b.birth_time; });
    return slabs;
}

/// Fraction of slab j already gone at time t. The exit window is the birth
/// span scaled by |d t_exit / d t_birth|, taken from the neighbouring slabs.
inline double exited_fraction(const std::vector<BoundarySlab>& slabs, std::size_t j, double t)
{
    const std::size_t lo = j > 0 ? j - 1 : j;
    const std::size_t hi = j + 1 < slabs.size() ? j + 1 : j;
    double slope = 1.0;
    if (hi != lo && slabs[hi].birth_time > slabs[lo].birth_time) {
        slope = std::fabs(slabs[hi].exit_time - slabs[lo].exit_time) / (slabs[hi].birth_time - slabs[lo].birth_time);
    }
    const double width = slabs[j].span * std::min(slope, 2.0 * Stepper::kExitMemory);
    if (!(width > 0.0)) {
        return slabs[j].live ? 0.0 : 1.0;
    }
    return std::clamp((t - slabs[j].exit_time) / width + 0.5, 0.0, 1.0);
}

} // namespace detail

/// Macroscopic observables at the state's time. Mass near the exit boundary
/// is counted by the fraction of its slab still inside the domain, which
/// keeps M, N and exited_cum continuous in t; born = exited + N still holds.
inline ObservationRow sample(const SystemState& s)
{
    ObservationRow row;
    row.t = s.t;
    row.I = s.I;
    row.Vp = s.primary.V;
    row.born = s.born_count();

    ExactSum burden;
    ExactSum count;
    ExactSum exited = s.exited;
    for (const auto& c : s.cohorts) {
        burden.add(c.weight * c.state.V);
        count.add(c.weight);
        row.largest_volume = std::max(row.largest_volume.value_or(0.0), c.state.V);
    }
    const auto slabs = detail::boundary_slabs(s);
    for (std::size_t j = 0; j < slabs.size(); ++j) {
        const double f = detail::exited_fraction(slabs, j, s.t);
        const double moved = slabs[j].live ? -f * slabs[j].weight : (1.0 - f) * slabs[j].weight;
        count.add(moved);
        exited.add(-moved);
        burden.add(moved * slabs[j].volume);
    }
    row.M = burden.value();
    row.N = count.value();
    row.exited = exited.value();
    return row;
}

struct VolumeHistogram {
    std::vector<double> bin_edges; ///< n_bins + 1 log-spaced edges
    std::vector<double> mass;      ///< weight per bin
    std::optional<double> largest_volume;

    [[nodiscard]] double total() const
    {
        ExactSum t;
        for (double m : mass) {
            t.add(m);
        }
        return t.value();
    }
};

/// Bins live cohort weight by volume on log-spaced edges over [V0, 1]
/// (over [V0, 10 V0] when V0 >= 1). Volumes past the last edge land in the
/// last bin.
inline VolumeHistogram histogram(const SystemState& s, double V0, std::size_t n_bins)
{
    if (n_bins < 1) {
        throw DomainError("histogram: n_bins must be >= 1");
    }
    if (!(V0 > 0.0)) {
        throw DomainError("histogram: V0 must be > 0");
    }
    const double upper = V0 < 1.0 ? 1.0 : 10.0 * V0;
    const double log_lo = std::log(V0);
    const double log_span = std::log(upper) - log_lo;

    VolumeHistogram h;
    h.bin_edges.resize(n_bins + 1);
    for (std::size_t i = 0; i <= n_bins; ++i) {
        h.bin_edges[i] = std::exp(log_lo + log_span * static_cast<double>(i) / static_cast<double>(n_bins));
    }
    h.bin_edges.front() = V0;
    h.bin_edges.back() = upper;

    std::vector<ExactSum> acc(n_bins);
    for (const auto& c : s.cohorts) {
        const double v = c.state.V;
        auto it = std::upper_bound(h.bin_edges.begin(), h.bin_edges.end(), v);
        std::size_t bin = it == h.bin_edges.begin() ? 0 : static_cast<std::size_t>(it - h.bin_edges.begin()) - 1;
        bin = std::min(bin, n_bins - 1);
        acc[bin].add(c.weight);
        h.largest_volume = std::max(h.largest_volume.value_or(0.0), v);
    }
    h.mass.resize(n_bins);
    for (std::size_t i = 0; i < n_bins; ++i) {
        h.mass[i] = acc[i].value();
    }
    return h;
}

/// Total-variation distance between the normalized mass profiles of two
/// histograms on the same edges.
inline double total_variation(const VolumeHistogram& a, const VolumeHistogram& b)
{
    if (a.mass.size() != b.mass.size()) {
        throw DomainError("total_variation: histograms have different bin counts");
    }
    const double ta = a.total();
    const double tb = b.total();
    if (!(ta > 0.0) || !(tb > 0.0)) {
        throw DomainError("total_variation: empty histogram");
    }
    double d = 0.0;
    for (std::size_t i = 0; i < a.mass.size(); ++i) {
        d += std::fabs(a.mass[i] / ta - b.mass[i] / tb);
    }
    return 0.5 * d;
}

/// Sampled macroscopic quantities. `largest_volume` holds 0 at instants
/// without live cohorts (live volumes are always >= V0 > 0).
struct Trajectory {
    std::vector<double> times;
    std::vector<double> M;
    std::vector<double> N;
    std::vector<double> I;
    std::vector<double> Vp;
    std::vector<double> born_cum;
    std::vector<double> exited_cum;
    std::vector<double> largest_volume;
    VolumeHistogram final_histogram;

    void append(const ObservationRow& row)
    {
        times.push_back(row.t);
        M.push_back(row.M);
        N.push_back(row.N);
        I.push_back(row.I);
        Vp.push_back(row.Vp);
        born_cum.push_back(row.born);
        exited_cum.push_back(row.exited);
        largest_volume.push_back(row.largest_volume.value_or(0.0));
    }

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

struct OscillationMetrics {
    std::vector<double> peak_times;
    std::vector<double> peak_values;
    std::optional<double> mean_period; ///< needs two peaks
    double amplitude = 0.0;            ///< mean drop from a peak to the following trough
    double min_after_transient = 0.0;

    [[nodiscard]] bool oscillatory() const noexcept { return peak_times.size() >= 2; }
};

/// Peak analysis of a sampled signal on t >= transient.
///
/// A peak is a strict local maximum whose topographic prominence (height
/// above the higher of the two lowest points separating it from taller
/// samples on either side) is at least `prominence_fraction` of the window
/// maximum. Amplitude averages the drop from each peak to the minimum before
/// the next peak; a lone peak is measured against the rest of the window.
inline OscillationMetrics oscillation_metrics(std::span<const double> times, std::span<const double> values,
                                              double transient, double prominence_fraction = 0.01)
{
    if (times.size() != values.size()) {
        throw DomainError("oscillation_metrics: series lengths differ");
    }
    const auto first = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), transient) - times.begin());
    const std::size_t count = times.size() - first;
    if (count < 3) {
        throw DomainError("oscillation_metrics: fewer than 3 samples after the transient");
    }
    const auto t = times.subspan(first);
    const auto y = values.subspan(first);

    OscillationMetrics out;
    const double y_max = *std::max_element(y.begin(), y.end());
    out.min_after_transient = *std::min_element(y.begin(), y.end());
    const double threshold = prominence_fraction * std::fabs(y_max);

    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < count; ++i) {
        if (!(y[i] > y[i - 1] && y[i] > y[i + 1])) {
            continue;
        }
        double left_min = y[i];
        for (std::size_t j = i; j-- > 0;) {
            if (y[j] > y[i]) {
                break;
            }
            left_min = std::min(left_min, y[j]);
        }
        double right_min = y[i];
        for (std::size_t j = i + 1; j < count; ++j) {
            if (y[j] > y[i]) {
                break;
            }
            right_min = std::min(right_min, y[j]);
        }
        const double prominence = y[i] - std::max(left_min, right_min);
        if (prominence > 0.0 && prominence >= threshold) {
            peaks.push_back(i);
        }
    }

    for (std::size_t idx : peaks) {
        out.peak_times.push_back(t[idx]);
        out.peak_values.push_back(y[idx]);
    }
    if (peaks.size() >= 2) {
        out.mean_period = (out.peak_times.back() - out.peak_times.front()) / static_cast<double>(peaks.size() - 1);
    }
    const auto trough_after = [&](std::size_t from, std::size_t to) {
        return *std::min_element(y.begin() + static_cast<std::ptrdiff_t>(from), y.begin() + static_cast<std::ptrdiff_t>(to));
    };
    if (peaks.size() == 1) {
        out.amplitude = y[peaks[0]] - trough_after(peaks[0], count);
    } else if (peaks.size() >= 2) {
        double total = 0.0;
        for (std::size_t p = 0; p + 1 < peaks.size(); ++p) {
            total += y[peaks[p]] - trough_after(peaks[p], peaks[p + 1]);
        }
        out.amplitude = total / static_cast<double>(peaks.size() - 1);
    }
    return out;
}

inline OscillationMetrics oscillation_metrics(const Trajectory& traj, double transient,
                                              double prominence_fraction = 0.01)
{
    return oscillation_metrics(traj.times, traj.M, transient, prominence_fraction);
}

} // namespace metasim
