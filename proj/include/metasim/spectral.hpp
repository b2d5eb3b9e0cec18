#pragma once

// Linear-case (no systemic inhibition) spectral analysis: the Malthus
// exponent lambda0 solving
//
//   integral_0^inf beta(X_tau(V0, K0)) exp(-lambda0 tau) dtau = 1
//
// where X is the flow of the uninhibited growth field, and a least-squares
// growth-rate fit used to cross-check simulations against it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "metasim/errors.hpp"
#include "metasim/model.hpp"
#include "metasim/rk4.hpp"

namespace metasim {

struct SpectralResult {
    double lambda0 = 0.0;
    double tau_max = 0.0;
    std::size_t quadrature_nodes = 0;
    double residual = 0.0; ///< |F(lambda0)|
};

struct SpectralOptions {
    double tau_max = 50.0;
    double grid_step = 1e-3; ///< upper bound on the flow grid spacing
    double tolerance = 1e-10;
};

/// Flow of the growth field with I = 0 from the birth state, cached on a
/// fine grid by the same RK4 stepper as the cohort solver.
///
/// The grid is split into segments at every time the volume crosses the
/// emission threshold, so the emission rate is smooth inside each segment.
/// Every segment holds 2^j uniform intervals to allow Romberg refinement.
class CharacteristicFlow {
public:
    struct Segment {
        double tau_begin = 0.0;
        double h = 0.0;
        std::vector<TumorState> nodes;
    };

    CharacteristicFlow(const ModelParams& p, double tau_max, double grid_step = 1e-3) : p_(p), tau_max_(tau_max)
    {
        validate(p_);
        if (!(tau_max > 0.0) || !(grid_step > 0.0)) {
            throw DomainError("CharacteristicFlow: tau_max and grid_step must be > 0");
        }
        std::vector<double> breaks{0.0};
        for (double tc : locate_threshold_crossings(grid_step)) {
            breaks.push_back(tc);
        }
        breaks.push_back(tau_max_);

        TumorState x = birth_state(p_);
        for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
            const double len = breaks[s + 1] - breaks[s];
            std::size_t intervals = 1;
            while (static_cast<double>(intervals) * grid_step < len) {
                intervals *= 2;
            }
            Segment seg;
            seg.tau_begin = breaks[s];
            seg.h = len / static_cast<double>(intervals);
            seg.nodes.reserve(intervals + 1);
            seg.nodes.push_back(x);
            for (std::size_t i = 0; i < intervals; ++i) {
                x = advance(x, seg.h);
                seg.nodes.push_back(x);
            }
            segments_.push_back(std::move(seg));
        }
    }

    [[nodiscard]] double tau_max() const noexcept { return tau_max_; }
    [[nodiscard]] const std::vector<Segment>& segments() const noexcept { return segments_; }

    [[nodiscard]] std::size_t node_count() const noexcept
    {
        std::size_t n = 0;
        for (const auto& s : segments_) {
            n += s.nodes.size();
        }
        return n;
    }

    /// State at tau. Inside the grid: cubic Hermite interpolation using the
    /// field at the bracketing nodes. Past tau_max: integrated onwards.
    [[nodiscard]] TumorState at(double tau) const
    {
        if (!(tau >= 0.0)) {
            throw DomainError("CharacteristicFlow::at: tau must be >= 0");
        }
        if (tau >= tau_max_) {
            TumorState x = segments_.back().nodes.back();
            double remaining = tau - tau_max_;
            const double h = segments_.back().h;
            while (remaining > 0.0) {
                const double step = std::min(h, remaining);
                x = advance(x, step);
                remaining -= step;
            }
            return x;
        }
        auto seg = std::upper_bound(segments_.begin(), segments_.end(), tau,
                                    [](double t, const Segment& s) { return t < s.tau_begin; });
        const Segment& s = *std::prev(seg);
        const double local = (tau - s.tau_begin) / s.h;
        auto i = static_cast<std::size_t>(local);
        i = std::min(i, s.nodes.size() - 2);
        const double u = local - static_cast<double>(i);
        return hermite(s.nodes[i], s.nodes[i + 1], s.h, u);
    }

    /// Emission rate along the flow at every node of a segment.
    [[nodiscard]] std::vector<double> emission_at_nodes(const Segment& s) const
    {
        std::vector<double> out;
        out.reserve(s.nodes.size());
        // Segment interiors never straddle the threshold; use the midpoint
        // side so end nodes sitting exactly on Vm are classified consistently.
        const TumorState mid = s.nodes[s.nodes.size() / 2];
        const bool emitting = (s.nodes.size() > 2 ? mid.V : 0.5 * (s.nodes.front().V + s.nodes.back().V)) >= p_.Vm;
        for (const auto& x : s.nodes) {
            out.push_back(emitting ? p_.m * std::pow(x.V, p_.alpha) : 0.0);
        }
        return out;
    }

private:
    using Pair = std::array<double, 2>;

    [[nodiscard]] GrowthRate field(const TumorState& x) const { return detail::velocity(x.V, x.K, 0.0, p_.b, 0.0); }

    [[nodiscard]] TumorState advance(TumorState x, double h) const
    {
        Pair y{x.V, x.K};
        auto system = [this](const Pair& s, Pair& ds, double, int) {
            const GrowthRate g = field({s[0], s[1]});
            ds = {g.dV, g.dK};
        };
        Rk4<Pair> stepper;
        stepper.do_step(system, y, 0.0, h);
        return {y[0], y[1]};
    }

    [[nodiscard]] TumorState hermite(const TumorState& a, const TumorState& b, double h, double u) const
    {
        const GrowthRate fa = field(a);
        const GrowthRate fb = field(b);
        const double u2 = u * u;
        const double u3 = u2 * u;
        const double h00 = 2 * u3 - 3 * u2 + 1;
        const double h10 = u3 - 2 * u2 + u;
        const double h01 = -2 * u3 + 3 * u2;
        const double h11 = u3 - u2;
        return {h00 * a.V + h10 * h * fa.dV + h01 * b.V + h11 * h * fb.dV,
                h00 * a.K + h10 * h * fa.dK + h01 * b.K + h11 * h * fb.dK};
    }

    // Coarse pass: every tau where V - Vm changes sign, refined by bisection
    // on the Hermite interpolant of the bracketing step.
    [[nodiscard]] std::vector<double> locate_threshold_crossings(double h) const
    {
        std::vector<double> out;
        TumorState x = birth_state(p_);
        const auto steps = static_cast<std::size_t>(std::ceil(tau_max_ / h));
        const double step = tau_max_ / static_cast<double>(steps);
        for (std::size_t i = 0; i < steps; ++i) {
            const TumorState next = advance(x, step);
            const bool before = x.V >= p_.Vm;
            const bool after = next.V >= p_.Vm;
            if (before != after) {
                double lo = 0.0;
                double hi = 1.0;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    ((hermite(x, next, step, mid).V >= p_.Vm) == before ? lo : hi) = mid;
                }
                const double tc = (static_cast<double>(i) + 0.5 * (lo + hi)) * step;
                if (tc > 0.0 && tc < tau_max_) {
                    out.push_back(tc);
                }
            }
            x = next;
        }
        return out;
    }

    ModelParams p_;
    double tau_max_;
    std::vector<Segment> segments_;
};

/// Flow of the uninhibited field at tau from the birth state.
inline TumorState characteristic_flow(double tau, const ModelParams& p)
{
    CharacteristicFlow flow(p, std::max(tau, 1.0));
    return flow.at(tau);
}

namespace detail {

/// Romberg-refined trapezoid of f(tau) = g_i exp(-lambda tau) over a segment
/// with 2^j uniform intervals. Refinement stops early once successive
/// extrapolated estimates agree to `tol` (relative).
inline double romberg_segment(std::span<const double> g, double tau_begin, double h, double lambda, double tol)
{
    const std::size_t intervals = g.size() - 1;
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        f[i] = g[i] * std::exp(-lambda * (tau_begin + h * static_cast<double>(i)));
    }
    std::size_t stride = intervals;
    std::vector<double> prev_row;
    double trap = 0.5 * (f.front() + f.back()) * h * static_cast<double>(intervals);
    prev_row.push_back(trap);
    double best = trap;
    while (stride > 1) {
        const std::size_t half = stride / 2;
        double mid_sum = 0.0;
        for (std::size_t i = half; i < intervals; i += stride) {
            mid_sum += f[i];
        }
        trap = 0.5 * trap + mid_sum * h * static_cast<double>(half);
        std::vector<double> row{trap};
        double factor = 4.0;
        for (std::size_t j = 0; j < prev_row.size(); ++j) {
            row.push_back(row[j] + (row[j] - prev_row[j]) / (factor - 1.0));
            factor *= 4.0;
        }
        const double estimate = row.back();
        const bool converged = std::fabs(estimate - best) <= tol * std::max(std::fabs(estimate), 1e-300);
        best = estimate;
        prev_row = std::move(row);
        stride = half;
        if (converged && prev_row.size() >= 4) {
            break;
        }
    }
    return best;
}

} // namespace detail

/// F(lambda) = integral over the cached flow of beta e^{-lambda tau}, plus
/// the closed-form tail with beta held at its limit, minus one.
class SpectralFunction {
public:
    SpectralFunction(const ModelParams& p, const SpectralOptions& options)
        : flow_(p, options.tau_max, options.grid_step), tol_(std::min(1e-13, options.tolerance * 1e-3))
    {
        for (const auto& s : flow_.segments()) {
            emission_.push_back(flow_.emission_at_nodes(s));
        }
        // V -> 1 along the flow, so beta -> m past tau_max when 1 is above
        // the threshold.
        const TumorState last = flow_.segments().back().nodes.back();
        tail_rate_ = last.V >= p.Vm ? p.m : 0.0;
    }

    double operator()(double lambda) const
    {
        double integral = 0.0;
        const auto& segs = flow_.segments();
        for (std::size_t s = 0; s < segs.size(); ++s) {
            integral += detail::romberg_segment(emission_[s], segs[s].tau_begin, segs[s].h, lambda, tol_);
        }
        const double tail = tail_rate_ / lambda * std::exp(-lambda * flow_.tau_max());
        return integral + tail - 1.0;
    }

    [[nodiscard]] const CharacteristicFlow& flow() const noexcept { return flow_; }

private:
    CharacteristicFlow flow_;
    std::vector<std::vector<double>> emission_;
    double tail_rate_ = 0.0;
    double tol_;
};

/// Malthus exponent of the linear model by bracketing and bisection.
inline SpectralResult malthus_exponent(const ModelParams& p, const SpectralOptions& options = {})
{
    validate(p);
    if (p.e != 0.0) {
        throw MisuseError("malthus_exponent: defined for the linear model only (e must be 0)");
    }
    if (p.m == 0.0) {
        throw NoRootError("malthus_exponent: m = 0, F(lambda) = -1 for every lambda");
    }
    const SpectralFunction F(p, options);

    double hi = std::max(p.m, 1e-3);
    double f_hi = F(hi);
    for (int i = 0; f_hi >= 0.0; ++i) {
        if (i > 200) {
            throw NoRootError("malthus_exponent: failed to bracket from above");
        }
        hi *= 2.0;
        f_hi = F(hi);
    }
    double lo = hi / 2.0;
    double f_lo = F(lo);
    for (int i = 0; f_lo <= 0.0; ++i) {
        if (lo < 1e-12 || i > 200) {
            throw NoRootError("malthus_exponent: F(lambda) <= 0 down to lambda = 1e-12");
        }
        hi = lo;
        lo /= 2.0;
        f_lo = F(lo);
    }

    double mid = 0.5 * (lo + hi);
    double f_mid = F(mid);
    while (std::fabs(f_mid) >= options.tolerance) {
        (f_mid > 0.0 ? lo : hi) = mid;
        const double next = 0.5 * (lo + hi);
        if (next == lo || next == hi) {
            break;
        }
        mid = next;
        f_mid = F(mid);
    }
    return {mid, options.tau_max, F.flow().node_count(), std::fabs(f_mid)};
}

/// Least-squares slope of ln(values) against times on [t_lo, t_hi].
inline double fit_growth_rate(std::span<const double> times, std::span<const double> values, double t_lo, double t_hi)
{
    if (times.size() != values.size()) {
        throw DomainError("fit_growth_rate: series lengths differ");
    }
    std::vector<double> ts;
    std::vector<double> ys;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t_lo || times[i] > t_hi) {
            continue;
        }
        if (!(values[i] > 0.0)) {
            throw DomainError("fit_growth_rate: nonpositive value in the fit window");
        }
        ts.push_back(times[i]);
        ys.push_back(std::log(values[i]));
    }
    if (ts.size() < 10) {
        throw DomainError("fit_growth_rate: fewer than 10 samples in the window");
    }
    const double n = static_cast<double>(ts.size());
    double t_mean = 0.0;
    double y_mean = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        t_mean += ts[i] / n;
        y_mean += ys[i] / n;
    }
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        sxy += (ts[i] - t_mean) * (ys[i] - y_mean);
        sxx += (ts[i] - t_mean) * (ts[i] - t_mean);
    }
    return sxy / sxx;
}

} // namespace metasim
