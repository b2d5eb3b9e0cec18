#pragma once

// Lagrangian cohort solver for the renewal equation. Under a Dirac birth
// measure the metastatic density is exactly a weighted sum of point masses
// riding the characteristics of the growth field, so no (V, K) grid is
// needed: each cohort carries its birth time, its weight (expected number of
// metastases) and its current state.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "metasim/errors.hpp"
#include "metasim/exact_sum.hpp"
#include "metasim/model.hpp"
#include "metasim/rk4.hpp"

namespace metasim {

struct Cohort {
    double birth_time = 0.0;
    double weight = 0.0;
    TumorState state;
    double birth_span = 0.0; ///< length of the birth interval the weight was collected over
};

/// A cohort that left the domain, kept briefly so observables can spread
/// its removal over the exit window of the mass it stands for.
struct ExitRecord {
    double birth_time = 0.0;
    double birth_span = 0.0;
    double weight = 0.0;
    double exit_time = 0.0; ///< interpolated crossing of V = V0
};

/// Full state of the coupled system: primary tumor, circulating inhibitor
/// and the live cohorts ordered by birth time.
///
/// Births and exits are accumulated exactly, so
/// born_count() == exited_count() + live_count() holds to rounding of the
/// three printed values.
struct SystemState {
    double t = 0.0;
    TumorState primary;
    double I = 0.0;
    std::vector<Cohort> cohorts;
    ExactSum born;
    ExactSum exited;
    double exit_volume = 0.0;              ///< V0
    std::vector<ExitRecord> recent_exits;  ///< exits within a few birth spans of t

    /// Primary tumor at birth state, no inhibitor, the given cohorts (their
    /// weight is booked as born).
    static SystemState initial(const ModelParams& p, std::vector<Cohort> initial_cohorts = {})
    {
        SystemState s;
        s.primary = birth_state(p);
        s.exit_volume = p.V0;
        for (const auto& c : initial_cohorts) {
            if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
                throw ConfigError("cohort weight must be finite and >= 0", "/initial_cohorts");
            }
            if (!(c.state.V >= p.V0) || !(c.state.K > 0.0) || !std::isfinite(c.state.V) || !std::isfinite(c.state.K)) {
                throw ConfigError("cohort state must satisfy V >= V0 and K > 0", "/initial_cohorts");
            }
        }
        std::stable_sort(initial_cohorts.begin(), initial_cohorts.end(),
                         [](const Cohort& a, const Cohort& b) { return a.birth_time < b.birth_time; });
        for (const auto& c : initial_cohorts) {
            s.born.add(c.weight);
        }
        s.cohorts = std::move(initial_cohorts);
        return s;
    }

    [[nodiscard]] double born_count() const { return born.value(); }
    [[nodiscard]] double exited_count() const { return exited.value(); }

    /// Sum of live weights, correctly rounded.
    [[nodiscard]] double live_count() const
    {
        ExactSum n;
        for (const auto& c : cohorts) {
            n.add(c.weight);
        }
        return n.value();
    }

    /// born - exited - live, evaluated exactly before rounding.
    [[nodiscard]] double bookkeeping_residual() const
    {
        ExactSum r = born;
        r.subtract(exited);
        for (const auto& c : cohorts) {
            r.add(-c.weight);
        }
        return r.value();
    }
};

struct SolverSettings {
    double dt = 1e-2;
    double t_end = 200.0;
    double sample_every = 1e-1;
    double weight_floor = 0.0; ///< cohorts lighter than this are pruned (0 = off)
};

inline void validate(const SolverSettings& s)
{
    if (!(s.dt > 0.0) || !std::isfinite(s.dt)) {
        throw ConfigError("must be > 0", "/settings/dt");
    }
    if (!(s.t_end > 0.0) || !std::isfinite(s.t_end)) {
        throw ConfigError("must be > 0", "/settings/t_end");
    }
    if (!(s.sample_every >= s.dt) || !std::isfinite(s.sample_every)) {
        throw ConfigError("must be >= dt", "/settings/sample_every");
    }
    if (!(s.weight_floor >= 0.0) || !std::isfinite(s.weight_floor)) {
        throw ConfigError("must be >= 0", "/settings/weight_floor");
    }
    if (s.t_end / s.dt > 1e10) {
        throw ConfigError("t_end / dt overflows the step budget", "/settings/dt");
    }
}

/// Total metastatic burden M = sum of weight * V (primary excluded).
inline double total_burden(const SystemState& s)
{
    double m = 0.0;
    for (const auto& c : s.cohorts) {
        m += c.weight * c.state.V;
    }
    return m;
}

/// dI/dt = V_p + M - k I.
inline double inhibitor_rate(const SystemState& s, const ModelParams& p)
{
    return s.primary.V + total_burden(s) - p.k * s.I;
}

/// Influx of newborn metastases: emission of the primary plus emission of
/// every live metastasis.
inline double birth_rate(const SystemState& s, const ModelParams& p)
{
    double b = emission_rate(s.primary.V, p);
    for (const auto& c : s.cohorts) {
        b += c.weight * emission_rate(c.state.V, p);
    }
    return b;
}

/// Switches used by oracle tests to isolate parts of the coupled system.
struct StepControls {
    bool freeze_primary = false; ///< hold (V_p, K_p) fixed
    bool births = true;          ///< spawn new cohorts
};

namespace detail {

/// Emission integrated over the first `frac` of a step of length dt, with V
/// taken linear in time between `v_start` and `v_end`. The threshold
/// crossing, if any, splits the interval and each emitting piece is
/// integrated by the trapezoid rule.
inline double emission_over_fraction(double v_start, double v_end, double frac, double dt, const ModelParams& p)
{
    const auto rate = [&](double v) { return p.m * std::pow(v, p.alpha); };
    const double v_frac = v_start + (v_end - v_start) * frac;
    const bool on_start = v_start >= p.Vm;
    const bool on_frac = v_frac >= p.Vm;
    if (on_start && on_frac) {
        return frac * dt * 0.5 * (rate(v_start) + rate(v_frac));
    }
    if (!on_start && !on_frac) {
        return 0.0;
    }
    const double cross = std::clamp((v_start - p.Vm) / (v_start - v_end), 0.0, frac);
    if (on_start) {
        return cross * dt * 0.5 * (rate(v_start) + rate(p.Vm));
    }
    return (frac - cross) * dt * 0.5 * (rate(p.Vm) + rate(v_frac));
}

} // namespace detail

/// Advances a SystemState by one fixed step.
///
/// The primary tumor, the inhibitor, every live cohort and one nascent
/// cohort are integrated together by RK4. The nascent cohort starts the step
/// at the birth state with zero weight; its weight obeys dw/dt = birth rate
/// (including its own emission) and it moves at half the growth velocity, so
/// at the end of the step it sits at the mean-age position of the mass born
/// during the step. That keeps both the birth integral and the age
/// placement second order.
///
/// Tumors whose emission indicator switches during the step, and cohorts
/// that leave the domain (V < V0), have their RK4 contributions to the birth
/// integral and to the inhibitor source replaced by trapezoid estimates over
/// the part of the step where they actually emitted or were present.
class Stepper {
public:
    explicit Stepper(ModelParams p, StepControls controls = {}) : p_(p), controls_(controls) { validate(p_); }

    [[nodiscard]] const ModelParams& params() const noexcept { return p_; }

    void advance(SystemState& s, double dt, double weight_floor = 0.0)
    {
        const std::size_t n = s.cohorts.size();
        pack(s);
        acc_birth_.assign(n, 0.0);
        acc_burden_.assign(n, 0.0);
        acc_primary_birth_ = 0.0;
        exit_time_.assign(n, 0.0);

        auto system = [this, n](const std::vector<double>& y, std::vector<double>& dy, double, int stage) {
            evaluate(y, dy, n, Rk4<std::vector<double>>::stage_weights[static_cast<std::size_t>(stage)]);
        };
        rk4_.do_step(system, y_, s.t, dt);

        const double t_next = s.t + dt;
        for (double v : y_) {
            if (!std::isfinite(v)) {
                throw IntegrationBlowupError(t_next);
            }
        }

        double I_next = y_[kI];
        double nascent_weight = y_[kW];

        const double vp_start = s.primary.V;
        const double vp_end = y_[kVp];
        if (controls_.births && (vp_start >= p_.Vm) != (vp_end >= p_.Vm)) {
            nascent_weight += detail::emission_over_fraction(vp_start, vp_end, 1.0, dt, p_) - acc_primary_birth_ * dt;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double v_start = s.cohorts[i].state.V;
            const double v_end = y_[kFirst + i];
            const bool exits = v_end < p_.V0;
            if (!exits && (v_start >= p_.Vm) == (v_end >= p_.Vm)) {
                continue;
            }
            const double w = s.cohorts[i].weight;
            const double present = exits ? std::clamp((v_start - p_.V0) / (v_start - v_end), 0.0, 1.0) : 1.0;
            if (controls_.births) {
                nascent_weight += w * detail::emission_over_fraction(v_start, v_end, present, dt, p_) -
                                  acc_birth_[i] * dt;
            }
            if (exits) {
                I_next += w * present * dt * 0.5 * (v_start + p_.V0) - acc_burden_[i] * dt;
                exit_time_[i] = s.t + present * dt;
            }
        }

        if (!controls_.freeze_primary) {
            s.primary = {y_[kVp], y_[kKp]};
        }
        s.I = std::max(I_next, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            s.cohorts[i].state = {y_[kFirst + i], y_[kFirst + n + i]};
            if (!(s.cohorts[i].state.K > 0.0) || !(s.cohorts[i].state.V > 0.0)) {
                throw IntegrationBlowupError(t_next);
            }
        }
        if (!(s.primary.V > 0.0) || !(s.primary.K > 0.0)) {
            throw IntegrationBlowupError(t_next);
        }

        std::erase_if(s.recent_exits, [&](const ExitRecord& r) {
            return t_next - r.exit_time > kExitMemory * r.birth_span;
        });
        std::size_t index = 0;
        std::erase_if(s.cohorts, [&](const Cohort& c) {
            const std::size_t i = index++;
            if (c.state.V < p_.V0) {
                s.exited.add(c.weight);
                if (c.birth_span > 0.0) {
                    s.recent_exits.push_back({c.birth_time, c.birth_span, c.weight, exit_time_[i]});
                }
                return true;
            }
            if (c.weight < weight_floor) {
                s.exited.add(c.weight);
                return true;
            }
            return false;
        });

        // Mass born during the step is placed at its mean birth time.
        nascent_weight = std::max(nascent_weight, 0.0);
        if (controls_.births && nascent_weight > 0.0) {
            s.born.add(nascent_weight);
            if (nascent_weight < weight_floor) {
                s.exited.add(nascent_weight);
            } else {
                s.cohorts.push_back({s.t + 0.5 * dt, nascent_weight, {y_[kVn], y_[kKn]}, dt});
            }
        }
        s.t = t_next;
    }

private:
    // Layout of the packed state vector.
    static constexpr std::size_t kVp = 0, kKp = 1, kI = 2, kW = 3, kVn = 4, kKn = 5, kFirst = 6;

    void pack(const SystemState& s)
    {
        const std::size_t n = s.cohorts.size();
        y_.resize(kFirst + 2 * n);
        weights_.resize(n);
        y_[kVp] = s.primary.V;
        y_[kKp] = s.primary.K;
        y_[kI] = s.I;
        y_[kW] = 0.0;
        y_[kVn] = p_.V0;
        y_[kKn] = p_.K0;
        for (std::size_t i = 0; i < n; ++i) {
            y_[kFirst + i] = s.cohorts[i].state.V;
            y_[kFirst + n + i] = s.cohorts[i].state.K;
            weights_[i] = s.cohorts[i].weight;
        }
    }

    [[nodiscard]] double emission(double log_v, double v) const
    {
        return v >= p_.Vm ? p_.m * std::exp(p_.alpha * log_v) : 0.0;
    }

    void evaluate(const std::vector<double>& y, std::vector<double>& dy, std::size_t n, double stage_weight)
    {
        const double I = y[kI];
        const double b = p_.b;
        const double e = p_.e;

        double burden = 0.0;
        double births = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = y[kFirst + i];
            const double k = y[kFirst + n + i];
            const double log_v = std::log(v);
            dy[kFirst + i] = v * (std::log(k) - log_v);
            dy[kFirst + n + i] = b * (v - std::exp((2.0 / 3.0) * log_v) * k) - e * I * k;
            const double w = weights_[i];
            const double bi = w * emission(log_v, v);
            const double mi = w * v;
            acc_birth_[i] += stage_weight * bi;
            acc_burden_[i] += stage_weight * mi;
            births += bi;
            burden += mi;
        }

        const double vp = y[kVp];
        if (controls_.freeze_primary) {
            dy[kVp] = 0.0;
            dy[kKp] = 0.0;
        } else {
            const GrowthRate g = detail::velocity(vp, y[kKp], I, b, e);
            dy[kVp] = g.dV;
            dy[kKp] = g.dK;
        }
        const double primary_birth = emission(std::log(vp), vp);
        acc_primary_birth_ += stage_weight * primary_birth;

        const double wn = y[kW];
        const double vn = y[kVn];
        const GrowthRate gn = detail::velocity(vn, y[kKn], I, b, e);
        dy[kVn] = 0.5 * gn.dV;
        dy[kKn] = 0.5 * gn.dK;
        if (controls_.births) {
            burden += wn * vn;
            births += primary_birth + wn * emission(std::log(vn), vn);
            dy[kW] = births;
        } else {
            dy[kW] = 0.0;
        }
        dy[kI] = vp + burden - p_.k * I;
    }

public:
    /// Exit records are kept this many birth spans past the crossing.
    static constexpr double kExitMemory = 32.0;

private:
    ModelParams p_;
    StepControls controls_;
    Rk4<std::vector<double>> rk4_;
    std::vector<double> y_;
    std::vector<double> weights_;
    std::vector<double> acc_birth_;
    std::vector<double> acc_burden_;
    double acc_primary_birth_ = 0.0;
    std::vector<double> exit_time_;
};

/// One step on a copy of `s`.
inline SystemState step(SystemState s, const ModelParams& p, double dt, double weight_floor = 0.0)
{
    if (!(dt > 0.0)) {
        throw ConfigError("step size must be > 0", "/settings/dt");
    }
    Stepper stepper(p);
    stepper.advance(s, dt, weight_floor);
    return s;
}

} // namespace metasim
