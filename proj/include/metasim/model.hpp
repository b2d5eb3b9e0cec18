#pragma once

// Growth vector field, emission law and parameter handling for the
// size/capacity structured metastasis model with systemic inhibition.
// Everything here is a pure function of its arguments.

#include <cmath>
#include <initializer_list>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include "metasim/errors.hpp"

namespace metasim {

namespace detail {
using NamedValues = std::initializer_list<std::pair<double, const char*>>;
} // namespace detail

/// Nondimensional model constants. Volumes are fractions of the maximal
/// reachable volume, time is in units of the proliferation time scale.
struct ModelParams {
    double b = 1.0;              ///< stimulation / growth coefficient
    double e = 1.0;              ///< systemic inhibitor efficacy
    double k = 1.0;              ///< inhibitor clearance rate
    double m = 1.0;              ///< intrinsic metastatic potential
    double alpha = 2.0 / 3.0;    ///< dissemination exponent, in [0, 1]
    double V0 = 0.1;             ///< birth volume
    double K0 = 0.2;             ///< birth carrying capacity
    double Vm = 0.1;             ///< emission threshold volume

    /// Base parameter set. The emission threshold is unset in the base set
    /// and defaults to the birth volume, so every tumor in the domain emits.
    [[nodiscard]] static ModelParams base() { return {}; }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Throws ConfigError naming the first violated constraint.
inline void validate(const ModelParams& p)
{
    auto require = [](bool ok, const char* field, const char* what) {
        if (!ok) {
            throw ConfigError(what, std::string("/params/") + field);
        }
    };
    for (auto [v, name] : detail::NamedValues{{p.b, "b"}, {p.e, "e"}, {p.k, "k"}, {p.m, "m"}, {p.alpha, "alpha"},
                                               {p.V0, "V0"}, {p.K0, "K0"}, {p.Vm, "Vm"}}) {
        require(std::isfinite(v), name, "must be finite");
    }
    require(p.b > 0.0, "b", "must be > 0");
    require(p.e >= 0.0, "e", "must be >= 0");
    require(p.k > 0.0, "k", "must be > 0");
    require(p.m >= 0.0, "m", "must be >= 0");
    require(p.alpha >= 0.0 && p.alpha <= 1.0, "alpha", "must lie in [0, 1]");
    require(p.V0 > 0.0, "V0", "must be > 0");
    require(p.K0 > p.V0, "K0", "must exceed V0 (birth flux must point into the domain)");
    require(p.Vm >= 0.0, "Vm", "must be >= 0");
}

/// Trait pair of one tumor.
struct TumorState {
    double V = 0.0; ///< volume
    double K = 0.0; ///< carrying capacity

    friend bool operator==(const TumorState&, const TumorState&) = default;
};

struct GrowthRate {
    double dV = 0.0;
    double dK = 0.0;
};

namespace detail {

/// V^(2/3) through the logarithm; V > 0 is a caller precondition.
inline double pow_two_thirds(double V) { return std::exp((2.0 / 3.0) * std::log(V)); }

// Unchecked field used inside the integrators.
inline GrowthRate velocity(double V, double K, double I, double b, double e)
{
    return {V * std::log(K / V), b * (V - pow_two_thirds(V) * K) - e * I * K};
}

} // namespace detail

/// Gompertz volume dynamics towards the carrying capacity, and capacity
/// dynamics driven by stimulation minus local and systemic inhibition:
///
///   dV/dt = V ln(K/V)
///   dK/dt = b (V - V^(2/3) K) - e I K
inline GrowthRate growth_field(const TumorState& s, double I, const ModelParams& p)
{
    if (!std::isfinite(s.V) || !std::isfinite(s.K) || !std::isfinite(I)) {
        throw InvalidStateError("growth_field: non-finite input");
    }
    if (s.V <= 0.0 || s.K <= 0.0) {
        throw InvalidStateError("growth_field: V and K must be positive");
    }
    if (I < 0.0) {
        throw InvalidStateError("growth_field: inhibitor amount must be >= 0");
    }
    return detail::velocity(s.V, s.K, I, p.b, p.e);
}

/// Number of successfully seeded metastases per unit time, m V^alpha above
/// the threshold Vm and zero below it.
inline double emission_rate(double V, const ModelParams& p)
{
    if (!std::isfinite(V)) {
        throw InvalidStateError("emission_rate: non-finite volume");
    }
    return V >= p.Vm ? p.m * std::pow(V, p.alpha) : 0.0;
}

/// State of every newborn tumor, and of the primary tumor at t = 0.
inline TumorState birth_state(const ModelParams& p) { return {p.V0, p.K0}; }

/// Local inhibition coefficient d from the biophysics of a spherical tumor
/// with uniform production and zero internal clearance:
/// d = e Vd p / (15 D^2) (3 / (4 pi))^(2/3).
inline double local_inhibition_coefficient(double e, double Vd, double p, double D)
{
    if (!(e > 0.0) || !(Vd > 0.0) || !(p > 0.0) || !(D > 0.0)) {
        throw ConfigError("local_inhibition_coefficient: all inputs must be > 0");
    }
    const double geometric = std::cbrt(3.0 / (4.0 * std::numbers::pi));
    return e * Vd * (p / (15.0 * D * D)) * geometric * geometric;
}

/// Raw biophysical inputs from which e and d are built.
struct InhibitorBiophysics {
    double e_hat = 0.0; ///< tumor sensitivity to the inhibitor
    double Vd = 0.0;    ///< distribution volume of the host compartment
    double p = 0.0;     ///< inhibitor production rate per unit volume
    double D = 0.0;     ///< diffusion length scale
};

/// Dimensional constants. When `biophysics` is present, e, d and p are
/// derived from it (e = e_hat / Vd) and the direct fields are ignored.
struct DimensionalParams {
    double a = 1.0;
    double b = 1.0;
    double d = 1.0;
    double e = 0.0;
    double k = 1.0;
    double m = 1.0;
    double alpha = 2.0 / 3.0;
    double V0 = 0.1;
    double K0 = 0.2;
    double Vm = 0.1;
    std::optional<double> p;
    std::optional<InhibitorBiophysics> biophysics;

    /// Maximal reachable volume (b/d)^(3/2).
    [[nodiscard]] double max_volume() const { return std::pow(b / d, 1.5); }
};

/// Fills e, d and p from the biophysical sub-group when present.
inline DimensionalParams resolve_biophysics(DimensionalParams dp)
{
    if (dp.biophysics) {
        const auto& bio = *dp.biophysics;
        if (!(bio.Vd > 0.0)) {
            throw ConfigError("must be > 0", "/dimensional/biophysics/Vd");
        }
        dp.e = bio.e_hat / bio.Vd;
        dp.d = local_inhibition_coefficient(dp.e, bio.Vd, bio.p, bio.D);
        dp.p = bio.p;
    }
    return dp;
}

/// Rescales time by a, volumes by V* = (b/d)^(3/2) and the inhibitor by
/// p V* / a, which removes a, d and p from the equations.
inline ModelParams nondimensionalize(const DimensionalParams& raw)
{
    const DimensionalParams dp = resolve_biophysics(raw);
    for (auto [v, name] : detail::NamedValues{{dp.a, "a"}, {dp.b, "b"}, {dp.d, "d"}, {dp.k, "k"}}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError("must be > 0", std::string("/dimensional/") + name);
        }
    }
    for (auto [v, name] : detail::NamedValues{{dp.V0, "V0"}, {dp.K0, "K0"}}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError("volumes must be > 0", std::string("/dimensional/") + name);
        }
    }
    if (!(dp.Vm >= 0.0) || !std::isfinite(dp.Vm)) {
        throw ConfigError("must be >= 0", "/dimensional/Vm");
    }
    double production = 0.0;
    if (dp.e > 0.0) {
        if (!dp.p) {
            throw ConfigError("production rate p is required when e > 0", "/dimensional/p");
        }
        production = *dp.p;
    }
    const double vstar = dp.max_volume();
    ModelParams p;
    p.b = dp.b / dp.a;
    p.e = dp.e * production * vstar / dp.a;
    p.k = dp.k / dp.a;
    p.m = (dp.m / dp.a) * std::pow(vstar, dp.alpha);
    p.alpha = dp.alpha;
    p.V0 = dp.V0 / vstar;
    p.K0 = dp.K0 / vstar;
    p.Vm = dp.Vm / vstar;
    return p;
}

/// Inverse of nondimensionalize for given time scale a, local inhibition d
/// and production p (the three constants the rescaling eliminates).
inline DimensionalParams dimensionalize(const ModelParams& p, double a, double d, double production)
{
    DimensionalParams dp;
    dp.a = a;
    dp.b = p.b * a;
    dp.d = d;
    const double vstar = dp.max_volume();
    dp.e = p.e * a / (production * vstar);
    dp.k = p.k * a;
    dp.m = p.m * a / std::pow(vstar, p.alpha);
    dp.alpha = p.alpha;
    dp.V0 = p.V0 * vstar;
    dp.K0 = p.K0 * vstar;
    dp.Vm = p.Vm * vstar;
    dp.p = production;
    return dp;
}

} // namespace metasim
