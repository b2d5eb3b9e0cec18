#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace metasim {

namespace detail {

template <typename T>
void match_size(std::vector<T>& v, const std::vector<T>& like)
{
    v.resize(like.size());
}

template <typename T, std::size_t N>
void match_size(std::array<T, N>&, const std::array<T, N>&)
{
}

} // namespace detail

/// Classical fixed-step fourth-order Runge-Kutta stepper.
///
/// `State` is any random-access container of doubles (std::vector or
/// std::array). The system is invoked as `system(x, dxdt, t, stage)` where
/// `stage` is 0..3; `stage_weights[stage]` is the weight that stage carries
/// in the final combination, which lets a caller attribute the step's
/// increment to individual terms of the right-hand side.
template <typename State>
class Rk4 {
public:
    static constexpr std::array<double, 4> stage_weights{1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0};

    template <typename System>
    void do_step(System&& system, State& x, double t, double dt)
    {
        detail::match_size(tmp_, x);
        detail::match_size(k1_, x);
        detail::match_size(k2_, x);
        detail::match_size(k3_, x);
        detail::match_size(k4_, x);
        const std::size_t n = x.size();
        const double half = 0.5 * dt;

        system(x, k1_, t, 0);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = x[i] + half * k1_[i];

        system(tmp_, k2_, t + half, 1);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = x[i] + half * k2_[i];

        system(tmp_, k3_, t + half, 2);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = x[i] + dt * k3_[i];

        system(tmp_, k4_, t + dt, 3);
        const double dt6 = dt / 6.0;
        const double dt3 = dt / 3.0;
        for (std::size_t i = 0; i < n; ++i)
            x[i] += dt6 * k1_[i] + dt3 * k2_[i] + dt3 * k3_[i] + dt6 * k4_[i];
    }

private:
    State tmp_{}, k1_{}, k2_{}, k3_{}, k4_{};
};

} // namespace metasim
