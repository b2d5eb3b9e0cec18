#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "metasim/observables.hpp"
#include "metasim/simulation.hpp"

using namespace metasim;

TEST(Sample, InitialState)
{
    const auto row = sample(SystemState::initial(ModelParams{}));
    EXPECT_EQ(row.t, 0.0);
    EXPECT_EQ(row.M, 0.0);
    EXPECT_EQ(row.N, 0.0);
    EXPECT_EQ(row.I, 0.0);
    EXPECT_EQ(row.Vp, 0.1);
    EXPECT_FALSE(row.largest_volume.has_value());
}

TEST(Sample, Definitions)
{
    SystemState s = SystemState::initial(ModelParams{}, {{0.0, 2.0, {0.3, 0.5}}});
    s.t = 4.0;
    s.I = 0.5;
    s.primary.V = 0.4;
    const auto row = sample(s);
    EXPECT_EQ(row.t, 4.0);
    EXPECT_DOUBLE_EQ(row.M, 0.6);
    EXPECT_EQ(row.N, 2.0);
    EXPECT_EQ(row.I, 0.5);
    EXPECT_EQ(row.Vp, 0.4);
    EXPECT_EQ(row.largest_volume, 0.3);
}

TEST(Sample, CountIgnoresVolumeScaling)
{
    SystemState s = SystemState::initial(ModelParams{}, {{0.0, 2.0, {0.3, 0.5}}, {0.0, 0.5, {0.2, 0.5}}});
    const double n = sample(s).N;
    for (auto& c : s.cohorts) {
        c.state.V *= 2.5;
    }
    EXPECT_EQ(sample(s).N, n);
}

TEST(Histogram, Empty)
{
    const auto h = histogram(SystemState::initial(ModelParams{}), 0.1, 10);
    EXPECT_EQ(h.mass.size(), 10u);
    EXPECT_EQ(h.bin_edges.size(), 11u);
    for (double m : h.mass) {
        EXPECT_EQ(m, 0.0);
    }
    EXPECT_FALSE(h.largest_volume.has_value());
}

TEST(Histogram, SingleCohortOneBin)
{
    const auto s = SystemState::initial(ModelParams{}, {{0.0, 1.75, {0.37, 0.5}}});
    const auto h = histogram(s, 0.1, 20);
    int nonzero = 0;
    for (std::size_t i = 0; i < h.mass.size(); ++i) {
        if (h.mass[i] != 0.0) {
            ++nonzero;
            EXPECT_EQ(h.mass[i], 1.75);
            EXPECT_LE(h.bin_edges[i], 0.37);
            EXPECT_GT(h.bin_edges[i + 1], 0.37);
        }
    }
    EXPECT_EQ(nonzero, 1);
    EXPECT_EQ(h.largest_volume, 0.37);
}

TEST(Histogram, EdgesAndOverflow)
{
    const auto s = SystemState::initial(ModelParams{}, {{0.0, 1.0, {0.1, 0.5}}, {0.0, 2.0, {1.5, 2.0}}});
    const auto h = histogram(s, 0.1, 4);
    EXPECT_EQ(h.bin_edges.front(), 0.1);
    EXPECT_EQ(h.bin_edges.back(), 1.0);
    EXPECT_EQ(h.mass.front(), 1.0);
    EXPECT_EQ(h.mass.back(), 2.0);
    for (std::size_t i = 1; i < h.bin_edges.size(); ++i) {
        EXPECT_NEAR(h.bin_edges[i] / h.bin_edges[i - 1], std::pow(10.0, 0.25), 1e-12);
    }
}

TEST(Histogram, MassEqualsCount)
{
    SolverSettings st;
    st.t_end = 30.0;
    const auto r = simulate(ModelParams{}, st);
    EXPECT_NEAR(r.trajectory.final_histogram.total(), r.trajectory.N.back(), 1e-12);
}

TEST(Histogram, Rejections)
{
    const auto s = SystemState::initial(ModelParams{});
    EXPECT_THROW((void)histogram(s, 0.1, 0), DomainError);
    EXPECT_THROW((void)histogram(s, 0.0, 5), DomainError);
}

TEST(TotalVariation, Basics)
{
    VolumeHistogram a, b;
    a.mass = {1.0, 1.0, 0.0};
    b.mass = {2.0, 2.0, 0.0};
    EXPECT_EQ(total_variation(a, b), 0.0);
    b.mass = {0.0, 0.0, 3.0};
    EXPECT_EQ(total_variation(a, b), 1.0);
    b.mass = {1.0};
    EXPECT_THROW((void)total_variation(a, b), DomainError);
}

namespace {

std::pair<std::vector<double>, std::vector<double>> synthetic(double (*f)(double), double t_end, double dt)
{
    std::vector<double> t, y;
    const auto n = static_cast<int>(std::lround(t_end / dt));
    for (int i = 0; i <= n; ++i) {
        t.push_back(i * dt);
        y.push_back(f(t.back()));
    }
    return {t, y};
}

} // namespace

TEST(Oscillation, Sine)
{
    const auto [t, y] = synthetic([](double x) { return 2.0 + std::sin(x); }, 100.0, 0.01);
    const auto m = oscillation_metrics(t, y, 0.0);
    ASSERT_TRUE(m.mean_period.has_value());
    EXPECT_NEAR(*m.mean_period, 2.0 * std::numbers::pi, 0.02);
    EXPECT_NEAR(m.amplitude, 2.0, 1e-3);
    EXPECT_NEAR(m.min_after_transient, 1.0, 1e-6);
    EXPECT_TRUE(m.oscillatory());
    EXPECT_EQ(m.peak_times.size(), 16u);
}

TEST(Oscillation, Monotone)
{
    const auto [t, y] = synthetic([](double x) { return std::exp(0.1 * x); }, 50.0, 0.1);
    const auto m = oscillation_metrics(t, y, 0.0);
    EXPECT_TRUE(m.peak_times.empty());
    EXPECT_FALSE(m.oscillatory());
    EXPECT_FALSE(m.mean_period.has_value());
    EXPECT_EQ(m.amplitude, 0.0);
}

TEST(Oscillation, Constant)
{
    const auto [t, y] = synthetic([](double) { return 0.75; }, 20.0, 0.1);
    const auto m = oscillation_metrics(t, y, 0.0);
    EXPECT_TRUE(m.peak_times.empty());
    EXPECT_EQ(m.min_after_transient, 0.75);
}

TEST(Oscillation, RipplesBelowProminenceIgnored)
{
    const auto [t, y] = synthetic([](double x) { return 1.0 + 1e-4 * std::sin(20.0 * x) + 0.5 * std::sin(x); }, 60.0, 0.001);
    const auto m = oscillation_metrics(t, y, 0.0);
    ASSERT_TRUE(m.mean_period.has_value());
    EXPECT_NEAR(*m.mean_period, 2.0 * std::numbers::pi, 0.1);
}

TEST(Oscillation, TransientExcluded)
{
    const auto [t, y] = synthetic([](double x) { return x < 10.0 ? std::sin(5.0 * x) : 0.2 * std::sin(x) + 3.0; }, 60.0, 0.01);
    const auto m = oscillation_metrics(t, y, 10.0);
    EXPECT_NEAR(*m.mean_period, 2.0 * std::numbers::pi, 0.05);
    EXPECT_GT(m.min_after_transient, 2.7);
}

TEST(Oscillation, TooFewSamples)
{
    std::vector<double> t{0.0, 1.0, 2.0}, y{1.0, 2.0, 1.0};
    EXPECT_THROW((void)oscillation_metrics(t, y, 1.5), DomainError);
}

TEST(BoundarySmoothing, FarFromBoundaryUnchanged)
{
    ModelParams p;
    SystemState s = SystemState::initial(p);
    s.t = 3.0;
    s.cohorts.push_back({1.0, 0.25, {0.6, 0.9}, 0.01});
    s.born.add(0.25);
    const auto row = sample(s);
    EXPECT_EQ(row.N, 0.25);
    EXPECT_EQ(row.M, 0.25 * 0.6);
    EXPECT_EQ(row.exited, 0.0);
}

TEST(BoundarySmoothing, CrossingSlabCountsHalf)
{
    ModelParams p;
    SystemState s = SystemState::initial(p);
    s.t = 5.0;
    s.recent_exits.push_back({1.0, 0.01, 0.5, 5.0});
    s.exited.add(0.5);
    s.born.add(0.5);
    const auto row = sample(s);
    EXPECT_NEAR(row.N, 0.25, 1e-15);
    EXPECT_NEAR(row.M, 0.25 * p.V0, 1e-15);
    EXPECT_EQ(row.born, row.exited + row.N);

    s.t = 5.0 + Stepper::kExitMemory * 0.01;
    const auto later = sample(s);
    EXPECT_EQ(later.N, 0.0);
    EXPECT_EQ(later.exited, 0.5);
}

TEST(BoundarySmoothing, UserCohortsExitSharply)
{
    ModelParams p;
    p.m = 0.0;
    SystemState s = SystemState::initial(p, {{0.0, 1.0, {0.1, 0.05}}});
    s = step(s, p, 1e-2);
    const auto row = sample(s);
    EXPECT_EQ(row.N, 0.0);
    EXPECT_EQ(row.exited, 1.0);
}

TEST(BoundarySmoothing, BookkeepingStaysExact)
{
    ModelParams p;
    SolverSettings st;
    st.t_end = 12.0;
    st.sample_every = st.dt;
    const auto traj = simulate(p, st).trajectory;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        EXPECT_LE(std::fabs(traj.born_cum[i] - traj.exited_cum[i] - traj.N[i]), 1e-14 * traj.born_cum[i]) << traj.times[i];
    }
}

TEST(BoundarySmoothing, CountIsLipschitzAcrossExits)
{
    // Exits run throughout [8.5, 12]; a continuous N has steps that halve with dt.
    const auto max_jump = [](double dt) {
        SolverSettings st;
        st.dt = dt;
        st.t_end = 12.0;
        st.sample_every = dt;
        const auto traj = simulate(ModelParams{}, st).trajectory;
        double jump = 0.0;
        for (std::size_t i = 1; i < traj.size(); ++i) {
            if (traj.times[i] >= 8.5) {
                jump = std::max(jump, std::fabs(traj.N[i] - traj.N[i - 1]));
            }
        }
        return jump;
    };
    const double ratio = max_jump(1e-2) / max_jump(5e-3);
    EXPECT_GT(ratio, 1.7);
    EXPECT_LT(ratio, 2.3);
}
