// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "metasim/runner.hpp"

#include "oracles.hpp"

using namespace metasim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail)
{
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) {
        ++failures;
    }
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ModelParams linear_params()
{
    ModelParams p;
    p.e = 0.0;
    return p;
}

std::string timeseries_bytes(const Trajectory& traj)
{
    std::ostringstream os;
    write_timeseries_csv(os, traj);
    return os.str();
}

void malthus_closed_form()
{
    const auto start = Clock::now();
    double worst = 0.0;
    for (double m : {1.0, 2.0}) {
        ModelParams p = linear_params();
        p.alpha = 0.0;
        p.m = m;
        p.Vm = p.V0;
        worst = std::max(worst, std::fabs(malthus_exponent(p).lambda0 / m - 1.0));
    }
    const double secs = seconds_since(start);
    report(1, worst < 1e-9 && secs < 1.0, fmt("alpha=0: max rel err %.2e (< 1e-9), %.2f s", worst, secs));
}

void malthus_oracle()
{
    const auto start = Clock::now();
    const double lambda = malthus_exponent(linear_params()).lambda0;
    const double expected = oracle::malthus_exponent(oracle::LinearParams{});
    const double rel = std::fabs(lambda / expected - 1.0);
    const double secs = seconds_since(start);
    report(2, rel < 1e-6 && secs < 10.0,
           fmt("lambda0 %.12f vs oracle %.12f, rel err %.2e (< 1e-6), %.2f s", lambda, expected, rel, secs));
}

void linear_growth()
{
    const auto start = Clock::now();
    const double lambda = malthus_exponent(linear_params()).lambda0;
    auto fitted = [](double dt) {
        SolverSettings st;
        st.dt = dt;
        st.t_end = 40.0;
        const auto r = simulate(linear_params(), st);
        return fit_growth_rate(r.trajectory.times, r.trajectory.M, 30.0, 40.0);
    };
    const double e1 = std::fabs(fitted(1e-2) / lambda - 1.0);
    const double e2 = std::fabs(fitted(5e-3) / lambda - 1.0);
    const double secs = seconds_since(start);
    report(3, e1 < 0.02 && e2 < e1 && secs < 30.0,
           fmt("slope rel err %.2e at dt=1e-2 (< 2%%), %.2e at dt=5e-3 (improving), %.2f s", e1, e2, secs));
}

void fixed_point()
{
    const auto start = Clock::now();
    ModelParams p = linear_params();
    p.m = 0.0;
    SolverSettings st;
    st.t_end = 20.0;
    const auto r = simulate(p, st);
    bool zero = true;
    for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
        zero = zero && r.trajectory.M[i] == 0.0 && r.trajectory.N[i] == 0.0;
    }
    const double dv = std::fabs(r.final_state.primary.V - 1.0);
    const double dk = std::fabs(r.final_state.primary.K - 1.0);
    const double secs = seconds_since(start);
    report(4, dv < 1e-3 && dk < 1e-3 && zero && secs < 1.0,
           fmt("|Vp-1|=%.2e |Kp-1|=%.2e at t=20, M=N=0 exactly: %s, %.2f s", dv, dk, zero ? "yes" : "no", secs));
}

void inhibitor_closed_form()
{
    const auto start = Clock::now();
    double worst = 0.0;
    for (double k : {0.5, 1.0, 3.0}) {
        ModelParams p;
        p.k = k;
        SolverSettings st;
        st.dt = 1e-3;
        st.t_end = 10.0;
        SimulationOptions opts;
        opts.controls = StepControls{true, false};
        const auto r = simulate(p, st, {}, opts);
        const double c = p.V0;
        for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
            const double exact = oracle::frozen_inhibitor(c, k, r.trajectory.times[i]);
            worst = std::max(worst, std::fabs(r.trajectory.I[i] / exact - 1.0));
        }
    }
    const double secs = seconds_since(start);
    report(5, worst < 1e-6 && secs < 1.0, fmt("max rel err %.2e (< 1e-6) at dt=1e-3, %.2f s", worst, secs));
}

struct CatalogRun {
    RunReport report;
    double seconds = 0.0;
};

std::map<std::string, CatalogRun> run_catalog()
{
    std::map<std::string, CatalogRun> runs;
    for (const auto& sc : catalog()) {
        const auto start = Clock::now();
        CatalogRun run;
        run.report = evaluate_scenario(sc);
        run.seconds = seconds_since(start);
        std::printf("  catalog %-16s %7.2f s  %zu samples\n", sc.name.c_str(), run.seconds,
                    run.report.result.trajectory.size());
        std::fflush(stdout);
        runs.emplace(sc.name, std::move(run));
    }
    return runs;
}

void conservation(const std::map<std::string, CatalogRun>& runs)
{
    double worst = 0.0;
    std::string where;
    for (const auto& [name, run] : runs) {
        const double r = max_conservation_residual(run.report.result.trajectory);
        if (r >= worst) {
            worst = r;
            where = name;
        }
    }
    report(6, worst < 1e-9,
           fmt("max |born-exited-N| over %zu catalog scenarios = %.2e (< 1e-9, worst: %s)", runs.size(), worst,
               where.c_str()));
}

void base_regime(const CatalogRun& base)
{
    const auto& m = base.report.metrics;
    report(7, m.peak_times.size() >= 3 && m.min_after_transient > 0.0 && base.seconds < 60.0,
           fmt("%zu peaks after transient (>= 3), min M %.4f (> 0), %.2f s", m.peak_times.size(),
               m.min_after_transient, base.seconds));
}

void comparative_statics()
{
    const auto start = Clock::now();
    const auto out = std::filesystem::temp_directory_path() / "metasim-acceptance";
    std::filesystem::remove_all(out);

    SweepSpec e_sweep;
    e_sweep.name = "e";
    e_sweep.base = *catalog_entry("base");
    e_sweep.axis = "e";
    e_sweep.values = {10.0, 1.0, 0.1};
    SweepSpec m_sweep = e_sweep;
    m_sweep.name = "m";
    m_sweep.axis = "m";
    m_sweep.values = {10.0, 1.0};

    const auto er = run_sweep(e_sweep, out);
    const auto mr = run_sweep(m_sweep, out);
    std::filesystem::remove_all(out);
    const double secs = seconds_since(start);

    bool ok = !er.all_failed() && !mr.all_failed();
    for (const auto& r : er.rows) ok = ok && r.ok();
    for (const auto& r : mr.rows) ok = ok && r.ok();
    if (!ok) {
        report(8, false, "sweep run failed");
        return;
    }
    const double a10 = *er.rows[0].amplitude, a1 = *er.rows[1].amplitude, a01 = *er.rows[2].amplitude;
    const bool amp_ok = a10 < a1 && a1 < a01;
    const auto& p10 = mr.rows[0].mean_period;
    const auto& p1 = mr.rows[1].mean_period;
    const bool period_ok = p10 && p1 && *p10 < *p1;
    const std::string p10s = p10 ? fmt("%.3f", *p10) : std::string("none (non-oscillatory)");
    const std::string p1s = p1 ? fmt("%.3f", *p1) : std::string("none");
    report(8, amp_ok && period_ok && secs < 300.0,
           fmt("amplitude e=10/1/0.1: %.4f < %.4f < %.4f [%s]; mean_period m=10: %s < m=1: %s [%s]; %.1f s", a10, a1,
               a01, amp_ok ? "ok" : "violated", p10s.c_str(), p1s.c_str(), period_ok ? "ok" : "violated", secs));
}

void small_b(const CatalogRun& low, const CatalogRun& base)
{
    const auto lv = low.report.largest_volume;
    const double amp = low.report.metrics.amplitude;
    const double base_amp = base.report.metrics.amplitude;
    const bool ok = lv && *lv < 0.15 && amp < 0.1 * base_amp && low.seconds < 60.0;
    report(9, ok,
           fmt("largest volume after transient %.4f (< 0.15), amplitude %.4g (< 10%% of base %.4f), %.2f s",
               lv.value_or(NAN), amp, base_amp, low.seconds));
}

void step_convergence()
{
    const auto start = Clock::now();
    auto M_at = [](double dt, double t_end) {
        SolverSettings st;
        st.dt = dt;
        st.t_end = t_end;
        st.sample_every = dt;
        return simulate(ModelParams{}, st).trajectory.M.back();
    };
    const double dts[] = {4e-2, 2e-2, 1e-2, 5e-3};
    double M[4];
    for (int i = 0; i < 4; ++i) {
        M[i] = M_at(dts[i], 10.0);
    }
    const double d0 = std::fabs(M[0] - M[1]), d1 = std::fabs(M[1] - M[2]), d2 = std::fabs(M[2] - M[3]);
    const double o1 = std::log2(d0 / d1), o2 = std::log2(d1 / d2);
    // same study on [0, 7], before the first cohort leaves the domain
    double S[4];
    for (int i = 0; i < 4; ++i) {
        S[i] = M_at(dts[i], 7.0);
    }
    const double s1 = std::log2(std::fabs(S[0] - S[1]) / std::fabs(S[1] - S[2]));
    const double s2 = std::log2(std::fabs(S[1] - S[2]) / std::fabs(S[2] - S[3]));
    const double secs = seconds_since(start);
    report(10, std::min(o1, o2) >= 2.0 && secs < 60.0,
           fmt("|dM(10)| = %.2e, %.2e, %.2e; observed orders %.2f, %.2f (>= 2); on [0,7]: %.2f, %.2f; %.1f s", d0, d1,
               d2, o1, o2, s1, s2, secs));
}

void determinism(const std::map<std::string, CatalogRun>& runs)
{
    int identical = 0;
    std::string mismatch;
    for (const auto& sc : catalog()) {
        const auto again = evaluate_scenario(sc);
        if (timeseries_bytes(again.result.trajectory) == timeseries_bytes(runs.at(sc.name).report.result.trajectory)) {
            ++identical;
        } else {
            mismatch += " " + sc.name;
        }
    }
    const int total = static_cast<int>(runs.size());
    report(11, identical == total,
           fmt("%d/%d catalog scenarios byte-identical on rerun%s", identical, total,
               mismatch.empty() ? "" : (" (differs:" + mismatch + ")").c_str()));
}

} // namespace

int main()
{
    try {
        malthus_closed_form();
        malthus_oracle();
        linear_growth();
        fixed_point();
        inhibitor_closed_form();
        const auto runs = run_catalog();
        conservation(runs);
        base_regime(runs.at("base"));
        comparative_statics();
        small_b(runs.at("b-x0.1"), runs.at("base"));
        step_convergence();
        determinism(runs);
    } catch (const std::exception& ex) {
        std::printf("acceptance aborted: %s\n", ex.what());
        return 2;
    }
    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
