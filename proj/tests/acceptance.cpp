// End-to-end acceptance gate: one test case per release criterion, each
// printing a single PASS/FAIL line with the observed value and its bound.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "aggr/analysis.hpp"
#include "aggr/cli.hpp"

using namespace aggr;
namespace fs = std::filesystem;

namespace {

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void verdict_line(int criterion, bool ok, const std::string& detail) {
    std::printf("[criterion %2d] %s  %s\n", criterion, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

}  // namespace

TEST_CASE("1: full-feedback convergence of the accurate worker") {
    Timer timer;
    int hits = 0;
    const int seeds = 30;
    for (int k = 1; k <= seeds; ++k) {
        const Trajectory traj = run_scenario(
            full_feedback_scenario(MechanismKind::Owa, 5, 500, static_cast<std::uint64_t>(k)));
        if (traj.final_theta[0] >= 0.85) ++hits;
    }
    const double secs = timer.seconds();
    const bool ok = hits >= 28 && secs < 5.0;
    verdict_line(1, ok,
                 "chosen prob of worker 1 >= 0.85 in " + std::to_string(hits) + "/30 seeds (need "
                 ">= 28), " + fmt(secs) + "s (< 5s)");
    CHECK(hits >= 28);
    CHECK(secs < 5.0);
}

TEST_CASE("2: limited-feedback convergence of the accurate worker") {
    Timer timer;
    double sum = 0.0;
    const int seeds = 30;
    for (int k = 1; k <= seeds; ++k) {
        const Trajectory traj = run_scenario(
            limited_feedback_scenario(MechanismKind::Oms, 5, 2500, static_cast<std::uint64_t>(k)));
        sum += traj.final_theta[0];
    }
    const double mean = sum / seeds;
    const double secs = timer.seconds();
    const bool ok = mean >= 0.70 && secs < 30.0;
    verdict_line(2, ok,
                 "mean chosen prob of worker 1 = " + fmt(mean) + " (need >= 0.70), " + fmt(secs) +
                 "s (< 30s)");
    CHECK(mean >= 0.70);
    CHECK(secs < 30.0);
}

TEST_CASE("3: full-feedback regret bound and sqrt growth") {
    const VerdictReport bound = regret_bound_check(MechanismKind::Owa, 50, 500, 30);
    const VerdictReport slope =
        regret_slope_check(MechanismKind::Owa, 50, {125, 250, 500, 1000, 2000}, 30);
    const bool ok = bound.passed && slope.passed;
    verdict_line(3, ok,
                 "mean R(T) = " + fmt(bound.observed) + " (bound " + fmt(bound.bound_or_expected) +
                 "), log-log slope = " + fmt(slope.observed) + " (need 0.3..0.7)");
    CHECK(bound.passed);
    CHECK(slope.passed);
}

TEST_CASE("4: limited-feedback regret bound and shrinking average") {
    const VerdictReport bound = regret_bound_check(MechanismKind::Oms, 5, 2500, 30);
    const VerdictReport decrease =
        regret_decrease_check(MechanismKind::Oms, 5, {625, 1250, 2500}, 30);
    const bool ok = bound.passed && decrease.passed;
    verdict_line(4, ok,
                 "mean R(T) = " + fmt(bound.observed) + " (bound " + fmt(bound.bound_or_expected) +
                 "), R(T)/T decreasing: " + (decrease.passed ? "yes" : "no"));
    CHECK(bound.passed);
    CHECK(decrease.passed);
}

TEST_CASE("5: truthfulness of the two reweighing mechanisms") {
    Timer timer;
    const VerdictReport owa = truthfulness_check(MechanismKind::Owa, 0.01);
    const VerdictReport oms = truthfulness_check(MechanismKind::Oms, 0.01);
    const double secs = timer.seconds();
    const bool ok = owa.passed && oms.passed && secs < 1.0;
    verdict_line(5, ok,
                 "max gains " + fmt(owa.observed) + " / " + fmt(oms.observed) + " within alpha*h^2"
                 " + 1e-9 over the q grid, " + fmt(secs) + "s (< 1s)");
    CHECK(owa.passed);
    CHECK(oms.passed);
    CHECK(secs < 1.0);
}

TEST_CASE("6: quantified incentives to lie under the benchmarks") {
    MechContext hedge;
    hedge.kind = MechanismKind::Hedge;
    hedge.eta = 1.0;
    const double hedge_gain = grid_best_response(hedge, 0.7, 0.01).gain;
    const bool hedge_ok = hedge_gain >= 0.005 && hedge_gain <= 0.010;

    const double em_gain = em_always_high_gain(0.7, 0.6, 5, 1.0, 1.0);
    const bool em_ok = std::abs(em_gain - 0.0655) <= 0.1 * 0.0655;

    MechContext exp3;
    exp3.kind = MechanismKind::Exp3;
    exp3.eta = 1.0;
    exp3.beta = oms_params(5, 2500).second;
    exp3.theta = 0.2;
    exp3.n_workers = 5;
    bool exp3_ok = false;
    double exp3_gain = 0.0, exp3_q = 0.0;
    for (double q : {0.1, 0.3, 0.4, 0.6, 0.7, 0.9}) {
        const double g = grid_best_response(exp3, q, 0.01).gain;
        if (g > 1e-6 && g > exp3_gain) {
            exp3_ok = true;
            exp3_gain = g;
            exp3_q = q;
        }
    }
    const bool ok = hedge_ok && em_ok && exp3_ok;
    verdict_line(6, ok,
                 "exp-weights gain " + fmt(hedge_gain) + " in [0.005,0.010]; reliability-EM gain " +
                 fmt(em_gain) + " within 10% of 0.0655; bandit gain " + fmt(exp3_gain) + " at q=" +
                 fmt(exp3_q));
    CHECK(hedge_ok);
    CHECK(em_ok);
    CHECK(exp3_ok);
}

TEST_CASE("7: linear-regret witnesses for median and reliability-EM") {
    const VerdictReport median = linear_regret_witness(MechanismKind::Median, 10);
    const VerdictReport em = linear_regret_witness(MechanismKind::Em, 10);
    const bool median_exact = std::abs(median.observed - 0.5) <= 1e-9;
    const bool ok = median.passed && em.passed && median_exact;
    verdict_line(7, ok,
                 "median R(T)/T = " + fmt(median.observed) + " (= 0.5 +/- 1e-9); EM R(T)/T = " +
                 fmt(em.observed) + " (>= 0.4, non-decreasing)");
    CHECK(median.passed);
    CHECK(median_exact);
    CHECK(em.passed);
}

TEST_CASE("8: catch-up time of a newly arriving accurate worker") {
    const VerdictReport r = responsiveness_check(30);
    verdict_line(8, r.passed,
                 "mean catch-up " + fmt(r.observed) + " slots (bound " +
                 fmt(r.bound_or_expected) + ")");
    CHECK(r.passed);
}

TEST_CASE("9: robustness to verification label flips") {
    const auto reports = robustness_sweep({0.05, 0.1}, 30);
    bool ok = true;
    std::string detail;
    for (const VerdictReport& r : reports) {
        ok = ok && r.passed;
        if (!detail.empty()) detail += "; ";
        detail += r.check_name + " " + fmt(r.observed) + " <= " + fmt(r.bound_or_expected);
    }
    verdict_line(9, ok, detail);
    for (const VerdictReport& r : reports) {
        INFO(r.check_name << ": " << r.notes);
        CHECK(r.passed);
    }
}

TEST_CASE("10: byte-identical artifacts for identical config and seed") {
    const fs::path base = fs::temp_directory_path() / "aggrsim_acceptance";
    fs::remove_all(base);
    const fs::path a = base / "a", b = base / "b", sa = base / "sa", sb = base / "sb";
    bool ok = cmd_run("configs/owa_full.cfg", a.string(), std::nullopt) == 0 &&
              cmd_run("configs/owa_full.cfg", b.string(), std::nullopt) == 0;
    ok = ok && read_file((a / "trajectory.csv").string()) ==
                   read_file((b / "trajectory.csv").string()) &&
         read_file((a / "summary.json").string()) == read_file((b / "summary.json").string());
    SweepSpec spec;
    spec.axis = "T";
    spec.values = {"125", "250"};
    ok = ok && cmd_sweep("configs/owa_full.cfg", spec, sa.string(), 5, 4, std::nullopt) == 0 &&
         cmd_sweep("configs/owa_full.cfg", spec, sb.string(), 5, 4, std::nullopt) == 0;
    ok = ok && read_file((sa / "sweep.csv").string()) == read_file((sb / "sweep.csv").string());
    verdict_line(10, ok, "run and sweep artifacts identical across repeated invocations");
    CHECK(ok);
}
