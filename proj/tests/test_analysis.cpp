#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "aggr/analysis.hpp"

using namespace aggr;

TEST_CASE("least_squares_slope recovers a line and rejects degenerates") {
    CHECK(least_squares_slope({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}) == doctest::Approx(2.0));
    CHECK(least_squares_slope({1.0, 2.0, 3.0}, {5.0, 5.0, 5.0}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(least_squares_slope({1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(least_squares_slope({2.0, 2.0}, {1.0, 3.0}), std::invalid_argument);
}

TEST_CASE("truthfulness verdicts: incentive-free mechanisms pass, others are exposed") {
    const auto reports = truthfulness_suite();
    REQUIRE(reports.size() == 5);
    for (const VerdictReport& r : reports) {
        INFO(r.check_name << ": " << r.notes);
        CHECK(r.passed);
    }
    // the truthful pair is certified by a tight quadratic bound
    CHECK(reports[0].check_name == "truthfulness-owa");
    CHECK(reports[0].observed <= reports[0].bound_or_expected + 1e-9);
    CHECK(reports[1].check_name == "truthfulness-oms");
    CHECK(reports[1].observed <= reports[1].bound_or_expected + 1e-9);
    // the untruthful three are certified by an exhibited profitable lie
    for (std::size_t i = 2; i < 5; ++i) CHECK(reports[i].observed > reports[i].bound_or_expected);
    CHECK_THROWS_AS(truthfulness_check(MechanismKind::Median), std::invalid_argument);
}

TEST_CASE("regret bound formulas evaluate to the published constants") {
    // bounds checked without simulation: 3 sqrt(T ln N / 2) and 2 sqrt7 sqrt(N T ln N)
    CHECK(3.0 * std::sqrt(500.0 * std::log(50.0) / 2.0) == doctest::Approx(93.82).epsilon(1e-3));
    CHECK(2.0 * std::sqrt(7.0) * std::sqrt(5.0 * 2500.0 * std::log(5.0)) ==
          doctest::Approx(750.5).epsilon(1e-3));
}

TEST_CASE("owa regret stays below the theorem bound at small replication") {
    const VerdictReport r = regret_bound_check(MechanismKind::Owa, 50, 500, 5);
    INFO(r.notes);
    CHECK(r.passed);
    CHECK(r.bound_or_expected == doctest::Approx(93.8192505).epsilon(1e-6));
    CHECK_THROWS_AS(regret_bound_check(MechanismKind::Hedge, 5, 100, 1), std::invalid_argument);
}

TEST_CASE("oms regret stays below the theorem bound at small replication") {
    const VerdictReport r = regret_bound_check(MechanismKind::Oms, 5, 2500, 5);
    INFO(r.notes);
    CHECK(r.passed);
    CHECK(r.bound_or_expected == doctest::Approx(750.535322).epsilon(1e-6));
}

TEST_CASE("owa regret grows like sqrt(T)") {
    const VerdictReport r = regret_slope_check(MechanismKind::Owa, 50, {125, 250, 500, 1000}, 5);
    INFO("slope " << r.observed);
    CHECK(r.passed);
}

TEST_CASE("oms time-average regret decreases with the horizon") {
    const VerdictReport r = regret_decrease_check(MechanismKind::Oms, 5, {625, 1250, 2500}, 5);
    INFO(r.notes);
    CHECK(r.passed);
}

TEST_CASE("median witness is pinned at one half exactly") {
    const VerdictReport r = linear_regret_witness(MechanismKind::Median, 3);
    INFO(r.notes);
    CHECK(r.passed);
    CHECK(std::abs(r.observed - 0.5) <= 1e-9);
}

TEST_CASE("owa escapes the median witness scenario") {
    // contrast: the reweighing mechanism hands the slot to the perfect worker
    ScenarioConfig cfg = median_witness_scenario(2000, 1);
    cfg.mechanism = MechanismKind::Owa;
    const Trajectory traj = run_scenario(cfg);
    const auto [r, avg] = regret(traj.ledger);
    (void)r;
    CHECK(avg < 0.1);
}

TEST_CASE("em witness keeps linear regret") {
    const VerdictReport r = linear_regret_witness(MechanismKind::Em, 3);
    INFO(r.notes);
    CHECK(r.passed);
    CHECK(r.observed >= 0.4);
    CHECK_THROWS_AS(linear_regret_witness(MechanismKind::Owa, 1), std::invalid_argument);
}

TEST_CASE("responsiveness bound holds") {
    const VerdictReport r = responsiveness_check(10);
    INFO(r.notes);
    CHECK(r.passed);
    CHECK(r.bound_or_expected == doctest::Approx(56.0));
}

TEST_CASE("responsiveness bound shrinks with a wider accuracy gap") {
    // bands [0,0.1] vs [0.75,0.85]: gap = (0.85^3-0.75^3)/0.3 - (0.1^3)/0.3 = 0.6375
    const double gap = (std::pow(0.85, 3) - std::pow(0.75, 3)) / 0.3 - std::pow(0.1, 3) / 0.3;
    CHECK(gap == doctest::Approx(0.6375).epsilon(1e-9));
    CHECK(std::ceil(std::log(4.0) / (0.083395 * gap)) == doctest::Approx(27.0));
}

TEST_CASE("robustness sweep passes at small replication") {
    const auto reports = robustness_sweep({0.05, 0.1}, 5);
    REQUIRE(reports.size() == 4);
    for (const VerdictReport& r : reports) {
        INFO(r.check_name << ": " << r.notes);
        CHECK(r.passed);
    }
    CHECK_THROWS_AS(robustness_sweep({0.7}, 1), std::invalid_argument);
}

TEST_CASE("suite dispatch by name") {
    CHECK(run_suite("truthfulness", 1).size() == 5);
    CHECK_THROWS_AS(run_suite("nonsense", 1), std::invalid_argument);
}

TEST_CASE("summarize extracts the ledger view") {
    const Trajectory traj = run_scenario(full_feedback_scenario(MechanismKind::Owa, 5, 50, 2));
    const TrajectorySummary s = summarize(traj);
    CHECK(s.final_weights.size() == 5);
    CHECK(s.per_worker_total_loss.size() == 5);
    const auto [r, avg] = regret(traj.ledger);
    CHECK(s.final_regret == doctest::Approx(r));
    CHECK(s.final_avg_regret == doctest::Approx(avg));
}
