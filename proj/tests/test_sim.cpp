#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "aggr/analysis.hpp"
#include "aggr/sim.hpp"

using namespace aggr;

TEST_CASE("standard_bands cycles the five reference bands") {
    const auto bands = standard_bands(7);
    CHECK(bands.size() == 7);
    CHECK(bands[0].low == doctest::Approx(0.0));
    CHECK(bands[0].high == doctest::Approx(0.1));
    CHECK(bands[4].low == doctest::Approx(0.75));
    CHECK(bands[5].low == doctest::Approx(0.0));  // wraps around
    CHECK(bands[6].low == doctest::Approx(0.45));
}

TEST_CASE("config validation names the failing field") {
    ScenarioConfig cfg = full_feedback_scenario(MechanismKind::Owa, 5, 100, 1);
    CHECK_NOTHROW(cfg.validate());

    cfg.flip_epsilon = 0.6;
    CHECK_THROWS_WITH_AS(cfg.validate(), "config: flip_epsilon must be in [0, 1/2)",
                         std::invalid_argument);
    cfg.flip_epsilon = 0.0;

    cfg.noise_bands.pop_back();
    CHECK_THROWS_WITH_AS(cfg.validate(), "config: noise_bands length != N", std::invalid_argument);
    cfg.noise_bands = standard_bands(5);

    cfg.feedback = FeedbackMode::Limited;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.feedback = FeedbackMode::Full;

    ArrivalSpec arrival;
    arrival.t0 = 101;  // beyond the horizon
    arrival.band = {0.0, 0.1};
    cfg.arrival = arrival;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.arrival->t0 = 50;
    CHECK_NOTHROW(cfg.validate());

    cfg.arrival.reset();
    cfg.median_subsample = 3;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // not the median mechanism
}

TEST_CASE("auto parameter resolution matches the closed forms") {
    ScenarioConfig owa = full_feedback_scenario(MechanismKind::Owa, 5, 500, 1);
    CHECK(owa.resolved_params().alpha == doctest::Approx(0.0534904006).epsilon(1e-8));
    ScenarioConfig oms = limited_feedback_scenario(MechanismKind::Oms, 5, 2500, 1);
    CHECK(oms.resolved_params().alpha == doctest::Approx(0.00428877327).epsilon(1e-8));
    CHECK(oms.resolved_params().beta == doctest::Approx(0.0428877327).epsilon(1e-8));
    owa.auto_params = false;
    owa.params.alpha = 0.1;
    CHECK(owa.resolved_params().alpha == doctest::Approx(0.1));
}

TEST_CASE("flip_labels identity, bounds, and flip fraction") {
    Rng rng(3);
    const std::vector<int> labels(100000, 1);
    CHECK(flip_labels(labels, 0.0, rng) == labels);
    const auto flipped = flip_labels(labels, 0.1, rng);
    long flips = 0;
    for (std::size_t j = 0; j < labels.size(); ++j)
        if (flipped[j] != labels[j]) ++flips;
    const double fraction = flips / 100000.0;
    CHECK(std::abs(fraction - 0.1) < 0.005);
    CHECK_THROWS_AS(flip_labels(labels, 0.5, rng), std::invalid_argument);
}

TEST_CASE("zero-horizon run yields an empty trajectory") {
    ScenarioConfig cfg = full_feedback_scenario(MechanismKind::Owa, 5, 0, 1);
    const Trajectory traj = run_scenario(cfg);
    CHECK(traj.slots.empty());
    CHECK(traj.ledger.slot_count == 0);
    CHECK(traj.final_weights.size() == 5);
}

TEST_CASE("same seed gives identical trajectories") {
    const ScenarioConfig cfg = full_feedback_scenario(MechanismKind::Owa, 5, 50, 9);
    const Trajectory a = run_scenario(cfg);
    const Trajectory b = run_scenario(cfg);
    REQUIRE(a.slots.size() == b.slots.size());
    for (std::size_t t = 0; t < a.slots.size(); ++t) {
        CHECK(a.slots[t].weights == b.slots[t].weights);
        CHECK(a.slots[t].platform_loss == b.slots[t].platform_loss);
        CHECK(a.slots[t].cum_regret == b.slots[t].cum_regret);
    }
    CHECK(a.final_weights == b.final_weights);
}

TEST_CASE("theta rows are distributions and start uniform") {
    ScenarioConfig cfg = full_feedback_scenario(MechanismKind::Owa, 5, 20, 4);
    const Trajectory traj = run_scenario(cfg);
    for (const SlotRecord& rec : traj.slots) {
        const double total = std::accumulate(rec.theta.begin(), rec.theta.end(), 0.0);
        CHECK(std::abs(total - 1.0) < 1e-9);
    }
    for (double p : traj.slots[0].theta) CHECK(p == doctest::Approx(0.2));
}

TEST_CASE("accurate worker dominates the full-feedback run") {
    ScenarioConfig cfg = full_feedback_scenario(MechanismKind::Owa, 5, 500, 1);
    const Trajectory traj = run_scenario(cfg);
    CHECK(traj.final_theta[0] > 0.9);
    // sample mean losses follow the noise-band ordering
    for (std::size_t i = 1; i < 5; ++i)
        CHECK(traj.ledger.per_worker_true_loss[i] > traj.ledger.per_worker_true_loss[i - 1]);
}

TEST_CASE("toggling the flip rate leaves labels and beliefs untouched") {
    ScenarioConfig clean = full_feedback_scenario(MechanismKind::Owa, 5, 30, 11);
    ScenarioConfig noisy = clean;
    noisy.flip_epsilon = 0.1;
    const Trajectory a = run_scenario(clean);
    const Trajectory b = run_scenario(noisy);
    for (std::size_t t = 0; t < a.slots.size(); ++t)
        CHECK(a.slots[t].worker_loss == b.slots[t].worker_loss);
}

TEST_CASE("limited feedback selects one worker per slot") {
    ScenarioConfig cfg = limited_feedback_scenario(MechanismKind::Oms, 5, 200, 5);
    const Trajectory traj = run_scenario(cfg);
    for (const SlotRecord& rec : traj.slots) {
        CHECK(rec.selected >= 0);
        CHECK(rec.selected < 5);
    }
    CHECK(traj.final_theta[0] > 0.2);  // accurate worker gains share
}

TEST_CASE("limited expected and realized losses agree on average") {
    double expected_sum = 0.0, realized_sum = 0.0;
    long slots = 0;
    for (int k = 1; k <= 30; ++k) {
        ScenarioConfig cfg = limited_feedback_scenario(MechanismKind::Oms, 5, 200,
                                                       static_cast<std::uint64_t>(k));
        const Trajectory traj = run_scenario(cfg);
        expected_sum += traj.ledger.cumulative_platform_loss;
        realized_sum += traj.ledger.realized_platform_loss;
        slots += traj.ledger.slot_count;
    }
    CHECK(std::abs(expected_sum - realized_sum) / static_cast<double>(slots) < 0.02);
}

TEST_CASE("arrival at slot one with unit weight matches a from-start worker") {
    ScenarioConfig direct = full_feedback_scenario(MechanismKind::Owa, 2, 100, 13);
    direct.auto_params = false;
    direct.params.alpha = 0.05;
    direct.noise_bands = {{0.0, 0.1}, {0.45, 0.55}};

    ScenarioConfig via_arrival = direct;
    via_arrival.n_workers = 1;
    via_arrival.noise_bands = {{0.0, 0.1}};
    via_arrival.strategies.assign(1, StrategySpec{});
    ArrivalSpec arrival;
    arrival.t0 = 1;
    arrival.initial_weight = 1.0;
    arrival.band = {0.45, 0.55};
    via_arrival.arrival = arrival;

    const Trajectory a = run_scenario(direct);
    const Trajectory b = run_scenario(via_arrival);
    CHECK(a.final_weights[0] == doctest::Approx(b.final_weights[0]).epsilon(1e-12));
    CHECK(a.final_weights[1] == doctest::Approx(b.final_weights[1]).epsilon(1e-12));
}

TEST_CASE("catchup_time finds the first overtaking slot and counts ties") {
    // identical bands and equal weight at arrival: tie at t0 itself
    ScenarioConfig cfg = full_feedback_scenario(MechanismKind::Owa, 1, 50, 17);
    cfg.auto_params = false;
    cfg.params.alpha = 0.05;
    cfg.noise_bands = {{0.2, 0.3}};
    cfg.strategies.assign(1, StrategySpec{});
    ArrivalSpec arrival;
    arrival.t0 = 5;
    arrival.initial_weight = 1.0;
    arrival.band = {0.2, 0.3};
    cfg.arrival = arrival;
    // incumbent weight at t0 is below 1 after four lossy slots, so the
    // entrant's unit weight already ties or exceeds it on entry
    const Trajectory traj = run_scenario(cfg);
    const auto caught = catchup_time(traj, 1, 0);
    REQUIRE(caught.has_value());
    CHECK(*caught == 5);
}

TEST_CASE("catchup_time is empty when the entrant never recovers") {
    ScenarioConfig cfg = full_feedback_scenario(MechanismKind::Owa, 1, 50, 19);
    cfg.auto_params = false;
    cfg.params.alpha = 0.05;
    cfg.noise_bands = {{0.0, 0.0}};  // perfect incumbent
    cfg.strategies.assign(1, StrategySpec{});
    ArrivalSpec arrival;
    arrival.t0 = 1;
    arrival.initial_weight = 0.5;
    arrival.band = {0.4, 0.5};  // strictly worse entrant: zero gap in its favor
    cfg.arrival = arrival;
    const Trajectory traj = run_scenario(cfg);
    CHECK(!catchup_time(traj, 1, 0).has_value());
}

TEST_CASE("median subsample stays within the pool and keeps the run deterministic") {
    ScenarioConfig cfg = median_witness_scenario(50, 23);
    cfg.median_subsample = 3;
    const Trajectory a = run_scenario(cfg);
    const Trajectory b = run_scenario(cfg);
    for (std::size_t t = 0; t < a.slots.size(); ++t)
        CHECK(a.slots[t].platform_loss == b.slots[t].platform_loss);
}
