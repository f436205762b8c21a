#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aggr/core.hpp"
#include "aggr/mechanisms.hpp"
#include "aggr/workers.hpp"

namespace aggr {

enum class FeedbackMode { Full, Limited };

struct ArrivalSpec {
    long t0 = 1;                  // slot at which the worker starts reporting
    double initial_weight = 1.0;  // must stay below the incumbents' weights
    NoiseBand band;
    StrategySpec strategy;
};

// Full declarative description of one experiment run.
struct ScenarioConfig {
    MechanismKind mechanism = MechanismKind::Owa;
    bool auto_params = true;  // resolve alpha/beta/eta from N and T
    MechanismParams params;
    int n_workers = 5;
    long horizon = 500;
    int prompts_per_slot = 20;
    std::vector<NoiseBand> noise_bands;   // one per base worker
    std::vector<StrategySpec> strategies; // one per base worker
    FeedbackMode feedback = FeedbackMode::Full;
    double flip_epsilon = 0.0;
    std::optional<ArrivalSpec> arrival;
    std::optional<int> median_subsample;  // median on k uniformly drawn workers
    std::uint64_t seed = 1;

    void validate() const;  // throws std::invalid_argument naming the field
    MechanismParams resolved_params() const;
};

// The five standard synthetic noise bands, cycled when N > 5.
std::vector<NoiseBand> standard_bands(int n_workers);

struct SlotRecord {
    long slot = 0;
    std::vector<double> weights;      // w^t entering the slot
    std::vector<double> theta;        // chosen probabilities at the slot
    std::vector<double> worker_loss;  // truthful per-worker losses vs true labels
    int selected = -1;                // limited feedback only
    double platform_loss = 0.0;
    double cum_regret = 0.0;
    double avg_regret = 0.0;
};

struct Trajectory {
    std::vector<SlotRecord> slots;
    RegretLedger ledger;
    std::vector<double> final_weights;  // w^{T+1}
    std::vector<double> final_theta;
    long clamp_events = 0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    MechanismParams resolved;
};

Trajectory run_scenario(const ScenarioConfig& config);

// Each label flipped independently with probability epsilon in [0, 1/2).
std::vector<int> flip_labels(const std::vector<int>& labels, double epsilon, Rng& rng);

// First slot s >= t0 at which the new worker's weight reaches the
// incumbent's (ties count), or nullopt if never within the horizon.
std::optional<long> catchup_time(const Trajectory& trajectory, int new_worker, int incumbent);

}  // namespace aggr
