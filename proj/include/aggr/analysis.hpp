#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aggr/sim.hpp"

namespace aggr {

struct VerdictReport {
    std::string check_name;
    bool passed = false;
    double observed = 0.0;
    double bound_or_expected = 0.0;
    double tolerance = 0.0;
    int seeds_used = 0;
    std::string notes;
};

// Canonical synthetic scenarios.
ScenarioConfig full_feedback_scenario(MechanismKind kind, int n_workers, long horizon,
                                      std::uint64_t seed);
ScenarioConfig limited_feedback_scenario(MechanismKind kind, int n_workers, long horizon,
                                         std::uint64_t seed);
// One perfect worker against two fixed-error workers whose reports sit at
// squared distance exactly 1/2 from every label; the median tracks them.
ScenarioConfig median_witness_scenario(long horizon, std::uint64_t seed);
// One perfect worker against four workers reporting the complement of every
// label; the reliability-weighting scheme locks onto the majority.
ScenarioConfig em_witness_scenario(long horizon, std::uint64_t seed);
// New accurate worker entering against an established noisier incumbent with
// a 4x weight deficit.
ScenarioConfig arrival_scenario(std::uint64_t seed);

struct SeedStats {
    double mean = 0.0;
    double std_dev = 0.0;
    int count = 0;
};

double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys);

// Max best-response gain over q in {0.05, 0.10, ..., 0.95}. For OWA/OMS the
// verdict passes when the max gain stays within the quadratic grid slack
// alpha * step^2 (rechecked at step/10 before declaring a violation); for
// Hedge/EM/EXP3 it passes when a gain above 10x the slack is exhibited.
VerdictReport truthfulness_check(MechanismKind kind, double grid_step = 0.01);
std::vector<VerdictReport> truthfulness_suite(double grid_step = 0.01);

// Mean R(T) over seeds against the analytic bound: 3 sqrt(T ln N / 2) for
// OWA full feedback, 2 sqrt(7) sqrt(N T ln N) for OMS limited feedback.
VerdictReport regret_bound_check(MechanismKind kind, int n_workers, long horizon, int seeds);
// Log-log slope of mean R(T) across horizons must land in [0.3, 0.7].
VerdictReport regret_slope_check(MechanismKind kind, int n_workers,
                                 const std::vector<long>& horizons, int seeds);
// Mean R(T)/T strictly decreasing across the given horizons.
VerdictReport regret_decrease_check(MechanismKind kind, int n_workers,
                                    const std::vector<long>& horizons, int seeds);
std::vector<VerdictReport> regret_suite(int seeds = 30);

// Median: R(T)/T = 1/2 exactly; EM: R(T)/T >= 0.4 with a non-decreasing
// trend over T in {500, 1000, 2000}.
VerdictReport linear_regret_witness(MechanismKind kind, int seeds);
std::vector<VerdictReport> linear_witness_suite(int seeds = 10);

// Mean measured catch-up time <= ceil(ln(w_k/w_i) / (alpha * Delta)).
VerdictReport responsiveness_check(int seeds = 30);
std::vector<VerdictReport> responsiveness_suite(int seeds = 30);

// For each epsilon: mean time-average regret <= clean mean + 2 eps + 0.05,
// and the grid best response sits at (1 - 2 eps) q + eps within one grid cell.
std::vector<VerdictReport> robustness_sweep(const std::vector<double>& epsilons, int seeds = 30);
std::vector<VerdictReport> robustness_suite(int seeds = 30);

std::vector<VerdictReport> run_suite(const std::string& name, int seeds = 30);

struct TrajectorySummary {
    double final_regret = 0.0;
    double final_avg_regret = 0.0;
    std::vector<double> final_weights;
    std::vector<double> final_theta;
    std::vector<double> per_worker_total_loss;
    long clamp_events = 0;
};

TrajectorySummary summarize(const Trajectory& trajectory);

}  // namespace aggr
