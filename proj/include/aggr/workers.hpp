#pragma once

#include <vector>

#include "aggr/mechanisms.hpp"
#include "aggr/rng.hpp"

namespace aggr {

// Per-worker noise interval: each prompt draws eps ~ U[low, high] and the
// belief is pushed toward the wrong label by eps, so the per-prompt squared
// loss is exactly eps^2.
struct NoiseBand {
    double low = 0.0;
    double high = 0.0;
};

struct StrategySpec {
    enum class Kind { Truthful, ConstantShift, AlwaysHigh, AlwaysLow, GridBestResponse };
    Kind kind = Kind::Truthful;
    double delta = 0.0;        // ConstantShift offset, clamped into [0,1]
    double grid_step = 0.01;   // GridBestResponse resolution
    long applies_from_slot = 1;
};

// Snapshot of the mechanism state a single worker sees when choosing a report.
struct MechContext {
    MechanismKind kind = MechanismKind::Owa;
    double alpha = 0.0;
    double beta = 0.0;
    double eta = 0.0;
    int n_workers = 2;
    double weight = 1.0;        // worker's current weight
    double gamma = 1.0;         // OMS auxiliary score
    double theta = 0.5;         // selection/chosen probability
    double flip_epsilon = 0.0;  // verification flip rate known to the worker
};

std::vector<double> gen_beliefs(const NoiseBand& band, const std::vector<int>& true_labels,
                                Rng& rng);

std::vector<double> make_report(const StrategySpec& strategy, const std::vector<double>& belief,
                                const MechContext& context, long slot);

// Exact next-slot expected weight under a Bernoulli(q) belief. The selection
// variants average over the selection draw as well; for the mixed-selection
// rule the 1/theta inside the update cancels the selection probability.
double expected_next_weight_owa(double weight, double alpha, double report, double belief);
double expected_next_weight_oms(double gamma, double alpha, double beta, double theta,
                                double report, double belief);

// Closed-form expected next weight for the context's mechanism (unit starting
// weight for Hedge/EXP3). Accounts for the verification flip rate.
double expected_next_weight(const MechContext& context, double report, double belief);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

// Monte Carlo estimate of the next-slot expected weight over the label draw
// (and selection randomness for OMS/EXP3).
McEstimate expected_next_weight_mc(const MechContext& context, double report, double belief,
                                   long draws, Rng& rng);

struct BestResponse {
    double report = 0.0;  // grid argmax of the expected next weight
    double gain = 0.0;    // E[w | report] - E[w | truthful]
};

BestResponse grid_best_response(const MechContext& context, double belief, double grid_step);

// Expected-weight advantage of Always-High over Bernoulli-sampled truthful
// reporting in the unanimous-majority EM environment:
// (1-q)(gamma1 + gamma0 - 1)/(a + b + 1).
double em_always_high_gain(double belief, double w0, int n_workers, double prior_a,
                           double prior_b);

}  // namespace aggr
