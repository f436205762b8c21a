#pragma once

#include <utility>
#include <vector>

#include "aggr/core.hpp"
#include "aggr/rng.hpp"

namespace aggr {

enum class MechanismKind { Owa, Oms, Hedge, Em, Median, Exp3 };

const char* kind_name(MechanismKind kind);

struct MechanismParams {
    double alpha = 0.0;   // multiplicative step size (OWA, OMS)
    double beta = 0.0;    // exploitation floor (OMS, EXP3)
    double eta = 0.0;     // exponential learning rate (Hedge, EXP3)
    // Dawid-Skene EM hyperparameters; prior_a/prior_b are the Beta prior,
    // distinct from the step sizes above.
    double em_prior_a = 1.0;
    double em_prior_b = 1.0;
    double em_truth_prior = 0.5;
    double em_init_reliability = 0.6;
};

// Theorem step size for online weighted aggregation: (2/3) sqrt(2 ln N / T).
// Throws std::domain_error when the horizon is too small for alpha < 1/2.
double owa_alpha(int n_workers, long horizon);

// Theorem step sizes for online mixed selection:
// alpha = sqrt(ln N / (7 N T)), beta = 2 alpha N. Requires beta <= 1/2.
std::pair<double, double> oms_params(int n_workers, long horizon);

// Median of the reports for one prompt, using the lower-of-two convention for
// even counts (1-based index N/2, else (N+1)/2).
double median_aggregate(std::vector<double> reports_for_prompt);

// Posterior probability that the latent label is 1 given `ones` positive
// reports out of n, all workers sharing reliability w0, uniform truth prior.
double em_posterior_shared(int ones, int n, double w0);

// General Dawid-Skene E-step with per-worker reliabilities. Reduces to
// em_posterior_shared when all reliabilities are equal and truth_prior = 1/2.
double em_posterior(const std::vector<int>& binary_reports,
                    const std::vector<double>& reliabilities, double truth_prior);

// One weight-update/selection scheme advanced slot by slot. Single-owner
// mutable state; distinct runs never share an instance.
class Mechanism {
public:
    Mechanism(MechanismKind kind, int n_workers, MechanismParams params);

    MechanismKind kind() const { return kind_; }
    int n_workers() const { return static_cast<int>(weights_.size()); }
    const MechanismParams& params() const { return params_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& gamma() const { return gamma_; }
    const std::vector<double>& reliabilities() const { return reliabilities_; }
    long slot() const { return slot_; }
    long clamp_events() const { return clamp_events_; }

    // w_i / sum w, the aggregation share (full feedback) and the OMS
    // selection distribution.
    std::vector<double> chosen_probs() const;

    // Distribution the mechanism actually samples from when limited feedback
    // is in force: theta for OMS, (1-beta) theta + beta/N for EXP3.
    std::vector<double> selection_probs() const;

    // Samples a worker from selection_probs(). OMS/EXP3 only.
    int select(Rng& rng) const;

    // Consumes one slot's reports and verified labels.
    void update(const SlotBatch& batch);

    // Mid-run arrival (OWA and Hedge only): appends a worker with the given
    // starting weight; incumbents keep their accumulated weights.
    void add_worker(double initial_weight);

private:
    void update_owa(const SlotBatch& batch);
    void update_oms(const SlotBatch& batch);
    void update_hedge(const SlotBatch& batch);
    void update_em(const SlotBatch& batch);
    void update_exp3(const SlotBatch& batch);
    double clamp_weight(double w);

    MechanismKind kind_;
    MechanismParams params_;
    std::vector<double> weights_;
    std::vector<double> gamma_;          // OMS auxiliary scores
    std::vector<double> reliabilities_;  // EM worker reliabilities
    long slot_ = 0;
    long clamp_events_ = 0;
};

}  // namespace aggr
