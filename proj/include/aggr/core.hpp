#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace aggr {

// One time slot's worth of reports and labels. `beliefs` holds each worker's
// truthful preference vector; when empty, the reports are taken as truthful.
struct SlotBatch {
    long slot_index = 1;
    int prompt_count = 0;
    std::vector<std::vector<double>> reports;   // one vector per worker, length = prompt_count
    std::vector<std::vector<double>> beliefs;   // optional truthful counterparts
    std::vector<int> true_labels;               // p_j in {0,1}
    std::vector<int> verified_labels;           // possibly flipped labels used for reweighing
    std::optional<int> selected_worker;         // present only under limited feedback
};

// Cumulative loss accounting for one run.
struct RegretLedger {
    double cumulative_platform_loss = 0.0;        // expected loss under limited feedback
    std::vector<double> per_worker_true_loss;     // benchmark term, truthful losses vs true labels
    double realized_platform_loss = 0.0;          // loss of the actually selected worker
    long slot_count = 0;
};

// Weighted mean of the reports for one prompt: sum_i w_i r_i / sum_i w_i.
double weighted_aggregate(const std::vector<double>& weights,
                          const std::vector<double>& reports_for_prompt);

// Mean squared error of one report vector against binary labels, in [0,1].
double slot_loss(const std::vector<double>& report, const std::vector<int>& labels);

// Advances the ledger by one full-feedback slot. The platform term is the
// aggregation loss against verified labels (Eq.-style weighted mean, or the
// per-prompt override used by the median benchmark); the benchmark term uses
// each worker's truthful loss against the true labels. Returns the platform
// slot loss.
double ledger_update_full(RegretLedger& ledger, const SlotBatch& batch,
                          const std::vector<double>& weights,
                          const std::vector<double>* aggregation_override = nullptr);

// Advances the ledger by one limited-feedback slot: the platform term is the
// expected loss sum_i theta_i * lhat_i against verified labels, the realized
// term the selected worker's loss. Returns the expected platform slot loss.
double ledger_update_limited(RegretLedger& ledger, const SlotBatch& batch,
                             const std::vector<double>& selection_distribution);

// (R(T), R(T)/T). May be negative in finite samples; not clamped.
std::pair<double, double> regret(const RegretLedger& ledger);

}  // namespace aggr
