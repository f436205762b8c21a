#include "aggr/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aggr {

namespace {

void check_batch(const SlotBatch& batch) {
    const std::size_t m = static_cast<std::size_t>(batch.prompt_count);
    if (batch.prompt_count < 1) throw std::invalid_argument("batch: prompt_count must be >= 1");
    if (batch.true_labels.size() != m || batch.verified_labels.size() != m)
        throw std::invalid_argument("batch: label length != prompt_count");
    for (const auto& r : batch.reports)
        if (r.size() != m) throw std::invalid_argument("batch: report length != prompt_count");
    if (!batch.beliefs.empty() && batch.beliefs.size() != batch.reports.size())
        throw std::invalid_argument("batch: beliefs/reports worker count mismatch");
    for (const auto& b : batch.beliefs)
        if (b.size() != m) throw std::invalid_argument("batch: belief length != prompt_count");
}

const std::vector<std::vector<double>>& truthful_side(const SlotBatch& batch) {
    return batch.beliefs.empty() ? batch.reports : batch.beliefs;
}

}  // namespace

double weighted_aggregate(const std::vector<double>& weights,
                          const std::vector<double>& reports_for_prompt) {
    if (weights.empty() || weights.size() != reports_for_prompt.size())
        throw std::invalid_argument("weighted_aggregate: empty inputs or length mismatch");
    double total = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        total += weights[i];
        acc += weights[i] * reports_for_prompt[i];
    }
    if (!(total > 0.0)) throw std::domain_error("weighted_aggregate: degenerate weights (zero total)");
    return acc / total;
}

double slot_loss(const std::vector<double>& report, const std::vector<int>& labels) {
    if (report.size() != labels.size() || report.empty())
        throw std::invalid_argument("slot_loss: length mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < report.size(); ++j) {
        const double d = report[j] - static_cast<double>(labels[j]);
        acc += d * d;
    }
    return acc / static_cast<double>(report.size());
}

double ledger_update_full(RegretLedger& ledger, const SlotBatch& batch,
                          const std::vector<double>& weights,
                          const std::vector<double>* aggregation_override) {
    check_batch(batch);
    const int m = batch.prompt_count;
    const std::size_t n = batch.reports.size();
    if (ledger.per_worker_true_loss.empty()) ledger.per_worker_true_loss.assign(n, 0.0);
    if (ledger.per_worker_true_loss.size() < n) ledger.per_worker_true_loss.resize(n, 0.0);

    std::vector<double> aggregated(static_cast<std::size_t>(m));
    if (aggregation_override != nullptr) {
        if (aggregation_override->size() != static_cast<std::size_t>(m))
            throw std::invalid_argument("ledger_update_full: override length != prompt_count");
        aggregated = *aggregation_override;
    } else {
        if (weights.size() != n)
            throw std::invalid_argument("ledger_update_full: weights/reports mismatch");
        std::vector<double> column(n);
        for (int j = 0; j < m; ++j) {
            for (std::size_t i = 0; i < n; ++i) column[i] = batch.reports[i][static_cast<std::size_t>(j)];
            aggregated[static_cast<std::size_t>(j)] = weighted_aggregate(weights, column);
        }
    }

    const double platform = slot_loss(aggregated, batch.verified_labels);
    ledger.cumulative_platform_loss += platform;
    ledger.realized_platform_loss += platform;

    const auto& truthful = truthful_side(batch);
    for (std::size_t i = 0; i < n; ++i)
        ledger.per_worker_true_loss[i] += slot_loss(truthful[i], batch.true_labels);
    ledger.slot_count += 1;
    return platform;
}

double ledger_update_limited(RegretLedger& ledger, const SlotBatch& batch,
                             const std::vector<double>& selection_distribution) {
    check_batch(batch);
    if (!batch.selected_worker.has_value())
        throw std::invalid_argument("ledger_update_limited: selected_worker missing");
    const std::size_t n = batch.reports.size();
    if (selection_distribution.size() != n)
        throw std::invalid_argument("ledger_update_limited: distribution length mismatch");
    double total = 0.0;
    for (double p : selection_distribution) total += p;
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("ledger_update_limited: distribution not normalized");
    const int sel = *batch.selected_worker;
    if (sel < 0 || static_cast<std::size_t>(sel) >= n)
        throw std::invalid_argument("ledger_update_limited: selected worker out of range");
    if (ledger.per_worker_true_loss.empty()) ledger.per_worker_true_loss.assign(n, 0.0);

    double expected = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        expected += selection_distribution[i] * slot_loss(batch.reports[i], batch.verified_labels);
    ledger.cumulative_platform_loss += expected;
    ledger.realized_platform_loss +=
        slot_loss(batch.reports[static_cast<std::size_t>(sel)], batch.verified_labels);

    const auto& truthful = truthful_side(batch);
    for (std::size_t i = 0; i < n; ++i)
        ledger.per_worker_true_loss[i] += slot_loss(truthful[i], batch.true_labels);
    ledger.slot_count += 1;
    return expected;
}

std::pair<double, double> regret(const RegretLedger& ledger) {
    if (ledger.slot_count == 0) throw std::domain_error("regret: empty ledger");
    const double best =
        *std::min_element(ledger.per_worker_true_loss.begin(), ledger.per_worker_true_loss.end());
    const double r = ledger.cumulative_platform_loss - best;
    return {r, r / static_cast<double>(ledger.slot_count)};
}

}  // namespace aggr
