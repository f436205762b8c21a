#include "aggr/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace aggr {

namespace {
constexpr double kWeightFloor = 1e-300;
}

const char* kind_name(MechanismKind kind) {
    switch (kind) {
        case MechanismKind::Owa: return "owa";
        case MechanismKind::Oms: return "oms";
        case MechanismKind::Hedge: return "hedge";
        case MechanismKind::Em: return "em";
        case MechanismKind::Median: return "median";
        case MechanismKind::Exp3: return "exp3";
    }
    return "?";
}

double owa_alpha(int n_workers, long horizon) {
    if (n_workers < 2) throw std::invalid_argument("owa_alpha: need N >= 2");
    if (horizon < 1) throw std::invalid_argument("owa_alpha: need T >= 1");
    const double alpha =
        (2.0 / 3.0) * std::sqrt(2.0 * std::log(static_cast<double>(n_workers)) /
                                static_cast<double>(horizon));
    if (alpha >= 0.5) {
        // alpha < 1/2 needs T > 32 ln N / 9
        const long min_t =
            static_cast<long>(std::floor(32.0 * std::log(static_cast<double>(n_workers)) / 9.0)) + 1;
        throw std::domain_error("owa_alpha: horizon too small for alpha < 1/2; need T >= " +
                                std::to_string(min_t));
    }
    return alpha;
}

std::pair<double, double> oms_params(int n_workers, long horizon) {
    if (n_workers < 2) throw std::invalid_argument("oms_params: need N >= 2");
    if (horizon < 1) throw std::invalid_argument("oms_params: need T >= 1");
    const double n = static_cast<double>(n_workers);
    const double t = static_cast<double>(horizon);
    const double alpha = std::sqrt(std::log(n) / (7.0 * n * t));
    const double beta = 2.0 * std::sqrt(n * std::log(n) / (7.0 * t));
    if (beta > 0.5) {
        const long min_t = static_cast<long>(std::floor(16.0 * n * std::log(n) / 7.0)) + 1;
        throw std::domain_error("oms_params: horizon too small for beta <= 1/2; need T >= " +
                                std::to_string(min_t));
    }
    if (std::abs(beta - 2.0 * alpha * n) > 1e-12)
        throw std::logic_error("oms_params: beta != 2 alpha N");
    return {alpha, beta};
}

double median_aggregate(std::vector<double> reports_for_prompt) {
    if (reports_for_prompt.empty()) throw std::invalid_argument("median_aggregate: empty input");
    std::sort(reports_for_prompt.begin(), reports_for_prompt.end());
    const std::size_t n = reports_for_prompt.size();
    const std::size_t s = (n % 2 == 0) ? n / 2 : (n + 1) / 2;  // 1-based, lower of two for even n
    return reports_for_prompt[s - 1];
}

double em_posterior_shared(int ones, int n, double w0) {
    if (n < 1 || ones < 0 || ones > n) throw std::invalid_argument("em_posterior_shared: bad counts");
    if (!(w0 > 0.0 && w0 < 1.0)) throw std::invalid_argument("em_posterior_shared: w0 not in (0,1)");
    const double exponent = static_cast<double>(2 * ones - n);
    return 1.0 / (1.0 + std::pow((1.0 - w0) / w0, exponent));
}

double em_posterior(const std::vector<int>& binary_reports,
                    const std::vector<double>& reliabilities, double truth_prior) {
    if (binary_reports.size() != reliabilities.size() || binary_reports.empty())
        throw std::invalid_argument("em_posterior: length mismatch");
    // log-likelihood ratio ln Pr(y|p=1)/Pr(y|p=0)
    double llr = std::log(truth_prior / (1.0 - truth_prior));
    for (std::size_t i = 0; i < binary_reports.size(); ++i) {
        const double w = reliabilities[i];
        llr += (binary_reports[i] == 1 ? 1.0 : -1.0) * std::log(w / (1.0 - w));
    }
    return 1.0 / (1.0 + std::exp(-llr));
}

Mechanism::Mechanism(MechanismKind kind, int n_workers, MechanismParams params)
    : kind_(kind), params_(params) {
    if (n_workers < 1) throw std::invalid_argument("mechanism: need at least one worker");
    weights_.assign(static_cast<std::size_t>(n_workers), 1.0);
    switch (kind_) {
        case MechanismKind::Owa:
            if (!(params_.alpha > 0.0 && params_.alpha < 0.5))
                throw std::invalid_argument("owa: alpha must be in (0, 1/2)");
            break;
        case MechanismKind::Oms:
            if (!(params_.alpha > 0.0)) throw std::invalid_argument("oms: alpha must be > 0");
            if (!(params_.beta > 0.0 && params_.beta <= 0.5))
                throw std::invalid_argument("oms: beta must be in (0, 1/2]");
            if (std::abs(params_.beta - 2.0 * params_.alpha * n_workers) > 1e-9)
                throw std::invalid_argument("oms: beta != 2 alpha N");
            gamma_.assign(static_cast<std::size_t>(n_workers), 1.0);
            break;
        case MechanismKind::Hedge:
            if (!(params_.eta > 0.0)) throw std::invalid_argument("hedge: eta must be > 0");
            break;
        case MechanismKind::Em:
            if (!(params_.em_prior_a > 0.0 && params_.em_prior_b > 0.0))
                throw std::invalid_argument("em: Beta prior must be positive");
            if (!(params_.em_truth_prior > 0.0 && params_.em_truth_prior < 1.0))
                throw std::invalid_argument("em: truth prior must be in (0,1)");
            if (!(params_.em_init_reliability > 0.0 && params_.em_init_reliability < 1.0))
                throw std::invalid_argument("em: initial reliability must be in (0,1)");
            reliabilities_.assign(static_cast<std::size_t>(n_workers), params_.em_init_reliability);
            weights_ = reliabilities_;
            break;
        case MechanismKind::Median:
            break;  // weights stay uniform
        case MechanismKind::Exp3:
            if (!(params_.eta > 0.0)) throw std::invalid_argument("exp3: eta must be > 0");
            if (!(params_.beta > 0.0 && params_.beta < 1.0))
                throw std::invalid_argument("exp3: beta must be in (0,1)");
            break;
    }
}

std::vector<double> Mechanism::chosen_probs() const {
    const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    std::vector<double> probs(weights_.size());
    for (std::size_t i = 0; i < weights_.size(); ++i) probs[i] = weights_[i] / total;
    return probs;
}

std::vector<double> Mechanism::selection_probs() const {
    std::vector<double> probs = chosen_probs();
    if (kind_ == MechanismKind::Exp3) {
        const double n = static_cast<double>(probs.size());
        for (double& p : probs) p = (1.0 - params_.beta) * p + params_.beta / n;
    } else if (kind_ != MechanismKind::Oms) {
        throw std::logic_error("selection_probs: mechanism has no selection rule");
    }
    return probs;
}

int Mechanism::select(Rng& rng) const {
    const std::vector<double> probs = selection_probs();
    return static_cast<int>(rng.discrete(probs));
}

void Mechanism::update(const SlotBatch& batch) {
    if (batch.reports.size() != weights_.size())
        throw std::invalid_argument("mechanism update: report count != worker count");
    switch (kind_) {
        case MechanismKind::Owa: update_owa(batch); break;
        case MechanismKind::Oms: update_oms(batch); break;
        case MechanismKind::Hedge: update_hedge(batch); break;
        case MechanismKind::Em: update_em(batch); break;
        case MechanismKind::Median: break;
        case MechanismKind::Exp3: update_exp3(batch); break;
    }
    slot_ += 1;
}

void Mechanism::add_worker(double initial_weight) {
    if (kind_ != MechanismKind::Owa && kind_ != MechanismKind::Hedge)
        throw std::logic_error("add_worker: arrivals supported for OWA and Hedge only");
    if (!(initial_weight > 0.0)) throw std::invalid_argument("add_worker: weight must be > 0");
    weights_.push_back(initial_weight);
}

double Mechanism::clamp_weight(double w) {
    if (w < kWeightFloor) {
        clamp_events_ += 1;
        return kWeightFloor;
    }
    return w;
}

void Mechanism::update_owa(const SlotBatch& batch) {
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const double loss = slot_loss(batch.reports[i], batch.verified_labels);
        weights_[i] = clamp_weight(weights_[i] * (1.0 - params_.alpha * loss));
    }
}

void Mechanism::update_hedge(const SlotBatch& batch) {
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const double loss = slot_loss(batch.reports[i], batch.verified_labels);
        weights_[i] = clamp_weight(weights_[i] * std::exp(-params_.eta * loss));
    }
}

void Mechanism::update_oms(const SlotBatch& batch) {
    if (!batch.selected_worker.has_value())
        throw std::invalid_argument("oms update: selected worker missing");
    const std::size_t sel = static_cast<std::size_t>(*batch.selected_worker);
    const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    const double theta = weights_[sel] / total;
    if (params_.alpha >= theta)
        throw std::domain_error("oms update: alpha >= theta, step sizes misconfigured");
    const double loss = slot_loss(batch.reports[sel], batch.verified_labels);
    gamma_[sel] *= 1.0 - params_.alpha * loss * (1.0 - params_.alpha / theta) / theta;
    weights_[sel] = (1.0 - params_.beta) * gamma_[sel] + params_.beta;
}

void Mechanism::update_exp3(const SlotBatch& batch) {
    if (!batch.selected_worker.has_value())
        throw std::invalid_argument("exp3 update: selected worker missing");
    const std::size_t sel = static_cast<std::size_t>(*batch.selected_worker);
    const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    const double theta = weights_[sel] / total;
    const double mixed =
        (1.0 - params_.beta) * theta + params_.beta / static_cast<double>(weights_.size());
    const double loss = slot_loss(batch.reports[sel], batch.verified_labels);
    const double estimate = loss / mixed;
    weights_[sel] = clamp_weight(weights_[sel] * std::exp(-params_.eta * estimate));
}

void Mechanism::update_em(const SlotBatch& batch) {
    // Unsupervised: labels are never consulted. Reports binarize at 0.5 with
    // ties to 1; one E/M iteration per slot, per-prompt posterior-mean
    // reliabilities averaged within the slot.
    const std::size_t n = weights_.size();
    const int m = batch.prompt_count;
    std::vector<int> binary(n);
    std::vector<double> acc(n, 0.0);
    for (int j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i)
            binary[i] = batch.reports[i][static_cast<std::size_t>(j)] >= 0.5 ? 1 : 0;
        const double gamma = em_posterior(binary, reliabilities_, params_.em_truth_prior);
        for (std::size_t i = 0; i < n; ++i) {
            const double agree = binary[i] == 1 ? gamma : 1.0 - gamma;
            acc[i] += (params_.em_prior_a + agree) /
                      (params_.em_prior_a + params_.em_prior_b + 1.0);
        }
    }
    for (std::size_t i = 0; i < n; ++i) reliabilities_[i] = acc[i] / static_cast<double>(m);
    weights_ = reliabilities_;
}

}  // namespace aggr
