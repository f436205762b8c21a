#include "aggr/workers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aggr {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Bernoulli parameter of the verified label under a symmetric flip.
double effective_belief(double belief, double flip_epsilon) {
    return (1.0 - 2.0 * flip_epsilon) * belief + flip_epsilon;
}

double hedge_expected(double eta, double report, double q) {
    return q * std::exp(-eta * (report - 1.0) * (report - 1.0)) +
           (1.0 - q) * std::exp(-eta * report * report);
}

}  // namespace

std::vector<double> gen_beliefs(const NoiseBand& band, const std::vector<int>& true_labels,
                                Rng& rng) {
    if (!(0.0 <= band.low && band.low <= band.high && band.high <= 1.0))
        throw std::invalid_argument("gen_beliefs: invalid noise band");
    std::vector<double> beliefs(true_labels.size());
    for (std::size_t j = 0; j < true_labels.size(); ++j) {
        const double eps = rng.uniform(band.low, band.high);
        const double p = static_cast<double>(true_labels[j]);
        beliefs[j] = p * (1.0 - eps) + (1.0 - p) * eps;
    }
    return beliefs;
}

std::vector<double> make_report(const StrategySpec& strategy, const std::vector<double>& belief,
                                const MechContext& context, long slot) {
    if (slot < strategy.applies_from_slot) return belief;
    std::vector<double> report(belief.size());
    switch (strategy.kind) {
        case StrategySpec::Kind::Truthful:
            report = belief;
            break;
        case StrategySpec::Kind::ConstantShift:
            for (std::size_t j = 0; j < belief.size(); ++j)
                report[j] = clamp01(belief[j] + strategy.delta);
            break;
        case StrategySpec::Kind::AlwaysHigh:
            std::fill(report.begin(), report.end(), 1.0);
            break;
        case StrategySpec::Kind::AlwaysLow:
            std::fill(report.begin(), report.end(), 0.0);
            break;
        case StrategySpec::Kind::GridBestResponse:
            for (std::size_t j = 0; j < belief.size(); ++j)
                report[j] = grid_best_response(context, belief[j], strategy.grid_step).report;
            break;
    }
    return report;
}

double expected_next_weight_owa(double weight, double alpha, double report, double belief) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw std::invalid_argument("expected_next_weight_owa: alpha not in (0, 1/2)");
    const double d = report - belief;
    return weight * (1.0 - alpha * (d * d + belief * (1.0 - belief)));
}

double expected_next_weight_oms(double gamma, double alpha, double beta, double theta,
                                double report, double belief) {
    if (alpha >= theta)
        throw std::domain_error("expected_next_weight_oms: alpha >= theta");
    const double d = report - belief;
    const double expected_loss = d * d + belief * (1.0 - belief);
    return (1.0 - beta) * gamma * (1.0 - alpha * (1.0 - alpha / theta) * expected_loss) + beta;
}

double expected_next_weight(const MechContext& ctx, double report, double belief) {
    const double q = effective_belief(belief, ctx.flip_epsilon);
    switch (ctx.kind) {
        case MechanismKind::Owa:
            return expected_next_weight_owa(ctx.weight, ctx.alpha, report, q);
        case MechanismKind::Oms:
            return expected_next_weight_oms(ctx.gamma, ctx.alpha, ctx.beta, ctx.theta, report, q);
        case MechanismKind::Hedge:
            return ctx.weight * hedge_expected(ctx.eta, report, q);
        case MechanismKind::Exp3: {
            const double mixed =
                (1.0 - ctx.beta) * ctx.theta + ctx.beta / static_cast<double>(ctx.n_workers);
            // selected with probability `mixed`, in which case the estimator
            // scales the loss by 1/mixed inside the exponent
            return ctx.weight *
                   (mixed * hedge_expected(ctx.eta / mixed, report, q) + (1.0 - mixed));
        }
        case MechanismKind::Median:
        case MechanismKind::Em:
            throw std::logic_error("expected_next_weight: no closed form for this mechanism");
    }
    throw std::logic_error("expected_next_weight: unreachable");
}

McEstimate expected_next_weight_mc(const MechContext& ctx, double report, double belief,
                                   long draws, Rng& rng) {
    if (draws < 10000) throw std::invalid_argument("expected_next_weight_mc: need >= 1e4 draws");
    double sum = 0.0, sum_sq = 0.0;
    const double mixed = ctx.kind == MechanismKind::Exp3
                             ? (1.0 - ctx.beta) * ctx.theta +
                                   ctx.beta / static_cast<double>(ctx.n_workers)
                             : ctx.theta;
    for (long k = 0; k < draws; ++k) {
        int label = rng.bernoulli(belief) ? 1 : 0;
        if (ctx.flip_epsilon > 0.0 && rng.bernoulli(ctx.flip_epsilon)) label = 1 - label;
        const double d = report - static_cast<double>(label);
        const double loss = d * d;
        double next = ctx.weight;
        switch (ctx.kind) {
            case MechanismKind::Owa:
                next = ctx.weight * (1.0 - ctx.alpha * loss);
                break;
            case MechanismKind::Hedge:
                next = ctx.weight * std::exp(-ctx.eta * loss);
                break;
            case MechanismKind::Oms:
                if (rng.bernoulli(ctx.theta)) {
                    const double g = ctx.gamma *
                        (1.0 - ctx.alpha * loss * (1.0 - ctx.alpha / ctx.theta) / ctx.theta);
                    next = (1.0 - ctx.beta) * g + ctx.beta;
                }
                break;
            case MechanismKind::Exp3:
                if (rng.bernoulli(mixed)) next = ctx.weight * std::exp(-ctx.eta * loss / mixed);
                break;
            case MechanismKind::Median:
            case MechanismKind::Em:
                throw std::logic_error("expected_next_weight_mc: unsupported mechanism");
        }
        sum += next;
        sum_sq += next * next;
    }
    const double n = static_cast<double>(draws);
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    return {mean, std::sqrt(var / n)};
}

BestResponse grid_best_response(const MechContext& ctx, double belief, double grid_step) {
    if (!(grid_step > 0.0 && grid_step <= 0.5))
        throw std::invalid_argument("grid_best_response: bad grid step");
    const double cells = 1.0 / grid_step;
    if (std::abs(cells - std::round(cells)) > 1e-9)
        throw std::invalid_argument("grid_best_response: grid step must divide 1");
    const long n_cells = static_cast<long>(std::round(cells));
    const double truthful_value = expected_next_weight(ctx, belief, belief);
    double best_report = 0.0;
    double best_value = expected_next_weight(ctx, 0.0, belief);
    for (long k = 1; k <= n_cells; ++k) {
        const double r = static_cast<double>(k) * grid_step;
        const double v = expected_next_weight(ctx, r, belief);
        if (v > best_value) {
            best_value = v;
            best_report = r;
        }
    }
    return {best_report, best_value - truthful_value};
}

double em_always_high_gain(double belief, double w0, int n_workers, double prior_a,
                           double prior_b) {
    const double gamma1 = em_posterior_shared(n_workers, n_workers, w0);
    const double gamma0 = em_posterior_shared(n_workers - 1, n_workers, w0);
    return (1.0 - belief) * (gamma1 + gamma0 - 1.0) / (prior_a + prior_b + 1.0);
}

}  // namespace aggr
