#include "aggr/sim.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace aggr {

namespace {

bool is_limited_kind(MechanismKind kind) {
    return kind == MechanismKind::Oms || kind == MechanismKind::Exp3;
}

}  // namespace

std::vector<NoiseBand> standard_bands(int n_workers) {
    static const NoiseBand kBands[5] = {
        {0.0, 0.1}, {0.45, 0.55}, {0.55, 0.65}, {0.65, 0.75}, {0.75, 0.85}};
    std::vector<NoiseBand> bands(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) bands[static_cast<std::size_t>(i)] = kBands[i % 5];
    return bands;
}

void ScenarioConfig::validate() const {
    if (n_workers < 1) throw std::invalid_argument("config: N must be >= 1");
    if (horizon < 0) throw std::invalid_argument("config: T must be >= 0");
    if (prompts_per_slot < 1) throw std::invalid_argument("config: m must be >= 1");
    if (noise_bands.size() != static_cast<std::size_t>(n_workers))
        throw std::invalid_argument("config: noise_bands length != N");
    if (strategies.size() != static_cast<std::size_t>(n_workers))
        throw std::invalid_argument("config: strategies length != N");
    for (const auto& b : noise_bands)
        if (!(0.0 <= b.low && b.low <= b.high && b.high <= 1.0))
            throw std::invalid_argument("config: noise band outside [0,1] or low > high");
    if (!(flip_epsilon >= 0.0 && flip_epsilon < 0.5))
        throw std::invalid_argument("config: flip_epsilon must be in [0, 1/2)");
    if (feedback == FeedbackMode::Limited && !is_limited_kind(mechanism))
        throw std::invalid_argument("config: limited feedback requires oms or exp3");
    if (feedback == FeedbackMode::Full && is_limited_kind(mechanism))
        throw std::invalid_argument("config: oms/exp3 require limited feedback");
    if (arrival) {
        if (arrival->t0 < 1 || arrival->t0 > horizon)
            throw std::invalid_argument("config: arrival.t0 outside [1, T]");
        if (!(arrival->initial_weight > 0.0 && arrival->initial_weight <= 1.0))
            throw std::invalid_argument("config: arrival.weight must be in (0, 1]");
        if (mechanism != MechanismKind::Owa && mechanism != MechanismKind::Hedge)
            throw std::invalid_argument("config: arrival supported for owa/hedge only");
    }
    if (median_subsample) {
        if (mechanism != MechanismKind::Median)
            throw std::invalid_argument("config: median_subsample requires the median mechanism");
        if (*median_subsample < 1 || *median_subsample > n_workers)
            throw std::invalid_argument("config: median_subsample outside [1, N]");
    }
}

MechanismParams ScenarioConfig::resolved_params() const {
    MechanismParams p = params;
    if (!auto_params) return p;
    switch (mechanism) {
        case MechanismKind::Owa:
            p.alpha = owa_alpha(n_workers, horizon);
            break;
        case MechanismKind::Hedge:
            p.eta = owa_alpha(n_workers, horizon);  // parity learning rate
            break;
        case MechanismKind::Oms: {
            auto [alpha, beta] = oms_params(n_workers, horizon);
            p.alpha = alpha;
            p.beta = beta;
            break;
        }
        case MechanismKind::Exp3: {
            auto [alpha, beta] = oms_params(n_workers, horizon);
            p.eta = alpha;
            p.beta = beta;
            break;
        }
        case MechanismKind::Em:
        case MechanismKind::Median:
            break;
    }
    return p;
}

std::vector<int> flip_labels(const std::vector<int>& labels, double epsilon, Rng& rng) {
    if (!(epsilon >= 0.0 && epsilon < 0.5))
        throw std::invalid_argument("flip_labels: epsilon must be in [0, 1/2)");
    std::vector<int> flipped = labels;
    if (epsilon == 0.0) return flipped;
    for (int& p : flipped)
        if (rng.bernoulli(epsilon)) p = 1 - p;
    return flipped;
}

Trajectory run_scenario(const ScenarioConfig& config) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();

    if (config.horizon == 0) {
        // nothing to resolve or update; report the starting state
        Trajectory traj;
        traj.seed = config.seed;
        traj.resolved = config.params;
        const double w0 = config.mechanism == MechanismKind::Em
                              ? config.params.em_init_reliability
                              : 1.0;
        traj.final_weights.assign(static_cast<std::size_t>(config.n_workers), w0);
        traj.final_theta.assign(static_cast<std::size_t>(config.n_workers),
                                1.0 / static_cast<double>(config.n_workers));
        return traj;
    }

    const MechanismParams resolved = config.resolved_params();
    Mechanism mech(config.mechanism, config.n_workers, resolved);

    Rng labels_rng = derive_stream(config.seed, Stream::Labels);
    Rng noise_rng = derive_stream(config.seed, Stream::Noise);
    Rng select_rng = derive_stream(config.seed, Stream::Selection);
    Rng flips_rng = derive_stream(config.seed, Stream::Flips);

    std::vector<NoiseBand> bands = config.noise_bands;
    std::vector<StrategySpec> strategies = config.strategies;

    Trajectory traj;
    traj.seed = config.seed;
    traj.resolved = resolved;
    const int total_workers =
        config.n_workers + (config.arrival.has_value() ? 1 : 0);
    traj.ledger.per_worker_true_loss.assign(static_cast<std::size_t>(total_workers), 0.0);
    traj.slots.reserve(static_cast<std::size_t>(config.horizon));

    const int m = config.prompts_per_slot;
    for (long t = 1; t <= config.horizon; ++t) {
        if (config.arrival && t == config.arrival->t0) {
            mech.add_worker(config.arrival->initial_weight);
            bands.push_back(config.arrival->band);
            strategies.push_back(config.arrival->strategy);
        }
        const int active = mech.n_workers();

        std::vector<int> labels(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) labels[static_cast<std::size_t>(j)] = labels_rng.bernoulli(0.5);
        const std::vector<int> verified = flip_labels(labels, config.flip_epsilon, flips_rng);

        const std::vector<double> theta = mech.chosen_probs();

        SlotBatch batch;
        batch.slot_index = t;
        batch.prompt_count = m;
        batch.true_labels = labels;
        batch.verified_labels = verified;
        batch.beliefs.resize(static_cast<std::size_t>(active));
        batch.reports.resize(static_cast<std::size_t>(active));
        for (int i = 0; i < active; ++i) {
            const std::size_t ui = static_cast<std::size_t>(i);
            batch.beliefs[ui] = gen_beliefs(bands[ui], labels, noise_rng);
            MechContext ctx;
            ctx.kind = config.mechanism;
            ctx.alpha = resolved.alpha;
            ctx.beta = resolved.beta;
            ctx.eta = resolved.eta;
            ctx.n_workers = active;
            ctx.weight = mech.weights()[ui];
            ctx.gamma = mech.gamma().empty() ? 1.0 : mech.gamma()[ui];
            ctx.theta = theta[ui];
            ctx.flip_epsilon = config.flip_epsilon;
            batch.reports[ui] = make_report(strategies[ui], batch.beliefs[ui], ctx, t);
        }

        SlotRecord rec;
        rec.slot = t;
        rec.weights = mech.weights();
        rec.theta = theta;
        rec.worker_loss.resize(static_cast<std::size_t>(active));
        for (int i = 0; i < active; ++i)
            rec.worker_loss[static_cast<std::size_t>(i)] =
                slot_loss(batch.beliefs[static_cast<std::size_t>(i)], labels);

        if (config.feedback == FeedbackMode::Full) {
            if (config.mechanism == MechanismKind::Median) {
                std::vector<std::size_t> pool(static_cast<std::size_t>(active));
                std::iota(pool.begin(), pool.end(), 0);
                if (config.median_subsample && *config.median_subsample < active) {
                    // partial Fisher-Yates draw of k distinct workers per slot
                    for (int k = 0; k < *config.median_subsample; ++k) {
                        const std::size_t r =
                            static_cast<std::size_t>(k) +
                            static_cast<std::size_t>(select_rng.uniform01() *
                                                     static_cast<double>(active - k));
                        std::swap(pool[static_cast<std::size_t>(k)],
                                  pool[std::min(r, pool.size() - 1)]);
                    }
                    pool.resize(static_cast<std::size_t>(*config.median_subsample));
                }
                std::vector<double> medians(static_cast<std::size_t>(m));
                std::vector<double> column(pool.size());
                for (int j = 0; j < m; ++j) {
                    for (std::size_t k = 0; k < pool.size(); ++k)
                        column[k] = batch.reports[pool[k]][static_cast<std::size_t>(j)];
                    medians[static_cast<std::size_t>(j)] = median_aggregate(column);
                }
                rec.platform_loss = ledger_update_full(traj.ledger, batch, mech.weights(), &medians);
            } else {
                rec.platform_loss = ledger_update_full(traj.ledger, batch, mech.weights());
            }
        } else {
            const std::vector<double> sel_dist = mech.selection_probs();
            const int chosen = mech.select(select_rng);
            batch.selected_worker = chosen;
            rec.selected = chosen;
            rec.platform_loss = ledger_update_limited(traj.ledger, batch, sel_dist);
        }

        mech.update(batch);

        const auto [r, r_avg] = regret(traj.ledger);
        rec.cum_regret = r;
        rec.avg_regret = r_avg;
        traj.slots.push_back(std::move(rec));
    }

    traj.final_weights = mech.weights();
    if (!traj.final_weights.empty()) {
        const double total =
            std::accumulate(traj.final_weights.begin(), traj.final_weights.end(), 0.0);
        traj.final_theta.resize(traj.final_weights.size());
        for (std::size_t i = 0; i < traj.final_weights.size(); ++i)
            traj.final_theta[i] = traj.final_weights[i] / total;
    }
    traj.clamp_events = mech.clamp_events();
    traj.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return traj;
}

std::optional<long> catchup_time(const Trajectory& trajectory, int new_worker, int incumbent) {
    const std::size_t nw = static_cast<std::size_t>(new_worker);
    const std::size_t inc = static_cast<std::size_t>(incumbent);
    for (const SlotRecord& rec : trajectory.slots) {
        if (rec.weights.size() <= nw) continue;
        if (rec.weights[nw] >= rec.weights[inc]) return rec.slot;
    }
    if (trajectory.final_weights.size() > nw &&
        trajectory.final_weights[nw] >= trajectory.final_weights[inc])
        return static_cast<long>(trajectory.slots.size()) + 1;
    return std::nullopt;
}

}  // namespace aggr
