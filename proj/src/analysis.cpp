#include "aggr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace aggr {

namespace {

std::vector<double> q_grid() {
    std::vector<double> qs;
    for (int k = 1; k <= 19; ++k) qs.push_back(0.05 * k);
    return qs;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

// Reference contexts for the per-slot best-response scan.
MechContext truthfulness_context(MechanismKind kind) {
    MechContext ctx;
    ctx.kind = kind;
    ctx.n_workers = 5;
    ctx.weight = 1.0;
    ctx.gamma = 1.0;
    ctx.theta = 0.2;
    switch (kind) {
        case MechanismKind::Owa:
            ctx.alpha = owa_alpha(5, 500);
            break;
        case MechanismKind::Oms: {
            auto [alpha, beta] = oms_params(5, 2500);
            ctx.alpha = alpha;
            ctx.beta = beta;
            break;
        }
        case MechanismKind::Hedge:
            ctx.eta = 1.0;
            break;
        case MechanismKind::Exp3: {
            auto [alpha, beta] = oms_params(5, 2500);
            (void)alpha;
            ctx.eta = 1.0;
            ctx.beta = beta;
            break;
        }
        case MechanismKind::Em:
        case MechanismKind::Median:
            break;
    }
    return ctx;
}

struct GridScan {
    double max_gain = -1.0;
    double at_q = 0.0;
    double at_report = 0.0;
};

GridScan scan_gains(const MechContext& ctx, double grid_step) {
    GridScan scan;
    for (double q : q_grid()) {
        const BestResponse br = grid_best_response(ctx, q, grid_step);
        if (br.gain > scan.max_gain) {
            scan.max_gain = br.gain;
            scan.at_q = q;
            scan.at_report = br.report;
        }
    }
    return scan;
}

double mean_of(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Mean final R(T) and R(T)/T over seeds 1..count for the given base config.
std::pair<double, double> mean_regret(ScenarioConfig config, int seeds) {
    std::vector<double> rs, avgs;
    for (int k = 1; k <= seeds; ++k) {
        config.seed = static_cast<std::uint64_t>(k);
        const Trajectory traj = run_scenario(config);
        const auto [r, avg] = regret(traj.ledger);
        rs.push_back(r);
        avgs.push_back(avg);
    }
    return {mean_of(rs), mean_of(avgs)};
}

}  // namespace

ScenarioConfig full_feedback_scenario(MechanismKind kind, int n_workers, long horizon,
                                      std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.mechanism = kind;
    cfg.n_workers = n_workers;
    cfg.horizon = horizon;
    cfg.prompts_per_slot = 20;
    cfg.noise_bands = standard_bands(n_workers);
    cfg.strategies.assign(static_cast<std::size_t>(n_workers), StrategySpec{});
    cfg.feedback = FeedbackMode::Full;
    cfg.seed = seed;
    return cfg;
}

ScenarioConfig limited_feedback_scenario(MechanismKind kind, int n_workers, long horizon,
                                         std::uint64_t seed) {
    ScenarioConfig cfg = full_feedback_scenario(kind, n_workers, horizon, seed);
    cfg.feedback = FeedbackMode::Limited;
    return cfg;
}

ScenarioConfig median_witness_scenario(long horizon, std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.mechanism = MechanismKind::Median;
    cfg.n_workers = 3;
    cfg.horizon = horizon;
    cfg.prompts_per_slot = 20;
    const double e = std::sqrt(0.5);  // squared error exactly 1/2 per prompt
    cfg.noise_bands = {{0.0, 0.0}, {e, e}, {e, e}};
    cfg.strategies.assign(3, StrategySpec{});
    cfg.seed = seed;
    return cfg;
}

ScenarioConfig em_witness_scenario(long horizon, std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.mechanism = MechanismKind::Em;
    cfg.n_workers = 5;
    cfg.horizon = horizon;
    cfg.prompts_per_slot = 20;
    cfg.noise_bands = {{0.0, 0.0}, {1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}};
    cfg.strategies.assign(5, StrategySpec{});
    cfg.seed = seed;
    return cfg;
}

ScenarioConfig arrival_scenario(std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.mechanism = MechanismKind::Owa;
    cfg.auto_params = false;
    cfg.params.alpha = 0.083395;
    cfg.n_workers = 1;
    cfg.horizon = 500;
    cfg.prompts_per_slot = 20;
    cfg.noise_bands = {{0.5, 0.6}};  // mean squared error 0.30333 per prompt
    cfg.strategies.assign(1, StrategySpec{});
    ArrivalSpec arrival;
    arrival.t0 = 1;
    arrival.initial_weight = 0.25;  // 4x weight deficit at arrival
    arrival.band = {0.0, 0.1};      // mean squared error 0.00333, gap 0.3
    cfg.arrival = arrival;
    cfg.seed = seed;
    return cfg;
}

double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("least_squares_slope: need >= 2 paired points");
    const double mx = mean_of(xs), my = mean_of(ys);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    if (den == 0.0) throw std::invalid_argument("least_squares_slope: degenerate x values");
    return num / den;
}

VerdictReport truthfulness_check(MechanismKind kind, double grid_step) {
    VerdictReport report;
    report.check_name = std::string("truthfulness-") + kind_name(kind);
    report.seeds_used = 0;  // analytic, no simulation randomness

    if (kind == MechanismKind::Median)
        throw std::invalid_argument("truthfulness_check: median has no weight update to game");

    if (kind == MechanismKind::Em) {
        // Unanimous-majority environment; the closed-form advantage of
        // Always-High over truthful Bernoulli reporting.
        double max_gain = -1.0, at_q = 0.0;
        for (double q : q_grid()) {
            const double g = em_always_high_gain(q, 0.6, 5, 1.0, 1.0);
            if (g > max_gain) {
                max_gain = g;
                at_q = q;
            }
        }
        report.observed = max_gain;
        report.bound_or_expected = 10.0 * grid_step * grid_step;
        report.tolerance = 0.0;
        report.passed = max_gain > report.bound_or_expected;
        report.notes = "always-high vs truthful at q=" + fmt(at_q) + ", gain=" + fmt(max_gain);
        return report;
    }

    const MechContext ctx = truthfulness_context(kind);
    const GridScan scan = scan_gains(ctx, grid_step);
    const bool truthful_kind = kind == MechanismKind::Owa || kind == MechanismKind::Oms;
    if (truthful_kind) {
        const double slack = ctx.alpha * grid_step * grid_step + 1e-9;
        report.observed = scan.max_gain;
        report.bound_or_expected = ctx.alpha * grid_step * grid_step;
        report.tolerance = 1e-9;
        report.passed = scan.max_gain <= slack;
        if (!report.passed) {
            // re-scan at the finer resolution before declaring a violation
            const double fine = grid_step / 10.0;
            const GridScan rescan = scan_gains(ctx, fine);
            report.passed = rescan.max_gain <= ctx.alpha * fine * fine + 1e-9;
            report.notes = "rescanned at step " + fmt(fine);
        }
        if (report.notes.empty())
            report.notes = "max gain " + fmt(scan.max_gain) + " at q=" + fmt(scan.at_q);
    } else {
        const double rate = kind == MechanismKind::Hedge || kind == MechanismKind::Exp3
                                ? ctx.eta
                                : 1.0;
        report.observed = scan.max_gain;
        report.bound_or_expected = 10.0 * rate * grid_step * grid_step;
        report.tolerance = 0.0;
        report.passed = scan.max_gain > report.bound_or_expected;
        report.notes = "q=" + fmt(scan.at_q) + ", r*=" + fmt(scan.at_report) +
                       ", gain=" + fmt(scan.max_gain);
    }
    return report;
}

std::vector<VerdictReport> truthfulness_suite(double grid_step) {
    std::vector<VerdictReport> reports;
    for (MechanismKind kind : {MechanismKind::Owa, MechanismKind::Oms, MechanismKind::Hedge,
                               MechanismKind::Em, MechanismKind::Exp3})
        reports.push_back(truthfulness_check(kind, grid_step));
    return reports;
}

VerdictReport regret_bound_check(MechanismKind kind, int n_workers, long horizon, int seeds) {
    VerdictReport report;
    report.check_name = std::string("regret-bound-") + kind_name(kind);
    report.seeds_used = seeds;
    const double n = static_cast<double>(n_workers);
    const double t = static_cast<double>(horizon);
    ScenarioConfig cfg;
    if (kind == MechanismKind::Owa) {
        cfg = full_feedback_scenario(kind, n_workers, horizon, 1);
        report.bound_or_expected = 3.0 * std::sqrt(t * std::log(n) / 2.0);
    } else if (kind == MechanismKind::Oms) {
        cfg = limited_feedback_scenario(kind, n_workers, horizon, 1);
        report.bound_or_expected = 2.0 * std::sqrt(7.0) * std::sqrt(n * t * std::log(n));
    } else {
        throw std::invalid_argument("regret_bound_check: no analytic bound for this mechanism");
    }
    const auto [mean_r, mean_avg] = mean_regret(cfg, seeds);
    (void)mean_avg;
    report.observed = mean_r;
    report.passed = mean_r <= report.bound_or_expected;
    report.notes = "N=" + std::to_string(n_workers) + ", T=" + std::to_string(horizon);
    return report;
}

VerdictReport regret_slope_check(MechanismKind kind, int n_workers,
                                 const std::vector<long>& horizons, int seeds) {
    VerdictReport report;
    report.check_name = std::string("regret-slope-") + kind_name(kind);
    report.seeds_used = seeds;
    std::vector<double> log_t, log_r;
    for (long t : horizons) {
        ScenarioConfig cfg = kind == MechanismKind::Oms
                                 ? limited_feedback_scenario(kind, n_workers, t, 1)
                                 : full_feedback_scenario(kind, n_workers, t, 1);
        const auto [mean_r, mean_avg] = mean_regret(cfg, seeds);
        (void)mean_avg;
        if (mean_r <= 0.0) {
            report.passed = false;
            report.notes = "non-positive mean regret at T=" + std::to_string(t);
            return report;
        }
        log_t.push_back(std::log(static_cast<double>(t)));
        log_r.push_back(std::log(mean_r));
    }
    const double slope = least_squares_slope(log_t, log_r);
    report.observed = slope;
    report.bound_or_expected = 0.5;
    report.tolerance = 0.2;
    report.passed = slope >= 0.3 && slope <= 0.7;
    report.notes = "log-log fit over " + std::to_string(horizons.size()) + " horizons";
    return report;
}

VerdictReport regret_decrease_check(MechanismKind kind, int n_workers,
                                    const std::vector<long>& horizons, int seeds) {
    VerdictReport report;
    report.check_name = std::string("regret-decrease-") + kind_name(kind);
    report.seeds_used = seeds;
    std::vector<double> avgs;
    for (long t : horizons) {
        ScenarioConfig cfg = kind == MechanismKind::Oms
                                 ? limited_feedback_scenario(kind, n_workers, t, 1)
                                 : full_feedback_scenario(kind, n_workers, t, 1);
        const auto [mean_r, mean_avg] = mean_regret(cfg, seeds);
        (void)mean_r;
        avgs.push_back(mean_avg);
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < avgs.size(); ++i)
        if (!(avgs[i] < avgs[i - 1])) decreasing = false;
    report.observed = avgs.back();
    report.bound_or_expected = avgs.front();
    report.passed = decreasing;
    std::string series;
    for (double a : avgs) series += (series.empty() ? "" : " > ") + fmt(a);
    report.notes = "time-average regret " + series;
    return report;
}

std::vector<VerdictReport> regret_suite(int seeds) {
    std::vector<VerdictReport> reports;
    reports.push_back(regret_bound_check(MechanismKind::Owa, 50, 500, seeds));
    reports.push_back(
        regret_slope_check(MechanismKind::Owa, 50, {125, 250, 500, 1000, 2000}, seeds));
    reports.push_back(regret_bound_check(MechanismKind::Oms, 5, 2500, seeds));
    reports.push_back(regret_decrease_check(MechanismKind::Oms, 5, {625, 1250, 2500}, seeds));
    return reports;
}

VerdictReport linear_regret_witness(MechanismKind kind, int seeds) {
    VerdictReport report;
    report.check_name = std::string("linear-witness-") + kind_name(kind);
    report.seeds_used = seeds;
    const std::vector<long> horizons = {500, 1000, 2000};
    std::vector<double> avgs;
    bool per_horizon_ok = true;
    for (long t : horizons) {
        ScenarioConfig cfg;
        if (kind == MechanismKind::Median) {
            cfg = median_witness_scenario(t, 1);
        } else if (kind == MechanismKind::Em) {
            cfg = em_witness_scenario(t, 1);
        } else {
            throw std::invalid_argument("linear_regret_witness: median or em only");
        }
        const auto [mean_r, mean_avg] = mean_regret(cfg, seeds);
        (void)mean_r;
        avgs.push_back(mean_avg);
        if (kind == MechanismKind::Median) {
            if (std::abs(mean_avg - 0.5) > 1e-9) per_horizon_ok = false;
        } else {
            if (mean_avg < 0.4) per_horizon_ok = false;
        }
    }
    const std::vector<double> ts = {500.0, 1000.0, 2000.0};
    const double trend = least_squares_slope(ts, avgs);
    report.observed = avgs.back();
    if (kind == MechanismKind::Median) {
        report.bound_or_expected = 0.5;
        report.tolerance = 1e-9;
    } else {
        report.bound_or_expected = 0.4;
        report.tolerance = 0.0;
    }
    report.passed = per_horizon_ok && trend >= -1e-3;
    report.notes = "R(T)/T at T=500,1000,2000: " + fmt(avgs[0]) + ", " + fmt(avgs[1]) + ", " +
                   fmt(avgs[2]) + "; trend slope " + fmt(trend);
    return report;
}

std::vector<VerdictReport> linear_witness_suite(int seeds) {
    return {linear_regret_witness(MechanismKind::Median, seeds),
            linear_regret_witness(MechanismKind::Em, seeds)};
}

VerdictReport responsiveness_check(int seeds) {
    VerdictReport report;
    report.check_name = "responsiveness-owa";
    report.seeds_used = seeds;
    ScenarioConfig cfg = arrival_scenario(1);
    const double alpha = cfg.params.alpha;
    const double delta = 0.3;  // squared-error gap between the two bands
    const double ln_ratio = std::log(1.0 / cfg.arrival->initial_weight);
    const double bound = std::ceil(ln_ratio / (alpha * delta));
    std::vector<double> times;
    for (int k = 1; k <= seeds; ++k) {
        cfg.seed = static_cast<std::uint64_t>(k);
        const Trajectory traj = run_scenario(cfg);
        const auto caught = catchup_time(traj, 1, 0);
        // slots elapsed since arrival, the quantity the bound counts
        times.push_back(static_cast<double>(caught.value_or(cfg.horizon + 1) - cfg.arrival->t0));
    }
    report.observed = mean_of(times);
    report.bound_or_expected = bound;
    report.passed = report.observed <= bound;
    report.notes = "ln-ratio " + fmt(ln_ratio) + ", alpha " + fmt(alpha) + ", gap " + fmt(delta);
    return report;
}

std::vector<VerdictReport> responsiveness_suite(int seeds) {
    return {responsiveness_check(seeds)};
}

std::vector<VerdictReport> robustness_sweep(const std::vector<double>& epsilons, int seeds) {
    std::vector<VerdictReport> reports;
    ScenarioConfig base = full_feedback_scenario(MechanismKind::Owa, 5, 500, 1);
    const auto [clean_r, clean_avg] = mean_regret(base, seeds);
    (void)clean_r;
    const double alpha = base.resolved_params().alpha;
    const double grid_step = 0.01;

    for (double eps : epsilons) {
        if (!(eps >= 0.0 && eps < 0.5))
            throw std::invalid_argument("robustness_sweep: epsilon must be in [0, 1/2)");

        VerdictReport regret_report;
        regret_report.check_name = "robustness-regret-eps" + fmt(eps);
        regret_report.seeds_used = seeds;
        ScenarioConfig cfg = base;
        cfg.flip_epsilon = eps;
        const auto [r, avg] = mean_regret(cfg, seeds);
        (void)r;
        regret_report.observed = avg;
        regret_report.bound_or_expected = clean_avg + 2.0 * eps + 0.05;
        regret_report.passed = avg <= regret_report.bound_or_expected;
        regret_report.notes = "clean mean " + fmt(clean_avg);
        reports.push_back(regret_report);

        VerdictReport shift_report;
        shift_report.check_name = "robustness-shift-eps" + fmt(eps);
        shift_report.seeds_used = 0;
        MechContext ctx;
        ctx.kind = MechanismKind::Owa;
        ctx.alpha = alpha;
        ctx.flip_epsilon = eps;
        double worst = 0.0, worst_q = 0.0;
        for (double q : q_grid()) {
            const BestResponse br = grid_best_response(ctx, q, grid_step);
            const double target = (1.0 - 2.0 * eps) * q + eps;
            const double err = std::abs(br.report - target);
            if (err > worst) {
                worst = err;
                worst_q = q;
            }
        }
        shift_report.observed = worst;
        shift_report.bound_or_expected = grid_step;
        shift_report.tolerance = 1e-9;
        shift_report.passed = worst <= grid_step + 1e-9;
        shift_report.notes = "largest deviation at q=" + fmt(worst_q);
        reports.push_back(shift_report);
    }
    return reports;
}

std::vector<VerdictReport> robustness_suite(int seeds) {
    return robustness_sweep({0.05, 0.1}, seeds);
}

std::vector<VerdictReport> run_suite(const std::string& name, int seeds) {
    if (name == "truthfulness") return truthfulness_suite();
    if (name == "regret") return regret_suite(seeds);
    if (name == "linear-witness") return linear_witness_suite(std::min(seeds, 10));
    if (name == "responsiveness") return responsiveness_suite(seeds);
    if (name == "robustness") return robustness_suite(seeds);
    if (name == "all") {
        std::vector<VerdictReport> all;
        for (const char* sub :
             {"truthfulness", "regret", "linear-witness", "responsiveness", "robustness"}) {
            auto part = run_suite(sub, seeds);
            all.insert(all.end(), part.begin(), part.end());
        }
        return all;
    }
    throw std::invalid_argument("unknown suite: " + name);
}

TrajectorySummary summarize(const Trajectory& trajectory) {
    TrajectorySummary summary;
    if (trajectory.ledger.slot_count > 0) {
        const auto [r, avg] = regret(trajectory.ledger);
        summary.final_regret = r;
        summary.final_avg_regret = avg;
    }
    summary.final_weights = trajectory.final_weights;
    summary.final_theta = trajectory.final_theta;
    summary.per_worker_total_loss = trajectory.ledger.per_worker_true_loss;
    summary.clamp_events = trajectory.clamp_events;
    return summary;
}

}  // namespace aggr
