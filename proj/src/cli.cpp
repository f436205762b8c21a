#include "aggr/cli.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

namespace aggr {

namespace {

std::string fmt9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void config_fail(int line, const std::string& message) {
    throw ConfigError("line " + std::to_string(line) + ": " + message);
}

double parse_double(int line, const std::string& v) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        config_fail(line, "expected a number, got '" + v + "'");
    }
    if (pos != v.size()) config_fail(line, "trailing characters after number in '" + v + "'");
    return x;
}

long parse_long(int line, const std::string& v) {
    std::size_t pos = 0;
    long x = 0;
    try {
        x = std::stol(v, &pos);
    } catch (const std::exception&) {
        config_fail(line, "expected an integer, got '" + v + "'");
    }
    if (pos != v.size()) config_fail(line, "trailing characters after integer in '" + v + "'");
    return x;
}

std::uint64_t parse_u64(int line, const std::string& v) {
    std::size_t pos = 0;
    unsigned long long x = 0;
    try {
        x = std::stoull(v, &pos);
    } catch (const std::exception&) {
        config_fail(line, "expected an unsigned integer, got '" + v + "'");
    }
    if (pos != v.size()) config_fail(line, "trailing characters after integer in '" + v + "'");
    return static_cast<std::uint64_t>(x);
}

MechanismKind parse_mechanism(int line, const std::string& v) {
    for (MechanismKind kind : {MechanismKind::Owa, MechanismKind::Oms, MechanismKind::Hedge,
                               MechanismKind::Em, MechanismKind::Median, MechanismKind::Exp3})
        if (v == kind_name(kind)) return kind;
    config_fail(line, "unknown mechanism '" + v + "'");
}

NoiseBand parse_band(int line, const std::string& v) {
    const std::size_t comma = v.find(',');
    if (comma == std::string::npos) config_fail(line, "band needs the form low,high");
    NoiseBand band;
    band.low = parse_double(line, trim(v.substr(0, comma)));
    band.high = parse_double(line, trim(v.substr(comma + 1)));
    return band;
}

StrategySpec parse_strategy(int line, const std::string& v) {
    StrategySpec spec;
    std::string head = v;
    std::string arg;
    const std::size_t colon = v.find(':');
    if (colon != std::string::npos) {
        head = v.substr(0, colon);
        arg = trim(v.substr(colon + 1));
    }
    if (head == "truthful") {
        spec.kind = StrategySpec::Kind::Truthful;
    } else if (head == "always_high") {
        spec.kind = StrategySpec::Kind::AlwaysHigh;
    } else if (head == "always_low") {
        spec.kind = StrategySpec::Kind::AlwaysLow;
    } else if (head == "shift") {
        spec.kind = StrategySpec::Kind::ConstantShift;
        if (arg.empty()) config_fail(line, "shift strategy needs a delta, e.g. shift:0.1");
        spec.delta = parse_double(line, arg);
    } else if (head == "best_response") {
        spec.kind = StrategySpec::Kind::GridBestResponse;
        if (!arg.empty()) spec.grid_step = parse_double(line, arg);
    } else {
        config_fail(line, "unknown strategy '" + v + "'");
    }
    return spec;
}

FeedbackMode default_feedback(MechanismKind kind) {
    return kind == MechanismKind::Oms || kind == MechanismKind::Exp3 ? FeedbackMode::Limited
                                                                     : FeedbackMode::Full;
}

struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
};

}  // namespace

ScenarioConfig parse_config_text(const std::string& text) {
    std::map<std::string, Entry> entries;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::size_t hash = raw.find('#');
        std::string stripped = hash == std::string::npos ? raw : raw.substr(0, hash);
        stripped = trim(stripped);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) config_fail(lineno, "expected key = value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) config_fail(lineno, "empty key");
        if (entries.count(key)) config_fail(lineno, "duplicate key '" + key + "'");
        entries[key] = {value, lineno, false};
    }

    auto get = [&](const std::string& key) -> const Entry* {
        auto it = entries.find(key);
        if (it == entries.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    };

    ScenarioConfig cfg;
    const Entry* mech = get("mechanism");
    if (!mech) throw ConfigError("missing required key 'mechanism'");
    cfg.mechanism = parse_mechanism(mech->line, mech->value);
    cfg.feedback = default_feedback(cfg.mechanism);
    if (const Entry* e = get("feedback")) {
        if (e->value == "full") cfg.feedback = FeedbackMode::Full;
        else if (e->value == "limited") cfg.feedback = FeedbackMode::Limited;
        else config_fail(e->line, "feedback must be full or limited");
    }
    if (const Entry* e = get("workers")) cfg.n_workers = static_cast<int>(parse_long(e->line, e->value));
    if (const Entry* e = get("horizon")) cfg.horizon = parse_long(e->line, e->value);
    if (const Entry* e = get("prompts")) cfg.prompts_per_slot = static_cast<int>(parse_long(e->line, e->value));
    if (const Entry* e = get("seed")) cfg.seed = parse_u64(e->line, e->value);
    if (const Entry* e = get("flip_epsilon")) cfg.flip_epsilon = parse_double(e->line, e->value);
    if (const Entry* e = get("alpha")) { cfg.auto_params = false; cfg.params.alpha = parse_double(e->line, e->value); }
    if (const Entry* e = get("beta")) { cfg.auto_params = false; cfg.params.beta = parse_double(e->line, e->value); }
    if (const Entry* e = get("eta")) { cfg.auto_params = false; cfg.params.eta = parse_double(e->line, e->value); }
    if (const Entry* e = get("em.prior_a")) cfg.params.em_prior_a = parse_double(e->line, e->value);
    if (const Entry* e = get("em.prior_b")) cfg.params.em_prior_b = parse_double(e->line, e->value);
    if (const Entry* e = get("em.truth_prior")) cfg.params.em_truth_prior = parse_double(e->line, e->value);
    if (const Entry* e = get("em.init_reliability")) cfg.params.em_init_reliability = parse_double(e->line, e->value);
    if (const Entry* e = get("median_subsample")) cfg.median_subsample = static_cast<int>(parse_long(e->line, e->value));

    if (cfg.n_workers < 1) throw ConfigError("workers must be >= 1");
    cfg.noise_bands = standard_bands(cfg.n_workers);
    cfg.strategies.assign(static_cast<std::size_t>(cfg.n_workers), StrategySpec{});
    if (const Entry* e = get("bands")) {
        if (e->value != "standard") config_fail(e->line, "bands supports only 'standard'; use worker.K.band otherwise");
    }
    for (int k = 1; k <= cfg.n_workers; ++k) {
        const std::string prefix = "worker." + std::to_string(k) + ".";
        if (const Entry* e = get(prefix + "band"))
            cfg.noise_bands[static_cast<std::size_t>(k - 1)] = parse_band(e->line, e->value);
        if (const Entry* e = get(prefix + "strategy"))
            cfg.strategies[static_cast<std::size_t>(k - 1)] = parse_strategy(e->line, e->value);
    }

    const Entry* a_t0 = get("arrival.t0");
    const Entry* a_w = get("arrival.weight");
    const Entry* a_band = get("arrival.band");
    const Entry* a_strat = get("arrival.strategy");
    if (a_t0 || a_w || a_band || a_strat) {
        if (!a_t0 || !a_w || !a_band)
            throw ConfigError("arrival needs arrival.t0, arrival.weight, and arrival.band");
        ArrivalSpec arrival;
        arrival.t0 = parse_long(a_t0->line, a_t0->value);
        arrival.initial_weight = parse_double(a_w->line, a_w->value);
        arrival.band = parse_band(a_band->line, a_band->value);
        if (a_strat) arrival.strategy = parse_strategy(a_strat->line, a_strat->value);
        cfg.arrival = arrival;
    }

    for (const auto& [key, entry] : entries)
        if (!entry.used) config_fail(entry.line, "unknown key '" + key + "'");

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string trajectory_csv(const Trajectory& trajectory) {
    std::string out =
        "slot,worker,weight,theta,slot_loss,selected,platform_slot_loss,cum_regret,avg_regret\n";
    for (const SlotRecord& rec : trajectory.slots) {
        for (std::size_t i = 0; i < rec.weights.size(); ++i) {
            out += std::to_string(rec.slot);
            out += ',';
            out += std::to_string(i + 1);
            out += ',';
            out += fmt9(rec.weights[i]);
            out += ',';
            out += fmt9(rec.theta[i]);
            out += ',';
            out += fmt9(rec.worker_loss[i]);
            out += ',';
            out += rec.selected == static_cast<int>(i) ? '1' : '0';
            out += ',';
            out += fmt9(rec.platform_loss);
            out += ',';
            out += fmt9(rec.cum_regret);
            out += ',';
            out += fmt9(rec.avg_regret);
            out += '\n';
        }
    }
    return out;
}

namespace {

std::string json_array(const std::vector<double>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += fmt9(xs[i]);
    }
    return out + "]";
}

}  // namespace

std::string summary_json(const ScenarioConfig& config, const Trajectory& trajectory) {
    const TrajectorySummary s = summarize(trajectory);
    std::string out = "{\n";
    out += "  \"mechanism\": \"" + std::string(kind_name(config.mechanism)) + "\",\n";
    out += std::string("  \"feedback\": \"") +
           (config.feedback == FeedbackMode::Full ? "full" : "limited") + "\",\n";
    out += "  \"workers\": " + std::to_string(config.n_workers) + ",\n";
    out += "  \"horizon\": " + std::to_string(config.horizon) + ",\n";
    out += "  \"prompts_per_slot\": " + std::to_string(config.prompts_per_slot) + ",\n";
    out += "  \"seed\": " + std::to_string(trajectory.seed) + ",\n";
    out += "  \"flip_epsilon\": " + fmt9(config.flip_epsilon) + ",\n";
    out += "  \"resolved\": {\"alpha\": " + fmt9(trajectory.resolved.alpha) +
           ", \"beta\": " + fmt9(trajectory.resolved.beta) +
           ", \"eta\": " + fmt9(trajectory.resolved.eta) + "},\n";
    out += "  \"final_regret\": " + fmt9(s.final_regret) + ",\n";
    out += "  \"final_avg_regret\": " + fmt9(s.final_avg_regret) + ",\n";
    out += "  \"final_weights\": " + json_array(s.final_weights) + ",\n";
    out += "  \"final_theta\": " + json_array(s.final_theta) + ",\n";
    out += "  \"per_worker_total_loss\": " + json_array(s.per_worker_total_loss) + ",\n";
    out += "  \"clamp_events\": " + std::to_string(s.clamp_events) + "\n";
    out += "}\n";
    return out;
}

std::string verdicts_csv(const std::vector<VerdictReport>& reports) {
    std::string out = "check,passed,observed,bound_or_expected,tolerance,seeds,notes\n";
    for (const VerdictReport& r : reports) {
        std::string notes = r.notes;
        std::string quoted = "\"";
        for (char c : notes) {
            if (c == '"') quoted += "\"\"";
            else quoted += c;
        }
        quoted += '"';
        out += r.check_name + ',' + (r.passed ? "1" : "0") + ',' + fmt9(r.observed) + ',' +
               fmt9(r.bound_or_expected) + ',' + fmt9(r.tolerance) + ',' +
               std::to_string(r.seeds_used) + ',' + quoted + '\n';
    }
    return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override) {
    ScenarioConfig cfg;
    try {
        cfg = parse_config_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    if (seed_override) cfg.seed = *seed_override;
    try {
        const Trajectory traj = run_scenario(cfg);
        std::filesystem::create_directories(out_dir);
        write_file_atomic(out_dir + "/trajectory.csv", trajectory_csv(traj));
        write_file_atomic(out_dir + "/summary.json", summary_json(cfg, traj));
        std::cout << "wrote " << out_dir << "/trajectory.csv and summary.json (seed " << cfg.seed
                  << ", alpha " << fmt9(traj.resolved.alpha) << ", beta "
                  << fmt9(traj.resolved.beta) << ", eta " << fmt9(traj.resolved.eta) << ")\n";
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int cmd_verify(const std::string& suite, const std::string& out_dir, int seeds) {
    std::vector<VerdictReport> reports;
    try {
        reports = run_suite(suite, seeds);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    bool all_passed = true;
    for (const VerdictReport& r : reports) {
        std::cout << (r.passed ? "PASS" : "FAIL") << ' ' << r.check_name
                  << " observed=" << fmt9(r.observed) << " bound=" << fmt9(r.bound_or_expected)
                  << " (" << r.notes << ")\n";
        all_passed = all_passed && r.passed;
    }
    try {
        std::filesystem::create_directories(out_dir);
        write_file_atomic(out_dir + "/verdicts.csv", verdicts_csv(reports));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return all_passed ? 0 : 1;
}

namespace {

ScenarioConfig apply_axis(ScenarioConfig cfg, const std::string& axis, const std::string& value) {
    if (axis == "T") {
        cfg.horizon = parse_long(0, value);
    } else if (axis == "N") {
        cfg.n_workers = static_cast<int>(parse_long(0, value));
        cfg.noise_bands = standard_bands(cfg.n_workers);
        cfg.strategies.assign(static_cast<std::size_t>(cfg.n_workers), StrategySpec{});
    } else if (axis == "epsilon") {
        cfg.flip_epsilon = parse_double(0, value);
    } else if (axis == "mechanism") {
        cfg.mechanism = parse_mechanism(0, value);
        cfg.feedback = default_feedback(cfg.mechanism);
    } else {
        throw ConfigError("unknown sweep axis '" + axis + "' (use T, N, epsilon, or mechanism)");
    }
    return cfg;
}

}  // namespace

int cmd_sweep(const std::string& config_path, const SweepSpec& sweep, const std::string& out_dir,
              int seeds, int jobs, std::optional<std::uint64_t> seed_override) {
    ScenarioConfig base;
    try {
        base = parse_config_file(config_path);
        if (sweep.values.empty()) throw ConfigError("sweep axis has no values");
        if (seeds < 1) throw ConfigError("--seeds must be >= 1");
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    const std::uint64_t base_seed = seed_override.value_or(base.seed);

    struct Task {
        std::string value;
        int seed_index;
        double regret_final = 0.0;
        double avg_regret = 0.0;
    };
    std::vector<Task> tasks;
    for (const std::string& value : sweep.values)
        for (int k = 1; k <= seeds; ++k) tasks.push_back({value, k, 0.0, 0.0});

    // validate every cell up front so failures keep the output directory clean
    try {
        for (const std::string& value : sweep.values)
            apply_axis(base, sweep.axis, value).validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= tasks.size() || failed.load()) return;
            Task& task = tasks[idx];
            try {
                ScenarioConfig cfg = apply_axis(base, sweep.axis, task.value);
                cfg.seed = base_seed + static_cast<std::uint64_t>(task.seed_index - 1);
                const Trajectory traj = run_scenario(cfg);
                const auto [r, avg] = regret(traj.ledger);
                task.regret_final = r;
                task.avg_regret = avg;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    };
    const int pool = std::max(1, jobs);
    std::vector<std::thread> threads;
    for (int i = 0; i < pool; ++i) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
    if (failed.load()) {
        std::cerr << "error: " << first_error << "\n";
        return 1;
    }

    std::string rows = "axis,value,seed,regret,avg_regret\n";
    for (const Task& task : tasks)
        rows += sweep.axis + ',' + task.value + ',' + std::to_string(task.seed_index) + ',' +
                fmt9(task.regret_final) + ',' + fmt9(task.avg_regret) + '\n';
    std::string summary = "axis,value,mean_regret,mean_avg_regret\n";
    for (const std::string& value : sweep.values) {
        double sum_r = 0.0, sum_avg = 0.0;
        for (const Task& task : tasks)
            if (task.value == value) {
                sum_r += task.regret_final;
                sum_avg += task.avg_regret;
            }
        summary += sweep.axis + ',' + value + ',' + fmt9(sum_r / seeds) + ',' +
                   fmt9(sum_avg / seeds) + '\n';
    }
    try {
        std::filesystem::create_directories(out_dir);
        write_file_atomic(out_dir + "/sweep.csv", rows);
        write_file_atomic(out_dir + "/sweep_summary.csv", summary);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cout << "wrote " << out_dir << "/sweep.csv and sweep_summary.csv (" << tasks.size()
              << " runs)\n";
    return 0;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"aggrsim: online preference-aggregation mechanism laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", suite = "all", axis_arg;
    int seeds = 30;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    CLI::App* run = app.add_subcommand("run", "run one scenario and write its trajectory");
    run->add_option("--config", config_path, "scenario config file")->required();
    run->add_option("--out", out_dir, "output directory");

    CLI::App* verify = app.add_subcommand("verify", "run a verifier suite");
    verify->add_option("--suite", suite,
                       "truthfulness, regret, linear-witness, responsiveness, robustness, all");
    verify->add_option("--out", out_dir, "output directory");
    verify->add_option("--seeds", seeds, "replications per randomized check");

    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    sweep->add_option("--config", config_path, "base scenario config file")->required();
    sweep->add_option("--axis", axis_arg, "axis spec, e.g. T=125,250,500")->required();
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--seeds", seeds, "replications per axis value");
    sweep->add_option("--jobs", jobs, "parallel worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::optional<std::uint64_t> seed_override;
    if (const char* env = std::getenv("AGGRSIM_SEED")) {
        try {
            seed_override = parse_u64(0, env);
        } catch (const std::exception&) {
            std::cerr << "error: AGGRSIM_SEED is not an unsigned integer\n";
            return 2;
        }
    }

    if (run->parsed()) return cmd_run(config_path, out_dir, seed_override);
    if (verify->parsed()) return cmd_verify(suite, out_dir, seeds);
    if (sweep->parsed()) {
        const std::size_t eq = axis_arg.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: --axis needs the form name=v1,v2,...\n";
            return 2;
        }
        SweepSpec spec;
        spec.axis = trim(axis_arg.substr(0, eq));
        std::string rest = axis_arg.substr(eq + 1);
        std::size_t pos = 0;
        while (pos <= rest.size()) {
            const std::size_t comma = rest.find(',', pos);
            const std::string piece =
                trim(rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
            if (!piece.empty()) spec.values.push_back(piece);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        return cmd_sweep(config_path, spec, out_dir, seeds, jobs, seed_override);
    }
    return 2;
}

}  // namespace aggr
