// Command-line frontend for the contract-learning simulation library.
// Subcommands run the experiments and emit plot-ready data files; flags
// override config-file values, which override the built-in defaults.

#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "contractlab/innes.hpp"
#include "contractlab/io.hpp"
#include "contractlab/run.hpp"
#include "contractlab/sweep.hpp"

namespace fs = std::filesystem;
using namespace contractlab;

namespace {

std::atomic<bool> g_interrupted{false};

void handle_signal(int) { g_interrupted.store(true); }

// Decimal places that can resolve one tax-grid step, at least two.
int tax_decimals(int d_p) {
    int dec = 2;
    for (int span = 100; span < d_p - 1; span *= 10) ++dec;
    return dec;
}

std::string format_tax(double tax, int d_p) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", tax_decimals(d_p), tax);
    return buf;
}

void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory " + out + ": " + ec.message());
}

struct RunFlags {
    std::string config_path;
    std::string out_dir = ".";
    double alpha = 0.1;
    double epsilon = 0.2;
    double k = 5e-6;
    std::uint64_t iters = 0;
    int d_p = 101;
    int d_e = 101;
    std::uint64_t seed = 1;
    std::uint64_t snapshot_every = 0;
    double beta = 0.0;
    double kappa = 0.0;
    std::string blend_form = "algorithm2";
    bool dump_agent_table = false;
};

void add_common_run_flags(CLI::App* cmd, RunFlags& fl, EnvKind env,
                          const char* dp_flag = "--grid,--d-p") {
    cmd->add_option("--config", fl.config_path, "JSON config file; flags override its values");
    cmd->add_option("--alpha", fl.alpha, "learning rate in [0,1]")->capture_default_str();
    cmd->add_option("--iters", fl.iters,
                    env == EnvKind::Single ? "iterations (default 1000000)"
                                           : "iterations (default 10000000)");
    cmd->add_option(dp_flag, fl.d_p, "tax grid levels")->capture_default_str();
    cmd->add_option("--seed", fl.seed, "rng seed")->capture_default_str();
    cmd->add_option("--snapshot-every", fl.snapshot_every,
                    "iterations between trajectory snapshots (default t_max/100)");
    cmd->add_option("--out", fl.out_dir, "output directory")->capture_default_str();
    if (env == EnvKind::Single) {
        cmd->add_option("--epsilon", fl.epsilon, "fixed exploration rate in [0,1]")
            ->capture_default_str();
    } else {
        cmd->add_option("--k", fl.k, "exploration decay rate in eps_t = exp(-k t)")
            ->capture_default_str();
        cmd->add_option("--beta", fl.beta, "identity-of-interests weight in [0,0.5]")
            ->capture_default_str();
        cmd->add_option("--kappa", fl.kappa, "cost-asymmetry parameter in [0,1)")
            ->capture_default_str();
        cmd->add_option("--d-e", fl.d_e, "effort grid levels per dimension")
            ->capture_default_str();
        cmd->add_option("--blend-form", fl.blend_form,
                        "reward blend: \"algorithm2\" (profit blend) or \"section54\" "
                        "(margin-scaled)")
            ->capture_default_str();
    }
}

RunConfig config_from_flags(const CLI::App* cmd, const RunFlags& fl, EnvKind env,
                            const char* dp_flag = "--d-p") {
    RunConfig cfg = fl.config_path.empty() ? RunConfig::defaults_for(env)
                                           : load_config(fl.config_path);
    cfg.env = env;
    if (cmd->count("--alpha")) cfg.alpha = fl.alpha;
    if (cmd->count("--iters")) cfg.t_max = fl.iters;
    if (cmd->count(dp_flag)) cfg.d_p = fl.d_p;
    if (cmd->count("--seed")) cfg.seed = fl.seed;
    if (cmd->count("--snapshot-every")) cfg.snapshot_every = fl.snapshot_every;
    if (env == EnvKind::Single) {
        if (cmd->count("--epsilon")) {
            try {
                cfg.exploration = ExplorationSchedule::fixed(fl.epsilon);
            } catch (const std::invalid_argument& ex) {
                throw ConfigError(std::string("flag --epsilon: ") + ex.what());
            }
        }
    } else {
        if (cmd->count("--k")) {
            try {
                cfg.exploration = ExplorationSchedule::exp_decay(fl.k);
            } catch (const std::invalid_argument& ex) {
                throw ConfigError(std::string("flag --k: ") + ex.what());
            }
        }
        if (cmd->count("--beta")) cfg.beta = fl.beta;
        if (cmd->count("--kappa")) cfg.kappa = fl.kappa;
        if (cmd->count("--d-e")) cfg.d_e = fl.d_e;
        if (cmd->count("--blend-form")) cfg.blend_form = blend_form_from_string(fl.blend_form);
    }
    // Shrinking t_max via --iters re-derives any cadence values it outgrew
    // instead of failing validation.
    if (cmd->count("--iters")) {
        if (!cmd->count("--snapshot-every") && cfg.snapshot_every > cfg.t_max)
            cfg.snapshot_every = std::max<std::uint64_t>(1, cfg.t_max / 100);
        if (cfg.convergence_window > cfg.t_max)
            cfg.convergence_window = std::max<std::uint64_t>(1, cfg.t_max);
    }
    cfg.validate();
    return cfg;
}

int cmd_single(const CLI::App* cmd, const RunFlags& fl) {
    const RunConfig cfg = config_from_flags(cmd, fl, EnvKind::Single);
    ensure_out_dir(fl.out_dir);
    const RunResult result = run_single(cfg);
    write_config(cfg, fl.out_dir + "/config.json");
    write_trajectory(result, fl.out_dir + "/trajectory.jsonl");
    dump_qtable(result.final_q[0], fl.out_dir + "/qtable.csv");
    const Snapshot& last = result.snapshots.back();
    std::printf("final_tax=%s final_profit=%.6f converged=%d\n",
                format_tax(last.p1, cfg.d_p).c_str(), last.pi1, result.converged ? 1 : 0);
    return 0;
}

int cmd_dual(const CLI::App* cmd, const RunFlags& fl) {
    const RunConfig cfg = config_from_flags(cmd, fl, EnvKind::Dual);
    ensure_out_dir(fl.out_dir);
    const AgentDecisionTable table = build_agent_table(cfg.dual_params());
    const RunResult result = run_dual(cfg, &table);
    write_config(cfg, fl.out_dir + "/config.json");
    write_trajectory(result, fl.out_dir + "/trajectory.jsonl");
    dump_qtable(result.final_q[0], fl.out_dir + "/qtable_p1.csv");
    dump_qtable(result.final_q[1], fl.out_dir + "/qtable_p2.csv");
    if (fl.dump_agent_table) write_agent_table_csv(table, fl.out_dir + "/agent_table.csv");
    const Snapshot& last = result.snapshots.back();
    std::printf(
        "final_tax_p1=%s final_tax_p2=%s effective_tax=%s final_profit_p1=%.6f "
        "final_profit_p2=%.6f converged=%d\n",
        format_tax(last.p1, cfg.d_p).c_str(), format_tax(last.p2, cfg.d_p).c_str(),
        format_tax(last.effective_tax, cfg.d_p).c_str(), last.pi1, last.pi2,
        result.converged ? 1 : 0);
    return 0;
}

int cmd_sweep(const CLI::App* cmd, const RunFlags& fl, const std::string& param_name,
              const std::vector<double>& grid, int n_seeds,
              const std::vector<std::uint64_t>& seed_list, int jobs) {
    SweepParam param;
    if (param_name == "beta") param = SweepParam::Beta;
    else if (param_name == "kappa") param = SweepParam::Kappa;
    else if (param_name == "alpha") param = SweepParam::Alpha;
    else if (param_name == "k") param = SweepParam::K;
    else throw ConfigError("flag --param: expected beta|kappa|alpha|k, got \"" + param_name + "\"");

    if (cmd->count("--seeds") && cmd->count("--seed-list"))
        throw ConfigError("flags --seeds and --seed-list are mutually exclusive");
    std::vector<std::uint64_t> seeds = seed_list;
    if (seeds.empty()) {
        if (n_seeds < 1) throw ConfigError("flag --seeds: must be >= 1");
        for (int s = 1; s <= n_seeds; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    }
    if (jobs < 1) throw ConfigError("flag --jobs: must be >= 1");

    const RunConfig base = config_from_flags(cmd, fl, EnvKind::Dual, "--d-p");
    ensure_out_dir(fl.out_dir);
    const SweepSummary summary = sweep(base, param, grid, seeds, jobs, &g_interrupted);
    write_sweep_csv(summary, fl.out_dir + "/sweep.csv");
    for (const SweepPoint& pt : summary.points)
        std::printf(
            "%s=%.6f mean_eff_tax=%.6f median_eff_tax=%.6f p10=%.6f p90=%.6f "
            "converged_frac=%.6f n_seeds=%d\n",
            sweep_param_name(param).c_str(), pt.value, pt.mean_eff_tax, pt.median_eff_tax,
            pt.p10, pt.p90, pt.converged_frac, pt.n_seeds);
    return 0;
}

struct EnvFlags {
    double i1 = 1.0, i2 = 1.0, t1 = 2.0, t2 = 2.0, c = 2.0, kappa = 0.0;
    int d_p = 101, d_e = 101;
    std::string out_dir = ".";

    DualContractParams params() const {
        DualContractParams p;
        p.I1 = i1;
        p.I2 = i2;
        p.T1 = t1;
        p.T2 = t2;
        p.c = c;
        p.kappa = kappa;
        p.d_p = d_p;
        p.d_e = d_e;
        try {
            p.validate();
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(ex.what());
        }
        return p;
    }
};

void add_env_flags(CLI::App* cmd, EnvFlags& fl) {
    cmd->add_option("--i1", fl.i1, "project 1 investment")->capture_default_str();
    cmd->add_option("--i2", fl.i2, "project 2 investment")->capture_default_str();
    cmd->add_option("--t1", fl.t1, "project 1 top payoff")->capture_default_str();
    cmd->add_option("--t2", fl.t2, "project 2 top payoff")->capture_default_str();
    cmd->add_option("--c", fl.c, "effort cost coefficient")->capture_default_str();
    cmd->add_option("--kappa", fl.kappa, "cost-asymmetry parameter in [0,1)")
        ->capture_default_str();
    cmd->add_option("--d-p", fl.d_p, "tax grid levels")->capture_default_str();
    cmd->add_option("--d-e", fl.d_e, "effort grid levels")->capture_default_str();
    cmd->add_option("--out", fl.out_dir, "output directory")->capture_default_str();
}

int cmd_agent_table(const EnvFlags& fl) {
    const DualContractParams params = fl.params();
    ensure_out_dir(fl.out_dir);
    const AgentDecisionTable table = build_agent_table(params);
    const std::string path = fl.out_dir + "/agent_table.csv";
    write_agent_table_csv(table, path);
    std::printf("rows=%d file=%s\n", params.d_p * params.d_p, path.c_str());
    return 0;
}

int cmd_innes_check(double xh, double xl, double i, double c, double step, double tol,
                    bool tol_set) {
    InnesParams params{xh, xl, i, c};
    try {
        params.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    // Default tolerance: twice the residual slack one grid step can induce.
    if (!tol_set) tol = 2.0 * step;
    const InnesSearchResult res = innes_optimal_contract_search(params, step, tol);
    const bool pass = res.d_low == xl;
    std::printf("d_low_star=%.6f d_high_star=%.6f agent_value=%.6f low_state_full_payout=%s\n",
                res.d_low, res.d_high, res.agent_value, pass ? "PASS" : "FAIL");
    return 0;
}

int cmd_oracle(const CLI::App* cmd, const EnvFlags& fl, double p1, double p2) {
    const DualContractParams params = fl.params();
    const AgentDecisionTable table = build_agent_table(params);
    const CollusiveOptimum opt = collusive_optimum_oracle(params, &table);
    const int oi = static_cast<int>(std::lround(opt.p1 * (params.d_p - 1)));
    const int oj = static_cast<int>(std::lround(opt.p2 * (params.d_p - 1)));
    const double served = effective_tax_rate(opt.p1, opt.p2, table.effort(oi, oj));
    std::printf("collusive_p1=%.6f collusive_p2=%.6f joint_profit=%.6f served_tax=%.6f\n",
                opt.p1, opt.p2, opt.joint_profit, served);
    if (params.kappa > 0.0) {
        DualContractParams sym = params;
        sym.kappa = 0.0;
        const CollusiveOptimum sym_opt = collusive_optimum_oracle(sym);
        const char* rel = served > sym_opt.p1 + 1e-12   ? "above"
                          : served < sym_opt.p1 - 1e-12 ? "below"
                                                        : "equal to";
        std::printf("note: heterogeneous served tax %.6f is %s the symmetric optimum %.6f\n",
                    served, rel, sym_opt.p1);
    }
    if (cmd->count("--p1") || cmd->count("--p2")) {
        if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0))
            throw ConfigError("flags --p1/--p2: taxes must be in [0,1]");
        const int i = static_cast<int>(std::lround(p1 * (params.d_p - 1)));
        const int j = static_cast<int>(std::lround(p2 * (params.d_p - 1)));
        const double gi = params.tax_at(i), gj = params.tax_at(j);
        const EffortPair te = table.effort(i, j);
        const EffortPair ce = quantize_effort_pair(
            agent_best_effort_closed_form(gi, gj, params), gi, gj, params);
        std::printf("cell p1=%.6f p2=%.6f\n", gi, gj);
        std::printf("  table:       e1=%.6f e2=%.6f profit=%.9f\n", te.e1, te.e2,
                    agent_profit(gi, gj, te, params));
        std::printf("  closed_form: e1=%.6f e2=%.6f profit=%.9f\n", ce.e1, ce.e2,
                    agent_profit(gi, gj, ce, params));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);

    CLI::App app{"Q-learning principals in single- and dual-contract games"};
    app.require_subcommand(1);

    RunFlags single_fl;
    CLI::App* single = app.add_subcommand("single", "one single-principal learning run");
    add_common_run_flags(single, single_fl, EnvKind::Single);

    RunFlags dual_fl;
    CLI::App* dual = app.add_subcommand("dual", "one dual-contract learning run");
    add_common_run_flags(dual, dual_fl, EnvKind::Dual);
    dual->add_flag("--dump-agent-table", dual_fl.dump_agent_table,
                   "also export the agent decision table");

    RunFlags sweep_fl;
    std::string sweep_param;
    std::vector<double> sweep_grid;
    int sweep_seeds = 20;
    std::vector<std::uint64_t> sweep_seed_list;
    int sweep_jobs = 1;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "seeded dual-run parameter sweep");
    add_common_run_flags(sweep_cmd, sweep_fl, EnvKind::Dual, "--d-p");
    sweep_cmd->add_option("--param", sweep_param, "swept parameter: beta|kappa|alpha|k")
        ->required();
    sweep_cmd->add_option("--grid", sweep_grid, "comma-separated parameter values")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("--seeds", sweep_seeds, "number of seeds, run as 1..N")
        ->capture_default_str();
    sweep_cmd->add_option("--seed-list", sweep_seed_list, "explicit comma-separated seeds")
        ->delimiter(',');
    sweep_cmd->add_option("--jobs", sweep_jobs, "parallel worker threads")
        ->capture_default_str();

    EnvFlags table_fl;
    CLI::App* table_cmd =
        app.add_subcommand("agent-table", "export the agent best-response table");
    add_env_flags(table_cmd, table_fl);

    double in_xh = 2.0, in_xl = 1.0, in_i = 1.1, in_c = 2.0, in_step = 0.001, in_tol = 0.0;
    CLI::App* innes = app.add_subcommand(
        "innes-check", "brute-force check of the optimal debt-contract structure");
    innes->add_option("--xh", in_xh, "high project payoff")->capture_default_str();
    innes->add_option("--xl", in_xl, "low project payoff")->capture_default_str();
    innes->add_option("--i", in_i, "investment to recover")->capture_default_str();
    innes->add_option("--c", in_c, "effort cost coefficient")->capture_default_str();
    innes->add_option("--step", in_step, "search grid step")->capture_default_str();
    innes->add_option("--tol", in_tol, "break-even tolerance (default 2*step)");

    EnvFlags oracle_fl;
    double oracle_p1 = 0.0, oracle_p2 = 0.0;
    CLI::App* oracle =
        app.add_subcommand("oracle", "collusive grid optimum and best-response comparison");
    add_env_flags(oracle, oracle_fl);
    oracle->add_option("--p1", oracle_p1, "tax cell to compare best responses at");
    oracle->add_option("--p2", oracle_p2, "tax cell to compare best responses at");

    try {
        app.parse(argc, argv);
        if (single->parsed()) return cmd_single(single, single_fl);
        if (dual->parsed()) return cmd_dual(dual, dual_fl);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep_cmd, sweep_fl, sweep_param, sweep_grid, sweep_seeds,
                             sweep_seed_list, sweep_jobs);
        if (table_cmd->parsed()) return cmd_agent_table(table_fl);
        if (innes->parsed())
            return cmd_innes_check(in_xh, in_xl, in_i, in_c, in_step, in_tol,
                                   innes->count("--tol") > 0);
        if (oracle->parsed()) return cmd_oracle(oracle, oracle_fl, oracle_p1, oracle_p2);
        return 2;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 1;
    } catch (const SweepInterrupted& e) {
        std::cerr << "interrupted: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
}
