#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "contractlab/dual_contract.hpp"
#include "contractlab/errors.hpp"
#include "contractlab/qlearn.hpp"
#include "contractlab/rng.hpp"
#include "contractlab/single_contract.hpp"

namespace contractlab {

enum class EnvKind { Single, Dual };

// Which reward-blending formula a dual run applies. ProfitBlend mixes the
// realized per-principal profits directly; MarginScaled mixes the revenue
// rates and scales by each principal's own margin. They coincide whenever
// the two margins are equal.
enum class BlendForm { ProfitBlend, MarginScaled };

struct RunConfig {
    EnvKind env = EnvKind::Single;
    double I1 = 1.0, I2 = 1.0;
    double T1 = 2.0, T2 = 2.0;
    double c = 2.0;
    double kappa = 0.0;
    double beta = 0.0;
    int d_p = 101;
    int d_e = 101;
    double alpha = 0.1;
    double delta = 0.0;
    ExplorationSchedule exploration = ExplorationSchedule::fixed(0.2);
    std::uint64_t t_max = 1'000'000;
    std::uint64_t snapshot_every = 10'000;
    std::uint64_t convergence_window = 100'000;
    std::uint64_t seed = 1;
    BlendForm blend_form = BlendForm::ProfitBlend;

    // Baseline configuration per environment: single runs use a fixed
    // exploration rate of 0.2 and a million iterations; dual runs use the
    // e^(-kt) schedule with k = 5e-6 and ten million iterations.
    static RunConfig defaults_for(EnvKind env) {
        RunConfig cfg;
        cfg.env = env;
        if (env == EnvKind::Dual) {
            cfg.exploration = ExplorationSchedule::exp_decay(5e-6);
            cfg.t_max = 10'000'000;
            cfg.snapshot_every = 100'000;
        }
        return cfg;
    }

    void validate() const {
        if (!(I1 > 0.0)) throw ConfigError("config key \"I1\": must be positive");
        if (!(I2 > 0.0)) throw ConfigError("config key \"I2\": must be positive");
        if (!(T1 > I1)) throw ConfigError("config key \"T1\": must exceed I1");
        if (!(T2 > I2)) throw ConfigError("config key \"T2\": must exceed I2");
        if (!(c > 0.0)) throw ConfigError("config key \"c\": must be positive");
        if (!(kappa >= 0.0 && kappa < 1.0))
            throw ConfigError("config key \"kappa\": must be in [0,1)");
        if (!(beta >= 0.0 && beta <= 0.5))
            throw ConfigError("config key \"beta\": must be in [0,0.5]");
        if (d_p < 2) throw ConfigError("config key \"d_p\": must be >= 2");
        if (d_e < 2) throw ConfigError("config key \"d_e\": must be >= 2");
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw ConfigError("config key \"alpha\": must be in [0,1]");
        if (!(delta >= 0.0 && delta < 1.0))
            throw ConfigError("config key \"delta\": must be in [0,1)");
        if (t_max < 1) throw ConfigError("config key \"t_max\": must be >= 1");
        if (snapshot_every < 1 || snapshot_every > t_max)
            throw ConfigError("config key \"snapshot_every\": must be in [1, t_max]");
        if (convergence_window < 1 || convergence_window > t_max)
            throw ConfigError("config key \"convergence_window\": must be in [1, t_max]");
    }

    SingleContractParams single_params() const { return {I1, T1, c, d_p}; }
    DualContractParams dual_params() const {
        return {I1, I2, T1, T2, c, kappa, beta, d_p, d_e};
    }
};

struct Snapshot {
    std::uint64_t t = 0;  // completed iterations at the time of the snapshot
    double epsilon = 0.0;
    int greedy1 = 0;
    int greedy2 = -1;  // -1 in single runs
    double p1 = 0.0;
    double p2 = 0.0;
    EffortPair effort;
    double pi1 = 0.0;
    double pi2 = 0.0;
    double agent_profit = 0.0;
    double effective_tax = 0.0;
};

struct RunResult {
    RunConfig config;
    std::vector<Snapshot> snapshots;
    std::vector<int> final_greedy;                          // per learner
    std::vector<QTable> final_q;                            // per learner
    std::vector<std::uint64_t> explore_counts;              // per learner
    std::vector<std::vector<std::uint64_t>> visit_counts;   // per learner, per action
    bool converged = false;
    double effective_tax_final = 0.0;
};

// Tax rate of the project actually receiving effort. With no effort at all
// the binding offer is the lower tax; should both efforts ever be positive,
// the larger one decides, ties to p1.
inline double effective_tax_rate(double p1, double p2, const EffortPair& e) {
    if (e.e1 > 0.0 && e.e2 == 0.0) return p1;
    if (e.e2 > 0.0 && e.e1 == 0.0) return p2;
    if (e.e1 == 0.0 && e.e2 == 0.0) return std::min(p1, p2);
    return e.e2 > e.e1 ? p2 : p1;
}

// Incrementally maintained lowest-index argmax over a row that changes one
// cell at a time. Falls back to a full rescan only when the tracked maximum
// itself decreases.
struct ArgmaxTracker {
    int best = 0;
    double best_val = 0.0;

    void reset(std::span<const double> row) {
        best = greedy_action(row);
        best_val = row[best];
    }

    void on_update(std::span<const double> row, int idx) {
        const double v = row[idx];
        if (idx == best) {
            if (v < best_val)
                reset(row);
            else
                best_val = v;
        } else if (v > best_val || (v == best_val && idx < best)) {
            best = idx;
            best_val = v;
        }
    }
};

// True iff every learner's greedy action is constant across all snapshots in
// the trailing window of iterations. The window must fit inside the span the
// snapshots cover; otherwise returns false and reports why.
inline bool convergence_check(const std::vector<Snapshot>& snapshots, std::uint64_t window,
                              std::string* diagnostic = nullptr) {
    if (snapshots.empty()) {
        if (diagnostic) *diagnostic = "no snapshots";
        return false;
    }
    const std::uint64_t span = snapshots.back().t - snapshots.front().t;
    if (window > span) {
        if (diagnostic)
            *diagnostic = "window " + std::to_string(window) +
                          " exceeds covered iteration span " + std::to_string(span);
        return false;
    }
    const std::uint64_t from = snapshots.back().t - window;
    const Snapshot& last = snapshots.back();
    for (const Snapshot& s : snapshots) {
        if (s.t < from) continue;
        if (s.greedy1 != last.greedy1 || s.greedy2 != last.greedy2) return false;
    }
    return true;
}

namespace detail {

inline Snapshot single_snapshot(std::uint64_t t, double eps, int greedy,
                                const SingleContractParams& sp) {
    Snapshot s;
    s.t = t;
    s.epsilon = eps;
    s.greedy1 = greedy;
    s.p1 = sp.tax_at(greedy);
    const double e = agent_best_effort(s.p1, sp);
    const StepProfits profits = single_step_profits(s.p1, sp);
    s.effort = {e, 0.0};
    s.pi1 = profits.principal;
    s.agent_profit = profits.agent;
    s.effective_tax = s.p1;
    return s;
}

inline Snapshot dual_snapshot(std::uint64_t t, double eps, int g1, int g2,
                              const AgentDecisionTable& table) {
    Snapshot s;
    s.t = t;
    s.epsilon = eps;
    s.greedy1 = g1;
    s.greedy2 = g2;
    s.p1 = table.params().tax_at(g1);
    s.p2 = table.params().tax_at(g2);
    const std::size_t cell = table.cell(g1, g2);
    s.effort = table.effort(g1, g2);
    s.pi1 = table.pi1(cell);
    s.pi2 = table.pi2(cell);
    s.agent_profit = table.cached_agent_profit(cell);
    s.effective_tax = effective_tax_rate(s.p1, s.p2, s.effort);
    return s;
}

}  // namespace detail

// One seeded single-principal learning run. Per iteration: exploration coin
// at the scheduled rate, action choice, the agent's continuous best response,
// net principal profit as the reward, one value update. Rng draw order:
// table init cells first, then per iteration the coin and (only when
// exploring) the action draw.
inline RunResult run_single(const RunConfig& config) {
    config.validate();
    if (config.env != EnvKind::Single)
        throw ConfigError("config key \"env\": run_single requires \"single\"");
    const SingleContractParams sp = config.single_params();
    sp.validate();

    Rng rng(config.seed);
    QTable q = init_qtable(1, config.d_p, rng);
    const LearningParams lp{config.alpha, config.delta};

    std::vector<double> reward_of(config.d_p);
    for (int a = 0; a < config.d_p; ++a)
        reward_of[a] = single_step_profits(sp.tax_at(a), sp).principal;

    RunResult result;
    result.config = config;
    result.explore_counts.assign(1, 0);
    result.visit_counts.assign(1, std::vector<std::uint64_t>(config.d_p, 0));

    ArgmaxTracker tracker;
    tracker.reset(q.row(0));
    for (std::uint64_t t = 0; t < config.t_max; ++t) {
        const double eps = config.exploration.at(t);
        int a;
        if (rng.uniform() < eps) {
            a = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(config.d_p)));
            ++result.explore_counts[0];
        } else {
            a = tracker.best;
        }
        update(q, 0, a, reward_of[a], 0, lp);
        tracker.on_update(q.row(0), a);
        ++result.visit_counts[0][a];

        const std::uint64_t done = t + 1;
        if (done % config.snapshot_every == 0 || done == config.t_max)
            result.snapshots.push_back(
                detail::single_snapshot(done, config.exploration.at(done), tracker.best, sp));
    }

    result.final_greedy = {greedy_action(q.row(0))};
    result.final_q.push_back(std::move(q));
    result.converged = convergence_check(result.snapshots, config.convergence_window);
    result.effective_tax_final = result.snapshots.back().effective_tax;
    return result;
}

// One seeded dual-contract learning run. Per iteration both principals draw
// an exploration coin at e^(-kt) (or the configured schedule) and choose a
// tax; the agent's response comes from the decision table; rewards are the
// blended profits. Rng draw order: principal 1's table init, principal 2's
// table init, then per iteration principal 1's coin, principal 1's action
// draw if exploring, principal 2's coin, principal 2's action draw if
// exploring.
inline RunResult run_dual(const RunConfig& config, const AgentDecisionTable* table = nullptr) {
    config.validate();
    if (config.env != EnvKind::Dual)
        throw ConfigError("config key \"env\": run_dual requires \"dual\"");
    const DualContractParams dp = config.dual_params();
    dp.validate();

    std::optional<AgentDecisionTable> own_table;
    if (table == nullptr) {
        own_table.emplace(build_agent_table(dp));
        table = &*own_table;
    } else {
        const DualContractParams& tp = table->params();
        if (tp.d_p != dp.d_p || tp.d_e != dp.d_e || tp.kappa != dp.kappa || tp.c != dp.c ||
            tp.I1 != dp.I1 || tp.I2 != dp.I2 || tp.T1 != dp.T1 || tp.T2 != dp.T2)
            throw std::invalid_argument("run_dual: agent table was built for different params");
    }

    Rng rng(config.seed);
    QTable q1 = init_qtable(1, config.d_p, rng);
    QTable q2 = init_qtable(1, config.d_p, rng);
    const LearningParams lp{config.alpha, config.delta};
    const std::uint64_t n_actions = static_cast<std::uint64_t>(config.d_p);
    const double beta = config.beta;
    const double m1 = dp.margin1(), m2 = dp.margin2();

    RunResult result;
    result.config = config;
    result.explore_counts.assign(2, 0);
    result.visit_counts.assign(2, std::vector<std::uint64_t>(config.d_p, 0));

    ArgmaxTracker tr1, tr2;
    tr1.reset(q1.row(0));
    tr2.reset(q2.row(0));
    for (std::uint64_t t = 0; t < config.t_max; ++t) {
        const double eps = config.exploration.at(t);
        int a1, a2;
        if (rng.uniform() < eps) {
            a1 = static_cast<int>(rng.bounded(n_actions));
            ++result.explore_counts[0];
        } else {
            a1 = tr1.best;
        }
        if (rng.uniform() < eps) {
            a2 = static_cast<int>(rng.bounded(n_actions));
            ++result.explore_counts[1];
        } else {
            a2 = tr2.best;
        }

        const std::size_t cell = table->cell(a1, a2);
        const double pi1 = table->pi1(cell);
        const double pi2 = table->pi2(cell);
        double r1, r2;
        if (config.blend_form == BlendForm::ProfitBlend) {
            const double joint = beta * (pi1 + pi2);
            r1 = joint + (1.0 - 2.0 * beta) * pi1;
            r2 = joint + (1.0 - 2.0 * beta) * pi2;
        } else {
            const double blended_rate = beta * table->rev_rate(cell);
            r1 = m1 * blended_rate + (1.0 - 2.0 * beta) * pi1;
            r2 = m2 * blended_rate + (1.0 - 2.0 * beta) * pi2;
        }
        update(q1, 0, a1, r1, 0, lp);
        tr1.on_update(q1.row(0), a1);
        update(q2, 0, a2, r2, 0, lp);
        tr2.on_update(q2.row(0), a2);
        ++result.visit_counts[0][a1];
        ++result.visit_counts[1][a2];

        const std::uint64_t done = t + 1;
        if (done % config.snapshot_every == 0 || done == config.t_max)
            result.snapshots.push_back(detail::dual_snapshot(
                done, config.exploration.at(done), tr1.best, tr2.best, *table));
    }

    result.final_greedy = {greedy_action(q1.row(0)), greedy_action(q2.row(0))};
    result.final_q.push_back(std::move(q1));
    result.final_q.push_back(std::move(q2));
    result.converged = convergence_check(result.snapshots, config.convergence_window);
    result.effective_tax_final = result.snapshots.back().effective_tax;
    return result;
}

struct CollusiveOptimum {
    double p1 = 0.0;
    double p2 = 0.0;
    double joint_profit = 0.0;
};

// Exhaustive benchmark: the tax pair maximizing joint principal profit when
// the agent best-responds via the decision table. Ties resolve to the
// lexicographically first (p1, p2) grid cell.
inline CollusiveOptimum collusive_optimum_oracle(const DualContractParams& params,
                                                 const AgentDecisionTable* table = nullptr) {
    params.validate();
    std::optional<AgentDecisionTable> own_table;
    if (table == nullptr) {
        own_table.emplace(build_agent_table(params));
        table = &*own_table;
    }
    CollusiveOptimum best;
    best.joint_profit = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < params.d_p; ++i) {
        for (int j = 0; j < params.d_p; ++j) {
            const std::size_t cell = table->cell(i, j);
            const double joint = table->pi1(cell) + table->pi2(cell);
            if (joint > best.joint_profit)
                best = {params.tax_at(i), params.tax_at(j), joint};
        }
    }
    return best;
}

}  // namespace contractlab
