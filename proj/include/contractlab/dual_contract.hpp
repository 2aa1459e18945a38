#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace contractlab {

// Two principals fund separate projects and independently post tax rates on
// their project's marginal payoff; one agent splits effort (e1, e2) with
// e1 + e2 <= 1 across the projects and keeps both residuals. kappa skews the
// effort cost in favor of project 1; beta blends the principals' rewards
// from pure competition (0) to an even split of the joint profit (0.5).
struct DualContractParams {
    double I1 = 1.0, I2 = 1.0;
    double T1 = 2.0, T2 = 2.0;
    double c = 2.0;
    double kappa = 0.0;
    double beta = 0.0;
    int d_p = 101;  // tax grid levels per principal
    int d_e = 101;  // effort grid levels per dimension

    void validate() const {
        if (!(I1 > 0.0) || !(I2 > 0.0))
            throw std::invalid_argument("DualContractParams: investments must be positive");
        if (!(T1 > I1) || !(T2 > I2))
            throw std::invalid_argument("DualContractParams: T_i must exceed I_i");
        if (!(c > 0.0)) throw std::invalid_argument("DualContractParams: c must be positive");
        if (!(kappa >= 0.0 && kappa < 1.0))
            throw std::invalid_argument("DualContractParams: kappa must be in [0,1)");
        if (!(beta >= 0.0 && beta <= 0.5))
            throw std::invalid_argument("DualContractParams: beta must be in [0,0.5]");
        if (d_p < 2) throw std::invalid_argument("DualContractParams: d_p must be >= 2");
        if (d_e < 2) throw std::invalid_argument("DualContractParams: d_e must be >= 2");
    }

    double margin1() const { return T1 - I1; }
    double margin2() const { return T2 - I2; }
    double tax_at(int i) const { return static_cast<double>(i) / (d_p - 1); }
    double effort_at(int i) const { return static_cast<double>(i) / (d_e - 1); }
};

struct EffortPair {
    double e1 = 0.0;
    double e2 = 0.0;
};

// Cost c (e1+e2)^2 (1 - kappa + 2 kappa e2/(e1+e2)) / 2, and zero at zero
// total effort. Larger kappa makes project-1 effort cheaper and project-2
// effort dearer.
inline double agent_cost(const EffortPair& e, double c, double kappa) {
    const double total = e.e1 + e.e2;
    if (total == 0.0) return 0.0;
    return 0.5 * c * total * total * (1.0 - kappa + 2.0 * kappa * e.e2 / total);
}

inline double agent_profit(double p1, double p2, const EffortPair& e,
                           const DualContractParams& params) {
    return params.margin1() * e.e1 * (1.0 - p1) + params.margin2() * e.e2 * (1.0 - p2) -
           agent_cost(e, params.c, params.kappa);
}

// Number of feasible effort pairs on the triangular grid.
inline int agent_action_count(int d_e) {
    if (d_e < 2) throw std::invalid_argument("agent_action_count: d_e must be >= 2");
    return d_e * (d_e + 1) / 2;
}

// Bijective triangular enumeration of the feasible effort simplex:
// e1 ascends over blocks, e2 ascends within a block.
inline EffortPair decode_action(int k, int d_e) {
    const int count = agent_action_count(d_e);
    if (k < 0 || k >= count) throw std::invalid_argument("decode_action: index out of range");
    int i = 0, block = d_e;
    while (k >= block) {
        k -= block;
        ++i;
        --block;
    }
    const int g = d_e - 1;
    return {static_cast<double>(i) / g, static_cast<double>(k) / g};
}

struct PrincipalProfits {
    double pi1;
    double pi2;
};

// Per-principal profit net of the returned investment.
inline PrincipalProfits principal_profits(double p1, double p2, const EffortPair& e,
                                          const DualContractParams& params) {
    return {params.margin1() * e.e1 * p1, params.margin2() * e.e2 * p2};
}

struct BlendedRewards {
    double r1;
    double r2;
};

// r_i = beta (pi1 + pi2) + (1 - 2 beta) pi_i. Total reward is conserved:
// r1 + r2 = pi1 + pi2 for every beta.
inline BlendedRewards blended_rewards(double pi1, double pi2, double beta) {
    if (!(beta >= 0.0 && beta <= 0.5))
        throw std::invalid_argument("blended_rewards: beta must be in [0,0.5]");
    const double joint = beta * (pi1 + pi2);
    return {joint + (1.0 - 2.0 * beta) * pi1, joint + (1.0 - 2.0 * beta) * pi2};
}

// Variant that scales the blended revenue rate by each principal's own
// margin: r_i = (T_i - I_i) [ (e1 p1 + e2 p2) beta + e_i p_i (1 - 2 beta) ].
// Coincides with blended_rewards when the margins are equal.
inline BlendedRewards margin_scaled_rewards(double p1, double p2, const EffortPair& e,
                                            const DualContractParams& params) {
    if (!(params.beta >= 0.0 && params.beta <= 0.5))
        throw std::invalid_argument("margin_scaled_rewards: beta must be in [0,0.5]");
    const double rev_rate = e.e1 * p1 + e.e2 * p2;
    const double own1 = e.e1 * p1, own2 = e.e2 * p2;
    const double b = params.beta;
    return {params.margin1() * (rev_rate * b + own1 * (1.0 - 2.0 * b)),
            params.margin2() * (rev_rate * b + own2 * (1.0 - 2.0 * b))};
}

// Closed-form best response. At fixed total effort the cost is linear in e2,
// so the optimum concentrates on one project; compare the two pure-project
// optima and keep the better one. Exact ties go to project 2, matching the
// lowest-index rule of the triangular enumeration where e1 = 0 comes first.
inline EffortPair agent_best_effort_closed_form(double p1, double p2,
                                                const DualContractParams& params) {
    if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0))
        throw std::invalid_argument("agent_best_effort_closed_form: taxes must be in [0,1]");
    const double s1 = params.margin1() * (1.0 - p1);
    const double s2 = params.margin2() * (1.0 - p2);
    const double c1 = params.c * (1.0 - params.kappa);
    const double c2 = params.c * (1.0 + params.kappa);
    const double e1 = std::clamp(s1 / c1, 0.0, 1.0);
    const double e2 = std::clamp(s2 / c2, 0.0, 1.0);
    const double v1 = s1 * e1 - 0.5 * c1 * e1 * e1;
    const double v2 = s2 * e2 - 0.5 * c2 * e2 * e2;
    if (v1 > v2) return {e1, 0.0};
    return {0.0, e2};
}

// Continuous maximum of the agent's profit over the effort simplex.
inline double agent_best_value_closed_form(double p1, double p2,
                                           const DualContractParams& params) {
    const EffortPair e = agent_best_effort_closed_form(p1, p2, params);
    return agent_profit(p1, p2, e, params);
}

// Precomputed best response for every tax-grid cell, with the quantities the
// run loop needs cached per cell.
class AgentDecisionTable {
  public:
    explicit AgentDecisionTable(const DualContractParams& params) : params_(params) {
        params.validate();
        const std::size_t n = static_cast<std::size_t>(params.d_p) * params.d_p;
        action_.resize(n);
        e1_.resize(n);
        e2_.resize(n);
        pi1_.resize(n);
        pi2_.resize(n);
        agent_profit_.resize(n);
        rev_rate_.resize(n);
    }

    const DualContractParams& params() const { return params_; }
    int d_p() const { return params_.d_p; }
    int d_e() const { return params_.d_e; }

    std::size_t cell(int i, int j) const {
        return static_cast<std::size_t>(i) * params_.d_p + j;
    }

    int action_index(int i, int j) const { return action_[cell(i, j)]; }
    EffortPair effort(int i, int j) const { return {e1_[cell(i, j)], e2_[cell(i, j)]}; }
    double pi1(std::size_t cell) const { return pi1_[cell]; }
    double pi2(std::size_t cell) const { return pi2_[cell]; }
    double cached_agent_profit(std::size_t cell) const { return agent_profit_[cell]; }
    double rev_rate(std::size_t cell) const { return rev_rate_[cell]; }

    void set(int i, int j, int action, const EffortPair& e) {
        const std::size_t n = cell(i, j);
        const double p1 = params_.tax_at(i), p2 = params_.tax_at(j);
        action_[n] = action;
        e1_[n] = e.e1;
        e2_[n] = e.e2;
        const PrincipalProfits pi = principal_profits(p1, p2, e, params_);
        pi1_[n] = pi.pi1;
        pi2_[n] = pi.pi2;
        agent_profit_[n] = agent_profit(p1, p2, e, params_);
        rev_rate_[n] = e.e1 * p1 + e.e2 * p2;
    }

  private:
    DualContractParams params_;
    std::vector<int> action_;
    std::vector<double> e1_, e2_, pi1_, pi2_, agent_profit_, rev_rate_;
};

// Absolute tolerance under which two enumerated agent profits count as tied.
// Ties between actions that are equal in exact arithmetic (equal splits of
// one total effort, or continuous optima falling halfway between grid
// points) reach the comparison separated only by rounding noise well below
// this, while genuinely distinct enumerated profits sit orders of magnitude
// above it for payoffs of order one.
inline constexpr double kAgentTieTolerance = 1e-12;

// Exhaustive per-cell argmax over every enumerated effort pair; actions tied
// within kAgentTieTolerance of the maximum resolve to the lowest index.
//
// The per-action profit is evaluated as A(E) + e2 B(E) with E the total
// effort, A(E) = s1 E - c (1-kappa) E^2 / 2 and B(E) = (s2 - s1) - c kappa E,
// which is the revenue-minus-cost formula rearranged so that equal splits of
// one total effort compare bitwise-equal. Evaluating revenue and cost per
// pair instead lets rounding noise split exact ties and hand the argmax to
// an interior split of the same total effort.
inline AgentDecisionTable build_agent_table(const DualContractParams& params) {
    params.validate();
    AgentDecisionTable table(params);
    const int d_p = params.d_p, d_e = params.d_e, g = d_e - 1;
    const int count = agent_action_count(d_e);

    // Enumeration order: e1-index-major, e2-index ascending.
    std::vector<std::pair<int, int>> decoded(static_cast<std::size_t>(count));
    {
        int k = 0;
        for (int i = 0; i < d_e; ++i)
            for (int j = 0; j + i < d_e; ++j) decoded[k++] = {i, j};
    }
    std::vector<double> effort(d_e);
    for (int i = 0; i < d_e; ++i) effort[i] = static_cast<double>(i) / g;

    const double ck = params.c * params.kappa;
    const double half_c1 = 0.5 * params.c * (1.0 - params.kappa);
    std::vector<double> a_of_total(d_e), b_of_total(d_e);

    for (int i = 0; i < d_p; ++i) {
        const double s1 = params.margin1() * (1.0 - params.tax_at(i));
        for (int j = 0; j < d_p; ++j) {
            const double s2 = params.margin2() * (1.0 - params.tax_at(j));
            const double ds = s2 - s1;
            for (int u = 0; u < d_e; ++u) {
                const double total = effort[u];
                a_of_total[u] = s1 * total - half_c1 * total * total;
                b_of_total[u] = ds - ck * total;
            }
            double best_val = 0.0;  // action 0 is (0,0) with profit 0
            for (int k = 1; k < count; ++k) {
                const auto [i1, i2] = decoded[k];
                const double v = a_of_total[i1 + i2] + effort[i2] * b_of_total[i1 + i2];
                if (v > best_val) best_val = v;
            }
            int best = 0;
            const double cutoff = best_val - kAgentTieTolerance;
            if (best_val > kAgentTieTolerance) {
                for (int k = 1; k < count; ++k) {
                    const auto [i1, i2] = decoded[k];
                    const double v = a_of_total[i1 + i2] + effort[i2] * b_of_total[i1 + i2];
                    if (v >= cutoff) {
                        best = k;
                        break;
                    }
                }
            }
            const auto [i1, i2] = decoded[best];
            table.set(i, j, best, {effort[i1], effort[i2]});
        }
    }
    return table;
}

// Snap a pure-project effort pair to the d_e grid, keeping whichever of the
// two bracketing grid points earns the agent more; used to compare the
// closed form against the table at grid resolution.
inline EffortPair quantize_effort_pair(const EffortPair& e, double p1, double p2,
                                       const DualContractParams& params) {
    const int g = params.d_e - 1;
    const auto snap = [&](double val, bool on_project1) {
        const double scaled = val * g;
        const int lo = std::clamp(static_cast<int>(std::floor(scaled)), 0, g);
        const int hi = std::clamp(lo + 1, 0, g);
        const EffortPair cand_lo = on_project1 ? EffortPair{params.effort_at(lo), 0.0}
                                               : EffortPair{0.0, params.effort_at(lo)};
        const EffortPair cand_hi = on_project1 ? EffortPair{params.effort_at(hi), 0.0}
                                               : EffortPair{0.0, params.effort_at(hi)};
        return agent_profit(p1, p2, cand_hi, params) > agent_profit(p1, p2, cand_lo, params)
                   ? cand_hi
                   : cand_lo;
    };
    if (e.e2 == 0.0) return snap(e.e1, true);
    if (e.e1 == 0.0) return snap(e.e2, false);
    throw std::invalid_argument("quantize_effort_pair: expected a pure-project pair");
}

}  // namespace contractlab
