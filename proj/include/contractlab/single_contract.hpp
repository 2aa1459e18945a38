#pragma once

#include <algorithm>
#include <stdexcept>

namespace contractlab {

// Single principal-agent environment. The principal posts a tax rate p on the
// marginal project payoff; the agent best-responds with effort e in [0,1] at
// quadratic cost c e^2 / 2. The project returns I + (T - I) e, the principal
// collects I + (T - I) e p, and the agent keeps the residual.
struct SingleContractParams {
    double investment = 1.0;   // I
    double top_payoff = 2.0;   // T, highest possible payoff
    double effort_cost = 2.0;  // c
    int d_p = 101;             // tax grid levels on [0,1]

    void validate() const {
        if (!(investment > 0.0))
            throw std::invalid_argument("SingleContractParams: investment must be positive");
        if (!(top_payoff > investment))
            throw std::invalid_argument(
                "SingleContractParams: top_payoff must exceed investment");
        if (!(effort_cost > 0.0))
            throw std::invalid_argument("SingleContractParams: effort_cost must be positive");
        if (d_p < 2) throw std::invalid_argument("SingleContractParams: d_p must be >= 2");
    }

    double margin() const { return top_payoff - investment; }
    double tax_at(int i) const { return static_cast<double>(i) / (d_p - 1); }
};

// Maximizer of (T-I) e (1-p) - c e^2 / 2 over e in [0,1].
inline double agent_best_effort(double p, const SingleContractParams& params) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("agent_best_effort: p must be in [0,1]");
    const double interior = params.margin() * (1.0 - p) / params.effort_cost;
    return std::clamp(interior, 0.0, 1.0);
}

struct StepProfits {
    double principal;  // net of the returned investment I
    double agent;
};

inline StepProfits single_step_profits(double p, const SingleContractParams& params) {
    const double e = agent_best_effort(p, params);
    const double m = params.margin();
    return {m * e * p, m * e * (1.0 - p) - 0.5 * params.effort_cost * e * e};
}

}  // namespace contractlab
