#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "contractlab/errors.hpp"

namespace contractlab {

// Limited-liability debt-contract reference model. The project pays x_high
// with probability e and x_low otherwise; the contract repays the financier
// d_high or d_low state by state; the agent picks effort e at cost c e^2 / 2.
struct InnesParams {
    double x_high;
    double x_low;
    double investment;  // I, the amount the financier must recover in expectation
    double c;

    void validate() const {
        if (!(x_high > x_low)) throw std::invalid_argument("InnesParams: x_high must exceed x_low");
        if (!(investment > 0.0))
            throw std::invalid_argument("InnesParams: investment must be positive");
        if (!(c > 0.0)) throw std::invalid_argument("InnesParams: c must be positive");
    }
};

struct InnesContract {
    double d_low;
    double d_high;
};

// Agent's best-response effort for a given contract: the first-order
// condition of e (x_high - d_high) + (1-e)(x_low - d_low) - c e^2 / 2,
// clamped to [0,1]. Requires limited liability (payouts capped by payoffs).
inline double innes_agent_effort(const InnesContract& contract, const InnesParams& params) {
    params.validate();
    if (contract.d_low > params.x_low || contract.d_high > params.x_high)
        throw std::invalid_argument("innes_agent_effort: payout exceeds limited liability");
    const double interior =
        ((params.x_high - contract.d_high) - (params.x_low - contract.d_low)) / params.c;
    return std::clamp(interior, 0.0, 1.0);
}

// Agent's objective value at a given effort.
inline double innes_agent_value_at(const InnesContract& contract, double e,
                                   const InnesParams& params) {
    return e * (params.x_high - contract.d_high) +
           (1.0 - e) * (params.x_low - contract.d_low) - 0.5 * params.c * e * e;
}

// Financier's expected surplus relative to the investment; zero at exact
// break-even.
inline double innes_break_even_residual(const InnesContract& contract, double e,
                                        double investment) {
    if (!(e >= 0.0 && e <= 1.0))
        throw std::invalid_argument("innes_break_even_residual: e must be in [0,1]");
    return e * contract.d_high + (1.0 - e) * contract.d_low - investment;
}

struct InnesSearchResult {
    double d_low;
    double d_high;
    double agent_value;
};

// Brute-force search for the agent-optimal break-even contract on a grid.
//
// For each d_low level, break-even candidates are the grid points where the
// residual's magnitude is locally minimal along d_high (the grid's best
// approximations of curve crossings and tangencies) and within tol. Points
// merely near the curve but systematically short-changing the financier are
// not candidates, which keeps the result pinned to the break-even curve
// rather than to the tolerance band's edge. The line's best candidate is the
// one with the highest agent value; across lines, values within one
// grid step of the maximum are treated as tied and resolve to the highest
// d_low, absorbing quantization noise in the comparison.
inline InnesSearchResult innes_optimal_contract_search(const InnesParams& params,
                                                       double grid_step, double tol) {
    params.validate();
    if (!(grid_step > 0.0))
        throw std::invalid_argument("innes_optimal_contract_search: grid_step must be positive");
    if (!(tol > 0.0))
        throw std::invalid_argument("innes_optimal_contract_search: tol must be positive");

    const auto axis = [](double top, double step) {
        const long long n = std::max(1LL, std::llround(top / step));
        std::vector<double> v(static_cast<std::size_t>(n) + 1);
        for (long long i = 0; i <= n; ++i)
            v[static_cast<std::size_t>(i)] = top * (static_cast<double>(i) / n);
        return v;
    };
    const std::vector<double> lows = axis(params.x_low, grid_step);
    const std::vector<double> highs = axis(params.x_high, grid_step);

    struct LineBest {
        double d_low = 0.0, d_high = 0.0, value = 0.0;
        bool found = false;
    };
    std::vector<LineBest> lines(lows.size());

    std::vector<double> absres(highs.size());
    std::vector<double> value(highs.size());
    for (std::size_t li = 0; li < lows.size(); ++li) {
        const double d_low = lows[li];
        for (std::size_t hi = 0; hi < highs.size(); ++hi) {
            const InnesContract contract{d_low, highs[hi]};
            const double e = innes_agent_effort(contract, params);
            absres[hi] = std::abs(innes_break_even_residual(contract, e, params.investment));
            value[hi] = innes_agent_value_at(contract, e, params);
        }
        LineBest best;
        for (std::size_t hi = 0; hi < highs.size(); ++hi) {
            if (absres[hi] > tol) continue;
            const bool left_ok = hi == 0 || absres[hi] <= absres[hi - 1];
            const bool right_ok = hi + 1 == highs.size() || absres[hi] <= absres[hi + 1];
            if (!left_ok || !right_ok) continue;
            if (!best.found || value[hi] > best.value)
                best = {d_low, highs[hi], value[hi], true};
        }
        lines[li] = best;
    }

    double value_max = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& line : lines) {
        if (line.found) {
            any = true;
            value_max = std::max(value_max, line.value);
        }
    }
    if (!any)
        throw InfeasibleError(
            "innes_optimal_contract_search: no break-even contract on the grid within tol");

    const double slack = grid_step;
    const LineBest* pick = nullptr;
    for (const auto& line : lines)
        if (line.found && line.value >= value_max - slack) pick = &line;
    return {pick->d_low, pick->d_high, pick->value};
}

}  // namespace contractlab
