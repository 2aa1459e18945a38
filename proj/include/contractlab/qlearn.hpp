#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "contractlab/rng.hpp"

namespace contractlab {

struct LearningParams {
    double alpha = 0.1;  // learning rate, in [0,1]
    double delta = 0.0;  // discount factor, in [0,1)

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw std::invalid_argument("LearningParams: alpha must be in [0,1]");
        if (!(delta >= 0.0 && delta < 1.0))
            throw std::invalid_argument("LearningParams: delta must be in [0,1)");
    }
};

// Exploration rate as a function of the iteration index: either a constant
// epsilon or an exponential decay e^(-k t).
class ExplorationSchedule {
  public:
    enum class Kind { Fixed, ExpDecay };

    static ExplorationSchedule fixed(double epsilon) {
        if (!(epsilon >= 0.0 && epsilon <= 1.0))
            throw std::invalid_argument("ExplorationSchedule: epsilon must be in [0,1]");
        return ExplorationSchedule(Kind::Fixed, epsilon);
    }

    static ExplorationSchedule exp_decay(double k) {
        if (!(k > 0.0))
            throw std::invalid_argument("ExplorationSchedule: k must be positive");
        return ExplorationSchedule(Kind::ExpDecay, k);
    }

    double at(std::uint64_t t) const {
        return kind_ == Kind::Fixed ? value_ : std::exp(-value_ * static_cast<double>(t));
    }

    Kind kind() const { return kind_; }
    // Fixed epsilon or decay constant, depending on kind().
    double value() const { return value_; }

  private:
    ExplorationSchedule(Kind kind, double value) : kind_(kind), value_(value) {}

    Kind kind_;
    double value_;
};

// Dense action-value table over (state, action), row-major.
class QTable {
  public:
    QTable(int n_states, int n_actions)
        : n_states_(n_states), n_actions_(n_actions) {
        if (n_states < 1 || n_actions < 1)
            throw std::invalid_argument("QTable: dimensions must be positive");
        values_.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
    }

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }

    double operator()(int s, int a) const {
        return values_[static_cast<std::size_t>(s) * n_actions_ + a];
    }
    double& operator()(int s, int a) {
        return values_[static_cast<std::size_t>(s) * n_actions_ + a];
    }

    std::span<const double> row(int s) const {
        return {values_.data() + static_cast<std::size_t>(s) * n_actions_,
                static_cast<std::size_t>(n_actions_)};
    }
    std::span<double> row(int s) {
        return {values_.data() + static_cast<std::size_t>(s) * n_actions_,
                static_cast<std::size_t>(n_actions_)};
    }

    const std::vector<double>& values() const { return values_; }

  private:
    int n_states_;
    int n_actions_;
    std::vector<double> values_;
};

// Fresh table with every cell drawn independently uniform on [0,1).
// Cells are filled row-major, state by state, so the rng advance order is
// part of the determinism contract.
inline QTable init_qtable(int n_states, int n_actions, Rng& rng) {
    QTable q(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) q(s, a) = rng.uniform();
    return q;
}

// Index of the largest value; ties resolve to the lowest index.
inline int greedy_action(std::span<const double> qrow) {
    if (qrow.empty()) throw std::invalid_argument("greedy_action: empty row");
    int best = 0;
    double best_val = qrow[0];
    for (int i = 1; i < static_cast<int>(qrow.size()); ++i) {
        if (qrow[i] > best_val) {
            best_val = qrow[i];
            best = i;
        }
    }
    return best;
}

// Epsilon-greedy selection. Always consumes one exploration coin; consumes a
// second draw only on the exploration branch.
inline int select_action(std::span<const double> qrow, double eps, Rng& rng) {
    if (qrow.empty()) throw std::invalid_argument("select_action: empty row");
    if (!(eps >= 0.0 && eps <= 1.0))
        throw std::invalid_argument("select_action: eps must be in [0,1]");
    if (rng.uniform() < eps)
        return static_cast<int>(rng.bounded(qrow.size()));
    return greedy_action(qrow);
}

// Q(s,a) <- (1-alpha) Q(s,a) + alpha [r + delta max_a' Q(s',a')].
// Every other cell is left untouched.
inline void update(QTable& q, int state, int action, double reward, int next_state,
                   const LearningParams& params) {
    params.validate();
    if (state < 0 || state >= q.n_states() || next_state < 0 || next_state >= q.n_states())
        throw std::invalid_argument("update: state index out of range");
    if (action < 0 || action >= q.n_actions())
        throw std::invalid_argument("update: action index out of range");
    if (!std::isfinite(reward)) throw std::invalid_argument("update: reward must be finite");

    double target = reward;
    if (params.delta != 0.0) {
        const auto next_row = q.row(next_state);
        target += params.delta * next_row[greedy_action(next_row)];
    }
    q(state, action) = (1.0 - params.alpha) * q(state, action) + params.alpha * target;
}

}  // namespace contractlab
