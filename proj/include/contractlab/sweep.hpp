#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "contractlab/errors.hpp"
#include "contractlab/run.hpp"

namespace contractlab {

enum class SweepParam { Beta, Kappa, Alpha, K };

inline std::string sweep_param_name(SweepParam p) {
    switch (p) {
        case SweepParam::Beta: return "beta";
        case SweepParam::Kappa: return "kappa";
        case SweepParam::Alpha: return "alpha";
        case SweepParam::K: return "k";
    }
    return "?";
}

// A shutdown signal arrived mid-sweep; completed cells are discarded since a
// partial grid cannot be aggregated honestly.
struct SweepInterrupted : std::runtime_error {
    explicit SweepInterrupted(const std::string& msg) : std::runtime_error(msg) {}
};

struct SweepPoint {
    double value = 0.0;
    double mean_eff_tax = 0.0;
    double median_eff_tax = 0.0;
    double p10 = 0.0;
    double p90 = 0.0;
    double converged_frac = 0.0;
    int n_seeds = 0;
};

struct SweepSummary {
    SweepParam param = SweepParam::Beta;
    std::vector<SweepPoint> points;  // sorted ascending by value
};

namespace detail {

// Linear-interpolated percentile of a sorted sample; collapses to the single
// value for n = 1.
inline double percentile(const std::vector<double>& sorted, double q) {
    const double rank = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

inline RunConfig apply_sweep_value(RunConfig cfg, SweepParam param, double value) {
    switch (param) {
        case SweepParam::Beta: cfg.beta = value; break;
        case SweepParam::Kappa: cfg.kappa = value; break;
        case SweepParam::Alpha: cfg.alpha = value; break;
        case SweepParam::K: cfg.exploration = ExplorationSchedule::exp_decay(value); break;
    }
    return cfg;
}

}  // namespace detail

// Runs every (grid value x seed) cell as an independent dual run and
// aggregates the final effective tax per grid point. Cells execute on a
// worker pool; each cell is deterministic given its seed, so the summary is
// independent of the scheduling order. All cell configurations are validated
// before any run starts.
inline SweepSummary sweep(const RunConfig& base, SweepParam param,
                          const std::vector<double>& grid,
                          const std::vector<std::uint64_t>& seeds, int parallelism,
                          const std::atomic<bool>* cancel = nullptr) {
    if (grid.empty()) throw ConfigError("sweep: empty parameter grid");
    if (seeds.empty()) throw ConfigError("sweep: empty seed list");
    if (parallelism < 1) throw ConfigError("sweep: parallelism must be >= 1");
    if (base.env != EnvKind::Dual)
        throw ConfigError("config key \"env\": sweep runs dual-contract cells");

    std::vector<double> sorted_grid = grid;
    std::sort(sorted_grid.begin(), sorted_grid.end());

    struct Cell {
        RunConfig config;
        double eff_tax = 0.0;
        bool converged = false;
    };
    std::vector<Cell> cells;
    cells.reserve(sorted_grid.size() * seeds.size());
    for (double value : sorted_grid) {
        for (std::uint64_t seed : seeds) {
            try {
                RunConfig cfg = detail::apply_sweep_value(base, param, value);
                cfg.seed = seed;
                cfg.validate();
                cells.push_back({cfg, 0.0, false});
            } catch (const std::exception& ex) {
                throw ConfigError("sweep cell " + sweep_param_name(param) + "=" +
                                  std::to_string(value) + " seed=" + std::to_string(seed) +
                                  ": " + ex.what());
            }
        }
    }

    // One decision table per distinct kappa; cells share them read-only.
    std::map<double, AgentDecisionTable> tables;
    for (const Cell& cell : cells)
        if (tables.find(cell.config.kappa) == tables.end())
            tables.emplace(cell.config.kappa, build_agent_table(cell.config.dual_params()));

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> completed{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mu;
    const auto worker = [&] {
        for (;;) {
            if (failed.load() || (cancel != nullptr && cancel->load())) return;
            const std::size_t idx = next.fetch_add(1);
            if (idx >= cells.size()) return;
            Cell& cell = cells[idx];
            try {
                const RunResult run = run_dual(cell.config, &tables.at(cell.config.kappa));
                cell.eff_tax = run.effective_tax_final;
                cell.converged = run.converged;
                completed.fetch_add(1);
            } catch (const std::exception& ex) {
                std::lock_guard<std::mutex> lock(failure_mu);
                failed.store(true);
                failure = ex.what();
            }
        }
    };
    const int n_workers = std::min<int>(parallelism, static_cast<int>(cells.size()));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    if (failed.load()) throw std::runtime_error("sweep: " + failure);
    if (completed.load() != cells.size())
        throw SweepInterrupted(std::to_string(cells.size() - completed.load()) + " of " +
                               std::to_string(cells.size()) + " cells incomplete");

    SweepSummary summary;
    summary.param = param;
    const std::size_t per_point = seeds.size();
    for (std::size_t gi = 0; gi < sorted_grid.size(); ++gi) {
        std::vector<double> taxes(per_point);
        int converged = 0;
        for (std::size_t si = 0; si < per_point; ++si) {
            const Cell& cell = cells[gi * per_point + si];
            taxes[si] = cell.eff_tax;
            converged += cell.converged ? 1 : 0;
        }
        std::sort(taxes.begin(), taxes.end());
        double sum = 0.0;
        for (double v : taxes) sum += v;
        SweepPoint point;
        point.value = sorted_grid[gi];
        point.mean_eff_tax = sum / static_cast<double>(per_point);
        point.median_eff_tax = detail::percentile(taxes, 0.5);
        point.p10 = detail::percentile(taxes, 0.1);
        point.p90 = detail::percentile(taxes, 0.9);
        point.converged_frac = static_cast<double>(converged) / static_cast<double>(per_point);
        point.n_seeds = static_cast<int>(per_point);
        summary.points.push_back(point);
    }
    return summary;
}

}  // namespace contractlab
