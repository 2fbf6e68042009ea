#pragma once

#include "ccekit/dgp.hpp"
#include "ccekit/selection.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ccekit::montecarlo {

struct Cell {
    int N = 100;
    int T = 100;
    double tau = 0.0;
};

enum class EstimatorFamily { ic, er };

/// ER variants: X uses the regressor averages, Z adds ybar; the tilde forms
/// right-scale by sigma_hat^{-1/2}.
enum class ErVariant { X, Xtilde, Z, Ztilde };

struct Estimator {
    EstimatorFamily family = EstimatorFamily::ic;
    selection::CriterionTag tag = selection::CriterionTag::DVS;
    selection::PenaltyKind penalty = selection::PenaltyKind::P1;
    ErVariant er = ErVariant::X;

    static Estimator ic(selection::CriterionTag tag, selection::PenaltyKind pen);
    static Estimator er_count(ErVariant v);

    /// "MW", "DVS", "DVS_adjusted", "ER_X", ...
    std::string criterion_name() const;
    /// "P1", "P2", or "none" for ER.
    std::string penalty_name() const;

    friend bool operator==(const Estimator&, const Estimator&) = default;
};

/// Parses a criterion/penalty pair as it appears in configs and CSV output.
Estimator parse_estimator(const std::string& criterion, const std::string& penalty);

/// MW and DVS under P1 and P2.
std::vector<Estimator> table_estimators();

struct ExperimentSpec {
    std::vector<Cell> cells;
    dgp::PanelConfig dgp;
    std::vector<Estimator> estimators = table_estimators();
    int reps = 500;
    std::uint64_t master_seed = 20240601;
    int threads = 1;

    void validate() const;
};

struct EstimatorOutcome {
    int g_hat = 0;
    selection::SubsetMask chosen;
    bool failed = false;
    std::string error;
};

/// One full pipeline draw. Deterministic in `seed`.
std::vector<EstimatorOutcome> run_replication(const Cell& cell, const dgp::PanelConfig& dgp,
                                              const std::vector<Estimator>& estimators,
                                              std::uint64_t seed);

struct EstimatorStats {
    Estimator estimator;
    double avg_g = 0.0;
    double share_misselected = 0.0;
    double share_over = 0.0;
    double share_under = 0.0;
    int failures = 0;
    int reps_done = 0;
    /// More than half the replications failed.
    bool unreliable = false;
};

struct CellResult {
    Cell cell;
    std::string dgp_mode;
    std::uint64_t seed = 0;
    int reps = 0;
    std::vector<EstimatorStats> stats;
};

/// Calls fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

/// Replication r of cell `cell_index` is seeded with derive_seed(master, cell_index, r).
CellResult run_cell(const Cell& cell, int cell_index, const ExperimentSpec& spec);

/// Every cell of the spec in order.
std::vector<CellResult> run_table(const ExperimentSpec& spec);

struct SweepPoint {
    double tau = 0.0;
    dgp::ErrorMode error_mode = dgp::ErrorMode::weak_cs;
    CellResult result;
};

/// tau grid 0, step, ... below `tau_end`, exclusive of values >= 1.
std::vector<double> tau_grid(double start, double step, double end);

/// Runs the spec's estimators at (N, T, tau) for every tau and every error
/// configuration. spec.cells is ignored.
std::vector<SweepPoint> tau_sweep(const ExperimentSpec& spec, int N, int T, const std::vector<double>& taus,
                                  const std::vector<dgp::ErrorConfig>& error_configs);

enum class RateStatistic { prop1_under, prop1_over, lemA1, corA1, lemA2, corA2 };

std::string_view to_string(RateStatistic s);
RateStatistic parse_rate_statistic(std::string_view s);

struct RateSpec {
    RateStatistic statistic = RateStatistic::prop1_under;
    double tau = 0.5;
    int N_fixed = 200;
    std::vector<int> T_grid{100, 200, 400, 800};
    int reps = 200;
    std::uint64_t seed = 20240601;
    int threads = 1;
    /// Use N = T at every grid point instead of N_fixed.
    bool couple_n_to_t = false;
    /// Factor innovation scale and errors. The statistic fixes rho where it
    /// needs to (AR(0.5) for lemA1/lemA2, 0 for corA1/corA2).
    dgp::PanelConfig base;

    void validate() const;
};

/// Defaults per statistic: prop1_over couples N to T; all use unit factor
/// innovations.
RateSpec default_rate_spec(RateStatistic s, double tau);

struct RateResult {
    RateStatistic statistic = RateStatistic::prop1_under;
    double tau = 0.0;
    std::vector<int> T_grid;
    std::vector<int> N_grid;
    std::vector<double> medians;
    double fitted_slope = 0.0;
    double theoretical_slope = 0.0;
};

double theoretical_slope(RateStatistic s, double tau);

/// Value of the statistic on one panel.
double rate_statistic(RateStatistic s, const dgp::Panel& panel);

RateResult rate_check(const RateSpec& spec);

/// Least-squares slope of ln(y) on ln(x). Throws if any y <= 0.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);

struct ReportRow {
    int N = 0;
    int T = 0;
    double tau = 0.0;
    std::string dgp_mode;
    std::string criterion;
    std::string penalty;
    double avg_g = 0.0;
    double share_misselected = 0.0;
    double share_over = 0.0;
    double share_under = 0.0;
    int reps = 0;
    int failures = 0;
    std::uint64_t seed = 0;
    bool unreliable = false;
};

/// Flattens cell results into rows sorted by (N, T, tau, dgp_mode, criterion,
/// penalty), so the merge order of the input does not matter.
std::vector<ReportRow> aggregate(const std::vector<CellResult>& results);

}  // namespace ccekit::montecarlo
