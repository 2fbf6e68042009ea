#include "ccekit/montecarlo.hpp"

#include "ccekit/cce.hpp"
#include "ccekit/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>
#include <tuple>

namespace ccekit::montecarlo {

using selection::CriterionTag;
using selection::PenaltyKind;

Estimator Estimator::ic(CriterionTag tag, PenaltyKind pen) {
    Estimator e;
    e.family = EstimatorFamily::ic;
    e.tag = tag;
    e.penalty = pen;
    return e;
}

Estimator Estimator::er_count(ErVariant v) {
    Estimator e;
    e.family = EstimatorFamily::er;
    e.er = v;
    return e;
}

std::string Estimator::criterion_name() const {
    if (family == EstimatorFamily::ic) return std::string(selection::to_string(tag));
    switch (er) {
        case ErVariant::X: return "ER_X";
        case ErVariant::Xtilde: return "ER_Xtilde";
        case ErVariant::Z: return "ER_Z";
        case ErVariant::Ztilde: return "ER_Ztilde";
    }
    return "ER";
}

std::string Estimator::penalty_name() const {
    return family == EstimatorFamily::ic ? std::string(selection::to_string(penalty)) : "none";
}

Estimator parse_estimator(const std::string& criterion, const std::string& penalty) {
    if (criterion.rfind("ER_", 0) == 0) {
        if (penalty != "none" && !penalty.empty()) {
            throw ConfigError("ER estimators take no penalty (got '" + penalty + "')");
        }
        if (criterion == "ER_X") return Estimator::er_count(ErVariant::X);
        if (criterion == "ER_Xtilde") return Estimator::er_count(ErVariant::Xtilde);
        if (criterion == "ER_Z") return Estimator::er_count(ErVariant::Z);
        if (criterion == "ER_Ztilde") return Estimator::er_count(ErVariant::Ztilde);
        throw ConfigError("unknown ER variant '" + criterion + "'");
    }
    return Estimator::ic(selection::parse_criterion(criterion), selection::parse_penalty(penalty));
}

std::vector<Estimator> table_estimators() {
    return {Estimator::ic(CriterionTag::MW, PenaltyKind::P1), Estimator::ic(CriterionTag::MW, PenaltyKind::P2),
            Estimator::ic(CriterionTag::DVS, PenaltyKind::P1), Estimator::ic(CriterionTag::DVS, PenaltyKind::P2)};
}

void ExperimentSpec::validate() const {
    if (cells.empty()) throw ConfigError("experiment has no cells");
    if (reps < 1) throw ConfigError("reps must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (estimators.empty()) throw ConfigError("experiment has no criteria");
    for (const Cell& c : cells) {
        dgp::PanelConfig cfg = dgp;
        cfg.N = c.N;
        cfg.T = c.T;
        cfg.factor.tau = c.tau;
        cfg.validate();
    }
}

namespace {

dgp::PanelConfig cell_config(const Cell& cell, const dgp::PanelConfig& base) {
    dgp::PanelConfig cfg = base;
    cfg.N = cell.N;
    cfg.T = cell.T;
    cfg.factor.tau = cell.tau;
    return cfg;
}

bool needs(const std::vector<Estimator>& ests, auto pred) {
    return std::any_of(ests.begin(), ests.end(), pred);
}

using Table = std::vector<std::optional<double>>;

}  // namespace

std::vector<EstimatorOutcome> run_replication(const Cell& cell, const dgp::PanelConfig& dgp_template,
                                              const std::vector<Estimator>& estimators, std::uint64_t seed) {
    const dgp::PanelConfig cfg = cell_config(cell, dgp_template);
    RngStream rng(seed);
    const dgp::Panel panel = dgp::generate_panel(cfg, rng);

    CandidateSet full;
    CandidateSet reg;
    if (cfg.oracle_candidates) {
        full = dgp::oracle_candidates(panel.f_true, cfg.k + 1, rng);
        reg = dgp::oracle_candidates(panel.f_true, cfg.k, rng);
    } else {
        full = cce::cs_averages(panel);
        reg = cce::regressor_candidates(full);
    }

    const bool want_mw = needs(estimators, [](const Estimator& e) {
        return e.family == EstimatorFamily::ic && e.tag == CriterionTag::MW;
    });
    const bool want_dvs = needs(estimators, [](const Estimator& e) {
        return e.family == EstimatorFamily::ic && e.tag != CriterionTag::MW;
    });

    std::optional<selection::MomentCache> mw_cache;
    std::optional<Table> mw_table;
    std::string mw_error;
    if (want_mw) {
        try {
            const cce::CceFit fit = cce::cce_pooled(panel, full);
            mw_cache = selection::build_cache(panel, full, &fit);
            mw_table = selection::objective_table(*mw_cache, selection::CriterionKind::mw());
        } catch (const std::exception& ex) {
            mw_error = ex.what();
        }
    }
    std::optional<selection::MomentCache> dvs_cache;
    std::optional<Table> dvs_table;
    std::optional<Table> adj_table;
    std::string dvs_error;
    if (want_dvs) {
        try {
            dvs_cache = selection::build_cache(panel, reg);
            dvs_table = selection::objective_table(*dvs_cache, selection::CriterionKind::dvs());
            // T^{1+tau} normalization shifts every log-determinant by -k tau ln T.
            adj_table = *dvs_table;
            const double shift = cfg.k * cell.tau * std::log(static_cast<double>(cfg.T));
            for (auto& v : *adj_table) {
                if (v) *v -= shift;
            }
        } catch (const std::exception& ex) {
            dvs_error = ex.what();
        }
    }

    std::vector<EstimatorOutcome> out;
    out.reserve(estimators.size());
    for (const Estimator& e : estimators) {
        EstimatorOutcome o;
        try {
            if (e.family == EstimatorFamily::er) {
                const bool with_y = e.er == ErVariant::Z || e.er == ErVariant::Ztilde;
                const bool scaled = e.er == ErVariant::Xtilde || e.er == ErVariant::Ztilde;
                const CandidateSet& cs = with_y ? full : reg;
                if (scaled) {
                    const Mat s = selection::sigma_hat(panel, !with_y);
                    o.g_hat = selection::er_count(cs, true, &s);
                } else {
                    o.g_hat = selection::er_count(cs, false);
                }
            } else if (e.tag == CriterionTag::MW) {
                if (!mw_table) throw EstimationError(mw_error);
                const auto res = selection::select_from_table(*mw_table, *mw_cache,
                                                              selection::CriterionKind::mw(), e.penalty);
                o.g_hat = res.g_hat;
                o.chosen = res.chosen;
            } else {
                if (!dvs_table) throw EstimationError(dvs_error);
                const bool adj = e.tag == CriterionTag::DVS_adjusted;
                const auto crit = adj ? selection::CriterionKind::dvs_adjusted(cell.tau)
                                      : selection::CriterionKind::dvs();
                const auto res = selection::select_from_table(adj ? *adj_table : *dvs_table, *dvs_cache, crit,
                                                              e.penalty);
                o.g_hat = res.g_hat;
                o.chosen = res.chosen;
            }
        } catch (const std::exception& ex) {
            o.failed = true;
            o.error = ex.what();
        }
        out.push_back(std::move(o));
    }
    return out;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    const int workers = std::max(1, std::min(threads, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

std::string dgp_mode_name(const dgp::PanelConfig& cfg) {
    std::string s(dgp::to_string(cfg.errors.mode));
    if (cfg.oracle_candidates) s += "+oracle";
    return s;
}

}  // namespace

CellResult run_cell(const Cell& cell, int cell_index, const ExperimentSpec& spec) {
    if (spec.reps < 1) throw ConfigError("reps must be >= 1");
    std::vector<std::vector<EstimatorOutcome>> outcomes(spec.reps);
    parallel_for(spec.reps, spec.threads, [&](int r) {
        const std::uint64_t seed = derive_seed(spec.master_seed, static_cast<std::uint64_t>(cell_index),
                                               static_cast<std::uint64_t>(r));
        outcomes[r] = run_replication(cell, spec.dgp, spec.estimators, seed);
    });

    CellResult res;
    res.cell = cell;
    res.dgp_mode = dgp_mode_name(spec.dgp);
    res.seed = spec.master_seed;
    res.reps = spec.reps;
    const int m = spec.dgp.factor.m;
    for (std::size_t e = 0; e < spec.estimators.size(); ++e) {
        EstimatorStats st;
        st.estimator = spec.estimators[e];
        long long sum_g = 0;
        int over = 0;
        int under = 0;
        for (const auto& rep : outcomes) {
            const EstimatorOutcome& o = rep[e];
            if (o.failed) {
                ++st.failures;
                continue;
            }
            ++st.reps_done;
            sum_g += o.g_hat;
            if (o.g_hat > m) ++over;
            if (o.g_hat < m) ++under;
        }
        if (st.reps_done > 0) {
            const double n = st.reps_done;
            st.avg_g = static_cast<double>(sum_g) / n;
            st.share_over = over / n;
            st.share_under = under / n;
            st.share_misselected = st.share_over + st.share_under;
        } else {
            st.avg_g = std::numeric_limits<double>::quiet_NaN();
        }
        st.unreliable = 2 * st.failures > spec.reps;
        res.stats.push_back(st);
    }
    return res;
}

std::vector<CellResult> run_table(const ExperimentSpec& spec) {
    spec.validate();
    std::vector<CellResult> out;
    out.reserve(spec.cells.size());
    for (std::size_t c = 0; c < spec.cells.size(); ++c) {
        out.push_back(run_cell(spec.cells[c], static_cast<int>(c), spec));
    }
    return out;
}

std::vector<double> tau_grid(double start, double step, double end) {
    if (!(step > 0.0)) throw ConfigError("tau step must be positive");
    if (start < 0.0 || end > 1.0) throw ConfigError("tau grid must lie in [0, 1)");
    std::vector<double> out;
    for (int i = 0;; ++i) {
        // Rounded to 1e-9 so 0.05 steps print as 0.05, 0.1, ...
        const double t = std::round((start + i * step) * 1e9) / 1e9;
        if (t >= end - 1e-12 || t >= 1.0) break;
        out.push_back(t);
    }
    return out;
}

std::vector<SweepPoint> tau_sweep(const ExperimentSpec& spec, int N, int T, const std::vector<double>& taus,
                                  const std::vector<dgp::ErrorConfig>& error_configs) {
    if (taus.empty()) throw ConfigError("tau sweep grid is empty");
    std::vector<SweepPoint> out;
    int cell_index = 0;
    for (const auto& ec : error_configs) {
        ExperimentSpec s = spec;
        s.dgp.errors = ec;
        s.cells.clear();
        for (double tau : taus) s.cells.push_back({N, T, tau});
        s.validate();
        for (double tau : taus) {
            SweepPoint p;
            p.tau = tau;
            p.error_mode = ec.mode;
            p.result = run_cell({N, T, tau}, cell_index++, s);
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::string_view to_string(RateStatistic s) {
    switch (s) {
        case RateStatistic::prop1_under: return "prop1_under";
        case RateStatistic::prop1_over: return "prop1_over";
        case RateStatistic::lemA1: return "lemA1";
        case RateStatistic::corA1: return "corA1";
        case RateStatistic::lemA2: return "lemA2";
        case RateStatistic::corA2: return "corA2";
    }
    return "?";
}

RateStatistic parse_rate_statistic(std::string_view s) {
    for (auto r : {RateStatistic::prop1_under, RateStatistic::prop1_over, RateStatistic::lemA1, RateStatistic::corA1,
                   RateStatistic::lemA2, RateStatistic::corA2}) {
        if (to_string(r) == s) return r;
    }
    throw ConfigError("unknown rate statistic '" + std::string(s) + "'");
}

void RateSpec::validate() const {
    if (T_grid.size() < 3) throw ConfigError("rate T_grid needs at least 3 points");
    if (reps < 1) throw ConfigError("rate reps must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (tau < 0.0 || tau >= 1.0) throw ConfigError("rate tau must lie in [0, 1)");
    for (int t : T_grid) {
        dgp::PanelConfig cfg = base;
        cfg.T = t;
        cfg.N = couple_n_to_t ? t : N_fixed;
        cfg.factor.tau = tau;
        cfg.validate();
    }
}

RateSpec default_rate_spec(RateStatistic s, double tau) {
    RateSpec spec;
    spec.statistic = s;
    spec.tau = tau;
    spec.base.factor.innovation_scale = dgp::InnovationScale::unit;
    spec.couple_n_to_t = s == RateStatistic::prop1_over;
    if (s == RateStatistic::lemA1 || s == RateStatistic::lemA2) {
        spec.base.errors = dgp::ErrorConfig::weak_time_cs();
    } else {
        spec.base.errors = dgp::ErrorConfig::weak_cs();
    }
    return spec;
}

double theoretical_slope(RateStatistic s, double tau) {
    switch (s) {
        case RateStatistic::prop1_under: return tau;
        case RateStatistic::prop1_over: return -1.0;
        case RateStatistic::lemA1:
        case RateStatistic::lemA2: return -tau / 2.0;
        case RateStatistic::corA1:
        case RateStatistic::corA2: return -(1.0 + tau) / 2.0;
    }
    return 0.0;
}

double rate_statistic(RateStatistic s, const dgp::Panel& panel) {
    const int N = panel.N();
    const int T = panel.T();
    const int k = panel.k();
    const int m = panel.m();
    const double tau = panel.config.factor.tau;
    switch (s) {
        case RateStatistic::prop1_under:
        case RateStatistic::prop1_over: {
            const CandidateSet reg = cce::regressor_candidates(cce::cs_averages(panel));
            if (reg.K() <= m) throw DimensionError("rate_statistic: need more than m regressor averages");
            const auto cache = selection::build_cache(panel, reg);
            const Mat q0 = selection::dvs_moment(cache, selection::SubsetMask::first(m));
            const int g = s == RateStatistic::prop1_under ? m - 1 : m + 1;
            const Mat q = selection::dvs_moment(cache, selection::SubsetMask::first(g));
            return (q - q0).norm();
        }
        case RateStatistic::lemA1:
        case RateStatistic::corA1: {
            Mat ebar(T, k + 1);
            ebar.col(0) = panel.eps.rowwise().mean();
            Mat vbar = Mat::Zero(T, k);
            for (const Mat& vi : panel.v) vbar += vi;
            ebar.rightCols(k) = vbar / static_cast<double>(N);
            return (panel.f_true.transpose() * ebar).norm() / std::pow(static_cast<double>(T), 1.0 + tau);
        }
        case RateStatistic::lemA2:
        case RateStatistic::corA2: {
            Mat ei(T, k + 1);
            ei.col(0) = panel.eps.col(0);
            ei.rightCols(k) = panel.v[0];
            return (panel.f_true.transpose() * ei).norm() / std::pow(static_cast<double>(T), 1.0 + tau);
        }
    }
    return 0.0;
}

double median(std::vector<double> v) {
    if (v.empty()) throw DimensionError("median of an empty sample");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lo + hi);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DimensionError("loglog_slope: need matching samples of size >= 2");
    const std::size_t n = x.size();
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::runtime_error("loglog_slope: nonpositive value");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (!(sxx > 0.0)) throw DimensionError("loglog_slope: x values are all equal");
    return sxy / sxx;
}

RateResult rate_check(const RateSpec& spec) {
    spec.validate();
    RateResult res;
    res.statistic = spec.statistic;
    res.tau = spec.tau;
    res.T_grid = spec.T_grid;
    res.theoretical_slope = theoretical_slope(spec.statistic, spec.tau);
    for (std::size_t gi = 0; gi < spec.T_grid.size(); ++gi) {
        dgp::PanelConfig cfg = spec.base;
        cfg.T = spec.T_grid[gi];
        cfg.N = spec.couple_n_to_t ? cfg.T : spec.N_fixed;
        cfg.factor.tau = spec.tau;
        res.N_grid.push_back(cfg.N);
        std::vector<double> values(spec.reps);
        const std::uint64_t cell = (static_cast<std::uint64_t>(spec.statistic) << 16) | gi;
        parallel_for(spec.reps, spec.threads, [&](int r) {
            RngStream rng(derive_seed(spec.seed, cell, static_cast<std::uint64_t>(r)));
            const dgp::Panel panel = dgp::generate_panel(cfg, rng);
            values[r] = rate_statistic(spec.statistic, panel);
        });
        const double med = median(values);
        if (!(med > 0.0) || !std::isfinite(med)) {
            throw std::runtime_error("rate_check: degenerate median for " + std::string(to_string(spec.statistic)));
        }
        res.medians.push_back(med);
    }
    std::vector<double> ts(spec.T_grid.begin(), spec.T_grid.end());
    res.fitted_slope = loglog_slope(ts, res.medians);
    return res;
}

std::vector<ReportRow> aggregate(const std::vector<CellResult>& results) {
    std::vector<ReportRow> rows;
    for (const CellResult& c : results) {
        for (const EstimatorStats& st : c.stats) {
            ReportRow r;
            r.N = c.cell.N;
            r.T = c.cell.T;
            r.tau = c.cell.tau;
            r.dgp_mode = c.dgp_mode;
            r.criterion = st.estimator.criterion_name();
            r.penalty = st.estimator.penalty_name();
            r.avg_g = st.avg_g;
            r.share_misselected = st.share_misselected;
            r.share_over = st.share_over;
            r.share_under = st.share_under;
            r.reps = st.reps_done;
            r.failures = st.failures;
            r.seed = c.seed;
            r.unreliable = st.unreliable;
            rows.push_back(std::move(r));
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::tie(a.N, a.T, a.tau, a.dgp_mode, a.criterion, a.penalty) <
               std::tie(b.N, b.T, b.tau, b.dgp_mode, b.criterion, b.penalty);
    });
    return rows;
}

}  // namespace ccekit::montecarlo
