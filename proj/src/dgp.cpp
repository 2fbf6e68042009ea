#include "ccekit/dgp.hpp"

#include <algorithm>
#include <cmath>

namespace ccekit::dgp {

std::string_view to_string(InnovationScale s) {
    switch (s) {
        case InnovationScale::std_dev: return "std_dev";
        case InnovationScale::variance: return "variance";
        case InnovationScale::unit: return "unit";
    }
    return "?";
}

std::string_view to_string(ErrorMode m) {
    switch (m) {
        case ErrorMode::iid: return "iid";
        case ErrorMode::weak_cs: return "weak_cs";
        case ErrorMode::weak_time_cs: return "weak_time_cs";
        case ErrorMode::nonstationary_v: return "nonstationary_v";
    }
    return "?";
}

InnovationScale parse_innovation_scale(std::string_view s) {
    if (s == "std_dev") return InnovationScale::std_dev;
    if (s == "variance") return InnovationScale::variance;
    if (s == "unit") return InnovationScale::unit;
    throw ConfigError("unknown innovation_scale '" + std::string(s) +
                      "' (expected std_dev, variance or unit)");
}

ErrorMode parse_error_mode(std::string_view s) {
    if (s == "iid") return ErrorMode::iid;
    if (s == "weak_cs") return ErrorMode::weak_cs;
    if (s == "weak_time_cs") return ErrorMode::weak_time_cs;
    if (s == "nonstationary_v") return ErrorMode::nonstationary_v;
    throw ConfigError("unknown error mode '" + std::string(s) +
                      "' (expected iid, weak_cs, weak_time_cs or nonstationary_v)");
}

void FactorConfig::validate() const {
    if (m < 1) throw ConfigError("factor.m must be >= 1");
    if (!(tau >= 0.0 && tau < 1.0)) throw ConfigError("factor.tau must lie in [0, 1)");
    if (!(q_low >= 0.0)) throw ConfigError("factor.q_low must be >= 0");
    if (!(q_high > q_low)) throw ConfigError("factor.q_high must exceed q_low");
    if (tau == 0.0 && q_high > 2.0) {
        throw ConfigError("factor.q_high must be <= 2 when tau = 0 (root must stay inside the unit circle)");
    }
    if (burn_in < 0) throw ConfigError("factor.burn_in must be >= 0");
}

ErrorConfig ErrorConfig::weak_cs() {
    ErrorConfig c;
    c.mode = ErrorMode::weak_cs;
    return c;
}

ErrorConfig ErrorConfig::weak_time_cs() {
    ErrorConfig c;
    c.mode = ErrorMode::weak_time_cs;
    c.rho = 0.5;
    c.rho_v = 0.5;
    return c;
}

ErrorConfig ErrorConfig::iid() {
    ErrorConfig c;
    c.mode = ErrorMode::iid;
    return c;
}

void ErrorConfig::validate() const {
    if (!(std::abs(rho) < 1.0)) throw ConfigError("errors.rho must satisfy |rho| < 1");
    if (!(std::abs(rho_v) < 1.0)) throw ConfigError("errors.rho_v must satisfy |rho_v| < 1");
    if (!(kappa >= 0.0) || !(kappa_v >= 0.0)) throw ConfigError("errors.kappa and errors.kappa_v must be >= 0");
    if (J < 0 || J_v < 0) throw ConfigError("errors.J and errors.J_v must be >= 0");
    if (burn_in < 0) throw ConfigError("errors.burn_in must be >= 0");
}

void PanelConfig::validate() const {
    factor.validate();
    errors.validate();
    if (N < 2) throw ConfigError("N must be >= 2");
    if (k < 1) throw ConfigError("k must be >= 1");
    if (factor.m > k) throw ConfigError("factor count m must not exceed k");
    if (T <= k + 1) throw ConfigError("T must exceed k + 1");
    if (!(slope_het_sd >= 0.0)) throw ConfigError("slope_het_sd must be >= 0");
    if (!(loading_sd >= 0.0)) throw ConfigError("loading_sd must be >= 0");
}

FactorSystem draw_factor_system(RngStream& rng, const FactorConfig& cfg, int T) {
    FactorSystem sys;
    sys.q.resize(cfg.m);
    sys.r.resize(cfg.m);
    const double shrink = std::pow(static_cast<double>(T), -cfg.tau);
    for (int j = 0; j < cfg.m; ++j) {
        sys.q(j) = rng.uniform(cfg.q_low, cfg.q_high);
        sys.r(j) = 1.0 - sys.q(j) * shrink;
        if (!(std::abs(sys.r(j)) < 1.0) && sys.q(j) > 0.0) {
            throw ConfigError("factor root outside the unit circle: r = " + std::to_string(sys.r(j)));
        }
    }
    return sys;
}

namespace {

double innovation_sd(double r, InnovationScale scale) {
    const double one_minus = std::max(0.0, 1.0 - r * r);
    switch (scale) {
        case InnovationScale::std_dev: return std::sqrt(one_minus);
        case InnovationScale::variance: return std::sqrt(std::sqrt(one_minus));
        case InnovationScale::unit: return 1.0;
    }
    return 1.0;
}

// AR(1) column from zero start; burn_in leading draws discarded.
void ar1_column(RngStream& rng, double r, double sd, int burn_in, Eigen::Ref<Vec> out) {
    double state = 0.0;
    for (int t = 0; t < burn_in; ++t) {
        state = r * state + sd * rng.normal();
    }
    for (Eigen::Index t = 0; t < out.size(); ++t) {
        state = r * state + sd * rng.normal();
        out(t) = state;
    }
}

// out_i = s * (a_i + kappa * sum_{1 <= |i-j| <= J} a_j), computed with a
// running window over the unit index.
void band_mix(const Vec& a, double kappa, int J, double s, Vec& out) {
    const Eigen::Index n = a.size();
    Vec prefix(n + 1);
    prefix(0) = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) prefix(i + 1) = prefix(i) + a(i);
    out.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - J);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + J);
        const double window = prefix(hi + 1) - prefix(lo) - a(i);
        out(i) = s * (a(i) + kappa * window);
    }
}

}  // namespace

Mat simulate_factors(RngStream& rng, const FactorSystem& sys, const FactorConfig& cfg, int T) {
    const int m = static_cast<int>(sys.r.size());
    Mat f(T, m);
    for (int j = 0; j < m; ++j) {
        ar1_column(rng, sys.r(j), innovation_sd(sys.r(j), cfg.innovation_scale), cfg.burn_in,
                   f.col(j));
    }
    return f;
}

Mat gen_factors(RngStream& rng, const FactorConfig& cfg, int T) {
    cfg.validate();
    const FactorSystem sys = draw_factor_system(rng, cfg, T);
    return simulate_factors(rng, sys, cfg, T);
}

Loadings gen_loadings(RngStream& rng, int N, int m, int k, double loading_mean, double loading_sd) {
    if (m > k) throw DimensionError("gen_loadings: m must not exceed k");
    Loadings out;
    out.big_gamma.reserve(N);
    out.gamma.resize(N, m);
    for (int i = 0; i < N; ++i) {
        const double psi = rng.normal(loading_mean, loading_sd);
        Mat g = Mat::Zero(m, k);
        for (int j = 0; j < m; ++j) g(j, j) = psi;
        out.big_gamma.push_back(std::move(g));
        for (int j = 0; j < m; ++j) out.gamma(i, j) = rng.normal(loading_mean, loading_sd);
    }
    return out;
}

Mat build_band_weights(int N, int J) {
    Mat w = Mat::Zero(N, N);
    for (int i = 0; i < N; ++i) {
        for (int j = std::max(0, i - J); j <= std::min(N - 1, i + J); ++j) {
            if (j != i) w(i, j) = 1.0;
        }
    }
    return w;
}

Errors gen_errors(RngStream& rng, const ErrorConfig& cfg, int N, int T, int k, int m,
                  const FactorConfig& factor_cfg) {
    cfg.validate();
    Errors out;
    out.eps.resize(T, N);
    out.v.assign(N, Mat(T, k));

    if (cfg.mode == ErrorMode::iid) {
        for (int t = 0; t < T; ++t) {
            for (int i = 0; i < N; ++i) {
                out.eps(t, i) = rng.normal();
                for (int j = 0; j < k; ++j) out.v[i](t, j) = rng.normal();
            }
        }
        return out;
    }

    const double s_eps = std::sqrt(m * (1.0 - cfg.rho * cfg.rho) / (1.0 + 2.0 * cfg.J * cfg.kappa * cfg.kappa));
    const double s_v = std::sqrt((1.0 - cfg.rho_v * cfg.rho_v) /
                                 (1.0 + 2.0 * cfg.J_v * cfg.kappa_v * cfg.kappa_v));
    const bool v_from_factors = cfg.mode == ErrorMode::nonstationary_v;

    Vec eps_state = Vec::Zero(N);
    Mat v_state = Mat::Zero(N, k);
    Vec draw(N);
    Vec mixed(N);
    for (int t = -cfg.burn_in; t < T; ++t) {
        for (int i = 0; i < N; ++i) draw(i) = rng.normal();
        band_mix(draw, cfg.kappa, cfg.J, s_eps, mixed);
        eps_state = cfg.rho * eps_state + mixed;
        if (!v_from_factors) {
            for (int j = 0; j < k; ++j) {
                for (int i = 0; i < N; ++i) draw(i) = rng.normal();
                band_mix(draw, cfg.kappa_v, cfg.J_v, s_v, mixed);
                v_state.col(j) = cfg.rho_v * v_state.col(j) + mixed;
            }
        }
        if (t >= 0) {
            out.eps.row(t) = eps_state.transpose();
            if (!v_from_factors) {
                for (int i = 0; i < N; ++i) out.v[i].row(t) = v_state.row(i);
            }
        }
    }

    if (v_from_factors) {
        // Each (unit, regressor) series follows its own mildly integrated AR(1).
        FactorConfig vc = factor_cfg;
        vc.m = k;
        for (int i = 0; i < N; ++i) {
            const FactorSystem sys = draw_factor_system(rng, vc, T);
            out.v[i] = simulate_factors(rng, sys, vc, T);
        }
    }
    return out;
}

Panel assemble_panel(const Mat& f, const Loadings& loadings, const Errors& errors,
                     const PanelConfig& cfg, RngStream& rng) {
    const int T = static_cast<int>(f.rows());
    const int m = static_cast<int>(f.cols());
    const int N = static_cast<int>(loadings.gamma.rows());
    const int k = cfg.k;
    if (static_cast<int>(loadings.big_gamma.size()) != N || loadings.gamma.cols() != m ||
        errors.eps.rows() != T || errors.eps.cols() != N ||
        static_cast<int>(errors.v.size()) != N) {
        throw DimensionError("assemble_panel: inconsistent dimensions");
    }
    Panel p;
    p.f_true = f;
    p.gamma = loadings.gamma;
    p.big_gamma = loadings.big_gamma;
    p.eps = errors.eps;
    p.v = errors.v;
    p.config = cfg;
    p.config.N = N;
    p.config.T = T;
    p.y.resize(T, N);
    p.x.reserve(N);
    p.betas.resize(k, N);
    for (int i = 0; i < N; ++i) {
        const Mat& gi = loadings.big_gamma[i];
        if (gi.rows() != m || gi.cols() != k || errors.v[i].rows() != T || errors.v[i].cols() != k) {
            throw DimensionError("assemble_panel: inconsistent loading or error block for unit " +
                                 std::to_string(i));
        }
        Vec beta_i = Vec::Constant(k, cfg.beta_level);
        if (cfg.slope_het_sd > 0.0) {
            for (int j = 0; j < k; ++j) beta_i(j) += rng.normal(0.0, cfg.slope_het_sd);
        }
        p.betas.col(i) = beta_i;
        Mat xi = f * gi + errors.v[i];
        p.y.col(i) = xi * beta_i + f * loadings.gamma.row(i).transpose() + errors.eps.col(i);
        p.x.push_back(std::move(xi));
    }
    return p;
}

Panel generate_panel(const PanelConfig& cfg, RngStream& rng) {
    cfg.validate();
    const Mat f = gen_factors(rng, cfg.factor, cfg.T);
    const Loadings loadings = gen_loadings(rng, cfg.N, cfg.factor.m, cfg.k, cfg.loading_mean, cfg.loading_sd);
    const Errors errors = gen_errors(rng, cfg.errors, cfg.N, cfg.T, cfg.k, cfg.factor.m, cfg.factor);
    return assemble_panel(f, loadings, errors, cfg, rng);
}

CandidateSet oracle_candidates(const Mat& f, int K, RngStream& rng) {
    const int T = static_cast<int>(f.rows());
    const int m = static_cast<int>(f.cols());
    if (K < m) throw DimensionError("oracle_candidates: K must be >= m");
    CandidateSet cs;
    cs.source = CandidateSource::oracle;
    cs.c.resize(T, K);
    cs.c.leftCols(m) = f;
    for (int j = 0; j < m; ++j) cs.labels.push_back("factor_" + std::to_string(j + 1));
    for (int j = m; j < K; ++j) {
        for (int t = 0; t < T; ++t) cs.c(t, j) = rng.normal();
        cs.labels.push_back("noise_" + std::to_string(j - m + 1));
    }
    return cs;
}

double reconstruction_residual(const Panel& p) {
    double worst = 0.0;
    for (int i = 0; i < p.N(); ++i) {
        const Mat x_fit = p.f_true * p.big_gamma[i] + p.v[i];
        worst = std::max(worst, (p.x[i] - x_fit).cwiseAbs().maxCoeff());
        const Vec y_fit = p.x[i] * p.betas.col(i) + p.f_true * p.gamma.row(i).transpose() + p.eps.col(i);
        worst = std::max(worst, (p.y.col(i) - y_fit).cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace ccekit::dgp
