#pragma once

#include "ccekit/candidates.hpp"
#include "ccekit/matlin.hpp"
#include "ccekit/rng.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ccekit {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace dgp {

/// How the factor innovation scale sqrt(I - R^2) is read.
///  - std_dev:  innovation sd = sqrt(1 - r^2), stationary variance exactly 1;
///  - variance: innovation variance = sqrt(1 - r^2);
///  - unit:     innovation sd = 1, so the stationary variance grows like T^tau.
enum class InnovationScale { std_dev, variance, unit };

enum class ErrorMode { iid, weak_cs, weak_time_cs, nonstationary_v };

std::string_view to_string(InnovationScale s);
std::string_view to_string(ErrorMode m);
InnovationScale parse_innovation_scale(std::string_view s);
ErrorMode parse_error_mode(std::string_view s);

struct FactorConfig {
    int m = 4;
    double tau = 0.0;
    double q_low = 0.0;
    double q_high = 2.0;
    int burn_in = 50;
    InnovationScale innovation_scale = InnovationScale::std_dev;

    void validate() const;
};

struct ErrorConfig {
    ErrorMode mode = ErrorMode::weak_cs;
    double rho = 0.0;
    double rho_v = 0.0;
    double kappa = 0.2;
    double kappa_v = 0.2;
    int J = 5;
    int J_v = 5;
    int burn_in = 50;

    /// Cross-section correlation only (rho = rho_v = 0).
    static ErrorConfig weak_cs();
    /// Cross-section and AR(1) time correlation (rho = rho_v = 0.5).
    static ErrorConfig weak_time_cs();
    static ErrorConfig iid();

    void validate() const;
};

struct PanelConfig {
    int N = 100;
    int T = 100;
    int k = 8;
    double beta_level = 0.5;
    double slope_het_sd = 0.0;
    double loading_mean = 1.0;
    double loading_sd = 1.0;
    bool oracle_candidates = false;
    FactorConfig factor;
    ErrorConfig errors;

    void validate() const;
};

struct Panel {
    Mat y;                      ///< T x N
    std::vector<Mat> x;         ///< N matrices, T x k
    Mat f_true;                 ///< T x m
    Mat gamma;                  ///< N x m
    std::vector<Mat> big_gamma; ///< N matrices, m x k
    Mat eps;                    ///< T x N
    std::vector<Mat> v;         ///< N matrices, T x k
    Mat betas;                  ///< k x N unit slopes
    PanelConfig config;

    int N() const { return static_cast<int>(y.cols()); }
    int T() const { return static_cast<int>(y.rows()); }
    int k() const { return x.empty() ? 0 : static_cast<int>(x.front().cols()); }
    int m() const { return static_cast<int>(f_true.cols()); }
};

/// Diagonal Q and R = I - Q T^{-tau} stored as vectors.
struct FactorSystem {
    Vec q;
    Vec r;
};

struct Loadings {
    std::vector<Mat> big_gamma;  ///< m x k each
    Mat gamma;                   ///< N x m
};

struct Errors {
    Mat eps;             ///< T x N
    std::vector<Mat> v;  ///< N matrices, T x k
};

FactorSystem draw_factor_system(RngStream& rng, const FactorConfig& cfg, int T);

/// Runs the AR(1) recursion per column from zero with cfg.burn_in discarded
/// periods, for a given factor system.
Mat simulate_factors(RngStream& rng, const FactorSystem& sys, const FactorConfig& cfg, int T);

/// draw_factor_system followed by simulate_factors.
Mat gen_factors(RngStream& rng, const FactorConfig& cfg, int T);

Loadings gen_loadings(RngStream& rng, int N, int m, int k, double loading_mean, double loading_sd);

/// 0/1 band matrix with w_ij = 1 for 1 <= |i - j| <= J.
Mat build_band_weights(int N, int J);

/// Idiosyncratic errors. `m` is the factor count, used in the epsilon scale of
/// the correlated modes. `factor_cfg` drives the nonstationary_v recursion.
Errors gen_errors(RngStream& rng, const ErrorConfig& cfg, int N, int T, int k, int m,
                  const FactorConfig& factor_cfg = {});

Panel assemble_panel(const Mat& f, const Loadings& loadings, const Errors& errors,
                     const PanelConfig& cfg, RngStream& rng);

/// Full draw: factors, loadings, errors, slopes.
Panel generate_panel(const PanelConfig& cfg, RngStream& rng);

/// Candidates built from the true factors: the m columns of F followed by
/// K - m independent standard-normal padding columns.
CandidateSet oracle_candidates(const Mat& f, int K, RngStream& rng);

/// Max abs residual of the two reconstruction identities.
double reconstruction_residual(const Panel& panel);

}  // namespace dgp
}  // namespace ccekit
