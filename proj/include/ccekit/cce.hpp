#pragma once

#include "ccekit/candidates.hpp"
#include "ccekit/dgp.hpp"
#include "ccekit/matlin.hpp"

#include <stdexcept>
#include <vector>

namespace ccekit {

/// Pooled CCE denominator could not be inverted.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace cce {

/// Pooled CCE fit under a fixed candidate set.
struct CceFit {
    Vec beta_hat;
    std::vector<Vec> residuals;  ///< nu_i = y_i - X_i beta_hat (factors not removed)
    double condition_number = 0.0;
    int denominator_rank = 0;
    CandidateSet candidates;
};

/// Column 0 is the cross-section average of y, columns 1..k those of X.
CandidateSet cs_averages(const dgp::Panel& panel);

/// Drops the ybar column of a cs_averages set. Regressor-only and oracle sets
/// pass through unchanged.
CandidateSet regressor_candidates(const CandidateSet& cs);

/// beta = (sum X_i' M X_i)^+ sum X_i' M y_i with M the annihilator of the full
/// candidate matrix. Throws EstimationError when the denominator is rank
/// deficient.
CceFit cce_pooled(const dgp::Panel& panel, const CandidateSet& cs);

/// max_j | (sum_i X_i' M (y_i - X_i beta))_j | / scale, computed with explicit
/// T x T annihilators. Used as a normal-equation check.
double normal_equation_residual(const dgp::Panel& panel, const CceFit& fit);

}  // namespace cce
}  // namespace ccekit
