#include "ccekit/cce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ccekit::cce {

CandidateSet cs_averages(const dgp::Panel& panel) {
    const int T = panel.T();
    const int N = panel.N();
    const int k = panel.k();
    CandidateSet cs;
    cs.source = CandidateSource::cs_averages;
    cs.c.resize(T, k + 1);
    cs.c.col(0) = panel.y.rowwise().mean();
    Mat xbar = Mat::Zero(T, k);
    for (const Mat& xi : panel.x) xbar += xi;
    cs.c.rightCols(k) = xbar / static_cast<double>(N);
    cs.labels.push_back("ybar");
    for (int j = 0; j < k; ++j) cs.labels.push_back("xbar_" + std::to_string(j + 1));
    return cs;
}

CandidateSet regressor_candidates(const CandidateSet& cs) {
    if (cs.source != CandidateSource::cs_averages) {
        return cs;
    }
    if (cs.K() < 2) {
        throw DimensionError("regressor_candidates: cs_averages set has no regressor columns");
    }
    CandidateSet out;
    out.source = CandidateSource::regressors_only;
    out.c = cs.c.rightCols(cs.K() - 1);
    out.labels.assign(cs.labels.begin() + 1, cs.labels.end());
    return out;
}

CceFit cce_pooled(const dgp::Panel& panel, const CandidateSet& cs) {
    cs.validate();
    const int T = panel.T();
    const int k = panel.k();
    if (cs.T() != T) throw DimensionError("cce_pooled: candidate rows do not match T");
    if (T <= cs.K()) throw DimensionError("cce_pooled: T must exceed the candidate count");

    // X_i' M X_i = X_i'X_i - (X_i'C) G^+ (C'X_i), G = C'C.
    const Mat gram = cs.c.transpose() * cs.c;
    const Mat gram_pinv = matlin::pinv(gram, matlin::gram_rtol(cs.c));
    Mat denom = Mat::Zero(k, k);
    Vec numer = Vec::Zero(k);
    for (int i = 0; i < panel.N(); ++i) {
        const Mat& xi = panel.x[i];
        const auto yi = panel.y.col(i);
        const Mat xc = xi.transpose() * cs.c;
        const Vec yc = cs.c.transpose() * yi;
        denom += xi.transpose() * xi - xc * gram_pinv * xc.transpose();
        numer += xi.transpose() * yi - xc * (gram_pinv * yc);
    }
    denom = 0.5 * (denom + denom.transpose());

    CceFit fit;
    const matlin::SymEig eig = matlin::sym_eig(denom);
    const double lmax = eig.values(0);
    const double lmin = eig.values(k - 1);
    fit.condition_number = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    fit.denominator_rank = matlin::numerical_rank(denom);
    if (!(lmax > 0.0) || fit.denominator_rank < k) {
        throw EstimationError("cce_pooled: denominator is rank deficient (rank " +
                              std::to_string(fit.denominator_rank) + " < " + std::to_string(k) + ")");
    }
    fit.beta_hat = matlin::pinv(denom) * numer;
    fit.residuals.reserve(panel.N());
    for (int i = 0; i < panel.N(); ++i) {
        fit.residuals.push_back(panel.y.col(i) - panel.x[i] * fit.beta_hat);
    }
    fit.candidates = cs;
    return fit;
}

double normal_equation_residual(const dgp::Panel& panel, const CceFit& fit) {
    const Mat m = matlin::annihilator(fit.candidates.c);
    const int k = panel.k();
    Vec total = Vec::Zero(k);
    double scale = 0.0;
    for (int i = 0; i < panel.N(); ++i) {
        const Mat mx = m * panel.x[i];
        total += mx.transpose() * fit.residuals[i];
        scale += (mx.transpose() * panel.y.col(i)).cwiseAbs().maxCoeff();
    }
    return total.cwiseAbs().maxCoeff() / std::max(scale, 1e-300);
}

}  // namespace ccekit::cce
