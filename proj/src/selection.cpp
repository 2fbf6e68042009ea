#include "ccekit/selection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace ccekit::selection {

int SubsetMask::g() const { return std::popcount(bits); }

std::vector<int> SubsetMask::columns() const {
    std::vector<int> out;
    for (int j = 0; j < 32; ++j) {
        if (contains(j)) out.push_back(j);
    }
    return out;
}

SubsetMask SubsetMask::from_columns(const std::vector<int>& cols) {
    SubsetMask m;
    for (int c : cols) m.bits |= (1U << c);
    return m;
}

SubsetMask SubsetMask::first(int count) {
    return SubsetMask{count >= 32 ? 0xFFFFFFFFU : ((1U << count) - 1U)};
}

std::string_view to_string(PenaltyKind p) { return p == PenaltyKind::P1 ? "P1" : "P2"; }

std::string_view to_string(CriterionTag c) {
    switch (c) {
        case CriterionTag::MW: return "MW";
        case CriterionTag::DVS: return "DVS";
        case CriterionTag::DVS_adjusted: return "DVS_adjusted";
    }
    return "?";
}

PenaltyKind parse_penalty(std::string_view s) {
    if (s == "P1") return PenaltyKind::P1;
    if (s == "P2") return PenaltyKind::P2;
    throw ConfigError("unknown penalty '" + std::string(s) + "' (expected P1 or P2)");
}

CriterionTag parse_criterion(std::string_view s) {
    if (s == "MW") return CriterionTag::MW;
    if (s == "DVS") return CriterionTag::DVS;
    if (s == "DVS_adjusted") return CriterionTag::DVS_adjusted;
    throw ConfigError("unknown criterion '" + std::string(s) + "' (expected MW, DVS or DVS_adjusted)");
}

double penalty(PenaltyKind kind, int N, int T) {
    const double n = N;
    const double t = T;
    const double base = (n + t) / (n * t);
    if (kind == PenaltyKind::P1) {
        return base * std::log(n * t / (n + t));
    }
    // C_{N,T}^2 = min(N, T)
    return base * std::log(std::min(n, t));
}

namespace {

constexpr int kMaxCandidates = 20;

std::vector<int> mask_columns(SubsetMask mask, int K) {
    std::vector<int> cols;
    cols.reserve(K);
    for (int j = 0; j < K; ++j) {
        if (mask.contains(j)) cols.push_back(j);
    }
    return cols;
}

void check_mask(const MomentCache& cache, SubsetMask mask) {
    if (mask.bits == 0) throw DimensionError("empty subset mask");
    if (cache.K < 32 && (mask.bits >> cache.K) != 0) {
        throw DimensionError("subset mask selects a column beyond K");
    }
}

// (C_M'C_M)^+ for the selected columns. Cholesky when comfortably PD,
// truncated pseudoinverse otherwise.
Mat subset_gram_pinv(const MomentCache& cache, const std::vector<int>& cols) {
    const Eigen::Index g = static_cast<Eigen::Index>(cols.size());
    Mat sub(g, g);
    for (Eigen::Index p = 0; p < g; ++p) {
        for (Eigen::Index q = 0; q < g; ++q) sub(p, q) = cache.gram(cols[p], cols[q]);
    }
    const double max_diag = sub.diagonal().maxCoeff();
    if (max_diag > 0.0) {
        Eigen::LLT<Mat> llt(sub);
        if (llt.info() == Eigen::Success) {
            const Mat l = llt.matrixL();
            if (l.diagonal().array().square().minCoeff() > 1e-8 * max_diag) {
                return llt.solve(Mat::Identity(g, g));
            }
        }
    }
    return matlin::pinv(sub, matlin::gram_rtol(cache.T, g));
}

// Log-determinant with the logdet_pd singularity rule; Cholesky fast path.
std::optional<double> fast_logdet(const Mat& q) {
    const double max_diag = q.diagonal().maxCoeff();
    if (max_diag > 0.0) {
        Eigen::LLT<Mat> llt(q);
        if (llt.info() == Eigen::Success) {
            const Mat l = llt.matrixL();
            const auto piv = l.diagonal().array().square();
            if (piv.minCoeff() > 1e-8 * max_diag) {
                return 2.0 * l.diagonal().array().log().sum();
            }
        }
    }
    return matlin::logdet_pd(q);
}

Mat dvs_projection_sum(const MomentCache& cache, const std::vector<int>& cols, const Mat& h) {
    const int k = cache.k;
    Mat out = Mat::Zero(k, k);
    const Eigen::Index g = static_cast<Eigen::Index>(cols.size());
    for (Eigen::Index p = 0; p < g; ++p) {
        for (Eigen::Index q = 0; q < g; ++q) {
            out.noalias() += h(p, q) * cache.a_pairs.block(cols[p] * k, cols[q] * k, k, k);
        }
    }
    return out;
}

std::optional<double> dvs_objective(const MomentCache& cache, const std::vector<int>& cols, double tau) {
    const Mat h = subset_gram_pinv(cache, cols);
    Mat q = cache.s_xx - dvs_projection_sum(cache, cols, h);
    q = 0.5 * (q + q.transpose());
    const double norm = static_cast<double>(cache.N) * std::pow(static_cast<double>(cache.T), 1.0 + tau);
    q /= norm;
    return fast_logdet(q);
}

std::optional<double> mw_objective(const MomentCache& cache, const std::vector<int>& cols) {
    if (!cache.has_residuals) {
        throw std::logic_error("MW objective requires a cache built with a CCE fit");
    }
    const Mat h = subset_gram_pinv(cache, cols);
    const Eigen::Index g = static_cast<Eigen::Index>(cols.size());
    double proj = 0.0;
    for (Eigen::Index p = 0; p < g; ++p) {
        for (Eigen::Index q = 0; q < g; ++q) proj += h(p, q) * cache.b_outer(cols[q], cols[p]);
    }
    const double val = cache.s_nn - proj;
    if (!(val > 1e-13 * cache.s_nn) || !(val > 0.0)) {
        return std::nullopt;
    }
    return std::log(val / (static_cast<double>(cache.N) * cache.T));
}

double penalty_weight(const MomentCache& cache, const CriterionKind& crit, int g) {
    return crit.tag == CriterionTag::MW ? static_cast<double>(g) : static_cast<double>(g) * cache.k;
}

}  // namespace

MomentCache build_cache(const dgp::Panel& panel, const CandidateSet& candidates, const cce::CceFit* fit) {
    candidates.validate();
    if (candidates.T() != panel.T()) throw DimensionError("build_cache: candidate rows do not match T");
    if (candidates.K() > kMaxCandidates) {
        throw DimensionError("build_cache: exhaustive search supports at most 20 candidates");
    }
    MomentCache cache;
    cache.N = panel.N();
    cache.T = panel.T();
    cache.k = panel.k();
    cache.K = candidates.K();
    const int k = cache.k;
    const int K = cache.K;
    const Mat& c = candidates.c;

    cache.gram = c.transpose() * c;
    cache.s_xx = Mat::Zero(k, k);
    cache.a.reserve(cache.N);
    Mat stacked(cache.N, K * k);  // row i = vec(a_i)'
    for (int i = 0; i < cache.N; ++i) {
        const Mat& xi = panel.x[i];
        cache.s_xx.noalias() += xi.transpose() * xi;
        Mat ai = xi.transpose() * c;
        stacked.row(i) = Eigen::Map<const Eigen::RowVectorXd>(ai.data(), K * k);
        cache.a.push_back(std::move(ai));
    }
    cache.a_pairs = stacked.transpose() * stacked;

    if (fit != nullptr) {
        if (static_cast<int>(fit->residuals.size()) != cache.N) {
            throw DimensionError("build_cache: residual count does not match N");
        }
        cache.has_residuals = true;
        cache.b.reserve(cache.N);
        cache.b_outer = Mat::Zero(K, K);
        for (int i = 0; i < cache.N; ++i) {
            const Vec& nu = fit->residuals[i];
            if (nu.size() != cache.T) throw DimensionError("build_cache: residual length does not match T");
            cache.s_nn += nu.squaredNorm();
            Vec bi = c.transpose() * nu;
            cache.b_outer.noalias() += bi * bi.transpose();
            cache.b.push_back(std::move(bi));
        }
    }
    return cache;
}

Mat dvs_moment(const MomentCache& cache, SubsetMask mask, std::optional<double> tau) {
    check_mask(cache, mask);
    const auto cols = mask_columns(mask, cache.K);
    const Mat h = subset_gram_pinv(cache, cols);
    Mat q = cache.s_xx - dvs_projection_sum(cache, cols, h);
    q = 0.5 * (q + q.transpose());
    return q / (static_cast<double>(cache.N) * std::pow(static_cast<double>(cache.T), 1.0 + tau.value_or(0.0)));
}

std::optional<double> objective(const MomentCache& cache, const CriterionKind& crit, SubsetMask mask) {
    check_mask(cache, mask);
    const auto cols = mask_columns(mask, cache.K);
    switch (crit.tag) {
        case CriterionTag::MW: return mw_objective(cache, cols);
        case CriterionTag::DVS: return dvs_objective(cache, cols, 0.0);
        case CriterionTag::DVS_adjusted: return dvs_objective(cache, cols, crit.tau_for_adjustment);
    }
    return std::nullopt;
}

std::optional<double> ic_value(const MomentCache& cache, const CriterionKind& crit, PenaltyKind pen,
                               SubsetMask mask) {
    const auto obj = objective(cache, crit, mask);
    if (!obj) return std::nullopt;
    return *obj + penalty_weight(cache, crit, mask.g()) * penalty(pen, cache.N, cache.T);
}

std::vector<std::optional<double>> objective_table(const MomentCache& cache, const CriterionKind& crit) {
    const std::uint32_t count = (1U << cache.K) - 1U;
    std::vector<std::optional<double>> out(count);
    for (std::uint32_t bits = 1; bits <= count; ++bits) {
        out[bits - 1] = objective(cache, crit, SubsetMask{bits});
    }
    return out;
}

SelectionResult select_from_table(const std::vector<std::optional<double>>& objectives,
                                  const MomentCache& cache, const CriterionKind& crit, PenaltyKind pen) {
    const std::uint32_t count = (1U << cache.K) - 1U;
    if (objectives.size() != count) throw DimensionError("objective table size does not match 2^K - 1");
    SelectionResult res;
    res.criterion = crit;
    res.penalty = pen;
    res.table.reserve(count);
    const double p = penalty(pen, cache.N, cache.T);
    bool found = false;
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t bits = 1; bits <= count; ++bits) {
        SubsetEntry e;
        e.mask = SubsetMask{bits};
        e.objective = objectives[bits - 1];
        e.penalty = penalty_weight(cache, crit, e.mask.g()) * p;
        if (e.objective) {
            e.total = *e.objective + e.penalty;
            const double v = *e.total;
            // Masks are visited in increasing value, so a strict improvement or
            // an exact tie at smaller g is all that can displace the incumbent.
            if (!found || v < best || (v == best && e.mask.g() < res.chosen.g())) {
                best = v;
                res.chosen = e.mask;
                found = true;
            }
        } else {
            ++res.inadmissible_count;
        }
        res.table.push_back(e);
    }
    if (!found) throw SelectionError("every candidate subset is inadmissible");
    res.g_hat = res.chosen.g();
    return res;
}

SelectionResult select(const MomentCache& cache, const CriterionKind& crit, PenaltyKind pen) {
    return select_from_table(objective_table(cache, crit), cache, crit, pen);
}

double objective_difference(const MomentCache& cache, const CriterionKind& crit, SubsetMask mask_a,
                            SubsetMask mask_b) {
    const auto va = objective(cache, crit, mask_a);
    const auto vb = objective(cache, crit, mask_b);
    if (!va || !vb) throw SelectionError("objective_difference: inadmissible subset");
    return *va - *vb;
}

Mat sigma_hat(const dgp::Panel& panel, bool regressors_only) {
    const int N = panel.N();
    const int T = panel.T();
    const int k = panel.k();
    const int width = regressors_only ? k : k + 1;
    auto unit_block = [&](int i) {
        Mat z(T, width);
        if (regressors_only) {
            z = panel.x[i];
        } else {
            z.col(0) = panel.y.col(i);
            z.rightCols(k) = panel.x[i];
        }
        return z;
    };
    Mat zbar = Mat::Zero(T, width);
    for (int i = 0; i < N; ++i) zbar += unit_block(i);
    zbar /= static_cast<double>(N);
    Mat s = Mat::Zero(width, width);
    for (int i = 0; i < N; ++i) {
        const Mat d = unit_block(i) - zbar;
        s.noalias() += d.transpose() * d;
    }
    s /= static_cast<double>(N) * T;
    return 0.5 * (s + s.transpose());
}

int er_count(const CandidateSet& candidates, bool scaled, const Mat* sigma_hat_matrix,
             std::optional<int> j_max) {
    candidates.validate();
    const int K = candidates.K();
    if (K < 2) throw DimensionError("er_count: need at least two candidates");
    const int jm = j_max.value_or(K - 1);
    if (jm < 1 || jm > K - 1) throw DimensionError("er_count: j_max must lie in [1, K-1]");
    Mat c = candidates.c;
    if (scaled) {
        if (sigma_hat_matrix == nullptr) throw DimensionError("er_count: scaling requested without sigma_hat");
        if (sigma_hat_matrix->rows() != K || sigma_hat_matrix->cols() != K) {
            throw DimensionError("er_count: sigma_hat must be K x K");
        }
        c = c * matlin::inv_sqrt_sym(*sigma_hat_matrix);
    }
    const Mat moment = (c.transpose() * c) / static_cast<double>(candidates.T());
    const Vec lambda = matlin::sym_eig(0.5 * (moment + moment.transpose())).values;
    const double floor = 1e-12 * lambda(0);
    int best_j = 1;
    double best_ratio = -1.0;
    for (int j = 1; j <= jm; ++j) {
        if (!(lambda(j) > floor)) continue;
        const double ratio = lambda(j - 1) / lambda(j);
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best_j = j;
        }
    }
    return best_j;
}

}  // namespace ccekit::selection
