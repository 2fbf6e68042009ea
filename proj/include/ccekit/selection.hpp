#pragma once

#include "ccekit/candidates.hpp"
#include "ccekit/cce.hpp"
#include "ccekit/dgp.hpp"
#include "ccekit/matlin.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace ccekit {

/// Every subset was inadmissible.
class SelectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace selection {

/// Bit j set <=> candidate column j is selected. The empty mask is never
/// part of the search.
struct SubsetMask {
    std::uint32_t bits = 0;

    int g() const;
    bool contains(int column) const { return (bits >> column) & 1U; }
    std::vector<int> columns() const;

    static SubsetMask from_columns(const std::vector<int>& cols);
    /// Columns 0..count-1.
    static SubsetMask first(int count);

    friend bool operator==(SubsetMask a, SubsetMask b) { return a.bits == b.bits; }
};

enum class PenaltyKind { P1, P2 };
enum class CriterionTag { MW, DVS, DVS_adjusted };

struct CriterionKind {
    CriterionTag tag = CriterionTag::DVS;
    double tau_for_adjustment = 0.0;  ///< used by DVS_adjusted only

    static CriterionKind mw() { return {CriterionTag::MW, 0.0}; }
    static CriterionKind dvs() { return {CriterionTag::DVS, 0.0}; }
    static CriterionKind dvs_adjusted(double tau) { return {CriterionTag::DVS_adjusted, tau}; }
};

std::string_view to_string(PenaltyKind p);
std::string_view to_string(CriterionTag c);
PenaltyKind parse_penalty(std::string_view s);
CriterionTag parse_criterion(std::string_view s);

/// P1 = (N+T)/(NT) ln(NT/(N+T)); P2 = (N+T)/(NT) ln(min(N, T)).
double penalty(PenaltyKind kind, int N, int T);

/// Cross-moments of the candidate matrix C with the regressors and the CCE
/// residuals. Per-subset criteria are evaluated from these blocks alone.
struct MomentCache {
    int N = 0;
    int T = 0;
    int k = 0;
    int K = 0;

    Mat gram;              ///< K x K, C'C
    std::vector<Mat> a;    ///< N blocks k x K, X_i'C
    Mat s_xx;              ///< k x k, sum_i X_i'X_i
    /// (K k) x (K k); block (p, q) = sum_i a_i[:, p] a_i[:, q]'. Makes the DVS
    /// projection term independent of N per subset.
    Mat a_pairs;

    bool has_residuals = false;
    std::vector<Vec> b;    ///< N vectors length K, C'nu_i
    double s_nn = 0.0;     ///< sum_i nu_i'nu_i
    Mat b_outer;           ///< K x K, sum_i b_i b_i'
};

/// `fit` is required for MW evaluation; without it only DVS blocks are built.
MomentCache build_cache(const dgp::Panel& panel, const CandidateSet& candidates,
                        const cce::CceFit* fit = nullptr);

/// (N T)^{-1} sum_i X_i' M_{C_M} X_i, or with T^{1+tau} when `tau` is given.
Mat dvs_moment(const MomentCache& cache, SubsetMask mask, std::optional<double> tau = std::nullopt);

/// Objective V (no penalty); nullopt when the subset is inadmissible.
std::optional<double> objective(const MomentCache& cache, const CriterionKind& crit, SubsetMask mask);

/// Objective plus g * p (MW) or g * k * p (DVS variants).
std::optional<double> ic_value(const MomentCache& cache, const CriterionKind& crit, PenaltyKind pen,
                               SubsetMask mask);

struct SubsetEntry {
    SubsetMask mask;
    std::optional<double> objective;
    double penalty = 0.0;
    std::optional<double> total;
};

struct SelectionResult {
    SubsetMask chosen;
    int g_hat = 0;
    CriterionKind criterion;
    PenaltyKind penalty = PenaltyKind::P1;
    std::vector<SubsetEntry> table;  ///< ordered by mask value 1 .. 2^K - 1
    int inadmissible_count = 0;
};

/// Objective for every nonempty mask, index = mask.bits - 1.
std::vector<std::optional<double>> objective_table(const MomentCache& cache, const CriterionKind& crit);

/// Argmin over a precomputed objective table. Ties go to smaller g, then to
/// the smaller mask value.
SelectionResult select_from_table(const std::vector<std::optional<double>>& objectives,
                                  const MomentCache& cache, const CriterionKind& crit, PenaltyKind pen);

/// Exhaustive scan over all 2^K - 1 subsets.
SelectionResult select(const MomentCache& cache, const CriterionKind& crit, PenaltyKind pen);

/// V(mask_a) - V(mask_b). Throws SelectionError if either mask is inadmissible.
double objective_difference(const MomentCache& cache, const CriterionKind& crit, SubsetMask mask_a,
                            SubsetMask mask_b);

/// (N T)^{-1} sum_i (Z_i - Zbar)'(Z_i - Zbar) with Z_i = [y_i, X_i], or over
/// X_i only when `regressors_only`.
Mat sigma_hat(const dgp::Panel& panel, bool regressors_only);

/// Eigenvalue growth-ratio estimate of the factor count from T^{-1} C'C,
/// optionally after right-scaling C by sigma_hat^{-1/2}. Returns the
/// position j in 1..j_max with the largest lambda_j / lambda_{j+1}.
int er_count(const CandidateSet& candidates, bool scaled, const Mat* sigma_hat_matrix = nullptr,
             std::optional<int> j_max = std::nullopt);

}  // namespace selection
}  // namespace ccekit
