#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>

namespace ccekit {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Raised for shape violations (non-square, asymmetric, mismatched operands).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a matrix that must be positive definite is not.
class SingularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace matlin {

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// descending and orthonormal eigenvectors in matching column order.
struct SymEig {
    Vec values;
    Mat vectors;
};

SymEig sym_eig(const Mat& a);

/// Default truncation tolerance for pinv: max(rows, cols) * epsilon.
double default_rtol(const Mat& a);

/// Moore-Penrose pseudoinverse. Singular values below rtol * sigma_max are
/// treated as zero.
Mat pinv(const Mat& a, std::optional<double> rtol = std::nullopt);

/// Truncation tolerance for pinv of the Gram matrix A'A: max(rows, cols) *
/// epsilon of A, applied to the Gram spectrum.
double gram_rtol(const Mat& a);
double gram_rtol(Eigen::Index rows, Eigen::Index cols);

/// M_A = I - A (A'A)^+ A', with (A'A)^+ truncated at gram_rtol(A).
Mat annihilator(const Mat& a);

/// Sum of log-eigenvalues of a symmetric matrix. Returns nullopt when any
/// eigenvalue is <= floor (default 1e-12 * lambda_max, or when lambda_max <= 0).
std::optional<double> logdet_pd(const Mat& a, std::optional<double> floor = std::nullopt);

/// Symmetric S with S A S = I. Throws SingularityError if A is not PD.
Mat inv_sqrt_sym(const Mat& a);

/// Numerical rank of A under the pinv truncation rule.
int numerical_rank(const Mat& a, std::optional<double> rtol = std::nullopt);

}  // namespace matlin
}  // namespace ccekit
