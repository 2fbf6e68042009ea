#include "ccekit/matlin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ccekit::matlin {

namespace {

constexpr double kSymmetryTol = 1e-10;

void require_symmetric(const Mat& a, const char* what) {
    if (a.rows() != a.cols()) {
        throw DimensionError(std::string(what) + ": matrix is not square (" +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ")");
    }
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
        throw DimensionError(std::string(what) + ": matrix is not symmetric");
    }
}

}  // namespace

SymEig sym_eig(const Mat& a) {
    require_symmetric(a, "sym_eig");
    // Symmetrize before decomposing so round-off asymmetry does not leak in.
    const Mat sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("sym_eig: eigen solver did not converge");
    }
    // Eigen returns ascending order.
    SymEig out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

double default_rtol(const Mat& a) {
    return static_cast<double>(std::max(a.rows(), a.cols())) *
           std::numeric_limits<double>::epsilon();
}

Mat pinv(const Mat& a, std::optional<double> rtol) {
    const double tol = rtol.value_or(default_rtol(a));
    if (a.size() == 0 || a.cwiseAbs().maxCoeff() == 0.0) {
        return Mat::Zero(a.cols(), a.rows());
    }
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& sigma = svd.singularValues();
    const double cutoff = tol * sigma(0);
    Vec inv = Vec::Zero(sigma.size());
    for (Eigen::Index j = 0; j < sigma.size(); ++j) {
        if (sigma(j) > cutoff) {
            inv(j) = 1.0 / sigma(j);
        }
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double gram_rtol(Eigen::Index rows, Eigen::Index cols) {
    return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
}

double gram_rtol(const Mat& a) { return gram_rtol(a.rows(), a.cols()); }

Mat annihilator(const Mat& a) {
    const Eigen::Index t = a.rows();
    const Mat gram = a.transpose() * a;
    Mat m = Mat::Identity(t, t) - a * pinv(gram, gram_rtol(a)) * a.transpose();
    return 0.5 * (m + m.transpose());
}

std::optional<double> logdet_pd(const Mat& a, std::optional<double> floor) {
    const SymEig eig = sym_eig(a);
    if (eig.values.size() == 0) {
        return 0.0;
    }
    const double lmax = eig.values(0);
    if (!(lmax > 0.0)) {
        return std::nullopt;
    }
    const double lo = floor.value_or(1e-12 * lmax);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < eig.values.size(); ++j) {
        if (!(eig.values(j) > lo)) {
            return std::nullopt;
        }
        sum += std::log(eig.values(j));
    }
    return sum;
}

Mat inv_sqrt_sym(const Mat& a) {
    const SymEig eig = sym_eig(a);
    if (eig.values.size() == 0) {
        return Mat(0, 0);
    }
    const double lmax = eig.values(0);
    const double lmin = eig.values(eig.values.size() - 1);
    if (!(lmax > 0.0) || !(lmin > 1e-14 * lmax)) {
        throw SingularityError("inv_sqrt_sym: matrix is not positive definite");
    }
    const Vec scale = eig.values.cwiseSqrt().cwiseInverse();
    Mat s = eig.vectors * scale.asDiagonal() * eig.vectors.transpose();
    return 0.5 * (s + s.transpose());
}

int numerical_rank(const Mat& a, std::optional<double> rtol) {
    if (a.size() == 0) {
        return 0;
    }
    const double tol = rtol.value_or(default_rtol(a));
    Eigen::JacobiSVD<Mat> svd(a);
    const Vec& sigma = svd.singularValues();
    if (sigma(0) == 0.0) {
        return 0;
    }
    int rank = 0;
    for (Eigen::Index j = 0; j < sigma.size(); ++j) {
        if (sigma(j) > tol * sigma(0)) {
            ++rank;
        }
    }
    return rank;
}

}  // namespace ccekit::matlin
