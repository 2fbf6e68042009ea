#pragma once

// Reference implementations for tests. Plain loops only, no calls into the
// library's linear algebra.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Cyclic Jacobi rotations. Returns eigenvalues sorted descending and fills
// `vectors` (columns) when given.
inline std::vector<double> jacobi_eig(Mat a, Mat* vectors = nullptr) {
    const int n = static_cast<int>(a.rows());
    Mat v = Mat::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return a(x, x) > a(y, y); });
    std::vector<double> vals;
    for (int i : idx) vals.push_back(a(i, i));
    if (vectors) {
        vectors->resize(n, n);
        for (int j = 0; j < n; ++j) vectors->col(j) = v.col(idx[j]);
    }
    return vals;
}

// Laplace expansion along the first row.
inline double det_cofactor(const Mat& a) {
    const int n = static_cast<int>(a.rows());
    if (n == 1) return a(0, 0);
    if (n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    double d = 0.0;
    for (int j = 0; j < n; ++j) {
        Mat minor(n - 1, n - 1);
        for (int r = 1; r < n; ++r) {
            int cc = 0;
            for (int c = 0; c < n; ++c) {
                if (c == j) continue;
                minor(r - 1, cc++) = a(r, c);
            }
        }
        d += ((j % 2) ? -1.0 : 1.0) * a(0, j) * det_cofactor(minor);
    }
    return d;
}

// Gaussian elimination with partial pivoting.
inline double det_gauss(Mat a) {
    const int n = static_cast<int>(a.rows());
    double d = 1.0;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        if (a(piv, c) == 0.0) return 0.0;
        if (piv != c) {
            a.row(piv).swap(a.row(c));
            d = -d;
        }
        d *= a(c, c);
        for (int r = c + 1; r < n; ++r) {
            const double f = a(r, c) / a(c, c);
            for (int k = c; k < n; ++k) a(r, k) -= f * a(c, k);
        }
    }
    return d;
}

// Inverse by Gauss-Jordan elimination.
inline Mat inverse_gj(Mat a) {
    const int n = static_cast<int>(a.rows());
    Mat inv = Mat::Identity(n, n);
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        a.row(piv).swap(a.row(c));
        inv.row(piv).swap(inv.row(c));
        const double p = a(c, c);
        a.row(c) /= p;
        inv.row(c) /= p;
        for (int r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a(r, c);
            a.row(r) -= f * a.row(c);
            inv.row(r) -= f * inv.row(c);
        }
    }
    return inv;
}

// Orthonormal basis of col(A) by twice-applied modified Gram-Schmidt,
// dropping columns whose residual falls below tol * original norm.
inline Mat orthonormal_basis(const Mat& a, double tol = 1e-9) {
    std::vector<Vec> q;
    for (int j = 0; j < a.cols(); ++j) {
        Vec v = a.col(j);
        const double n0 = v.norm();
        if (n0 == 0.0) continue;
        for (int pass = 0; pass < 2; ++pass)
            for (const Vec& u : q) v -= u.dot(v) * u;
        if (v.norm() <= tol * n0) continue;
        q.push_back(v / v.norm());
    }
    Mat out(a.rows(), static_cast<Eigen::Index>(q.size()));
    for (std::size_t j = 0; j < q.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = q[j];
    return out;
}

// I - Q Q' with Q from orthonormal_basis.
inline Mat annihilator(const Mat& a, double tol = 1e-9) {
    const Mat q = orthonormal_basis(a, tol);
    return Mat::Identity(a.rows(), a.rows()) - q * q.transpose();
}

// A^+ = V diag(1/lambda) V' A' from the Jacobi eigenpairs of A'A.
inline Mat pinv_gram(const Mat& a, double rel_tol = 1e-10) {
    Mat v;
    const auto lam = jacobi_eig(a.transpose() * a, &v);
    const double top = lam.empty() ? 0.0 : lam.front();
    Mat inner = Mat::Zero(a.cols(), a.cols());
    for (std::size_t j = 0; j < lam.size(); ++j) {
        if (lam[j] > rel_tol * top && lam[j] > 0.0) {
            const Vec vj = v.col(static_cast<Eigen::Index>(j));
            inner += vj * vj.transpose() / lam[j];
        }
    }
    return inner * a.transpose();
}

inline double max_abs(const Mat& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

}  // namespace oracle
