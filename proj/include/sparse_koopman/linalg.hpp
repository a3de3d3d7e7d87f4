#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/SVD>

#include "core.hpp"

namespace sparse_koopman::linalg {

/// Default relative truncation for pseudoinverses: dimension * machine epsilon.
inline double default_pinv_rtol(Index dim)
{
    return static_cast<double>(std::max<Index>(dim, 1)) * std::numeric_limits<double>::epsilon();
}

struct PseudoInverse {
    CMatrix matrix;
    Index rank = 0;
    double sigma_max = 0.0;
};

/// Truncated-SVD pseudoinverse. Singular values at or below rtol * sigma_max
/// are treated as zero.
template <class Derived>
PseudoInverse pseudo_inverse(const Eigen::MatrixBase<Derived>& m, double rtol)
{
    using Scalar = typename Derived::Scalar;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Mat a = m;
    Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();

    PseudoInverse out;
    out.sigma_max = s.size() > 0 ? s[0] : 0.0;
    const double cutoff = rtol * out.sigma_max;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i) {
        if (s[i] > cutoff && s[i] > 0.0) {
            inv[i] = 1.0 / s[i];
            ++out.rank;
        }
    }
    out.matrix = (svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint()).template cast<Complex>();
    return out;
}

/// Count of singular values strictly greater than rtol * sigma_max.
template <class Derived>
Index numerical_rank(const Eigen::MatrixBase<Derived>& m, double rtol)
{
    using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (m.size() == 0) return 0;
    Eigen::BDCSVD<Mat> svd{Mat(m)};
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0;
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s[i] > rtol * s[0]) ++r;
    return r;
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method,
/// O(n^3) shortest augmenting paths). Returns assignment[row] = column.
inline std::vector<Index> min_cost_assignment(const Matrix& cost)
{
    detail::require(cost.rows() == cost.cols(), "min_cost_assignment: cost matrix must be square");
    const Index n = cost.rows();
    const double inf = std::numeric_limits<double>::infinity();
    // 1-based potentials; column 0 is a virtual source.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<Index> p(n + 1, 0), way(n + 1, 0);
    for (Index i = 1; i <= n; ++i) {
        p[0] = i;
        Index j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const Index i0 = p[j0];
            double delta = inf;
            Index j1 = 0;
            for (Index j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const Index j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<Index> assignment(n, 0);
    for (Index j = 1; j <= n; ++j)
        if (p[j] != 0) assignment[p[j] - 1] = j - 1;
    return assignment;
}

} // namespace sparse_koopman::linalg
