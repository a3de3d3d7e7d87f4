#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "core.hpp"
#include "linalg.hpp"
#include "solver.hpp"

namespace sparse_koopman {

struct SpectrumReport {
    std::vector<Complex> eigenvalues;
    double spectral_radius = 0.0;
    std::vector<Complex> dominant;
    // log(lambda) / dt on the principal branch, present iff dt was given.
    // Modes with |lambda| <= 1e-14 get real part -inf and are flagged.
    std::optional<std::vector<Complex>> continuous_time;
    std::vector<bool> near_zero;
    std::optional<double> dt;
};

inline constexpr double near_zero_modulus = 1e-14;

/// Descending modulus, then descending real part, then descending imaginary part.
inline bool dominance_order(const Complex& a, const Complex& b)
{
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
}

inline std::vector<Complex> dominant_eigenvalues(std::vector<Complex> values, Index m)
{
    std::stable_sort(values.begin(), values.end(), dominance_order);
    values.resize(std::min<std::size_t>(values.size(), static_cast<std::size_t>(std::max<Index>(m, 0))));
    return values;
}

inline SpectrumReport analyze_eigenvalues(std::vector<Complex> eigenvalues, std::optional<double> dt, Index m)
{
    detail::require(m >= 1 && m <= static_cast<Index>(eigenvalues.size()), "analyze: m must be in [1, K_dim]");
    if (dt) detail::require(*dt > 0.0, "analyze: dt must be positive");
    SpectrumReport r;
    r.eigenvalues = std::move(eigenvalues);
    for (const auto& l : r.eigenvalues) r.spectral_radius = std::max(r.spectral_radius, std::abs(l));
    r.dominant = dominant_eigenvalues(r.eigenvalues, m);
    r.near_zero.reserve(r.eigenvalues.size());
    for (const auto& l : r.eigenvalues) r.near_zero.push_back(std::abs(l) <= near_zero_modulus);
    if (dt) {
        r.dt = dt;
        std::vector<Complex> ct;
        ct.reserve(r.eigenvalues.size());
        for (const auto& l : r.eigenvalues) {
            if (std::abs(l) <= near_zero_modulus)
                ct.emplace_back(-std::numeric_limits<double>::infinity(), 0.0);
            else
                ct.push_back(std::log(l) / *dt);
        }
        r.continuous_time = std::move(ct);
    }
    return r;
}

inline SpectrumReport analyze(const CMatrix& K, std::optional<double> dt, Index m)
{
    detail::require(K.rows() == K.cols() && K.rows() >= 1, "analyze: K must be square");
    detail::require(K.allFinite(), "analyze: K has non-finite entries");
    Eigen::ComplexEigenSolver<CMatrix> es(K, false);
    if (es.info() != Eigen::Success) throw NumericalFailure("analyze: eigensolver failed");
    std::vector<Complex> values(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return analyze_eigenvalues(std::move(values), dt, m);
}

inline SpectrumReport analyze(const KoopmanModel& model, std::optional<double> dt, Index m)
{
    validate(model);
    return analyze(model.K, dt, m);
}

/// Mean |a_i - b_sigma(i)| under the minimum-cost matching between the top-m
/// dominant eigenvalues of the two reports.
inline double spectrum_distance(const std::vector<Complex>& a, const std::vector<Complex>& b, Index m)
{
    detail::require(m >= 1 && m <= static_cast<Index>(std::min(a.size(), b.size())),
                    "spectrum_distance: m exceeds the available eigenvalues");
    const auto da = dominant_eigenvalues(a, m);
    const auto db = dominant_eigenvalues(b, m);
    Matrix cost(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j) cost(i, j) = std::abs(da[i] - db[j]);
    const auto assignment = linalg::min_cost_assignment(cost);
    double total = 0.0;
    for (Index i = 0; i < m; ++i) total += cost(i, assignment[i]);
    return total / static_cast<double>(m);
}

inline double spectrum_distance(const SpectrumReport& a, const SpectrumReport& b, Index m)
{
    return spectrum_distance(a.eigenvalues, b.eigenvalues, m);
}

} // namespace sparse_koopman
