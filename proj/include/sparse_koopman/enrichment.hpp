#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "dictionary.hpp"
#include "linalg.hpp"
#include "random.hpp"

namespace sparse_koopman {

enum class Provenance { observed, artificial };

inline const char* to_string(Provenance p) { return p == Provenance::observed ? "observed" : "artificial"; }

/// Paired snapshot matrices: column i of X_f is the image of column i of X_p.
struct SnapshotPairs {
    Matrix X_p;
    Matrix X_f;
    std::vector<Provenance> provenance;

    Index state_dim() const { return X_p.rows(); }
    Index size() const { return X_p.cols(); }

    Index observed_count() const
    {
        return std::count(provenance.begin(), provenance.end(), Provenance::observed);
    }

    /// Observed pairs from a trajectory: X_p = [x_0..x_{M-2}], X_f = [x_1..x_{M-1}].
    static SnapshotPairs from_trajectory(const Matrix& traj)
    {
        detail::require(traj.cols() >= 2, "trajectory must have at least 2 columns");
        const Index m = traj.cols() - 1;
        return {traj.leftCols(m), traj.rightCols(m), std::vector<Provenance>(m, Provenance::observed)};
    }

    /// Only the observed columns, in their original order.
    SnapshotPairs observed() const
    {
        SnapshotPairs out;
        const Index m = observed_count();
        out.X_p.resize(state_dim(), m);
        out.X_f.resize(state_dim(), m);
        Index k = 0;
        for (Index j = 0; j < size(); ++j) {
            if (provenance[j] != Provenance::observed) continue;
            out.X_p.col(k) = X_p.col(j);
            out.X_f.col(k) = X_f.col(j);
            ++k;
        }
        out.provenance.assign(m, Provenance::observed);
        return out;
    }
};

inline void validate(const SnapshotPairs& pairs)
{
    detail::require(pairs.X_p.rows() == pairs.X_f.rows() && pairs.X_p.cols() == pairs.X_f.cols(),
                    "snapshot pairs: X_p and X_f must have identical shape");
    detail::require(static_cast<Index>(pairs.provenance.size()) == pairs.X_p.cols(),
                    "snapshot pairs: one provenance tag per column required");
    detail::require(pairs.observed_count() >= 1, "snapshot pairs: at least one observed column required");
}

struct EnrichmentConfig {
    double radius_x = 1e-2;
    std::optional<double> radius_y; // defaults to radius_x
    int points_per_sample = 1;
    std::uint64_t seed = 0;

    double effective_radius_y() const { return radius_y.value_or(radius_x); }
};

inline void validate(const EnrichmentConfig& cfg)
{
    detail::require(cfg.radius_x > 0.0, "enrichment: radius_x must be positive");
    detail::require(cfg.effective_radius_y() > 0.0, "enrichment: radius_y must be positive");
    detail::require(cfg.points_per_sample >= 1, "enrichment: points_per_sample must be >= 1");
}

/// Appends points_per_sample artificial pairs (x_i + dx, y_i + dy) per
/// observed pair, |dx| <= radius_x, |dy| <= radius_y, uniform in the balls.
/// Layout: observed columns, then one block of M artificial columns per copy.
inline SnapshotPairs enrich_pairs(const SnapshotPairs& pairs, const EnrichmentConfig& cfg)
{
    validate(cfg);
    detail::require(pairs.size() >= 1, "enrich_pairs: empty input");
    validate(pairs);
    detail::require(pairs.observed_count() == pairs.size(), "enrich_pairs: input must contain observed columns only");

    const Index n = pairs.state_dim();
    const Index m = pairs.size();
    const Index total = m * (1 + cfg.points_per_sample);
    SnapshotPairs out;
    out.X_p.resize(n, total);
    out.X_f.resize(n, total);
    out.X_p.leftCols(m) = pairs.X_p;
    out.X_f.leftCols(m) = pairs.X_f;
    out.provenance.assign(m, Provenance::observed);
    out.provenance.resize(total, Provenance::artificial);

    CounterRng rng(cfg.seed);
    const double ry = cfg.effective_radius_y();
    for (int c = 0; c < cfg.points_per_sample; ++c) {
        for (Index i = 0; i < m; ++i) {
            const Index col = m * (c + 1) + i;
            out.X_p.col(col) = pairs.X_p.col(i) + sample_ball(rng, n, cfg.radius_x);
            out.X_f.col(col) = pairs.X_f.col(i) + sample_ball(rng, n, ry);
        }
    }
    return out;
}

/// Trajectory enrichment with a given number of artificial snapshots.
///
/// Artificial snapshots x_i + dx_i (|dx_i| <= radius_x) are generated copy by
/// copy along the trajectory; a copy of r snapshots contributes the r - 1
/// pairs (x~_i, x~_{i+1}). When `artificial_points` is not a multiple of the
/// trajectory length, the last copy covers only its first snapshots.
inline SnapshotPairs enrich_trajectory_points(const Matrix& traj, Index artificial_points, const EnrichmentConfig& cfg)
{
    detail::require(traj.cols() >= 2, "enrich_trajectory: trajectory must have at least 2 columns");
    detail::require(artificial_points >= 0, "enrich_trajectory: artificial point count must be nonnegative");
    if (artificial_points > 0) validate(cfg);
    detail::require(traj.allFinite(), "enrich_trajectory: trajectory contains non-finite values");

    const Index n = traj.rows();
    const Index len = traj.cols();
    SnapshotPairs out = SnapshotPairs::from_trajectory(traj);

    std::vector<Matrix> copies;
    CounterRng rng(cfg.seed);
    for (Index remaining = artificial_points; remaining > 0; remaining -= len) {
        const Index r = std::min(remaining, len);
        Matrix copy(n, r);
        for (Index i = 0; i < r; ++i) copy.col(i) = traj.col(i) + sample_ball(rng, n, cfg.radius_x);
        copies.push_back(std::move(copy));
    }

    Index extra = 0;
    for (const auto& c : copies) extra += c.cols() - 1;
    const Index m = out.size();
    out.X_p.conservativeResize(n, m + extra);
    out.X_f.conservativeResize(n, m + extra);
    Index col = m;
    for (const auto& c : copies) {
        const Index pairs = c.cols() - 1;
        if (pairs <= 0) continue;
        out.X_p.middleCols(col, pairs) = c.leftCols(pairs);
        out.X_f.middleCols(col, pairs) = c.rightCols(pairs);
        col += pairs;
    }
    out.provenance.resize(m + extra, Provenance::artificial);
    return out;
}

/// Algorithm-style enrichment with points_per_sample perturbed copies of the
/// whole trajectory: X_p = [x_1..x_{M-1}, x~_1..x~_{M-1}, ...],
/// X_f = [x_2..x_M, x~_2..x~_M, ...].
inline SnapshotPairs enrich_trajectory(const Matrix& traj, const EnrichmentConfig& cfg)
{
    validate(cfg);
    detail::require(traj.cols() >= 2, "enrich_trajectory: trajectory must have at least 2 columns");
    return enrich_trajectory_points(traj, traj.cols() * cfg.points_per_sample, cfg);
}

/// Per-point cap on useful artificial samples: min(N, rank(dPsi/dx at x)),
/// rank counted over singular values > rank_tol * sigma_max.
inline Index max_augmentation_count(const DictionarySpec& spec, const Vector& x, double rank_tol = 1e-10)
{
    const CMatrix J = jacobian(spec, x);
    return std::min<Index>(spec.state_dim, linalg::numerical_rank(J, rank_tol));
}

struct AugmentationBudgetEntry {
    Index sample = 0;
    Index budget = 0;
    int requested = 0;
    bool within_budget = false;
};

/// Advisory check of points_per_sample against the per-sample cap.
inline std::vector<AugmentationBudgetEntry> check_augmentation_budget(const SnapshotPairs& pairs,
                                                                      const DictionarySpec& spec,
                                                                      const EnrichmentConfig& cfg,
                                                                      double rank_tol = 1e-10)
{
    validate(pairs);
    detail::require(pairs.observed_count() == pairs.size(), "check_augmentation_budget: observed pairs only");
    std::vector<AugmentationBudgetEntry> out;
    out.reserve(pairs.size());
    for (Index i = 0; i < pairs.size(); ++i) {
        const Index budget = max_augmentation_count(spec, pairs.X_p.col(i), rank_tol);
        out.push_back({i, budget, cfg.points_per_sample, cfg.points_per_sample <= budget});
    }
    return out;
}

/// Default enrichment radius: scale * || per-state standard deviation ||_2
/// over the trajectory columns.
inline double default_radius(const Matrix& traj, double scale = 1e-2)
{
    const Vector mean = traj.rowwise().mean();
    const Matrix centered = traj.colwise() - mean;
    const Vector sd = (centered.array().square().rowwise().sum() / static_cast<double>(traj.cols())).sqrt();
    return scale * sd.norm();
}

} // namespace sparse_koopman
