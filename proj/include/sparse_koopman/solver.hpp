#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "core.hpp"
#include "dictionary.hpp"
#include "enrichment.hpp"
#include "linalg.hpp"

namespace sparse_koopman {

/// How Psi(x) enters the Gram sums. `conjugate` uses Psi(x)^H Psi(y) (the
/// standard complex inner product); `plain` uses Psi(x)^T Psi(y) literally.
/// The two agree for real dictionaries.
enum class GramConvention { conjugate, plain };

inline std::string to_string(GramConvention c) { return c == GramConvention::conjugate ? "conjugate" : "plain"; }

struct GramPair {
    CMatrix G;
    CMatrix A;
    Index sample_count = 0;
    GramConvention convention = GramConvention::conjugate;

    Index dim() const { return G.rows(); }
};

enum class SolverTag { edmd, robust, ridge };

inline std::string to_string(SolverTag t)
{
    switch (t) {
    case SolverTag::edmd: return "edmd";
    case SolverTag::robust: return "robust";
    case SolverTag::ridge: return "ridge";
    }
    return "unknown";
}

inline SolverTag solver_tag_from_string(const std::string& s)
{
    if (s == "edmd") return SolverTag::edmd;
    if (s == "robust") return SolverTag::robust;
    if (s == "ridge") return SolverTag::ridge;
    throw InvalidInput("unknown solver tag '" + s + "'");
}

struct FitDiagnostics {
    double objective = 0.0;
    int iterations = 0;
    bool converged = true;
    bool monotone = true;
    std::string warm_start; // "edmd" or "ridge_path" for robust fits
    Index pinv_rank = 0;
    bool output_map_rank_deficient = false;
};

/// Enrichment settings a model was trained with.
struct EnrichmentRecord {
    std::uint64_t seed = 0;
    double radius_x = 0.0;
    double radius_y = 0.0;
    Index artificial_points = 0;
    std::string generator = CounterRng::algorithm;

    bool operator==(const EnrichmentRecord&) const = default;
};

/// Learned operator. Lifted column states propagate as z_{n+1} = K^T z_n;
/// states are reconstructed as x = Re(C z).
struct KoopmanModel {
    CMatrix K;
    double lambda = 0.0;
    DictionarySpec dictionary;
    std::optional<CMatrix> C;
    SolverTag solver_tag = SolverTag::edmd;
    GramConvention convention = GramConvention::conjugate;
    FitDiagnostics diagnostics;
    std::optional<EnrichmentRecord> enrichment;
};

inline void validate(const KoopmanModel& model)
{
    const Index k = feature_dim(model.dictionary);
    detail::require(model.K.rows() == k && model.K.cols() == k, "model: K must be square with side equal to the feature dimension");
    detail::require(model.lambda >= 0.0, "model: lambda must be nonnegative");
    detail::require(model.solver_tag != SolverTag::edmd || model.lambda == 0.0, "model: edmd models have lambda = 0");
    if (model.C)
        detail::require(model.C->rows() == model.dictionary.state_dim && model.C->cols() == k,
                        "model: C must be state_dim x feature_dim");
}

/// G = (1/M) sum Psi(x_i)^* Psi(x_i), A = (1/M) sum Psi(x_i)^* Psi(y_i) with
/// Psi a row vector and M the total column count.
inline GramPair assemble_gram(const SnapshotPairs& pairs, const DictionarySpec& spec,
                              GramConvention convention = GramConvention::conjugate)
{
    validate(pairs);
    detail::require(pairs.size() >= 1, "assemble_gram: no pairs");
    detail::require(pairs.state_dim() == spec.state_dim, "assemble_gram: state dimension does not match dictionary");
    const CMatrix P = evaluate_columns(spec, pairs.X_p);
    const CMatrix Q = evaluate_columns(spec, pairs.X_f);
    if (!P.allFinite() || !Q.allFinite()) throw InvalidInput("assemble_gram: non-finite feature values");

    const double inv_m = 1.0 / static_cast<double>(pairs.size());
    GramPair out;
    out.sample_count = pairs.size();
    out.convention = convention;
    if (convention == GramConvention::conjugate) {
        out.G = P.conjugate() * P.transpose() * inv_m;
        out.A = P.conjugate() * Q.transpose() * inv_m;
        const CMatrix sym = 0.5 * (out.G + out.G.adjoint());
        out.G = sym;
    } else {
        out.G = P * P.transpose() * inv_m;
        out.A = P * Q.transpose() * inv_m;
        const CMatrix sym = 0.5 * (out.G + out.G.transpose());
        out.G = sym;
    }
    return out;
}

inline void validate(const GramPair& gram)
{
    detail::require(gram.G.rows() == gram.G.cols() && gram.G.rows() >= 1, "gram: G must be square and nonempty");
    detail::require(gram.A.rows() == gram.G.rows() && gram.A.cols() == gram.G.cols(), "gram: A must match G");
    detail::require(gram.G.allFinite() && gram.A.allFinite(), "gram: non-finite entries");
}

/// ||G K - A||_F + lambda ||K||_F
inline double objective_value(const GramPair& gram, const CMatrix& K, double lambda)
{
    detail::require(K.rows() == gram.dim() && K.cols() == gram.A.cols(), "objective_value: shape mismatch");
    return (gram.G * K - gram.A).norm() + lambda * K.norm();
}

/// ||G K - A||_F + lambda sqrt(||K||_F^2 + K_dim): the worst-case residual
/// bound over perturbations of size lambda.
inline double worst_case_bound(const GramPair& gram, const CMatrix& K, double lambda)
{
    detail::require(K.rows() == gram.dim() && K.cols() == gram.A.cols(), "worst_case_bound: shape mismatch");
    return (gram.G * K - gram.A).norm() + lambda * std::sqrt(K.squaredNorm() + static_cast<double>(gram.dim()));
}

struct EdmdOptions {
    std::optional<double> rtol; // default: K_dim * machine epsilon
};

/// K = pinv(G) A with truncated-SVD pseudoinverse.
inline KoopmanModel edmd_solve(const GramPair& gram, const DictionarySpec& spec, const EdmdOptions& opts = {})
{
    validate(gram);
    detail::require(feature_dim(spec) == gram.dim(), "edmd_solve: dictionary does not match gram dimension");
    if (gram.G.cwiseAbs().maxCoeff() == 0.0) throw InvalidInput("edmd_solve: G is zero (no data in feature space)");
    const auto pinv = linalg::pseudo_inverse(gram.G, opts.rtol.value_or(linalg::default_pinv_rtol(gram.dim())));
    KoopmanModel model;
    model.K = pinv.matrix * gram.A;
    model.lambda = 0.0;
    model.dictionary = spec;
    model.solver_tag = SolverTag::edmd;
    model.convention = gram.convention;
    model.diagnostics.objective = objective_value(gram, model.K, 0.0);
    model.diagnostics.pinv_rank = pinv.rank;
    return model;
}

/// Closed-form minimizer of ||G K - A||_F^2 + lambda^2 ||K||_F^2.
inline KoopmanModel ridge_solve(const GramPair& gram, const DictionarySpec& spec, double lambda)
{
    validate(gram);
    detail::require(lambda > 0.0, "ridge_solve: lambda must be positive");
    detail::require(feature_dim(spec) == gram.dim(), "ridge_solve: dictionary does not match gram dimension");
    CMatrix normal = gram.G.adjoint() * gram.G;
    normal.diagonal().array() += lambda * lambda;
    KoopmanModel model;
    model.K = normal.llt().solve(gram.G.adjoint() * gram.A);
    model.lambda = lambda;
    model.dictionary = spec;
    model.solver_tag = SolverTag::ridge;
    model.convention = gram.convention;
    model.diagnostics.objective = objective_value(gram, model.K, lambda);
    return model;
}

struct RobustOptions {
    double tol = 1e-10;         // relative objective decrease that ends the iteration
    int max_iter = 50000;
    double smoothing = 1e-12;   // f(K) = sqrt(||GK - A||^2 + smoothing^2)
    bool path_warm_start = true;
    std::optional<double> edmd_rtol;
    // Filled with the objective after every accepted iterate when non-null.
    std::vector<double>* history = nullptr;
};

namespace detail {

// Points K(mu) = (G^H G + mu I)^{-1} G^H A of the ridge path. With
// G = U S V^H and B = U^H A, K(mu) = V diag(s / (s^2 + mu)) B,
// ||G K(mu) - A|| = ||diag(mu / (s^2 + mu)) B|| and
// ||K(mu)|| = ||diag(s / (s^2 + mu)) B||. Stationary points of the
// non-squared objective with nonzero residual and nonzero K lie on this path
// with mu = lambda ||GK - A|| / ||K||.
class RidgePath {
public:
    explicit RidgePath(const GramPair& gram)
        : svd_(gram.G, Eigen::ComputeFullU | Eigen::ComputeFullV)
    {
        B_ = svd_.matrixU().adjoint() * gram.A;
        row_sq_ = B_.rowwise().squaredNorm();
        // Residual part of A outside range(U) is zero for square G with full U.
    }

    double sigma_max() const { return svd_.singularValues().size() ? svd_.singularValues()[0] : 0.0; }

    double objective(double mu, double lambda) const
    {
        const auto& s = svd_.singularValues();
        double res = 0.0, kn = 0.0;
        for (Index i = 0; i < s.size(); ++i) {
            const double denom = s[i] * s[i] + mu;
            const double r = denom > 0.0 ? mu / denom : 1.0;
            const double k = denom > 0.0 ? s[i] / denom : 0.0;
            res += r * r * row_sq_[i];
            kn += k * k * row_sq_[i];
        }
        return std::sqrt(res) + lambda * std::sqrt(kn);
    }

    CMatrix point(double mu) const
    {
        const auto& s = svd_.singularValues();
        Vector w(s.size());
        for (Index i = 0; i < s.size(); ++i) {
            const double denom = s[i] * s[i] + mu;
            w[i] = denom > 0.0 ? s[i] / denom : 0.0;
        }
        return svd_.matrixV() * (w.cast<Complex>().asDiagonal() * B_);
    }

private:
    Eigen::BDCSVD<CMatrix> svd_;
    CMatrix B_;
    Vector row_sq_;
};

} // namespace detail

/// Approximate minimizer of ||G K - A||_F + lambda ||K||_F.
///
/// Proximal gradient: the residual term, smoothed as
/// sqrt(||GK - A||^2 + eps^2), takes gradient steps with backtracking; the
/// penalty is applied through its exact proximal map (radial shrinkage
/// K <- max(0, 1 - lambda eta / ||K||) K). The iteration starts from the EDMD
/// solution, or from the best point of the ridge path when that has a lower
/// objective, and only accepts non-increasing objective values.
inline KoopmanModel robust_solve(const GramPair& gram, const DictionarySpec& spec, double lambda,
                                 const RobustOptions& opts = {})
{
    validate(gram);
    if (!(lambda > 0.0)) throw InvalidInput("robust_solve: lambda must be positive (use edmd_solve for lambda = 0)");

    const KoopmanModel edmd = edmd_solve(gram, spec, EdmdOptions{opts.edmd_rtol});
    CMatrix K = edmd.K;
    double F = objective_value(gram, K, lambda);
    std::string warm = "edmd";

    const double g_norm = [&] {
        Eigen::BDCSVD<CMatrix> s(gram.G);
        return s.singularValues()[0];
    }();

    if (opts.path_warm_start) {
        const detail::RidgePath path(gram);
        const double smax2 = std::max(path.sigma_max() * path.sigma_max(), std::numeric_limits<double>::min());
        // Coarse log-spaced scan over mu / sigma_max^2 in [1e-18, 1e6], then golden-section refinement.
        constexpr int n_scan = 97;
        std::vector<double> logs(n_scan), vals(n_scan);
        int best = 0;
        for (int i = 0; i < n_scan; ++i) {
            logs[i] = -18.0 + 24.0 * i / (n_scan - 1);
            vals[i] = path.objective(smax2 * std::pow(10.0, logs[i]), lambda);
            if (vals[i] < vals[best]) best = i;
        }
        double lo = logs[std::max(best - 1, 0)];
        double hi = logs[std::min(best + 1, n_scan - 1)];
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        auto f = [&](double lg) { return path.objective(smax2 * std::pow(10.0, lg), lambda); };
        double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
        double fa = f(a), fb = f(b);
        for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
            if (fa < fb) {
                hi = b; b = a; fb = fa; a = hi - phi * (hi - lo); fa = f(a);
            } else {
                lo = a; a = b; fa = fb; b = lo + phi * (hi - lo); fb = f(b);
            }
        }
        double best_log = logs[best];
        if (std::min(fa, fb) < vals[best]) best_log = fa < fb ? a : b;
        CMatrix candidate = path.point(smax2 * std::pow(10.0, best_log));
        double Fc = objective_value(gram, candidate, lambda);
        // K = 0 is the end of the path.
        const double F0 = gram.A.norm();
        if (F0 < Fc) {
            candidate.setZero();
            Fc = F0;
        }
        if (Fc < F) {
            K = candidate;
            F = Fc;
            warm = "ridge_path";
        }
    }

    const double eps = opts.smoothing;
    auto smooth = [&](const CMatrix& R) { return std::sqrt(R.squaredNorm() + eps * eps); };

    if (opts.history) {
        opts.history->clear();
        opts.history->push_back(F);
    }

    CMatrix R = gram.G * K - gram.A;
    double fK = smooth(R);
    // Lipschitz estimate of grad f near K: ||G||_2^2 / f(K).
    double eta = fK / std::max(g_norm * g_norm, std::numeric_limits<double>::min());
    const double eta_floor = eta * 1e-30;

    bool converged = false;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        const CMatrix grad = gram.G.adjoint() * R / fK;
        eta *= 2.0;
        CMatrix K_next;
        CMatrix R_next;
        double f_next = 0.0;
        bool accepted = false;
        while (eta > eta_floor) {
            K_next = K - eta * grad;
            const double nk = K_next.norm();
            const double shrink = nk > 0.0 ? std::max(0.0, 1.0 - lambda * eta / nk) : 0.0;
            K_next *= shrink;
            R_next = gram.G * K_next - gram.A;
            f_next = smooth(R_next);
            const CMatrix step = K_next - K;
            const double model = fK + (grad.adjoint() * step).trace().real() + step.squaredNorm() / (2.0 * eta);
            if (f_next <= model) {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) {
            converged = true; // no descent step representable at this scale
            break;
        }
        const double F_next = R_next.norm() + lambda * K_next.norm();
        if (!(F_next <= F)) {
            converged = true; // rounding-level stall
            break;
        }
        const double decrease = (F - F_next) / std::max(F, std::numeric_limits<double>::min());
        K = std::move(K_next);
        R = std::move(R_next);
        fK = f_next;
        F = F_next;
        if (opts.history) opts.history->push_back(F);
        if (decrease < opts.tol) {
            converged = true;
            ++it;
            break;
        }
    }

    KoopmanModel model;
    model.K = std::move(K);
    model.lambda = lambda;
    model.dictionary = spec;
    model.solver_tag = SolverTag::robust;
    model.convention = gram.convention;
    model.diagnostics.objective = F;
    model.diagnostics.iterations = it;
    model.diagnostics.converged = converged;
    model.diagnostics.monotone = true; // only non-increasing iterates are accepted
    model.diagnostics.warm_start = warm;
    model.diagnostics.pinv_rank = edmd.diagnostics.pinv_rank;
    return model;
}

} // namespace sparse_koopman
