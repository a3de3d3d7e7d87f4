#pragma once

#include <optional>

#include "core.hpp"
#include "dictionary.hpp"
#include "enrichment.hpp"
#include "linalg.hpp"
#include "solver.hpp"

namespace sparse_koopman {

struct OutputMapFit {
    CMatrix C;
    Index rank = 0;
    bool rank_deficient = false;
};

/// C minimizing sum_i || x_i - C Psi(x_i) ||^2 over the X_p columns, via the
/// pseudoinverse of the stacked feature matrix (minimal-norm C when the
/// features are rank deficient).
inline OutputMapFit fit_output_map(const SnapshotPairs& pairs, const DictionarySpec& spec,
                                   bool include_artificial = true)
{
    validate(pairs);
    detail::require(pairs.size() >= 1, "fit_output_map: no pairs");
    detail::require(pairs.state_dim() == spec.state_dim, "fit_output_map: state dimension does not match dictionary");
    const Matrix X = include_artificial ? pairs.X_p : pairs.observed().X_p;
    const CMatrix P = evaluate_columns(spec, X);
    const auto pinv = linalg::pseudo_inverse(P, linalg::default_pinv_rtol(std::max(P.rows(), P.cols())));
    OutputMapFit out;
    out.C = X.cast<Complex>() * pinv.matrix;
    out.rank = pinv.rank;
    out.rank_deficient = pinv.rank < P.rows();
    return out;
}

/// Attaches a fitted output map to a model.
inline KoopmanModel with_output_map(KoopmanModel model, const OutputMapFit& fit)
{
    model.C = fit.C;
    model.diagnostics.output_map_rank_deficient = fit.rank_deficient;
    return model;
}

struct PredictionResult {
    Matrix predicted; // N x (horizon + 1)
    std::optional<Matrix> reference;
    std::optional<Matrix> per_state_error;
    std::optional<Vector> mse_per_state;
    double max_imag_residue = 0.0; // max |Im(C z_n)|
    bool truncated = false;        // arithmetic overflowed; columns after the last finite one dropped
};

/// z_0 = Psi(x0), z_{n+1} = K^T z_n, x_n = Re(C z_n) for n = 0..horizon.
inline PredictionResult predict(const KoopmanModel& model, const Vector& x0, int horizon)
{
    validate(model);
    detail::require(model.C.has_value(), "predict: model has no output map");
    detail::require(horizon >= 0, "predict: horizon must be nonnegative");
    detail::require(x0.size() == model.dictionary.state_dim, "predict: initial state has wrong dimension");
    const CMatrix& C = *model.C;
    const CMatrix Kt = model.K.transpose();

    PredictionResult out;
    out.predicted.resize(x0.size(), horizon + 1);
    CVector z = evaluate(model.dictionary, x0);
    Index filled = 0;
    for (int n = 0; n <= horizon; ++n) {
        if (n > 0) z = Kt * z;
        const CVector x = C * z;
        if (!x.allFinite()) {
            out.truncated = true;
            break;
        }
        out.predicted.col(n) = x.real();
        out.max_imag_residue = std::max(out.max_imag_residue, x.imag().cwiseAbs().maxCoeff());
        ++filled;
    }
    if (out.truncated) out.predicted.conservativeResize(Eigen::NoChange, filled);
    return out;
}

/// Fills elementwise absolute errors and per-state mean (over time) squared error.
inline PredictionResult evaluate_prediction(PredictionResult result, const Matrix& reference)
{
    if (reference.rows() != result.predicted.rows() || reference.cols() != result.predicted.cols())
        throw InvalidInput("evaluate_prediction: reference shape does not match the prediction");
    const Matrix diff = result.predicted - reference;
    result.reference = reference;
    result.per_state_error = diff.cwiseAbs();
    result.mse_per_state = diff.array().square().rowwise().mean().matrix();
    return result;
}

} // namespace sparse_koopman
