#pragma once

#include <string>
#include <vector>

#include "core.hpp"

namespace sparse_koopman {

enum class DictionaryKind { identity, fourier_exponential, monomial };

inline std::string to_string(DictionaryKind kind)
{
    switch (kind) {
    case DictionaryKind::identity: return "identity";
    case DictionaryKind::fourier_exponential: return "fourier_exponential";
    case DictionaryKind::monomial: return "monomial";
    }
    return "unknown";
}

inline DictionaryKind dictionary_kind_from_string(const std::string& s)
{
    if (s == "identity") return DictionaryKind::identity;
    if (s == "fourier_exponential") return DictionaryKind::fourier_exponential;
    if (s == "monomial") return DictionaryKind::monomial;
    throw InvalidInput("unknown dictionary kind '" + s + "'");
}

/// Observable map Psi: R^N -> C^K.
///
/// - identity: Psi(x) = x, K = N.
/// - fourier_exponential: e^{i m x_c} for m = m_lo..m_hi on the single state
///   coordinate c = `coordinate`; K = m_hi - m_lo + 1. Other coordinates do
///   not enter the features.
/// - monomial: every monomial of total degree <= max_degree, graded
///   lexicographic order (degree ascending; within a degree, exponent tuples
///   in descending lexicographic order, so x1^2, x1 x2, x2^2).
struct DictionarySpec {
    DictionaryKind kind = DictionaryKind::identity;
    int state_dim = 1;
    int m_lo = 0;
    int m_hi = 0;
    int coordinate = 0;
    int max_degree = 1;

    static DictionarySpec identity(int n) { return {DictionaryKind::identity, n}; }

    static DictionarySpec fourier(int m_lo, int m_hi, int state_dim = 1, int coordinate = 0)
    {
        DictionarySpec s;
        s.kind = DictionaryKind::fourier_exponential;
        s.state_dim = state_dim;
        s.m_lo = m_lo;
        s.m_hi = m_hi;
        s.coordinate = coordinate;
        return s;
    }

    static DictionarySpec monomial(int n, int max_degree)
    {
        DictionarySpec s;
        s.kind = DictionaryKind::monomial;
        s.state_dim = n;
        s.max_degree = max_degree;
        return s;
    }

    bool operator==(const DictionarySpec&) const = default;
};

inline void validate(const DictionarySpec& spec)
{
    detail::require(spec.state_dim >= 1, "dictionary: state_dim must be positive");
    switch (spec.kind) {
    case DictionaryKind::identity: break;
    case DictionaryKind::fourier_exponential:
        detail::require(spec.m_hi >= spec.m_lo, "dictionary: fourier mode range is empty");
        detail::require(spec.coordinate >= 0 && spec.coordinate < spec.state_dim,
                        "dictionary: fourier coordinate out of range");
        break;
    case DictionaryKind::monomial:
        detail::require(spec.max_degree >= 0, "dictionary: max_degree must be nonnegative");
        break;
    }
}

/// Exponent tuples of the monomial dictionary, in feature order.
inline std::vector<std::vector<int>> monomial_exponents(int n, int max_degree)
{
    std::vector<std::vector<int>> out;
    std::vector<int> current(n, 0);
    // Descending-lex enumeration of compositions of `remaining` into slots pos..n-1.
    auto fill = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == n - 1) {
            current[pos] = remaining;
            out.push_back(current);
            return;
        }
        for (int a = remaining; a >= 0; --a) {
            current[pos] = a;
            self(self, pos + 1, remaining - a);
        }
    };
    for (int d = 0; d <= max_degree; ++d) fill(fill, 0, d);
    return out;
}

inline Index feature_dim(const DictionarySpec& spec)
{
    validate(spec);
    switch (spec.kind) {
    case DictionaryKind::identity: return spec.state_dim;
    case DictionaryKind::fourier_exponential: return spec.m_hi - spec.m_lo + 1;
    case DictionaryKind::monomial: {
        // binomial(N + D, D)
        Index c = 1;
        for (int i = 1; i <= spec.max_degree; ++i) c = c * (spec.state_dim + i) / i;
        return c;
    }
    }
    return 0;
}

namespace detail {

inline void check_state(const DictionarySpec& spec, const Vector& x)
{
    if (x.size() != spec.state_dim)
        throw InvalidInput("dictionary: state has length " + std::to_string(x.size()) + ", expected " +
                           std::to_string(spec.state_dim));
}

inline double int_pow(double base, int e)
{
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

} // namespace detail

inline CVector evaluate(const DictionarySpec& spec, const Vector& x)
{
    validate(spec);
    detail::check_state(spec, x);
    switch (spec.kind) {
    case DictionaryKind::identity: return x.cast<Complex>();
    case DictionaryKind::fourier_exponential: {
        const double th = x[spec.coordinate];
        CVector out(spec.m_hi - spec.m_lo + 1);
        for (int m = spec.m_lo; m <= spec.m_hi; ++m) out[m - spec.m_lo] = std::polar(1.0, m * th);
        return out;
    }
    case DictionaryKind::monomial: {
        const auto exps = monomial_exponents(spec.state_dim, spec.max_degree);
        CVector out(static_cast<Index>(exps.size()));
        for (std::size_t k = 0; k < exps.size(); ++k) {
            double v = 1.0;
            for (int i = 0; i < spec.state_dim; ++i) v *= detail::int_pow(x[i], exps[k][i]);
            out[static_cast<Index>(k)] = v;
        }
        return out;
    }
    }
    return {};
}

/// Feature matrix with one column Psi(x_j) per column of `states`.
inline CMatrix evaluate_columns(const DictionarySpec& spec, const Matrix& states)
{
    CMatrix out(feature_dim(spec), states.cols());
    for (Index j = 0; j < states.cols(); ++j) out.col(j) = evaluate(spec, states.col(j));
    return out;
}

/// Analytic Jacobian, entry (k, n) = d psi_k / d x_n.
inline CMatrix jacobian(const DictionarySpec& spec, const Vector& x)
{
    validate(spec);
    detail::check_state(spec, x);
    const Index n = spec.state_dim;
    switch (spec.kind) {
    case DictionaryKind::identity: return CMatrix::Identity(n, n);
    case DictionaryKind::fourier_exponential: {
        const double th = x[spec.coordinate];
        CMatrix out = CMatrix::Zero(spec.m_hi - spec.m_lo + 1, n);
        for (int m = spec.m_lo; m <= spec.m_hi; ++m)
            out(m - spec.m_lo, spec.coordinate) = Complex(0.0, m) * std::polar(1.0, m * th);
        return out;
    }
    case DictionaryKind::monomial: {
        const auto exps = monomial_exponents(spec.state_dim, spec.max_degree);
        CMatrix out = CMatrix::Zero(static_cast<Index>(exps.size()), n);
        for (std::size_t k = 0; k < exps.size(); ++k) {
            for (int d = 0; d < n; ++d) {
                if (exps[k][d] == 0) continue;
                double v = exps[k][d];
                for (int i = 0; i < n; ++i) v *= detail::int_pow(x[i], i == d ? exps[k][i] - 1 : exps[k][i]);
                out(static_cast<Index>(k), d) = v;
            }
        }
        return out;
    }
    }
    return {};
}

} // namespace sparse_koopman
