#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <sparse_koopman/enrichment.hpp>
#include <sparse_koopman/linalg.hpp>
#include <sparse_koopman/predictor.hpp>
#include <sparse_koopman/random.hpp>
#include <sparse_koopman/solver.hpp>
#include <sparse_koopman/spectrum.hpp>

using namespace sparse_koopman;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Complex I{0.0, 1.0};

CMatrix random_complex(CounterRng& rng, Index r, Index c)
{
    CMatrix m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = Complex(rng.normal(), rng.normal());
    return m;
}

/// Gram pair from random data with identity features: G well conditioned.
GramPair random_gram(CounterRng& rng, Index k, Index samples = 0)
{
    if (samples == 0) samples = 3 * k;
    Matrix X(k, samples), Y(k, samples);
    for (Index j = 0; j < samples; ++j) {
        X.col(j) = rng.normal_vector(k);
        Y.col(j) = rng.normal_vector(k);
    }
    return assemble_gram(SnapshotPairs{X, Y, std::vector<Provenance>(samples, Provenance::observed)},
                         DictionarySpec::identity(static_cast<int>(k)));
}

GramPair gram_of(const CMatrix& G, const CMatrix& A)
{
    GramPair g;
    g.G = G;
    g.A = A;
    g.sample_count = 1;
    return g;
}

SnapshotPairs pairs_of(const Matrix& X, const Matrix& Y)
{
    return {X, Y, std::vector<Provenance>(static_cast<std::size_t>(X.cols()), Provenance::observed)};
}

double rel(const CMatrix& a, const CMatrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

} // namespace

// ---------------------------------------------------------------------------
// linear algebra helpers
// ---------------------------------------------------------------------------

TEST_CASE("pseudo-inverse of a singular matrix is the minimal-norm inverse", "[linalg]")
{
    CounterRng rng(1);
    for (int t = 0; t < 20; ++t) {
        // rank-2 3x3 matrix M = B C with B 3x2, C 2x3; M^+ = C^H (C C^H)^-1 (B^H B)^-1 B^H
        const CMatrix B = random_complex(rng, 3, 2);
        const CMatrix C = random_complex(rng, 2, 3);
        const CMatrix M = B * C;
        const CMatrix oracle = C.adjoint() * (C * C.adjoint()).inverse() * (B.adjoint() * B).inverse() * B.adjoint();
        const auto p = linalg::pseudo_inverse(M, 1e-10);
        CHECK(p.rank == 2);
        CHECK(rel(p.matrix, oracle) < 1e-10);
    }
}

TEST_CASE("assignment solver finds the optimal permutation", "[linalg]")
{
    CounterRng rng(4);
    for (int n = 1; n <= 6; ++n) {
        for (int t = 0; t < 10; ++t) {
            Matrix cost(n, n);
            for (Index i = 0; i < n; ++i)
                for (Index j = 0; j < n; ++j) cost(i, j) = rng.uniform();
            const auto a = linalg::min_cost_assignment(cost);
            double got = 0.0;
            for (Index i = 0; i < n; ++i) got += cost(i, a[i]);
            std::vector<Index> perm(n);
            for (Index i = 0; i < n; ++i) perm[i] = i;
            double best = 1e300;
            do {
                double s = 0.0;
                for (Index i = 0; i < n; ++i) s += cost(i, perm[i]);
                best = std::min(best, s);
            } while (std::next_permutation(perm.begin(), perm.end()));
            CHECK_THAT(got, WithinAbs(best, 1e-12));
        }
    }
}

// ---------------------------------------------------------------------------
// Gram assembly
// ---------------------------------------------------------------------------

TEST_CASE("single pair gram by hand", "[solver][gram]")
{
    Matrix X(2, 1), Y(2, 1);
    X << 1, 2;
    Y << 2, 4;
    const auto g = assemble_gram(pairs_of(X, Y), DictionarySpec::identity(2));
    CMatrix G(2, 2), A(2, 2);
    G << 1, 2, 2, 4;
    A << 2, 4, 4, 8;
    CHECK(g.G == G);
    CHECK(g.A == A);
    CHECK(g.sample_count == 1);
}

TEST_CASE("identity dynamics give A = G", "[solver][gram]")
{
    const Matrix X = Matrix::Random(3, 7);
    const auto g = assemble_gram(pairs_of(X, X), DictionarySpec::identity(3));
    CHECK((g.A - g.G).norm() <= 1e-15 * g.G.norm());
}

TEST_CASE("duplicating the data leaves the gram unchanged", "[solver][gram]")
{
    const Matrix X = Matrix::Random(2, 4), Y = Matrix::Random(2, 4);
    Matrix X2(2, 8), Y2(2, 8);
    X2 << X, X;
    Y2 << Y, Y;
    const auto spec = DictionarySpec::monomial(2, 2);
    const auto a = assemble_gram(pairs_of(X, Y), spec);
    const auto b = assemble_gram(pairs_of(X2, Y2), spec);
    CHECK(rel(b.G, a.G) < 1e-15);
    CHECK(rel(b.A, a.A) < 1e-15);
}

TEST_CASE("gram assembly matches a naive loop", "[solver][gram][property]")
{
    CounterRng rng(21);
    for (const auto& spec : {DictionarySpec::identity(3), DictionarySpec::monomial(3, 2), DictionarySpec::fourier(-4, 4, 3, 2)}) {
        for (int t = 0; t < 10; ++t) {
            Matrix X(3, 5), Y(3, 5);
            for (Index j = 0; j < 5; ++j) {
                X.col(j) = rng.normal_vector(3);
                Y.col(j) = rng.normal_vector(3);
            }
            const Index k = feature_dim(spec);
            CMatrix G = CMatrix::Zero(k, k), A = CMatrix::Zero(k, k);
            for (Index m = 0; m < 5; ++m) {
                const CVector px = evaluate(spec, X.col(m));
                const CVector py = evaluate(spec, Y.col(m));
                for (Index i = 0; i < k; ++i)
                    for (Index j = 0; j < k; ++j) {
                        G(i, j) += std::conj(px[i]) * px[j] / 5.0;
                        A(i, j) += std::conj(px[i]) * py[j] / 5.0;
                    }
            }
            const auto g = assemble_gram(pairs_of(X, Y), spec);
            CHECK(rel(g.G, G) < 1e-12);
            CHECK(rel(g.A, A) < 1e-12);
            CHECK((g.G - g.G.adjoint()).norm() == 0.0);
        }
    }
}

TEST_CASE("plain gram convention uses the literal transpose", "[solver][gram]")
{
    Matrix X(1, 2), Y(1, 2);
    X << 0.3, 1.2;
    Y << 0.4, 1.3;
    const auto spec = DictionarySpec::fourier(-1, 1);
    const auto g = assemble_gram(pairs_of(X, Y), spec, GramConvention::plain);
    const CMatrix P = evaluate_columns(spec, X), Q = evaluate_columns(spec, Y);
    CHECK(rel(g.A, P * Q.transpose() / 2.0) < 1e-15);
    CHECK(g.convention == GramConvention::plain);
}

TEST_CASE("gram rejects mismatched dimensions", "[solver][gram][errors]")
{
    CHECK_THROWS_AS(assemble_gram(pairs_of(Matrix::Zero(2, 3), Matrix::Zero(2, 3)), DictionarySpec::identity(3)),
                    InvalidInput);
}

// ---------------------------------------------------------------------------
// EDMD and ridge
// ---------------------------------------------------------------------------

TEST_CASE("scalar EDMD by hand", "[solver][edmd]")
{
    Matrix X(1, 2), Y(1, 2);
    X << 1, 0.5;
    Y << 0.5, 0.25;
    const auto g = assemble_gram(pairs_of(X, Y), DictionarySpec::identity(1));
    CHECK_THAT(g.G(0, 0).real(), WithinAbs(0.625, 1e-15));
    CHECK_THAT(g.A(0, 0).real(), WithinAbs(0.3125, 1e-15));
    const auto m = edmd_solve(g, DictionarySpec::identity(1));
    CHECK_THAT(m.K(0, 0).real(), WithinAbs(0.5, 1e-15));
    CHECK(m.solver_tag == SolverTag::edmd);
    CHECK(m.lambda == 0.0);
}

TEST_CASE("EDMD of identity dynamics is the identity", "[solver][edmd]")
{
    const Matrix X = Matrix::Random(4, 9);
    const auto m = edmd_solve(assemble_gram(pairs_of(X, X), DictionarySpec::identity(4)), DictionarySpec::identity(4));
    CHECK((m.K - CMatrix::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("EDMD on singular G gives the minimal-norm solution", "[solver][edmd]")
{
    CounterRng rng(31);
    for (int t = 0; t < 20; ++t) {
        const CMatrix B = random_complex(rng, 3, 2);
        const CMatrix Cf = random_complex(rng, 2, 3);
        const CMatrix G = B * Cf;
        const CMatrix A = G * random_complex(rng, 3, 3); // A in the range of G
        const auto m = edmd_solve(gram_of(G, A), DictionarySpec::identity(3), EdmdOptions{1e-10});
        CHECK((G * m.K - A).norm() < 1e-10 * std::max(1.0, A.norm()));
        const CMatrix pinv =
            Cf.adjoint() * (Cf * Cf.adjoint()).inverse() * (B.adjoint() * B).inverse() * B.adjoint();
        CHECK(rel(m.K, pinv * A) < 1e-9);
        CHECK(m.diagnostics.pinv_rank == 2);
    }
}

TEST_CASE("EDMD residual on full-rank G", "[solver][edmd][property]")
{
    CounterRng rng(41);
    for (int t = 0; t < 20; ++t) {
        const auto g = random_gram(rng, 6);
        const auto m = edmd_solve(g, DictionarySpec::identity(6));
        CHECK((g.G * m.K - g.A).norm() < 1e-8 * g.A.norm());
    }
}

TEST_CASE("EDMD rejects a zero gram", "[solver][edmd][errors]")
{
    CHECK_THROWS_AS(edmd_solve(gram_of(CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)), DictionarySpec::identity(2)), InvalidInput);
}

TEST_CASE("ridge solutions", "[solver][ridge]")
{
    const auto id = DictionarySpec::identity(3);
    const auto r = ridge_solve(gram_of(CMatrix::Identity(3, 3), CMatrix::Identity(3, 3)), id, 1.0);
    CHECK((r.K - 0.5 * CMatrix::Identity(3, 3)).norm() < 1e-15);
    CHECK(r.solver_tag == SolverTag::ridge);

    CounterRng rng(51);
    const auto g = random_gram(rng, 3);
    CHECK(rel(ridge_solve(g, id, 1e-12).K, edmd_solve(g, id).K) < 1e-6);
    CHECK_THROWS_AS(ridge_solve(g, id, 0.0), InvalidInput);
}

TEST_CASE("ridge norm shrinks as lambda grows", "[solver][ridge][property]")
{
    CounterRng rng(61);
    const auto id = DictionarySpec::identity(4);
    for (int t = 0; t < 20; ++t) {
        const auto g = random_gram(rng, 4);
        double prev = 1e300;
        for (double lam : {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
            const double n = ridge_solve(g, id, lam).K.norm();
            CHECK(n <= prev * (1.0 + 1e-12));
            prev = n;
        }
    }
}

// ---------------------------------------------------------------------------
// Robust objective
// ---------------------------------------------------------------------------

TEST_CASE("objective and bound values", "[solver][objective]")
{
    CounterRng rng(71);
    const auto g = random_gram(rng, 3);
    const CMatrix Z = CMatrix::Zero(3, 3);
    CHECK_THAT(objective_value(g, Z, 0.7), WithinRel(g.A.norm(), 1e-15));
    CHECK_THAT(worst_case_bound(g, Z, 0.7), WithinRel(g.A.norm() + 0.7 * std::sqrt(3.0), 1e-15));
    const CMatrix K = random_complex(rng, 3, 3);
    CHECK(worst_case_bound(g, K, 0.0) == objective_value(g, K, 0.0));

    const auto eye = gram_of(CMatrix::Identity(3, 3), CMatrix::Identity(3, 3));
    CHECK_THAT(objective_value(eye, CMatrix::Identity(3, 3), 2.0), WithinRel(2.0 * std::sqrt(3.0), 1e-15));
    const auto edmd = edmd_solve(eye, DictionarySpec::identity(3));
    CHECK(objective_value(eye, edmd.K, 0.0) == 0.0);
}

TEST_CASE("vanishing penalty reproduces EDMD", "[solver][robust]")
{
    CounterRng rng(81);
    for (int t = 0; t < 10; ++t) {
        const Index k = 2 + t % 8;
        const auto spec = DictionarySpec::identity(static_cast<int>(k));
        const auto g = random_gram(rng, k);
        CHECK(rel(robust_solve(g, spec, 1e-14).K, edmd_solve(g, spec).K) < 1e-6);
    }
}

TEST_CASE("overwhelming penalty gives K = 0", "[solver][robust]")
{
    CounterRng rng(91);
    const auto g = random_gram(rng, 4);
    const double lam = 1e6 * g.G.norm() * g.A.norm();
    const auto m = robust_solve(g, DictionarySpec::identity(4), lam);
    CHECK(m.K.cwiseAbs().maxCoeff() == 0.0);
    CHECK_THAT(m.diagnostics.objective, WithinRel(g.A.norm(), 1e-12));
}

TEST_CASE("robust solution beats random probes", "[solver][robust][property]")
{
    CounterRng rng(101);
    const auto spec = DictionarySpec::identity(3);
    for (int t = 0; t < 5; ++t) {
        const auto g = random_gram(rng, 3, 4);
        for (double lam : {1e-3, 0.1, 0.5}) {
            const auto m = robust_solve(g, spec, lam);
            const double J = objective_value(g, m.K, lam);
            CHECK(J <= objective_value(g, edmd_solve(g, spec).K, lam) + 1e-8);
            for (int p = 0; p < 1000; ++p) {
                const double scale = std::pow(10.0, -3.0 + 3.0 * rng.uniform());
                const CMatrix cand = m.K + scale * random_complex(rng, 3, 3);
                REQUIRE(J <= objective_value(g, cand, lam) + 1e-8);
            }
        }
    }
}

TEST_CASE("robust iterations never increase the objective", "[solver][robust][property]")
{
    CounterRng rng(111);
    for (bool warm : {true, false}) {
        for (int t = 0; t < 10; ++t) {
            const auto g = random_gram(rng, 5, 6);
            std::vector<double> history;
            RobustOptions opts;
            opts.path_warm_start = warm;
            opts.history = &history;
            opts.max_iter = 2000;
            const double lam = 0.05 * (t + 1);
            const auto m = robust_solve(g, DictionarySpec::identity(5), lam, opts);
            REQUIRE_FALSE(history.empty());
            for (std::size_t i = 1; i < history.size(); ++i) CHECK(history[i] <= history[i - 1]);
            CHECK(m.diagnostics.monotone);
            CHECK(m.diagnostics.objective <= objective_value(g, edmd_solve(g, DictionarySpec::identity(5)).K, lam));
        }
    }
}

TEST_CASE("robust norm shrinks as lambda grows", "[solver][robust][property]")
{
    CounterRng rng(121);
    const auto spec = DictionarySpec::identity(4);
    for (int t = 0; t < 10; ++t) {
        const auto g = random_gram(rng, 4, 5);
        double prev = 1e300;
        for (double lam : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
            const double n = robust_solve(g, spec, lam).K.norm();
            CHECK(n <= prev * (1.0 + 1e-8) + 1e-12);
            prev = n;
        }
    }
}

TEST_CASE("robust solve rejects nonpositive lambda", "[solver][robust][errors]")
{
    CounterRng rng(131);
    const auto g = random_gram(rng, 2);
    CHECK_THROWS_AS(robust_solve(g, DictionarySpec::identity(2), 0.0), InvalidInput);
    CHECK_THROWS_AS(robust_solve(g, DictionarySpec::identity(2), -1.0), InvalidInput);
}

TEST_CASE("sampled perturbed residuals respect the worst-case bound", "[solver][bound][property]")
{
    CounterRng rng(141);
    const auto spec = DictionarySpec::identity(3);
    for (int t = 0; t < 20; ++t) {
        const auto g = random_gram(rng, 3, 4);
        const double lam = 0.01 + rng.uniform();
        const auto m = robust_solve(g, spec, lam);
        const double bound = worst_case_bound(g, m.K, lam);
        double worst = 0.0;
        for (int s = 0; s < 10000; ++s) {
            CMatrix dG = random_complex(rng, 3, 3), dA = random_complex(rng, 3, 3);
            dG *= lam / dG.norm();
            dA *= lam / dA.norm();
            worst = std::max(worst, ((g.G + dG) * m.K - (g.A + dA)).norm());
        }
        CHECK(worst <= bound + 1e-9);
    }
}

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

TEST_CASE("spectrum of a diagonal matrix", "[spectrum]")
{
    CMatrix K = CMatrix::Zero(2, 2);
    K(0, 0) = 0.5;
    K(1, 1) = 0.9;
    const auto r = analyze(K, std::nullopt, 2);
    CHECK_THAT(r.spectral_radius, WithinAbs(0.9, 1e-15));
    CHECK(std::abs(r.dominant[0] - 0.9) < 1e-15);
    CHECK(std::abs(r.dominant[1] - 0.5) < 1e-15);
    CHECK_FALSE(r.continuous_time.has_value());
}

TEST_CASE("spectrum of the identity", "[spectrum]")
{
    const auto r = analyze(CMatrix::Identity(3, 3), 0.37, 3);
    for (const auto& l : r.eigenvalues) CHECK(std::abs(l - 1.0) < 1e-15);
    for (const auto& c : *r.continuous_time) CHECK(std::abs(c) < 1e-13);
}

TEST_CASE("spectrum of a rotation", "[spectrum]")
{
    CMatrix K(2, 2);
    K << 0, 1, -1, 0;
    const auto r = analyze(K, 0.01, 2);
    CHECK_THAT(r.spectral_radius, WithinAbs(1.0, 1e-15));
    std::vector<Complex> ct = *r.continuous_time;
    std::sort(ct.begin(), ct.end(), [](auto a, auto b) { return a.imag() < b.imag(); });
    const double w = std::numbers::pi / 2 / 0.01;
    CHECK(std::abs(ct[0] - Complex(0, -w)) < 1e-10);
    CHECK(std::abs(ct[1] - Complex(0, w)) < 1e-10);
}

TEST_CASE("dominant eigenvalues use the fixed tie-break order", "[spectrum]")
{
    const std::vector<Complex> v{Complex(0, 1), Complex(-1, 0), Complex(0, -1), Complex(1, 0), Complex(0.5, 0)};
    const auto d = dominant_eigenvalues(v, 5);
    const std::vector<Complex> expected{Complex(1, 0), Complex(0, 1), Complex(0, -1), Complex(-1, 0), Complex(0.5, 0)};
    CHECK(d == expected);
}

TEST_CASE("near-zero eigenvalues are flagged", "[spectrum]")
{
    CMatrix K = CMatrix::Zero(2, 2);
    K(0, 0) = 0.5;
    const auto r = analyze(K, 0.1, 1);
    const auto it = std::find(r.near_zero.begin(), r.near_zero.end(), true);
    REQUIRE(it != r.near_zero.end());
    const auto idx = static_cast<std::size_t>(it - r.near_zero.begin());
    CHECK(std::isinf((*r.continuous_time)[idx].real()));
    CHECK_THROWS_AS(analyze(K, 0.1, 3), InvalidInput);
}

TEST_CASE("spectrum distance", "[spectrum]")
{
    const std::vector<Complex> a{0.9, Complex(0, 0.5)};
    const std::vector<Complex> b{Complex(0, 0.5), 0.9};
    CHECK(spectrum_distance(a, a, 2) == 0.0);
    CHECK(spectrum_distance(a, b, 2) == 0.0);
    CHECK_THAT(spectrum_distance(std::vector<Complex>{1.0}, std::vector<Complex>{0.9}, 1), WithinAbs(0.1, 1e-15));

    CounterRng rng(151);
    for (int t = 0; t < 20; ++t) {
        const CMatrix X = random_complex(rng, 5, 5), Y = random_complex(rng, 5, 5);
        const auto ra = analyze(X, std::nullopt, 4), rb = analyze(Y, std::nullopt, 4);
        CHECK_THAT(spectrum_distance(ra, rb, 4), WithinAbs(spectrum_distance(rb, ra, 4), 1e-12));
        CHECK(spectrum_distance(ra, ra, 4) == 0.0);
    }
}

TEST_CASE("eigenvalues of K^H are conjugates of those of K", "[spectrum][property]")
{
    CounterRng rng(161);
    for (int t = 0; t < 10; ++t) {
        const CMatrix K = random_complex(rng, 6, 6);
        const auto a = analyze(K, std::nullopt, 6).eigenvalues;
        const auto b = analyze(K.adjoint(), std::nullopt, 6).eigenvalues;
        for (const auto& l : a) {
            double best = 1e300;
            for (const auto& m : b) best = std::min(best, std::abs(std::conj(l) - m));
            CHECK(best < 1e-10);
        }
    }
}

TEST_CASE("real matrices have conjugation-closed spectra", "[spectrum][property]")
{
    CounterRng rng(171);
    for (int t = 0; t < 10; ++t) {
        Matrix R(7, 7);
        for (Index i = 0; i < 7; ++i) R.col(i) = rng.normal_vector(7);
        const auto e = analyze(CMatrix(R.cast<Complex>()), std::nullopt, 7).eigenvalues;
        for (const auto& l : e) {
            double best = 1e300;
            for (const auto& m : e) best = std::min(best, std::abs(std::conj(l) - m));
            CHECK(best < 1e-10);
        }
    }
}

// ---------------------------------------------------------------------------
// Predictor
// ---------------------------------------------------------------------------

TEST_CASE("identity output map on identity features", "[predictor]")
{
    const Matrix X = Matrix::Random(4, 10);
    const auto fit = fit_output_map(pairs_of(X, X), DictionarySpec::identity(4));
    CHECK((fit.C - CMatrix::Identity(4, 4)).norm() < 1e-10);
    CHECK_FALSE(fit.rank_deficient);
}

TEST_CASE("output map reproduces coordinates present in the dictionary", "[predictor]")
{
    CounterRng rng(181);
    Matrix X(2, 12);
    for (Index j = 0; j < 12; ++j) X.col(j) = rng.normal_vector(2);
    const auto spec = DictionarySpec::monomial(2, 3);
    const auto fit = fit_output_map(pairs_of(X, X), spec);
    const Matrix rec = (fit.C * evaluate_columns(spec, X)).real();
    CHECK((rec - X).norm() < 1e-10);
}

TEST_CASE("output map against the normal equations", "[predictor]")
{
    Matrix X(1, 3);
    X << 1, 2, 3;
    const auto fit = fit_output_map(pairs_of(X, X), DictionarySpec::monomial(1, 2));
    CHECK(std::abs(fit.C(0, 0)) < 1e-12);
    CHECK(std::abs(fit.C(0, 1) - 1.0) < 1e-12);
    CHECK(std::abs(fit.C(0, 2)) < 1e-12);

    // x is not in the span of [e^{-ix}, 1, e^{ix}]: C = X P^H (P P^H)^{-1}
    Matrix Y(1, 4);
    Y << 0.5, 1.0, 2.0, 3.0;
    const auto spec = DictionarySpec::fourier(-1, 1);
    const CMatrix P = evaluate_columns(spec, Y);
    const CMatrix oracle = Y.cast<Complex>() * P.adjoint() * (P * P.adjoint()).inverse();
    const auto ls = fit_output_map(pairs_of(Y, Y), spec);
    CHECK(rel(ls.C, oracle) < 1e-10);
    CHECK((ls.C * P - Y.cast<Complex>()).norm() > 1e-3);
}

TEST_CASE("rank-deficient features are flagged", "[predictor]")
{
    Matrix X(1, 1);
    X << 2.0;
    const auto fit = fit_output_map(pairs_of(X, X), DictionarySpec::monomial(1, 3));
    CHECK(fit.rank_deficient);
    CHECK(std::abs((fit.C * evaluate(DictionarySpec::monomial(1, 3), X.col(0)))(0) - 2.0) < 1e-12);
}

TEST_CASE("identity operator keeps the state", "[predictor]")
{
    KoopmanModel m;
    m.dictionary = DictionarySpec::identity(3);
    m.K = CMatrix::Identity(3, 3);
    m.C = CMatrix::Identity(3, 3);
    const Vector x0 = Vector::LinSpaced(3, 1, 3);
    const auto p = predict(m, x0, 5);
    CHECK(p.predicted.cols() == 6);
    for (Index t = 0; t < 6; ++t) CHECK(p.predicted.col(t) == x0);
    CHECK(predict(m, x0, 0).predicted.cols() == 1);
}

TEST_CASE("learned scalar decay predicts a geometric sequence", "[predictor]")
{
    Matrix X(1, 2), Y(1, 2);
    X << 1, 0.5;
    Y << 0.5, 0.25;
    const auto spec = DictionarySpec::identity(1);
    auto m = with_output_map(edmd_solve(assemble_gram(pairs_of(X, Y), spec), spec), fit_output_map(pairs_of(X, Y), spec));
    const auto p = predict(m, Vector::Ones(1), 3);
    const double expected[] = {1, 0.5, 0.25, 0.125};
    for (int t = 0; t < 4; ++t) CHECK_THAT(p.predicted(0, t), WithinAbs(expected[t], 1e-15));
}

TEST_CASE("exact linear dynamics are recovered and predicted", "[predictor][property]")
{
    CounterRng rng(191);
    for (int t = 0; t < 10; ++t) {
        Matrix M(3, 3);
        for (Index i = 0; i < 3; ++i) M.col(i) = rng.normal_vector(3);
        M *= 0.95 / std::abs(Eigen::EigenSolver<Matrix>(M).eigenvalues().cwiseAbs().maxCoeff());
        Matrix traj(3, 50);
        traj.col(0) = rng.normal_vector(3);
        for (Index j = 1; j < 50; ++j) traj.col(j) = M * traj.col(j - 1);
        const auto spec = DictionarySpec::identity(3);
        const auto pairs = SnapshotPairs::from_trajectory(traj.leftCols(5));
        auto m = with_output_map(edmd_solve(assemble_gram(pairs, spec), spec), fit_output_map(pairs, spec));
        CHECK(rel(m.K.transpose(), M.cast<Complex>()) < 1e-8);
        const auto p = predict(m, traj.col(4), 45);
        CHECK((p.predicted - traj.middleCols(4, 46)).norm() <= 1e-6 * traj.middleCols(4, 46).norm());
    }
}

TEST_CASE("overflowing predictions are truncated", "[predictor][errors]")
{
    KoopmanModel m;
    m.dictionary = DictionarySpec::identity(1);
    m.K = CMatrix::Constant(1, 1, 1e200);
    m.C = CMatrix::Identity(1, 1);
    const auto p = predict(m, Vector::Ones(1), 10);
    CHECK(p.truncated);
    CHECK(p.predicted.cols() == 2);
    CHECK(p.predicted.allFinite());
}

TEST_CASE("prediction requires matching dimensions and an output map", "[predictor][errors]")
{
    KoopmanModel m;
    m.dictionary = DictionarySpec::identity(2);
    m.K = CMatrix::Identity(2, 2);
    CHECK_THROWS_AS(predict(m, Vector::Zero(2), 3), InvalidInput);
    m.C = CMatrix::Identity(2, 2);
    CHECK_THROWS_AS(predict(m, Vector::Zero(3), 3), InvalidInput);
}

TEST_CASE("prediction error tables", "[predictor]")
{
    PredictionResult r;
    r.predicted = Matrix::Random(3, 4);
    auto same = evaluate_prediction(r, r.predicted);
    CHECK(same.mse_per_state->cwiseAbs().maxCoeff() == 0.0);
    auto off = evaluate_prediction(r, (r.predicted.array() - 1.0).matrix());
    CHECK((off.mse_per_state->array() - 1.0).abs().maxCoeff() < 1e-15);
    CHECK((off.per_state_error->array() - 1.0).abs().maxCoeff() < 1e-15);

    PredictionResult two;
    two.predicted = Matrix::Zero(2, 2);
    Matrix ref(2, 2);
    ref << 1, 2, 3, 4;
    const auto e = evaluate_prediction(two, ref);
    CHECK_THAT((*e.mse_per_state)[0], WithinAbs(2.5, 1e-15));
    CHECK_THAT((*e.mse_per_state)[1], WithinAbs(12.5, 1e-15));
    CHECK_THROWS_AS(evaluate_prediction(two, Matrix::Zero(2, 3)), InvalidInput);
}

TEST_CASE("mse ignores the order of time columns", "[predictor][property]")
{
    PredictionResult r;
    r.predicted = Matrix::Random(3, 6);
    const Matrix ref = Matrix::Random(3, 6);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
    perm.indices() << 3, 0, 5, 1, 4, 2;
    PredictionResult s;
    s.predicted = r.predicted * perm;
    const auto a = evaluate_prediction(r, ref);
    const auto b = evaluate_prediction(s, ref * perm);
    CHECK((*a.mse_per_state - *b.mse_per_state).norm() < 1e-15);
}
