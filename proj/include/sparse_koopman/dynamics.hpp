#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include "core.hpp"
#include "random.hpp"

namespace sparse_koopman::dynamics {

// ---------------------------------------------------------------------------
// Ring of coupled damped linear oscillators
//   theta_k'' = -(L theta)_k - d theta_k'
// State layout: [theta_1..theta_N, theta_1'..theta_N'].
// ---------------------------------------------------------------------------

struct OscillatorRingConfig {
    int n_oscillators = 20;
    double damping = 0.4;
    double dt = 0.01;
    int n_steps = 100;
    Vector initial_state;
};

/// Unweighted cycle-graph Laplacian: degree 2 on the diagonal, -1 to each of
/// the two ring neighbours (for N = 2 both neighbours coincide).
inline Matrix ring_laplacian(int n)
{
    detail::require(n >= 2, "ring_laplacian: need at least 2 oscillators");
    Matrix L = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        L(i, i) += 2.0;
        L(i, (i + 1) % n) -= 1.0;
        L(i, (i + n - 1) % n) -= 1.0;
    }
    return L;
}

/// Continuous-time generator [[0, I], [-L, -d I]].
inline Matrix oscillator_generator(int n, double damping)
{
    Matrix Ac = Matrix::Zero(2 * n, 2 * n);
    Ac.topRightCorner(n, n).setIdentity();
    Ac.bottomLeftCorner(n, n) = -ring_laplacian(n);
    Ac.bottomRightCorner(n, n) = -damping * Matrix::Identity(n, n);
    return Ac;
}

inline void validate(const OscillatorRingConfig& cfg)
{
    detail::require(cfg.n_oscillators >= 2, "oscillator_ring: n_oscillators must be >= 2");
    detail::require(cfg.damping >= 0.0 && std::isfinite(cfg.damping), "oscillator_ring: damping must be nonnegative");
    detail::require(cfg.dt > 0.0 && std::isfinite(cfg.dt), "oscillator_ring: dt must be positive");
    detail::require(cfg.n_steps >= 1, "oscillator_ring: n_steps must be positive");
    detail::require(cfg.initial_state.size() == 2 * cfg.n_oscillators,
                    "oscillator_ring: initial_state must have length 2 * n_oscillators");
    detail::require(cfg.initial_state.allFinite(), "oscillator_ring: initial_state contains non-finite values");
}

/// Exact one-step map exp(Ac * dt).
inline Matrix oscillator_step_matrix(const OscillatorRingConfig& cfg)
{
    const Matrix Ac = oscillator_generator(cfg.n_oscillators, cfg.damping);
    return (Ac * cfg.dt).exp();
}

/// Deterministic default initial condition: standard-normal positions drawn
/// from the counter generator (seed 0, stream 1), zero velocities.
inline Vector default_oscillator_initial_state(int n)
{
    CounterRng rng(0, 1);
    Vector x = Vector::Zero(2 * n);
    for (int i = 0; i < n; ++i) x[i] = rng.normal();
    return x;
}

inline Matrix simulate_oscillator_ring(const OscillatorRingConfig& cfg)
{
    validate(cfg);
    const Matrix step = oscillator_step_matrix(cfg);
    Matrix traj(2 * cfg.n_oscillators, cfg.n_steps + 1);
    traj.col(0) = cfg.initial_state;
    for (int t = 0; t < cfg.n_steps; ++t) traj.col(t + 1).noalias() = step * traj.col(t);
    return traj;
}

/// Kinetic plus potential energy 0.5 |theta'|^2 + 0.5 theta^T L theta.
inline double oscillator_energy(const Vector& state, const Matrix& laplacian)
{
    const Index n = laplacian.rows();
    const auto pos = state.head(n);
    const auto vel = state.tail(n);
    return 0.5 * vel.squaredNorm() + 0.5 * pos.dot(laplacian * pos);
}

/// Eigenvalues of exp(Ac * dt), obtained from the Laplacian spectrum: each
/// Laplacian eigenvalue l gives s^2 + d s + l = 0 and the discrete
/// eigenvalues exp(s * dt).
inline std::vector<Complex> exact_oscillator_spectrum(const OscillatorRingConfig& cfg)
{
    detail::require(cfg.n_oscillators >= 2, "oscillator_ring: n_oscillators must be >= 2");
    detail::require(cfg.dt > 0.0, "oscillator_ring: dt must be positive");
    detail::require(cfg.damping >= 0.0, "oscillator_ring: damping must be nonnegative");
    Eigen::SelfAdjointEigenSolver<Matrix> es(ring_laplacian(cfg.n_oscillators), Eigen::EigenvaluesOnly);
    std::vector<Complex> out;
    out.reserve(2 * cfg.n_oscillators);
    const double d = cfg.damping;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double l = std::max(0.0, es.eigenvalues()[i]); // L is PSD
        const Complex disc = std::sqrt(Complex(d * d - 4.0 * l, 0.0));
        for (const Complex s : {(-d + disc) / 2.0, (-d - disc) / 2.0}) out.push_back(std::exp(s * cfg.dt));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stuart-Landau oscillator in polar form, explicit update
//   r' = r + (mu r - r^3) dt,  theta' = theta + (gamma - beta r^2) dt
// ---------------------------------------------------------------------------

struct StuartLandauConfig {
    double mu = 1.0;
    double gamma = 1.0;
    double beta = 0.0;
    double dt = 0.01;
    int n_steps = 150;
    double r0 = 1.0;
    double theta0 = std::numbers::pi;
};

inline void validate(const StuartLandauConfig& cfg)
{
    detail::require(cfg.mu > 0.0, "stuart_landau: mu must be positive");
    detail::require(cfg.dt > 0.0 && std::isfinite(cfg.dt), "stuart_landau: dt must be positive");
    detail::require(cfg.n_steps >= 1, "stuart_landau: n_steps must be positive");
    detail::require(std::isfinite(cfg.r0) && std::isfinite(cfg.theta0), "stuart_landau: non-finite initial condition");
}

/// Rows: r, theta. Column t is the state after t updates.
inline Matrix simulate_stuart_landau(const StuartLandauConfig& cfg)
{
    validate(cfg);
    Matrix traj(2, cfg.n_steps + 1);
    double r = cfg.r0;
    double th = cfg.theta0;
    traj(0, 0) = r;
    traj(1, 0) = th;
    for (int t = 0; t < cfg.n_steps; ++t) {
        const double r2 = r * r;
        const double r_next = r + (cfg.mu * r - r2 * r) * cfg.dt;
        const double th_next = th + (cfg.gamma - cfg.beta * r2) * cfg.dt;
        if (!std::isfinite(r_next) || !std::isfinite(th_next))
            throw NumericalFailure("stuart_landau: simulation diverged at step " + std::to_string(t + 1));
        r = r_next;
        th = th_next;
        traj(0, t + 1) = r;
        traj(1, t + 1) = th;
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Viscous Burgers equation u_t + u u_x = k u_xx on [x0, x1] with Dirichlet
// boundaries. Trapezoidal (Crank-Nicolson) time stepping with both the
// diffusion and the advection term implicit, solved by Newton's method.
// Space: fourth-order central differences; the two ghost points beyond each
// wall are odd reflections about the boundary value, consistent with
// u_xx = 0 at a wall where u is held fixed.
// ---------------------------------------------------------------------------

struct BurgersConfig {
    double viscosity = 0.01;
    double dx = 0.01;
    double dt = 0.02;
    std::pair<double, double> x_range{0.0, 1.0};
    std::pair<double, double> t_range{0.0, 2.0};
    // Either a named profile ("sine": sin(2 pi x), "zero") or sampled values
    // on the state grid (one value per state variable).
    std::variant<std::string, Vector> initial_profile = std::string("sine");
    std::pair<double, double> boundary{0.0, 0.0};
    double newton_tol = 1e-10;
    int newton_max_iter = 50;
};

namespace detail_burgers {

inline int checked_count(double width, double step, const char* what)
{
    const double ratio = width / step;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) * step > 1e-12)
        throw InvalidInput(std::string("burgers: ") + what + " step does not divide the range");
    return static_cast<int>(rounded);
}

// An extended-grid value expressed as c + sum coeff_i * u_i over the
// interior unknowns u_1..u_{n-1} (0-based index i = j - 1).
struct Affine {
    double c = 0.0;
    std::vector<std::pair<Index, double>> terms;
};

inline Affine grid_value(int e, int n, double left, double right)
{
    if (e == 0) return {left, {}};
    if (e == n) return {right, {}};
    if (e > 0 && e < n) return {0.0, {{e - 1, 1.0}}};
    // Odd reflection about the wall value.
    const bool below = e < 0;
    const double wall = below ? left : right;
    Affine inner = grid_value(below ? -e : 2 * n - e, n, left, right);
    Affine out{2.0 * wall - inner.c, {}};
    for (auto [i, w] : inner.terms) out.terms.emplace_back(i, -w);
    return out;
}

// Linear operator D u + b for a 5-point stencil with weights w[-2..2].
inline std::pair<Matrix, Vector> stencil_operator(int n, double left, double right, const double (&w)[5])
{
    const int m = n - 1;
    Matrix D = Matrix::Zero(m, m);
    Vector b = Vector::Zero(m);
    for (int j = 1; j <= m; ++j) {
        for (int o = -2; o <= 2; ++o) {
            const double weight = w[o + 2];
            const Affine a = grid_value(j + o, n, left, right);
            b[j - 1] += weight * a.c;
            for (auto [i, coeff] : a.terms) D(j - 1, i) += weight * coeff;
        }
    }
    return {D, b};
}

} // namespace detail_burgers

inline void validate(const BurgersConfig& cfg)
{
    detail::require(cfg.viscosity > 0.0, "burgers: viscosity must be positive");
    detail::require(cfg.dx > 0.0 && cfg.dt > 0.0, "burgers: dx and dt must be positive");
    detail::require(cfg.x_range.second > cfg.x_range.first, "burgers: empty x_range");
    detail::require(cfg.t_range.second > cfg.t_range.first, "burgers: empty t_range");
    const int n = detail_burgers::checked_count(cfg.x_range.second - cfg.x_range.first, cfg.dx, "space");
    detail_burgers::checked_count(cfg.t_range.second - cfg.t_range.first, cfg.dt, "time");
    detail::require(n >= 2, "burgers: need at least one interior grid point");
    if (const auto* v = std::get_if<Vector>(&cfg.initial_profile))
        detail::require(v->size() == n, "burgers: sampled initial profile must have one value per state variable");
    else {
        const auto& tag = std::get<std::string>(cfg.initial_profile);
        detail::require(tag == "sine" || tag == "zero", "burgers: unknown initial profile '" + tag + "'");
    }
}

/// State grid: x0 + dx, ..., x1 (left wall excluded, right wall included).
inline Vector burgers_state_grid(const BurgersConfig& cfg)
{
    validate(cfg);
    const int n = detail_burgers::checked_count(cfg.x_range.second - cfg.x_range.first, cfg.dx, "space");
    Vector x(n);
    for (int j = 1; j <= n; ++j) x[j - 1] = cfg.x_range.first + j * cfg.dx;
    x[n - 1] = cfg.x_range.second;
    return x;
}

/// Flow field: one row per state variable (interior points plus the right
/// wall), one column per time level.
inline Matrix simulate_burgers(const BurgersConfig& cfg)
{
    validate(cfg);
    const int n = detail_burgers::checked_count(cfg.x_range.second - cfg.x_range.first, cfg.dx, "space");
    const int nt = detail_burgers::checked_count(cfg.t_range.second - cfg.t_range.first, cfg.dt, "time");
    const int m = n - 1;
    const auto [left, right] = cfg.boundary;
    const Vector grid = burgers_state_grid(cfg);

    Vector u(m);
    if (const auto* v = std::get_if<Vector>(&cfg.initial_profile)) {
        u = v->head(m);
    } else if (std::get<std::string>(cfg.initial_profile) == "sine") {
        for (int j = 0; j < m; ++j) u[j] = std::sin(2.0 * std::numbers::pi * grid[j]);
    } else {
        u.setZero();
    }

    const double h = cfg.dx;
    const double w1[5] = {1.0 / (12 * h), -8.0 / (12 * h), 0.0, 8.0 / (12 * h), -1.0 / (12 * h)};
    const double w2[5] = {-1.0 / (12 * h * h), 16.0 / (12 * h * h), -30.0 / (12 * h * h), 16.0 / (12 * h * h),
                          -1.0 / (12 * h * h)};
    const auto [D1, b1] = detail_burgers::stencil_operator(n, left, right, w1);
    const auto [D2, b2] = detail_burgers::stencil_operator(n, left, right, w2);
    const double k = cfg.viscosity;

    auto rhs = [&](const Vector& v) -> Vector {
        return (-(v.array() * (D1 * v + b1).array())).matrix() + k * (D2 * v + b2);
    };

    Matrix field(n, nt + 1);
    field.col(0).head(m) = u;
    field(n - 1, 0) = right;

    const Matrix I = Matrix::Identity(m, m);
    for (int step = 1; step <= nt; ++step) {
        const Vector f_old = rhs(u);
        Vector v = u;
        bool converged = false;
        for (int it = 0; it <= cfg.newton_max_iter; ++it) {
            const Vector residual = v - u - 0.5 * cfg.dt * (rhs(v) + f_old);
            if (!residual.allFinite()) break;
            if (residual.lpNorm<Eigen::Infinity>() < cfg.newton_tol) {
                converged = true;
                break;
            }
            if (it == cfg.newton_max_iter) break;
            const Vector ux = D1 * v + b1;
            Matrix jac = -D1;
            jac.array().colwise() *= v.array();
            jac.diagonal() -= ux;
            jac += k * D2;
            const Matrix system = I - 0.5 * cfg.dt * jac;
            v -= system.partialPivLu().solve(residual);
        }
        if (!converged)
            throw NumericalFailure("burgers: Newton iteration did not converge at step " + std::to_string(step));
        u = v;
        field.col(step).head(m) = u;
        field(n - 1, step) = right;
    }
    return field;
}

} // namespace sparse_koopman::dynamics
