#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "csv.hpp"
#include "dynamics.hpp"
#include "enrichment.hpp"
#include "model_io.hpp"
#include "predictor.hpp"
#include "solver.hpp"
#include "spectrum.hpp"

namespace sparse_koopman::experiments {

using config::ExperimentConfig;
using config::SystemKind;
using nlohmann::json;
namespace fs = std::filesystem;

inline Matrix simulate(const ExperimentConfig& c)
{
    switch (c.system) {
    case SystemKind::oscillator_ring: return dynamics::simulate_oscillator_ring(config::resolved_oscillator(c));
    case SystemKind::stuart_landau: return dynamics::simulate_stuart_landau(c.stuart_landau);
    case SystemKind::burgers: return dynamics::simulate_burgers(c.burgers);
    }
    throw InvalidInput("simulate: unknown system");
}

/// Sum over observed pairs of || y - Re(C K^T Psi(x)) ||^2.
inline double one_step_error(const KoopmanModel& model, const SnapshotPairs& observed)
{
    detail::require(model.C.has_value(), "one_step_error: model has no output map");
    const CMatrix Z = evaluate_columns(model.dictionary, observed.X_p);
    const Matrix Y = (*model.C * (model.K.transpose() * Z)).real();
    const double e = (observed.X_f - Y).squaredNorm();
    return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
}

inline double spectral_radius(const CMatrix& K)
{
    Eigen::ComplexEigenSolver<CMatrix> es(K, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct LambdaCandidate {
    double lambda = 0.0;
    double selection_error = 0.0;
    KoopmanModel model;
};

struct FitResult {
    KoopmanModel plain;
    KoopmanModel robust;
    SnapshotPairs observed;
    SnapshotPairs enriched;
    GramPair plain_gram;
    GramPair robust_gram;
    double radius_x = 0.0;
    double radius_y = 0.0;
    std::vector<LambdaCandidate> candidates;
    std::size_t selected = 0;
};

/// Plain EDMD on the observed pairs of `train`, and the robust fit on the
/// trajectory enriched with `artificial_points` perturbed snapshots. With a
/// lambda sweep the candidate with the smallest one-step error on the
/// observed pairs is kept (first on ties).
inline FitResult fit(const Matrix& train, const ExperimentConfig& c, Index artificial_points)
{
    FitResult out;
    out.observed = SnapshotPairs::from_trajectory(train);
    out.plain_gram = assemble_gram(out.observed, c.dictionary, c.convention);
    out.plain = with_output_map(edmd_solve(out.plain_gram, c.dictionary),
                                fit_output_map(out.observed, c.dictionary, false));

    out.radius_x = c.enrichment.radius_x.value_or(default_radius(train, c.enrichment.radius_scale));
    out.radius_y = c.enrichment.radius_y.value_or(out.radius_x);
    EnrichmentConfig ecfg{out.radius_x, out.radius_y, c.enrichment.points_per_sample, c.seed};
    out.enriched = enrich_trajectory_points(train, artificial_points, ecfg);
    out.robust_gram = assemble_gram(out.enriched, c.dictionary, c.convention);
    const OutputMapFit cmap = fit_output_map(out.enriched, c.dictionary, true);
    const EnrichmentRecord record{c.seed, out.radius_x, out.radius_y, artificial_points, CounterRng::algorithm};

    const std::vector<double> grid = c.lambda ? std::vector<double>{*c.lambda} : c.lambda_grid;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double lam = grid[i];
        KoopmanModel m = lam > 0.0 ? robust_solve(out.robust_gram, c.dictionary, lam) : edmd_solve(out.robust_gram, c.dictionary);
        m = with_output_map(std::move(m), cmap);
        m.enrichment = record;
        LambdaCandidate cand{lam, one_step_error(m, out.observed), std::move(m)};
        if (cand.selection_error < best) {
            best = cand.selection_error;
            out.selected = i;
        }
        out.candidates.push_back(std::move(cand));
    }
    out.robust = out.candidates[out.selected].model;
    return out;
}

struct SolverOutcome {
    SpectrumReport spectrum;
    PredictionResult prediction;
};

inline SolverOutcome evaluate_model(const KoopmanModel& model, const Matrix& traj, int train_steps, int horizon,
                                    double dt, Index top)
{
    SolverOutcome o;
    o.spectrum = analyze(model, dt, top);
    const Matrix reference = traj.middleCols(train_steps - 1, horizon + 1);
    PredictionResult p = predict(model, traj.col(train_steps - 1), horizon);
    if (p.truncated) {
        // keep the error tables full-size: overflowed steps count as infinite error
        Matrix full = Matrix::Constant(p.predicted.rows(), horizon + 1, std::numeric_limits<double>::infinity());
        full.leftCols(p.predicted.cols()) = p.predicted;
        p.predicted = full;
    }
    o.prediction = evaluate_prediction(std::move(p), reference);
    return o;
}

struct RunResult {
    int train_steps = 0;
    Index artificial_points = 0;
    FitResult fit;
    SolverOutcome plain;
    SolverOutcome robust;
    std::optional<SpectrumReport> reference;
    std::optional<double> distance_plain;
    std::optional<double> distance_robust;
    double fit_seconds = 0.0;
};

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline RunResult run(const ExperimentConfig& c, const Matrix& traj, int train_steps, Index artificial_points)
{
    RunResult r;
    r.train_steps = train_steps;
    r.artificial_points = artificial_points;
    const auto t0 = std::chrono::steady_clock::now();
    r.fit = fit(traj.leftCols(train_steps), c, artificial_points);
    r.fit_seconds = seconds_since(t0);
    const double dt = config::time_step(c);
    r.plain = evaluate_model(r.fit.plain, traj, train_steps, c.predict_horizon, dt, c.top_modes);
    r.robust = evaluate_model(r.fit.robust, traj, train_steps, c.predict_horizon, dt, c.top_modes);
    if (c.system == SystemKind::oscillator_ring) {
        r.reference = analyze_eigenvalues(dynamics::exact_oscillator_spectrum(config::resolved_oscillator(c)), dt,
                                          c.top_modes);
        r.distance_plain = spectrum_distance(r.plain.spectrum, *r.reference, c.top_modes);
        r.distance_robust = spectrum_distance(r.robust.spectrum, *r.reference, c.top_modes);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Acceptance inequalities
// ---------------------------------------------------------------------------

struct Check {
    std::string id;
    std::string description;
    bool pass = false;
    json measured;
};

inline json to_json(const Check& c)
{
    return {{"id", c.id}, {"description", c.description}, {"pass", c.pass}, {"measured", c.measured}};
}

inline std::vector<Check> oscillator_checks(const RunResult& r, const ExperimentConfig& c)
{
    std::vector<Check> out;
    const double rp = r.plain.spectrum.spectral_radius;
    const double rr = r.robust.spectrum.spectral_radius;
    out.push_back({"4a", "plain DMD spectral radius > 1", rp > 1.0, {{"plain_spectral_radius", rp}}});
    out.push_back({"4b", "robust spectral radius <= 1.001", rr <= 1.001, {{"robust_spectral_radius", rr}}});
    out.push_back({"4c", "robust spectrum distance to the exact spectrum < plain",
                   *r.distance_robust < *r.distance_plain,
                   {{"top_modes", c.top_modes}, {"plain", *r.distance_plain}, {"robust", *r.distance_robust}}});
    bool better = !c.error_states.empty();
    json per = json::array();
    for (int s : c.error_states) {
        const double p = (*r.plain.prediction.mse_per_state)[s - 1];
        const double q = (*r.robust.prediction.mse_per_state)[s - 1];
        better = better && q < p;
        per.push_back({{"state", s}, {"plain", p}, {"robust", q}});
    }
    out.push_back({"4d", "robust prediction MSE < plain for the selected oscillators", better, per});
    return out;
}

inline std::vector<Check> stuart_landau_checks(const RunResult& r, const ExperimentConfig& c)
{
    std::vector<Check> out;
    const double rp = r.plain.spectrum.spectral_radius;
    out.push_back({"5a", "plain EDMD has an eigenvalue with modulus > 1", rp > 1.0, {{"plain_spectral_radius", rp}}});
    double worst = 0.0;
    json mods = json::array();
    for (const auto& l : r.robust.spectrum.dominant) {
        worst = std::max(worst, std::abs(std::abs(l) - 1.0));
        mods.push_back(std::abs(l));
    }
    out.push_back({"5b", "robust dominant eigenvalues within 0.05 of the unit circle", worst <= 0.05,
                   {{"top_modes", c.top_modes}, {"moduli", mods}, {"max_deviation", worst}}});
    const Vector& mp = *r.plain.prediction.mse_per_state;
    const Vector& mr = *r.robust.prediction.mse_per_state;
    out.push_back({"5c", "robust prediction MSE < plain for r and theta", mr[0] < mp[0] && mr[1] < mp[1],
                   {{"plain", {mp[0], mp[1]}}, {"robust", {mr[0], mr[1]}}}});
    return out;
}

/// Fraction of states whose robust prediction MSE is strictly below plain.
inline double fraction_improved(const RunResult& r)
{
    const Vector& mp = *r.plain.prediction.mse_per_state;
    const Vector& mr = *r.robust.prediction.mse_per_state;
    Index k = 0;
    for (Index i = 0; i < mp.size(); ++i) k += mr[i] < mp[i];
    return static_cast<double>(k) / static_cast<double>(mp.size());
}

inline constexpr double burgers_required_fraction = 0.8;

inline std::vector<Check> checks_for(const RunResult& r, const ExperimentConfig& c)
{
    switch (c.system) {
    case SystemKind::oscillator_ring: return oscillator_checks(r, c);
    case SystemKind::stuart_landau: return stuart_landau_checks(r, c);
    case SystemKind::burgers: {
        const double f = fraction_improved(r);
        return {{"6", "robust MSE < plain for >= 80% of states", f >= burgers_required_fraction,
                 {{"train_steps", r.train_steps}, {"fraction", f}}}};
    }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

inline void write_json(const fs::path& path, const json& j) { csv::write_file(path.string(), j.dump(2) + "\n"); }

inline std::string lambda_sweep_csv(const FitResult& f)
{
    std::ostringstream os;
    csv::Writer w(os);
    w.header({"lambda", "selection_error", "objective", "spectral_radius", "iterations", "warm_start", "selected"});
    for (std::size_t i = 0; i < f.candidates.size(); ++i) {
        const auto& c = f.candidates[i];
        w.row_strings({csv::format_double(c.lambda), csv::format_double(c.selection_error),
                       csv::format_double(c.model.diagnostics.objective), csv::format_double(spectral_radius(c.model.K)),
                       std::to_string(c.model.diagnostics.iterations),
                       c.model.diagnostics.warm_start.empty() ? "none" : c.model.diagnostics.warm_start,
                       i == f.selected ? "1" : "0"});
    }
    return os.str();
}

inline std::string mse_csv(const RunResult& r)
{
    std::ostringstream os;
    csv::Writer w(os);
    w.header({"state", "mse_plain", "mse_robust"});
    const Vector& mp = *r.plain.prediction.mse_per_state;
    const Vector& mr = *r.robust.prediction.mse_per_state;
    for (Index i = 0; i < mp.size(); ++i)
        w.row_strings({std::to_string(i + 1), csv::format_double(mp[i]), csv::format_double(mr[i])});
    return os.str();
}

inline std::string sweep_filename(std::size_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "lambda_%02zu.json", i);
    return buf;
}

/// Models, enriched data and the lambda table of one fit.
inline void write_fit(const FitResult& f, const fs::path& dir)
{
    fs::create_directories(dir / "models" / "sweep");
    io::save_model(f.plain, (dir / "models" / "plain.json").string());
    io::save_model(f.robust, (dir / "models" / "robust.json").string());
    for (std::size_t i = 0; i < f.candidates.size(); ++i)
        io::save_model(f.candidates[i].model, (dir / "models" / "sweep" / sweep_filename(i)).string());
    csv::write_file((dir / "enriched.csv").string(), csv::enriched_csv(f.enriched));
    csv::write_file((dir / "lambda_sweep.csv").string(), lambda_sweep_csv(f));
}

inline json gram_diagnostics(const FitResult& f)
{
    auto one = [](const GramPair& g, const KoopmanModel& m) {
        Eigen::BDCSVD<CMatrix> svd(g.G);
        const auto& s = svd.singularValues();
        return json{{"dim", g.dim()},
                    {"sample_count", g.sample_count},
                    {"convention", to_string(g.convention)},
                    {"sigma_max", s[0]},
                    {"sigma_min", s[s.size() - 1]},
                    {"rank", linalg::numerical_rank(g.G, linalg::default_pinv_rtol(g.dim()))},
                    {"lambda", m.lambda},
                    {"objective", m.diagnostics.objective},
                    {"iterations", m.diagnostics.iterations},
                    {"converged", m.diagnostics.converged},
                    {"warm_start", m.diagnostics.warm_start}};
    };
    return {{"plain", one(f.plain_gram, f.plain)},
            {"robust", one(f.robust_gram, f.robust)},
            {"radius_x", f.radius_x},
            {"radius_y", f.radius_y},
            {"observed_pairs", f.observed.size()},
            {"enriched_pairs", f.enriched.size()}};
}

inline void write_run(const RunResult& r, const fs::path& dir)
{
    write_fit(r.fit, dir);
    write_json(dir / "gram_diagnostics.json", gram_diagnostics(r.fit));
    csv::write_file((dir / "spectrum_plain.csv").string(), csv::spectrum_csv(r.plain.spectrum));
    csv::write_file((dir / "spectrum_robust.csv").string(), csv::spectrum_csv(r.robust.spectrum));
    if (r.reference) csv::write_file((dir / "spectrum_reference.csv").string(), csv::spectrum_csv(*r.reference));
    csv::write_file((dir / "prediction_plain.csv").string(), csv::prediction_csv(r.plain.prediction));
    csv::write_file((dir / "prediction_robust.csv").string(), csv::prediction_csv(r.robust.prediction));
    csv::write_file((dir / "mse.csv").string(), mse_csv(r));
}

struct BenchmarkOutcome {
    json summary;
    bool all_pass = false;
};

inline json run_summary(const RunResult& r)
{
    json j = {{"train_steps", r.train_steps},
              {"artificial_points", r.artificial_points},
              {"selected_lambda", r.fit.robust.lambda},
              {"radius_x", r.fit.radius_x},
              {"radius_y", r.fit.radius_y},
              {"plain_spectral_radius", r.plain.spectrum.spectral_radius},
              {"robust_spectral_radius", r.robust.spectrum.spectral_radius},
              {"plain_mean_mse", r.plain.prediction.mse_per_state->mean()},
              {"robust_mean_mse", r.robust.prediction.mse_per_state->mean()},
              {"fit_seconds", r.fit_seconds}};
    if (r.distance_plain) {
        j["plain_spectrum_distance"] = *r.distance_plain;
        j["robust_spectrum_distance"] = *r.distance_robust;
    }
    return j;
}

/// Full pipeline for one experiment: simulation, both fits, predictions,
/// spectra, the acceptance inequalities and all report files under `dir`.
inline BenchmarkOutcome run_benchmark(const ExperimentConfig& c, const fs::path& dir)
{
    const auto t_start = std::chrono::steady_clock::now();
    fs::create_directories(dir);
    write_json(dir / "config.json", config::to_json(c));
    json timings;

    auto t0 = std::chrono::steady_clock::now();
    const Matrix traj = simulate(c);
    timings["simulate"] = seconds_since(t0);
    const double dt = config::time_step(c);
    csv::write_file((dir / "trajectory.csv").string(), csv::trajectory_csv(traj, dt));

    t0 = std::chrono::steady_clock::now();
    const RunResult main = run(c, traj, c.train_steps, c.artificial_points);
    timings["main_run"] = seconds_since(t0);
    write_run(main, dir);

    json criteria = json::array();
    bool all_pass = true;
    json extra;

    if (c.system == SystemKind::burgers) {
        const std::vector<int>& sizes = c.sweep_train_steps;
        const Index n = traj.rows();
        Matrix mse_plain(static_cast<Index>(sizes.size()), n);
        Matrix mse_robust(static_cast<Index>(sizes.size()), n);
        std::ostringstream table;
        csv::Writer tw(table);
        tw.header({"train_steps", "artificial_points", "lambda", "fraction_improved", "mean_mse_plain",
                   "mean_mse_robust", "pass"});
        json per_size = json::array();
        bool every = !sizes.empty();
        t0 = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            const int t = sizes[i];
            const Index artificial = c.sweep_total_points - t;
            const RunResult r = run(c, traj, t, artificial);
            mse_plain.row(static_cast<Index>(i)) = r.plain.prediction.mse_per_state->transpose();
            mse_robust.row(static_cast<Index>(i)) = r.robust.prediction.mse_per_state->transpose();
            const double f = fraction_improved(r);
            const bool ok = f >= burgers_required_fraction;
            every = every && ok;
            tw.row_strings({std::to_string(t), std::to_string(artificial), csv::format_double(r.fit.robust.lambda),
                            csv::format_double(f), csv::format_double(r.plain.prediction.mse_per_state->mean()),
                            csv::format_double(r.robust.prediction.mse_per_state->mean()), ok ? "1" : "0"});
            per_size.push_back({{"train_steps", t}, {"artificial_points", artificial}, {"fraction", f}, {"pass", ok}});
        }
        timings["sweep"] = seconds_since(t0);
        for (const auto& [name, m] : {std::pair{"plain", &mse_plain}, std::pair{"robust", &mse_robust}}) {
            std::ostringstream os;
            csv::Writer w(os);
            std::vector<std::string> head{"train_steps"};
            for (auto& s : csv::numbered("x", n)) head.push_back(s);
            w.header(head);
            for (Index i = 0; i < m->rows(); ++i) {
                std::vector<std::string> row{std::to_string(sizes[static_cast<std::size_t>(i)])};
                for (Index k = 0; k < n; ++k) row.push_back(csv::format_double((*m)(i, k)));
                w.row_strings(row);
            }
            csv::write_file((dir / (std::string("mse_sweep_") + name + ".csv")).string(), os.str());
        }
        csv::write_file((dir / "sweep_summary.csv").string(), table.str());
        const double fmain = fraction_improved(main);
        criteria.push_back(to_json(Check{"6", "robust MSE < plain for >= 80% of states at every sweep size", every,
                                         {{"required_fraction", burgers_required_fraction},
                                          {"sweep", per_size},
                                          {"main_run_fraction", fmain}}}));
        all_pass = every;
    } else {
        // Seed robustness: the default seed must pass and at least 80% of
        // the consecutive seeds starting from it.
        std::vector<std::vector<Check>> per_seed;
        std::ostringstream table;
        csv::Writer tw(table);
        std::vector<std::string> head{"seed", "lambda"};
        for (const auto& chk : checks_for(main, c)) head.push_back(chk.id);
        tw.header(head);
        t0 = std::chrono::steady_clock::now();
        for (int s = 0; s < c.robustness_seeds; ++s) {
            ExperimentConfig cs = c;
            cs.seed = c.seed + static_cast<std::uint64_t>(s);
            const RunResult r = s == 0 ? main : run(cs, traj, c.train_steps, c.artificial_points);
            auto chks = checks_for(r, cs);
            std::vector<std::string> row{std::to_string(cs.seed), csv::format_double(r.fit.robust.lambda)};
            for (const auto& chk : chks) row.emplace_back(chk.pass ? "1" : "0");
            tw.row_strings(row);
            per_seed.push_back(std::move(chks));
        }
        timings["seed_robustness"] = seconds_since(t0);
        csv::write_file((dir / "seed_robustness.csv").string(), table.str());
        const int needed = static_cast<int>(std::ceil(0.8 * c.robustness_seeds - 1e-12));
        for (std::size_t k = 0; k < per_seed[0].size(); ++k) {
            Check chk = per_seed[0][k];
            int passes = 0;
            for (const auto& v : per_seed) passes += v[k].pass;
            const bool default_pass = chk.pass;
            chk.pass = default_pass && passes >= needed;
            json j = to_json(chk);
            j["default_seed_pass"] = default_pass;
            j["seeds_passed"] = passes;
            j["seeds_required"] = needed;
            j["seeds_checked"] = c.robustness_seeds;
            criteria.push_back(j);
            all_pass = all_pass && chk.pass;
        }
    }

    timings["total"] = seconds_since(t_start);
    json summary = {{"experiment", config::to_string(c.system)},
                    {"seed", c.seed},
                    {"config", config::to_json(c)},
                    {"main_run", run_summary(main)},
                    {"criteria", criteria},
                    {"all_pass", all_pass},
                    {"timings_seconds", timings}};
    write_json(dir / "summary.json", summary);
    return {summary, all_pass};
}

} // namespace sparse_koopman::experiments
