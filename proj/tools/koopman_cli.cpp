// koopman: simulate the reference systems, fit plain and robust Koopman
// models, predict, inspect spectra and run the benchmark experiments.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <sparse_koopman/sparse_koopman.hpp>

namespace sk = sparse_koopman;
namespace fs = std::filesystem;
using sk::config::ExperimentConfig;
using sk::Index;
using sk::Matrix;
using sk::Vector;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_config = 2;

struct Common {
    std::string config_path;
    std::string system;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool with_system)
{
    cmd->add_option("--config", c.config_path, "Experiment configuration (JSON)");
    if (with_system)
        cmd->add_option("--system", c.system, "Use the built-in defaults of a system when no config is given")
            ->check(CLI::IsMember(sk::config::system_names()));
    cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
    cmd->add_option("--seed", c.seed, "Override the configured seed");
}

ExperimentConfig resolve_config(const Common& c)
{
    ExperimentConfig cfg;
    if (!c.config_path.empty()) {
        cfg = sk::config::load(c.config_path);
    } else if (!c.system.empty()) {
        cfg = sk::config::default_config(*sk::config::system_from_string(c.system));
    } else {
        throw sk::ConfigError("either --config or --system is required");
    }
    if (c.seed) cfg.seed = *c.seed;
    return cfg;
}

Vector parse_vector(const std::string& text)
{
    std::vector<double> values;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) values.push_back(sk::csv::parse_double(cell));
    return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

int cmd_simulate(const Common& c)
{
    const ExperimentConfig cfg = resolve_config(c);
    fs::create_directories(c.out);
    const Matrix traj = sk::experiments::simulate(cfg);
    const fs::path path = fs::path(c.out) / "trajectory.csv";
    sk::csv::write_file(path.string(), sk::csv::trajectory_csv(traj, sk::config::time_step(cfg)));
    std::cout << "wrote " << path.string() << " (" << traj.cols() << " snapshots, " << traj.rows() << " states)\n";
    return exit_ok;
}

int cmd_fit(const Common& c, const std::string& trajectory_path)
{
    const ExperimentConfig cfg = resolve_config(c);
    const Matrix traj = trajectory_path.empty() ? sk::experiments::simulate(cfg) : sk::csv::read_trajectory(trajectory_path);
    if (traj.rows() != cfg.dictionary.state_dim)
        throw sk::InvalidInput("trajectory has " + std::to_string(traj.rows()) + " states, dictionary expects " +
                               std::to_string(cfg.dictionary.state_dim));
    if (traj.cols() < cfg.train_steps)
        throw sk::InvalidInput("trajectory is shorter than train_steps");
    const fs::path out(c.out);
    fs::create_directories(out);
    const auto f = sk::experiments::fit(traj.leftCols(cfg.train_steps), cfg, cfg.artificial_points);
    sk::experiments::write_fit(f, out);
    // Sweep models also sit in their own top-level directory.
    fs::create_directories(out / "sweep");
    for (std::size_t i = 0; i < f.candidates.size(); ++i)
        sk::io::save_model(f.candidates[i].model, (out / "sweep" / sk::experiments::sweep_filename(i)).string());
    sk::experiments::write_json(out / "gram_diagnostics.json", sk::experiments::gram_diagnostics(f));
    sk::experiments::write_json(out / "config.json", sk::config::to_json(cfg));
    std::cout << "plain  rho=" << sk::experiments::spectral_radius(f.plain.K) << "\n"
              << "robust rho=" << sk::experiments::spectral_radius(f.robust.K) << " lambda=" << f.robust.lambda << "\n"
              << "models in " << (out / "models").string() << "\n";
    return exit_ok;
}

struct PredictArgs {
    std::string model;
    std::string x0;
    std::string x0_csv;
    int x0_step = -1;
    std::optional<int> horizon;
    std::string reference;
};

int cmd_predict(const Common& c, const PredictArgs& a)
{
    const sk::KoopmanModel model = sk::io::load_model(a.model);
    std::optional<ExperimentConfig> cfg;
    if (!c.config_path.empty() || !c.system.empty()) cfg = resolve_config(c);

    Vector x0;
    std::optional<Matrix> source;
    int start = a.x0_step;
    if (!a.x0.empty()) {
        x0 = parse_vector(a.x0);
    } else if (!a.x0_csv.empty()) {
        source = sk::csv::read_trajectory(a.x0_csv);
        if (start < 0) start = 0;
    } else if (cfg) {
        source = sk::experiments::simulate(*cfg);
        if (start < 0) start = cfg->train_steps - 1;
    } else {
        throw sk::ConfigError("predict needs --x0, --x0-csv or a config to take the initial state from");
    }
    if (source) {
        if (start >= source->cols()) throw sk::InvalidInput("--x0-step is beyond the trajectory");
        x0 = source->col(start);
    }
    if (x0.size() != model.dictionary.state_dim)
        throw sk::InvalidInput("x0 has " + std::to_string(x0.size()) + " entries, model expects " +
                               std::to_string(model.dictionary.state_dim));
    const int horizon = a.horizon ? *a.horizon : (cfg ? cfg->predict_horizon : 0);

    sk::PredictionResult p = sk::predict(model, x0, horizon);
    std::optional<Matrix> reference;
    if (!a.reference.empty()) {
        const Matrix ref = sk::csv::read_trajectory(a.reference);
        const int from = start < 0 ? 0 : start;
        if (ref.rows() != x0.size() || ref.cols() < from + horizon + 1)
            throw sk::InvalidInput("reference trajectory does not cover the prediction window");
        reference = ref.middleCols(from, horizon + 1);
    } else if (source && cfg && a.x0_csv.empty() && source->cols() >= start + horizon + 1) {
        reference = source->middleCols(start, horizon + 1);
    }
    if (reference && !p.truncated) p = sk::evaluate_prediction(std::move(p), *reference);

    fs::create_directories(c.out);
    const fs::path path = fs::path(c.out) / "prediction.csv";
    sk::csv::write_file(path.string(), sk::csv::prediction_csv(p));
    std::cout << "wrote " << path.string() << " (" << p.predicted.cols() << " rows)";
    if (p.truncated) std::cout << " [truncated: prediction overflowed]";
    std::cout << "\n";
    if (p.mse_per_state) std::cout << "mean mse " << p.mse_per_state->mean() << "\n";
    return exit_ok;
}

int cmd_spectrum(const Common& c, const std::string& model_path, std::optional<double> dt, std::optional<Index> top)
{
    const sk::KoopmanModel model = sk::io::load_model(model_path);
    std::optional<ExperimentConfig> cfg;
    if (!c.config_path.empty() || !c.system.empty()) cfg = resolve_config(c);
    if (!dt && cfg) dt = sk::config::time_step(*cfg);
    const Index k = model.K.rows();
    const Index m = top ? *top : std::min<Index>(cfg ? cfg->top_modes : 10, k);
    const auto report = sk::analyze(model, dt, m);

    fs::create_directories(c.out);
    const fs::path out(c.out);
    sk::csv::write_file((out / "spectrum.csv").string(), sk::csv::spectrum_csv(report));
    nlohmann::json dom = nlohmann::json::array();
    for (const auto& l : report.dominant) dom.push_back({l.real(), l.imag()});
    sk::experiments::write_json(out / "spectrum.json", {{"spectral_radius", report.spectral_radius},
                                                        {"dominant", dom},
                                                        {"dt", dt ? nlohmann::json(*dt) : nlohmann::json(nullptr)}});
    std::cout << "spectral radius " << report.spectral_radius << "\n";
    return exit_ok;
}

int cmd_benchmark(const Common& c, const std::string& name)
{
    std::vector<std::string> names;
    if (name == "all") {
        names = sk::config::system_names();
    } else if (sk::config::system_from_string(name)) {
        names = {name};
    } else {
        std::cerr << "error: unknown experiment '" << name << "'; valid names: all";
        for (const auto& n : sk::config::system_names()) std::cerr << ", " << n;
        std::cerr << "\n";
        return exit_config;
    }
    if (!c.config_path.empty() && names.size() != 1)
        throw sk::ConfigError("--config can only be combined with a single experiment name");

    bool failures = false;
    for (const auto& n : names) {
        ExperimentConfig cfg;
        if (!c.config_path.empty()) {
            cfg = sk::config::load(c.config_path);
            if (sk::config::to_string(cfg.system) != n)
                throw sk::ConfigError("config describes '" + sk::config::to_string(cfg.system) + "', not '" + n + "'");
        } else {
            cfg = sk::config::default_config(*sk::config::system_from_string(n));
        }
        if (c.seed) cfg.seed = *c.seed;
        const fs::path dir = fs::path(c.out) / n;
        try {
            const auto outcome = sk::experiments::run_benchmark(cfg, dir);
            std::cout << n << ":\n";
            for (const auto& crit : outcome.summary.at("criteria"))
                std::cout << "  " << (crit.at("pass").get<bool>() ? "PASS" : "FAIL") << " " << crit.at("id").get<std::string>()
                          << " " << crit.at("description").get<std::string>() << "\n";
            std::cout << "  report: " << (dir / "summary.json").string() << "\n";
        } catch (const std::exception& e) {
            failures = true;
            fs::create_directories(dir);
            sk::experiments::write_json(dir / "summary.json", {{"experiment", n}, {"error", e.what()}});
            std::cerr << n << ": failed: " << e.what() << "\n";
        }
    }
    return failures ? exit_runtime : exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Robust Koopman operator learning from sparse data"};
    app.require_subcommand(1);

    Common common;
    auto* sim = app.add_subcommand("simulate", "Simulate a system and write trajectory.csv");
    add_common(sim, common, true);

    std::string trajectory_path;
    auto* fit = app.add_subcommand("fit", "Fit plain and robust models");
    add_common(fit, common, true);
    fit->add_option("--trajectory", trajectory_path, "Use this trajectory CSV instead of simulating");

    PredictArgs pa;
    auto* pred = app.add_subcommand("predict", "Predict forward from an initial state");
    add_common(pred, common, true);
    pred->add_option("--model", pa.model, "Model JSON")->required();
    pred->add_option("--x0", pa.x0, "Initial state as comma-separated values");
    pred->add_option("--x0-csv", pa.x0_csv, "Trajectory CSV holding the initial state");
    pred->add_option("--x0-step", pa.x0_step, "Snapshot index of the initial state in the trajectory");
    pred->add_option("--horizon", pa.horizon, "Number of steps to predict");
    pred->add_option("--reference", pa.reference, "Reference trajectory CSV for error columns");

    std::string spec_model;
    std::optional<double> spec_dt;
    std::optional<Index> spec_top;
    auto* spec = app.add_subcommand("spectrum", "Eigenvalues of a model");
    add_common(spec, common, true);
    spec->add_option("--model", spec_model, "Model JSON")->required();
    spec->add_option("--dt", spec_dt, "Time step for continuous-time eigenvalues");
    spec->add_option("--top", spec_top, "Number of dominant eigenvalues to report");

    std::string bench_name;
    auto* bench = app.add_subcommand("benchmark", "Run reference experiments and write reports");
    add_common(bench, common, false);
    bench->add_option("name", bench_name, "oscillator_ring, stuart_landau, burgers or all")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        if (*sim) return cmd_simulate(common);
        if (*fit) return cmd_fit(common, trajectory_path);
        if (*pred) return cmd_predict(common, pa);
        if (*spec) return cmd_spectrum(common, spec_model, spec_dt, spec_top);
        if (*bench) return cmd_benchmark(common, bench_name);
    } catch (const sk::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_runtime;
}
