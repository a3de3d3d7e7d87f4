#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "dictionary.hpp"
#include "dynamics.hpp"
#include "model_io.hpp"
#include "solver.hpp"

namespace sparse_koopman::config {

using nlohmann::json;

enum class SystemKind { oscillator_ring, stuart_landau, burgers };

inline const std::vector<std::string>& system_names()
{
    static const std::vector<std::string> names{"oscillator_ring", "stuart_landau", "burgers"};
    return names;
}

inline std::string to_string(SystemKind s) { return system_names()[static_cast<std::size_t>(s)]; }

inline std::optional<SystemKind> system_from_string(const std::string& s)
{
    const auto& names = system_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == s) return static_cast<SystemKind>(i);
    return std::nullopt;
}

struct EnrichmentSettings {
    // Absent radii are derived from the training trajectory as
    // radius_scale * || per-state standard deviation ||_2.
    std::optional<double> radius_x;
    std::optional<double> radius_y;
    double radius_scale = 1e-2;
    int points_per_sample = 1;
};

inline std::vector<double> default_lambda_grid()
{
    std::vector<double> grid;
    for (int i = 0; i <= 12; ++i) grid.push_back(std::pow(10.0, -6.0 + 0.5 * i));
    return grid;
}

struct ExperimentConfig {
    SystemKind system = SystemKind::oscillator_ring;
    dynamics::OscillatorRingConfig oscillator;
    dynamics::StuartLandauConfig stuart_landau;
    dynamics::BurgersConfig burgers;

    int train_steps = 15;
    Index artificial_points = 30;
    EnrichmentSettings enrichment;
    DictionarySpec dictionary = DictionarySpec::identity(40);
    std::optional<double> lambda; // empty: select from lambda_grid
    std::vector<double> lambda_grid = default_lambda_grid();
    int predict_horizon = 45;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    GramConvention convention = GramConvention::conjugate;

    Index top_modes = 10;
    std::vector<int> error_states;           // 1-based states singled out in reports
    std::vector<int> sweep_train_steps;      // training-size sweep (empty: none)
    Index sweep_total_points = 40;           // observed + artificial points per sweep run
    int robustness_seeds = 10;               // consecutive seeds checked by the benchmark

    bool lambda_sweep() const { return !lambda.has_value(); }
};

/// Oscillator parameters with the default initial state filled in when none was given.
inline dynamics::OscillatorRingConfig resolved_oscillator(const ExperimentConfig& c)
{
    auto o = c.oscillator;
    if (o.initial_state.size() == 0 && o.n_oscillators >= 2)
        o.initial_state = dynamics::default_oscillator_initial_state(o.n_oscillators);
    return o;
}

inline int total_steps(const ExperimentConfig& c)
{
    switch (c.system) {
    case SystemKind::oscillator_ring: return c.oscillator.n_steps;
    case SystemKind::stuart_landau: return c.stuart_landau.n_steps;
    case SystemKind::burgers:
        return dynamics::detail_burgers::checked_count(c.burgers.t_range.second - c.burgers.t_range.first, c.burgers.dt,
                                                       "time");
    }
    return 0;
}

inline int state_dim(const ExperimentConfig& c)
{
    switch (c.system) {
    case SystemKind::oscillator_ring: return 2 * c.oscillator.n_oscillators;
    case SystemKind::stuart_landau: return 2;
    case SystemKind::burgers: return static_cast<int>(dynamics::burgers_state_grid(c.burgers).size());
    }
    return 0;
}

inline double time_step(const ExperimentConfig& c)
{
    switch (c.system) {
    case SystemKind::oscillator_ring: return c.oscillator.dt;
    case SystemKind::stuart_landau: return c.stuart_landau.dt;
    case SystemKind::burgers: return c.burgers.dt;
    }
    return 0.0;
}

/// Settings of the three reference experiments.
inline ExperimentConfig default_config(SystemKind system)
{
    ExperimentConfig c;
    c.system = system;
    switch (system) {
    case SystemKind::oscillator_ring:
        c.train_steps = 15;
        c.artificial_points = 30;
        c.predict_horizon = 45;
        c.dictionary = DictionarySpec::identity(2 * c.oscillator.n_oscillators);
        c.top_modes = 10;
        c.error_states = {3, 4};
        break;
    case SystemKind::stuart_landau:
        c.train_steps = 30;
        c.artificial_points = 30;
        c.predict_horizon = 70;
        c.dictionary = DictionarySpec::fourier(-10, 10, 2, 1);
        c.top_modes = 5;
        c.error_states = {1, 2};
        break;
    case SystemKind::burgers:
        c.train_steps = 8;
        c.artificial_points = 40;
        c.predict_horizon = 35;
        c.dictionary = DictionarySpec::identity(100);
        c.top_modes = 10;
        c.sweep_train_steps = {5, 10, 15, 20, 25, 30, 35};
        c.sweep_total_points = 40;
        c.robustness_seeds = 1;
        break;
    }
    c.output_dir = "out/" + to_string(system);
    return c;
}

inline void validate(const ExperimentConfig& c)
{
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    try {
        switch (c.system) {
        case SystemKind::oscillator_ring: dynamics::validate(resolved_oscillator(c)); break;
        case SystemKind::stuart_landau: dynamics::validate(c.stuart_landau); break;
        case SystemKind::burgers: dynamics::validate(c.burgers); break;
        }
        validate(c.dictionary);
    } catch (const InvalidInput& e) {
        fail(e.what());
    }
    const int steps = total_steps(c);
    if (c.train_steps < 2) fail("train_steps must be at least 2");
    if (c.train_steps >= steps + 1) fail("train_steps must be smaller than the number of simulated snapshots");
    if (c.predict_horizon < 1) fail("predict_horizon must be positive");
    if (c.predict_horizon > steps + 1 - c.train_steps)
        fail("predict_horizon exceeds the simulated steps remaining after training");
    if (c.artificial_points < 0) fail("artificial_points must be nonnegative");
    if (c.dictionary.state_dim != state_dim(c))
        fail("dictionary.state_dim is " + std::to_string(c.dictionary.state_dim) + " but the system has " +
             std::to_string(state_dim(c)) + " states");
    if (c.enrichment.radius_x && !(*c.enrichment.radius_x > 0.0)) fail("enrichment.radius_x must be positive");
    if (c.enrichment.radius_y && !(*c.enrichment.radius_y > 0.0)) fail("enrichment.radius_y must be positive");
    if (!(c.enrichment.radius_scale > 0.0)) fail("enrichment.radius_scale must be positive");
    if (c.enrichment.points_per_sample < 1) fail("enrichment.points_per_sample must be >= 1");
    if (c.lambda && !(*c.lambda >= 0.0)) fail("lambda must be nonnegative or \"sweep\"");
    if (c.lambda_sweep() && c.lambda_grid.empty()) fail("lambda_grid must not be empty");
    for (double l : c.lambda_grid)
        if (!(l >= 0.0)) fail("lambda_grid entries must be nonnegative");
    const Index k = feature_dim(c.dictionary);
    if (c.top_modes < 1 || c.top_modes > k) fail("top_modes must be in [1, feature dimension]");
    for (int s : c.error_states)
        if (s < 1 || s > state_dim(c)) fail("error_states entries must be 1-based state indices");
    for (int t : c.sweep_train_steps) {
        if (t < 2 || t >= steps + 1) fail("sweep_train_steps entries must be in [2, simulated snapshots)");
        if (c.predict_horizon > steps + 1 - t) fail("predict_horizon exceeds the steps left by a sweep size");
        if (static_cast<Index>(t) > c.sweep_total_points) fail("sweep_total_points is smaller than a sweep size");
    }
    if (c.robustness_seeds < 1) fail("robustness_seeds must be >= 1");
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

/// 1-based line of the first `"key":` in the source text, or 0.
inline int line_of_key(const std::string& text, const std::string& key)
{
    const std::string needle = "\"" + key + "\"";
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        std::size_t after = pos + needle.size();
        while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
        if (after < text.size() && text[after] == ':')
            return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
        pos = after;
    }
    return 0;
}

class Reader {
public:
    explicit Reader(const std::string& text) : text_(text) {}

    [[noreturn]] void fail(const std::string& key, const std::string& message) const
    {
        const int line = key.empty() ? 0 : line_of_key(text_, key);
        throw ConfigError(line > 0 ? "config line " + std::to_string(line) + ": " + message : "config: " + message);
    }

    void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> known) const
    {
        if (!obj.is_object()) fail("", where + " must be an object");
        for (const auto& [key, _] : obj.items()) {
            bool ok = false;
            for (const char* k : known) ok = ok || key == k;
            if (!ok) fail(key, "unknown key '" + key + "' in " + where);
        }
    }

    template <class T>
    void read(const json& obj, const char* key, T& target) const
    {
        if (!obj.contains(key)) return;
        try {
            target = obj.at(key).get<T>();
        } catch (const json::exception&) {
            fail(key, std::string("key '") + key + "' has the wrong type");
        }
    }

    void read_range(const json& obj, const char* key, std::pair<double, double>& target) const
    {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            fail(key, std::string("key '") + key + "' must be a [lo, hi] pair");
        target = {v[0].get<double>(), v[1].get<double>()};
    }

    void read_vector(const json& obj, const char* key, Vector& target) const
    {
        if (!obj.contains(key)) return;
        std::vector<double> v;
        read(obj, key, v);
        target = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
    }

private:
    const std::string& text_;
};

inline json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

} // namespace detail

inline json to_json(const ExperimentConfig& c)
{
    json sys;
    switch (c.system) {
    case SystemKind::oscillator_ring: {
        const auto& o = c.oscillator;
        sys = {{"n_oscillators", o.n_oscillators}, {"damping", o.damping}, {"dt", o.dt}, {"n_steps", o.n_steps}};
        if (o.initial_state.size()) sys["initial_state"] = detail::vector_json(o.initial_state);
        break;
    }
    case SystemKind::stuart_landau: {
        const auto& s = c.stuart_landau;
        sys = {{"mu", s.mu},       {"gamma", s.gamma},     {"beta", s.beta},    {"dt", s.dt},
               {"n_steps", s.n_steps}, {"r0", s.r0}, {"theta0", s.theta0}};
        break;
    }
    case SystemKind::burgers: {
        const auto& b = c.burgers;
        sys = {{"viscosity", b.viscosity},
               {"dx", b.dx},
               {"dt", b.dt},
               {"x_range", {b.x_range.first, b.x_range.second}},
               {"t_range", {b.t_range.first, b.t_range.second}},
               {"boundary", {b.boundary.first, b.boundary.second}},
               {"newton_tol", b.newton_tol},
               {"newton_max_iter", b.newton_max_iter}};
        if (const auto* name = std::get_if<std::string>(&b.initial_profile))
            sys["initial_profile"] = *name;
        else
            sys["initial_profile"] = detail::vector_json(std::get<Vector>(b.initial_profile));
        break;
    }
    }
    json enr = {{"radius_scale", c.enrichment.radius_scale}, {"points_per_sample", c.enrichment.points_per_sample}};
    enr["radius_x"] = c.enrichment.radius_x ? json(*c.enrichment.radius_x) : json(nullptr);
    enr["radius_y"] = c.enrichment.radius_y ? json(*c.enrichment.radius_y) : json(nullptr);
    return {
        {"system", to_string(c.system)},
        {"parameters", sys},
        {"train_steps", c.train_steps},
        {"artificial_points", c.artificial_points},
        {"enrichment", enr},
        {"dictionary", io::dictionary_to_json(c.dictionary)},
        {"lambda", c.lambda ? json(*c.lambda) : json("sweep")},
        {"lambda_grid", c.lambda_grid},
        {"predict_horizon", c.predict_horizon},
        {"output_dir", c.output_dir},
        {"seed", c.seed},
        {"gram_convention", to_string(c.convention)},
        {"top_modes", c.top_modes},
        {"error_states", c.error_states},
        {"sweep_train_steps", c.sweep_train_steps},
        {"sweep_total_points", c.sweep_total_points},
        {"robustness_seeds", c.robustness_seeds},
    };
}

/// Parses a config document. Keys that are absent keep the defaults of the
/// named system; unknown keys are errors that name the key and its line.
inline ExperimentConfig from_json_text(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    const detail::Reader r(text);
    r.check_keys(j, "config",
                 {"system", "parameters", "train_steps", "artificial_points", "enrichment", "dictionary", "lambda",
                  "lambda_grid", "predict_horizon", "output_dir", "seed", "gram_convention", "top_modes",
                  "error_states", "sweep_train_steps", "sweep_total_points", "robustness_seeds"});
    if (!j.contains("system")) throw ConfigError("config: missing key 'system'");
    std::string name;
    r.read(j, "system", name);
    const auto kind = system_from_string(name);
    if (!kind) r.fail("system", "unknown system '" + name + "' (valid: oscillator_ring, stuart_landau, burgers)");
    ExperimentConfig c = default_config(*kind);

    if (j.contains("parameters")) {
        const json& p = j.at("parameters");
        switch (c.system) {
        case SystemKind::oscillator_ring: {
            r.check_keys(p, "parameters", {"n_oscillators", "damping", "dt", "n_steps", "initial_state"});
            auto& o = c.oscillator;
            r.read(p, "n_oscillators", o.n_oscillators);
            r.read(p, "damping", o.damping);
            r.read(p, "dt", o.dt);
            r.read(p, "n_steps", o.n_steps);
            r.read_vector(p, "initial_state", o.initial_state);
            if (!j.contains("dictionary")) c.dictionary = DictionarySpec::identity(2 * o.n_oscillators);
            break;
        }
        case SystemKind::stuart_landau: {
            r.check_keys(p, "parameters", {"mu", "gamma", "beta", "dt", "n_steps", "r0", "theta0"});
            auto& s = c.stuart_landau;
            r.read(p, "mu", s.mu);
            r.read(p, "gamma", s.gamma);
            r.read(p, "beta", s.beta);
            r.read(p, "dt", s.dt);
            r.read(p, "n_steps", s.n_steps);
            r.read(p, "r0", s.r0);
            r.read(p, "theta0", s.theta0);
            break;
        }
        case SystemKind::burgers: {
            r.check_keys(p, "parameters",
                         {"viscosity", "dx", "dt", "x_range", "t_range", "boundary", "initial_profile", "newton_tol",
                          "newton_max_iter"});
            auto& b = c.burgers;
            r.read(p, "viscosity", b.viscosity);
            r.read(p, "dx", b.dx);
            r.read(p, "dt", b.dt);
            r.read_range(p, "x_range", b.x_range);
            r.read_range(p, "t_range", b.t_range);
            r.read_range(p, "boundary", b.boundary);
            r.read(p, "newton_tol", b.newton_tol);
            r.read(p, "newton_max_iter", b.newton_max_iter);
            if (p.contains("initial_profile")) {
                if (p.at("initial_profile").is_string()) {
                    b.initial_profile = p.at("initial_profile").get<std::string>();
                } else {
                    Vector v;
                    r.read_vector(p, "initial_profile", v);
                    b.initial_profile = v;
                }
            }
            if (!j.contains("dictionary")) {
                try {
                    c.dictionary = DictionarySpec::identity(static_cast<int>(dynamics::burgers_state_grid(b).size()));
                } catch (const InvalidInput& e) {
                    throw ConfigError(std::string("config: ") + e.what());
                }
            }
            break;
        }
        }
    }

    r.read(j, "train_steps", c.train_steps);
    r.read(j, "artificial_points", c.artificial_points);
    if (j.contains("enrichment")) {
        const json& e = j.at("enrichment");
        r.check_keys(e, "enrichment", {"radius_x", "radius_y", "radius_scale", "points_per_sample"});
        for (const char* key : {"radius_x", "radius_y"}) {
            if (!e.contains(key)) continue;
            auto& target = std::string(key) == "radius_x" ? c.enrichment.radius_x : c.enrichment.radius_y;
            if (e.at(key).is_null()) {
                target.reset();
            } else {
                double v = 0.0;
                r.read(e, key, v);
                target = v;
            }
        }
        r.read(e, "radius_scale", c.enrichment.radius_scale);
        r.read(e, "points_per_sample", c.enrichment.points_per_sample);
    }
    if (j.contains("dictionary")) {
        try {
            c.dictionary = io::dictionary_from_json(j.at("dictionary"));
        } catch (const ConfigError& e) {
            r.fail("dictionary", e.what());
        }
    }
    if (j.contains("lambda")) {
        const json& l = j.at("lambda");
        if (l.is_string() && l.get<std::string>() == "sweep")
            c.lambda.reset();
        else if (l.is_number())
            c.lambda = l.get<double>();
        else
            r.fail("lambda", "key 'lambda' must be a nonnegative number or \"sweep\"");
    }
    r.read(j, "lambda_grid", c.lambda_grid);
    r.read(j, "predict_horizon", c.predict_horizon);
    r.read(j, "output_dir", c.output_dir);
    r.read(j, "seed", c.seed);
    if (j.contains("gram_convention")) {
        std::string conv;
        r.read(j, "gram_convention", conv);
        if (conv != "conjugate" && conv != "plain")
            r.fail("gram_convention", "gram_convention must be \"conjugate\" or \"plain\"");
        c.convention = conv == "plain" ? GramConvention::plain : GramConvention::conjugate;
    }
    r.read(j, "top_modes", c.top_modes);
    r.read(j, "error_states", c.error_states);
    r.read(j, "sweep_train_steps", c.sweep_train_steps);
    r.read(j, "sweep_total_points", c.sweep_total_points);
    r.read(j, "robustness_seeds", c.robustness_seeds);
    validate(c);
    return c;
}

inline ExperimentConfig load(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json_text(ss.str());
}

} // namespace sparse_koopman::config
