#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "core.hpp"
#include "dictionary.hpp"
#include "solver.hpp"

namespace sparse_koopman::io {

using nlohmann::json;

inline constexpr const char* model_schema = "sparse_koopman.model";
inline constexpr int model_schema_version = 1;

// ---------------------------------------------------------------------------
// Dictionary spec: {"kind", "state_dim", "parameters"}
// ---------------------------------------------------------------------------

inline json dictionary_to_json(const DictionarySpec& spec)
{
    json params = json::object();
    switch (spec.kind) {
    case DictionaryKind::identity: break;
    case DictionaryKind::fourier_exponential:
        params = {{"m_lo", spec.m_lo}, {"m_hi", spec.m_hi}, {"coordinate", spec.coordinate}};
        break;
    case DictionaryKind::monomial: params = {{"max_degree", spec.max_degree}}; break;
    }
    return {{"kind", to_string(spec.kind)}, {"state_dim", spec.state_dim}, {"parameters", params}};
}

namespace detail {

inline const json& field(const json& j, const std::string& key, const std::string& where)
{
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    return j.at(key);
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where)
{
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
T get_as(const json& j, const std::string& key, const std::string& where)
{
    const json& v = field(j, key, where);
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": field '" + key + "' has the wrong type");
    }
}

} // namespace detail

inline DictionarySpec dictionary_from_json(const json& j)
{
    const std::string where = "dictionary";
    if (!j.is_object()) throw ConfigError("dictionary: expected an object");
    detail::reject_unknown(j, {"kind", "state_dim", "parameters"}, where);
    DictionarySpec spec;
    try {
        spec.kind = dictionary_kind_from_string(detail::get_as<std::string>(j, "kind", where));
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("dictionary: ") + e.what());
    }
    spec.state_dim = detail::get_as<int>(j, "state_dim", where);
    const json params = j.contains("parameters") ? j.at("parameters") : json::object();
    switch (spec.kind) {
    case DictionaryKind::identity: detail::reject_unknown(params, {}, "dictionary.parameters"); break;
    case DictionaryKind::fourier_exponential:
        detail::reject_unknown(params, {"m_lo", "m_hi", "coordinate"}, "dictionary.parameters");
        spec.m_lo = detail::get_as<int>(params, "m_lo", "dictionary.parameters");
        spec.m_hi = detail::get_as<int>(params, "m_hi", "dictionary.parameters");
        spec.coordinate = params.contains("coordinate") ? params.at("coordinate").get<int>() : 0;
        break;
    case DictionaryKind::monomial:
        detail::reject_unknown(params, {"max_degree"}, "dictionary.parameters");
        spec.max_degree = detail::get_as<int>(params, "max_degree", "dictionary.parameters");
        break;
    }
    try {
        validate(spec);
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Complex matrices: row-major arrays of [re, im] pairs.
// ---------------------------------------------------------------------------

inline json matrix_to_json(const CMatrix& m)
{
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline CMatrix matrix_from_json(const json& j, const std::string& where)
{
    if (!j.is_array()) throw ConfigError(where + ": expected an array of rows");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = rows ? static_cast<Index>(j.at(0).size()) : 0;
    CMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& row = j.at(i);
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw ConfigError(where + ": ragged matrix");
        for (Index k = 0; k < cols; ++k) {
            const json& e = row.at(k);
            if (!e.is_array() || e.size() != 2 || !e.at(0).is_number() || !e.at(1).is_number())
                throw ConfigError(where + ": entries must be [re, im] number pairs");
            m(i, k) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Model documents
// ---------------------------------------------------------------------------

inline json model_to_json(const KoopmanModel& model)
{
    const auto& d = model.diagnostics;
    json j = {
        {"schema", model_schema},
        {"schema_version", model_schema_version},
        {"dictionary", dictionary_to_json(model.dictionary)},
        {"lambda", model.lambda},
        {"solver_tag", to_string(model.solver_tag)},
        {"gram_convention", to_string(model.convention)},
        {"propagation", "z_next = K^T z"},
        {"K_matrix", matrix_to_json(model.K)},
        {"C", model.C ? matrix_to_json(*model.C) : json(nullptr)},
        {"fit_diagnostics",
         {{"objective", d.objective},
          {"iterations", d.iterations},
          {"converged", d.converged},
          {"monotone", d.monotone},
          {"warm_start", d.warm_start},
          {"pinv_rank", d.pinv_rank},
          {"output_map_rank_deficient", d.output_map_rank_deficient}}},
    };
    if (model.enrichment) {
        const auto& e = *model.enrichment;
        j["enrichment"] = {{"seed", e.seed},
                           {"radius_x", e.radius_x},
                           {"radius_y", e.radius_y},
                           {"artificial_points", e.artificial_points},
                           {"generator", e.generator}};
    } else {
        j["enrichment"] = nullptr;
    }
    return j;
}

inline KoopmanModel model_from_json(const json& j)
{
    if (!j.is_object()) throw ConfigError("model: expected a JSON object");
    if (!j.contains("schema") || j.at("schema") != model_schema) throw ConfigError("model: not a sparse_koopman model document");
    if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer())
        throw ConfigError("model: missing schema_version");
    const int version = j.at("schema_version").get<int>();
    if (version != model_schema_version)
        throw ConfigError("model: unsupported schema_version " + std::to_string(version) + " (expected " +
                          std::to_string(model_schema_version) + ")");
    const std::string where = "model";
    KoopmanModel m;
    m.dictionary = dictionary_from_json(detail::field(j, "dictionary", where));
    m.lambda = detail::get_as<double>(j, "lambda", where);
    try {
        m.solver_tag = solver_tag_from_string(detail::get_as<std::string>(j, "solver_tag", where));
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    const std::string conv = j.value("gram_convention", std::string("conjugate"));
    if (conv != "conjugate" && conv != "plain") throw ConfigError("model: unknown gram_convention '" + conv + "'");
    m.convention = conv == "plain" ? GramConvention::plain : GramConvention::conjugate;
    m.K = matrix_from_json(detail::field(j, "K_matrix", where), "model.K_matrix");
    if (j.contains("C") && !j.at("C").is_null()) m.C = matrix_from_json(j.at("C"), "model.C");
    if (j.contains("fit_diagnostics") && j.at("fit_diagnostics").is_object()) {
        const json& d = j.at("fit_diagnostics");
        m.diagnostics.objective = d.value("objective", 0.0);
        m.diagnostics.iterations = d.value("iterations", 0);
        m.diagnostics.converged = d.value("converged", true);
        m.diagnostics.monotone = d.value("monotone", true);
        m.diagnostics.warm_start = d.value("warm_start", std::string());
        m.diagnostics.pinv_rank = d.value("pinv_rank", Index{0});
        m.diagnostics.output_map_rank_deficient = d.value("output_map_rank_deficient", false);
    }
    if (j.contains("enrichment") && j.at("enrichment").is_object()) {
        const json& e = j.at("enrichment");
        EnrichmentRecord r;
        r.seed = e.value("seed", std::uint64_t{0});
        r.radius_x = e.value("radius_x", 0.0);
        r.radius_y = e.value("radius_y", 0.0);
        r.artificial_points = e.value("artificial_points", Index{0});
        r.generator = e.value("generator", std::string(CounterRng::algorithm));
        m.enrichment = r;
    }
    try {
        validate(m);
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
    return m;
}

inline void save_model(const KoopmanModel& model, const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << model_to_json(model).dump(1) << '\n';
}

inline KoopmanModel load_model(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open model file '" + path + "'");
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("model file '" + path + "' is malformed: " + e.what());
    }
    return model_from_json(j);
}

} // namespace sparse_koopman::io
