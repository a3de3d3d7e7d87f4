#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "core.hpp"
#include "enrichment.hpp"
#include "predictor.hpp"
#include "spectrum.hpp"

namespace sparse_koopman::csv {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s)
{
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && *first == ' ') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw InvalidInput("csv: cannot parse number '" + s + "'");
    return v;
}

class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}

    void header(const std::vector<std::string>& names) { row_strings(names); }

    void row_strings(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << cells[i];
        }
        os_ << '\n';
    }

private:
    std::ostream& os_;
};

inline void write_file(const std::string& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << content;
    if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

inline std::vector<std::string> numbered(const std::string& prefix, Index n, const std::string& suffix = "")
{
    std::vector<std::string> out;
    for (Index i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i) + suffix);
    return out;
}

/// Header `t,x1,...,xn`; row k holds time t0 + k*dt and column k of the trajectory.
inline std::string trajectory_csv(const Matrix& traj, double dt, double t0 = 0.0)
{
    std::ostringstream os;
    Writer w(os);
    std::vector<std::string> head{"t"};
    for (auto& s : numbered("x", traj.rows())) head.push_back(s);
    w.header(head);
    for (Index k = 0; k < traj.cols(); ++k) {
        std::vector<std::string> row{format_double(t0 + static_cast<double>(k) * dt)};
        for (Index i = 0; i < traj.rows(); ++i) row.push_back(format_double(traj(i, k)));
        w.row_strings(row);
    }
    return os.str();
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline Table read_table(std::istream& is)
{
    Table t;
    std::string line;
    if (!std::getline(is, line)) throw InvalidInput("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell));
        if (row.size() != t.header.size())
            throw InvalidInput("csv: line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                               " fields, expected " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Reads a `t,x1..xn` file back into a state x time matrix.
inline Matrix read_trajectory(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw InvalidInput("cannot open trajectory '" + path + "'");
    const Table t = read_table(f);
    detail::require(!t.header.empty() && t.header[0] == "t", "trajectory csv must start with a 't' column");
    Matrix traj(static_cast<Index>(t.header.size()) - 1, static_cast<Index>(t.rows.size()));
    for (std::size_t k = 0; k < t.rows.size(); ++k)
        for (std::size_t i = 1; i < t.header.size(); ++i) traj(static_cast<Index>(i) - 1, static_cast<Index>(k)) = t.rows[k][i];
    return traj;
}

/// One row per pair: `x1..xn, y1..yn, provenance`.
inline std::string enriched_csv(const SnapshotPairs& pairs)
{
    std::ostringstream os;
    Writer w(os);
    auto head = numbered("x", pairs.state_dim());
    for (auto& s : numbered("y", pairs.state_dim())) head.push_back(s);
    head.push_back("provenance");
    w.header(head);
    for (Index j = 0; j < pairs.size(); ++j) {
        std::vector<std::string> row;
        for (Index i = 0; i < pairs.state_dim(); ++i) row.push_back(format_double(pairs.X_p(i, j)));
        for (Index i = 0; i < pairs.state_dim(); ++i) row.push_back(format_double(pairs.X_f(i, j)));
        row.emplace_back(to_string(pairs.provenance[j]));
        w.row_strings(row);
    }
    return os.str();
}

/// Columns re, im, modulus (+ re_ct, im_ct when a time step was supplied).
inline std::string spectrum_csv(const SpectrumReport& r)
{
    std::ostringstream os;
    Writer w(os);
    std::vector<std::string> head{"re", "im", "modulus"};
    if (r.continuous_time) {
        head.emplace_back("re_ct");
        head.emplace_back("im_ct");
    }
    w.header(head);
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
        const auto& l = r.eigenvalues[i];
        std::vector<std::string> row{format_double(l.real()), format_double(l.imag()), format_double(std::abs(l))};
        if (r.continuous_time) {
            row.push_back(format_double((*r.continuous_time)[i].real()));
            row.push_back(format_double((*r.continuous_time)[i].imag()));
        }
        w.row_strings(row);
    }
    return os.str();
}

/// `t, x1_pred..xn_pred[, x1_ref..xn_ref, x1_err..xn_err]`; t is the step index.
inline std::string prediction_csv(const PredictionResult& p)
{
    std::ostringstream os;
    Writer w(os);
    const Index n = p.predicted.rows();
    std::vector<std::string> head{"t"};
    for (auto& s : numbered("x", n, "_pred")) head.push_back(s);
    const bool with_ref = p.reference.has_value() && p.per_state_error.has_value();
    if (with_ref) {
        for (auto& s : numbered("x", n, "_ref")) head.push_back(s);
        for (auto& s : numbered("x", n, "_err")) head.push_back(s);
    }
    w.header(head);
    for (Index k = 0; k < p.predicted.cols(); ++k) {
        std::vector<std::string> row{std::to_string(k)};
        for (Index i = 0; i < n; ++i) row.push_back(format_double(p.predicted(i, k)));
        if (with_ref) {
            for (Index i = 0; i < n; ++i) row.push_back(format_double((*p.reference)(i, k)));
            for (Index i = 0; i < n; ++i) row.push_back(format_double((*p.per_state_error)(i, k)));
        }
        w.row_strings(row);
    }
    return os.str();
}

} // namespace sparse_koopman::csv
