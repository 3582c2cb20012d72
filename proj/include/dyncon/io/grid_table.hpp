#pragma once

// Generator parameter tables: header `id,m,d,r_inv,tau`, one generator per
// row, tau = 0 meaning no turbine control.

#include "dyncon/io/csv.hpp"
#include "dyncon/node_dynamics.hpp"
#include "dyncon/types.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace dyncon::io {

struct GridTableReport {
    Index rows = 0;
    Index turbines = 0;                // |T|
    std::vector<double> distinct_tau;  // ascending
    Index ignored_droop_rows = 0;      // tau = 0 rows with r_inv > 0
};

struct GridTable {
    std::vector<std::string> ids;
    NodeEnsemble ensemble;
    GridTableReport report;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline bool parse_double(const std::string& text, double& value) {
    if (text.empty()) return false;
    const char* first = text.data();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, text.data() + text.size(), value);
    return res.ec == std::errc() && res.ptr == text.data() + text.size() && std::isfinite(value);
}

}  // namespace detail

inline GridTable ingest_grid_table(std::istream& in) {
    std::string line;
    int line_no = 0;
    int row_no = 0;
    auto fail = [&](const std::string& msg) {
        const std::string where = row_no > 0 ? "row " + std::to_string(row_no) + " (line " + std::to_string(line_no) + ")"
                                             : "line " + std::to_string(line_no);
        throw Error(ErrorCode::Parse, "grid table " + where + ": " + msg);
    };

    bool have_header = false;
    while (!have_header && std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (detail::split(t, ',') != std::vector<std::string>{"id", "m", "d", "r_inv", "tau"})
            fail("expected header `id,m,d,r_inv,tau`");
        have_header = true;
    }
    if (!have_header) throw Error(ErrorCode::Parse, "grid table is empty");

    GridTable table;
    std::vector<NodeParams> params;
    std::set<std::string> seen;
    std::set<double> taus;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        ++row_no;
        const auto cells = detail::split(t, ',');
        if (cells.size() != 5) fail("expected 5 comma-separated fields");
        if (cells[0].empty()) fail("empty id");
        if (!seen.insert(cells[0]).second) fail("duplicate id '" + cells[0] + "'");
        NodeParams p;
        if (!detail::parse_double(cells[1], p.inertia)) fail("m is not a number");
        if (!detail::parse_double(cells[2], p.damping)) fail("d is not a number");
        if (!detail::parse_double(cells[3], p.droop)) fail("r_inv is not a number");
        if (!detail::parse_double(cells[4], p.turbine_time)) fail("tau is not a number");
        if (p.inertia <= 0.0) fail("m must be positive");
        if (p.damping <= 0.0) fail("d must be positive");
        if (p.droop < 0.0) fail("r_inv must be nonnegative");
        if (p.turbine_time < 0.0) fail("tau must be nonnegative");
        if (p.has_turbine()) {
            ++table.report.turbines;
            taus.insert(p.turbine_time);
        } else if (p.droop > 0.0) {
            ++table.report.ignored_droop_rows;
        }
        table.ids.push_back(cells[0]);
        params.push_back(p);
    }
    if (params.empty()) throw Error(ErrorCode::Parse, "grid table has no generator rows");
    table.report.rows = static_cast<Index>(params.size());
    table.report.distinct_tau.assign(taus.begin(), taus.end());
    const NodeKind kind = table.report.turbines > 0 ? NodeKind::Turbine : NodeKind::Swing;
    table.ensemble = make_ensemble(kind, std::move(params));
    return table;
}

inline GridTable ingest_grid_table(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open grid table " + path);
    return ingest_grid_table(in);
}

inline std::string grid_table_text(const NodeEnsemble& ens, const std::vector<std::string>& ids = {}) {
    require(ens.kind == NodeKind::Swing || ens.kind == NodeKind::Turbine, ErrorCode::WrongNodeKind,
            "grid tables hold swing or turbine generators");
    std::ostringstream out;
    out << "id,m,d,r_inv,tau\n";
    for (std::size_t i = 0; i < ens.params.size(); ++i) {
        const NodeParams& p = ens.params[i];
        out << (i < ids.size() ? ids[i] : "G" + std::to_string(i + 1)) << ',' << format_number(p.inertia) << ','
            << format_number(p.damping) << ',' << format_number(p.droop) << ',' << format_number(p.turbine_time)
            << '\n';
    }
    return out.str();
}

}  // namespace dyncon::io
