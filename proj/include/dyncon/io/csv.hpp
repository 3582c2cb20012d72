#pragma once

#include "dyncon/time_sim.hpp"
#include "dyncon/types.hpp"

#include <charconv>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace dyncon::io {

/// 17 significant digits, enough to round-trip any double.
inline std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string format_number(long long value) { return std::to_string(value); }

/// Shortest text that parses back to the same double (config echoes).
inline std::string format_shortest(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

/// Accumulates CSV text in memory; written in one go so outputs are
/// produced whole or not at all.
class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) { row(header); }

    CsvWriter& row(const std::vector<std::string>& cells) {
        require(cells.size() == columns_, ErrorCode::InvalidArgument, "CSV row has the wrong number of cells");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
        return *this;
    }

    const std::string& text() const noexcept { return text_; }
    std::size_t columns() const noexcept { return columns_; }

private:
    std::size_t columns_;
    std::string text_;
};

inline void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path);
}

/// `t,y_0,...,y_{n-1}` for multi-output trajectories, `t,y` for one output.
inline CsvWriter trajectory_csv(const Trajectory& traj) {
    std::vector<std::string> header{"t"};
    const Index outputs = traj.outputs.cols();
    if (outputs == 1) {
        header.emplace_back("y");
    } else {
        for (Index i = 0; i < outputs; ++i) header.push_back("y_" + std::to_string(i));
    }
    CsvWriter csv(header);
    std::vector<std::string> cells(static_cast<std::size_t>(outputs) + 1);
    for (Index r = 0; r < traj.samples(); ++r) {
        cells[0] = format_number(traj.times(r));
        for (Index i = 0; i < outputs; ++i) cells[static_cast<std::size_t>(i) + 1] = format_number(traj.outputs(r, i));
        csv.row(cells);
    }
    return csv;
}

}  // namespace dyncon::io
