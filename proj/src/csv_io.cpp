#include "gapfill/csv_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gapfill {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
    throw std::runtime_error(path + ": parse error at line " + std::to_string(line) + ": " + what);
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool parse_i64(const std::string& s, std::int64_t& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    out = v;
    return true;
}

bool parse_f64(const std::string& s, double& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    out = v;
    return true;
}

bool is_nan_literal(const std::string& s) {
    return s.size() == 3 && (s[0] == 'n' || s[0] == 'N') && (s[1] == 'a' || s[1] == 'A') &&
           (s[2] == 'n' || s[2] == 'N');
}

struct Row {
    std::int64_t index;
    std::string value;
};

// Shared two-column reader; hands the raw value field to the caller.
std::vector<Row> read_rows(const std::string& path, bool skip_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line_no == 1 && skip_header) continue;
        if (line.empty() && in.peek() == std::ifstream::traits_type::eof()) break;

        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) parse_fail(path, line_no, "expected `index,value`");
        std::int64_t idx = 0;
        if (!parse_i64(trim(line.substr(0, comma)), idx))
            parse_fail(path, line_no, "bad index field `" + line.substr(0, comma) + "`");
        rows.push_back({idx, trim(line.substr(comma + 1))});
    }
    if (rows.empty()) throw std::runtime_error(path + ": empty file");
    return rows;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

TimeSeries read_series_csv(const std::string& path, bool skip_header) {
    const auto rows = read_rows(path, skip_header);
    TimeSeries series;
    series.origin_index = rows.front().index;
    series.values.reserve(rows.size());
    std::size_t line_no = skip_header ? 1 : 0;
    for (const auto& row : rows) {
        ++line_no;
        if (row.value.empty() || is_nan_literal(row.value)) {
            series.values.push_back(kMissing);
            continue;
        }
        double v = 0.0;
        if (!parse_f64(row.value, v)) parse_fail(path, line_no, "bad value field `" + row.value + "`");
        if (std::isinf(v)) parse_fail(path, line_no, "infinite values are not allowed");
        series.values.push_back(v);
    }
    return series;
}

void write_series_csv(const TimeSeries& series, const std::string& path) {
    std::ostringstream out;
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << (series.origin_index + static_cast<std::int64_t>(i)) << ',';
        if (!is_missing(series.values[i])) out << format_double(series.values[i]);
        out << '\n';
    }
    write_text_atomic(path, out.str());
}

Mask read_mask_csv(const std::string& path, bool skip_header) {
    const auto rows = read_rows(path, skip_header);
    Mask mask;
    mask.reserve(rows.size());
    std::size_t line_no = skip_header ? 1 : 0;
    for (const auto& row : rows) {
        ++line_no;
        if (row.value == "0")
            mask.push_back(0);
        else if (row.value == "1")
            mask.push_back(1);
        else
            parse_fail(path, line_no, "mask value must be 0 or 1, got `" + row.value + "`");
    }
    return mask;
}

void write_mask_csv(const Mask& mask, std::int64_t origin_index, const std::string& path) {
    std::ostringstream out;
    for (std::size_t i = 0; i < mask.size(); ++i)
        out << (origin_index + static_cast<std::int64_t>(i)) << ',' << (mask[i] ? 1 : 0) << '\n';
    write_text_atomic(path, out.str());
}

void write_trace_csv(const std::vector<double>& trace, const std::string& path) {
    std::ostringstream out;
    out << "generation,best_fitness\n";
    for (std::size_t g = 0; g < trace.size(); ++g)
        out << (g + 1) << ',' << format_double(trace[g]) << '\n';
    write_text_atomic(path, out.str());
}

}  // namespace gapfill
