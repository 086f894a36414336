#pragma once

// Delimited-text helpers shared by every file format in the library.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fontimp/error.hpp"

namespace fontimp::io {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

/// Splits on `delim` and trims every field. An empty line yields one empty field.
inline std::vector<std::string> split(std::string_view line, char delim = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        out.emplace_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

template <typename Range>
std::string join(const Range& parts, std::string_view sep) {
    std::string out;
    bool first = true;
    for (const auto& p : parts) {
        if (!first) {
            out += sep;
        }
        out += p;
        first = false;
    }
    return out;
}

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, std::string_view context) {
    const auto t = trim(text);
    double v = 0.0;
    const auto* first = t.data();
    const auto* last = t.data() + t.size();
    if (!t.empty() && *first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, v);
    if (t.empty() || res.ec != std::errc{} || res.ptr != last) {
        throw ParseError(std::string(context) + ": not a number: '" + std::string(t) + "'");
    }
    return v;
}

inline long long parse_int(std::string_view text, std::string_view context) {
    const auto t = trim(text);
    long long v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
        throw ParseError(std::string(context) + ": not an integer: '" + std::string(t) + "'");
    }
    return v;
}

/// Non-blank, non-comment ('#') lines of a file, in order.
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        lines.emplace_back(t);
    }
    return lines;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << content;
    out.flush();
    if (!out) {
        throw Error("write failed: " + path.string());
    }
}

/// A dense real matrix with a label per row and per column, stored as
/// `corner,col,col,...` followed by `row,value,value,...` lines.
struct LabeledMatrix {
    std::string corner;
    std::vector<std::string> col_labels;
    std::vector<std::string> row_labels;
    std::vector<std::vector<double>> values;
};

inline LabeledMatrix parse_labeled_matrix(const std::vector<std::string>& lines,
                                          std::string_view context, char delim = ',') {
    if (lines.empty()) {
        throw ParseError(std::string(context) + ": missing header row");
    }
    LabeledMatrix m;
    auto header = split(lines.front(), delim);
    m.corner = header.front();
    m.col_labels.assign(header.begin() + 1, header.end());
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto fields = split(lines[i], delim);
        if (fields.size() != header.size()) {
            throw ParseError(std::string(context) + ": row " + std::to_string(i) + " has " +
                             std::to_string(fields.size() - 1) + " values, expected " +
                             std::to_string(header.size() - 1));
        }
        if (fields.front().empty()) {
            throw ParseError(std::string(context) + ": row " + std::to_string(i) + " has no label");
        }
        std::vector<double> row;
        row.reserve(fields.size() - 1);
        for (std::size_t j = 1; j < fields.size(); ++j) {
            row.push_back(parse_double(fields[j], context));
        }
        m.row_labels.push_back(std::move(fields.front()));
        m.values.push_back(std::move(row));
    }
    return m;
}

inline LabeledMatrix read_labeled_matrix(const std::filesystem::path& path, char delim = ',') {
    return parse_labeled_matrix(read_lines(path), path.string(), delim);
}

inline std::string format_labeled_matrix(const LabeledMatrix& m, char delim = ',') {
    std::ostringstream out;
    out << m.corner;
    for (const auto& c : m.col_labels) {
        out << delim << c;
    }
    out << '\n';
    for (std::size_t i = 0; i < m.row_labels.size(); ++i) {
        out << m.row_labels[i];
        for (double v : m.values[i]) {
            out << delim << format_double(v);
        }
        out << '\n';
    }
    return out.str();
}

} // namespace fontimp::io
