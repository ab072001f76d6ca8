#include "sketchreg/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sketchreg/errors.hpp"

namespace sketchreg {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
    const std::string_view t = trim(cell);
    if (t.empty()) throw ParseError("empty cell", row, col);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw ParseError("non-numeric cell '" + std::string(t) + "'", row, col);
    if (!std::isfinite(value))
        throw ParseError("non-finite cell '" + std::string(t) + "'", row, col);
    return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

}  // namespace

CsvTable read_numeric_csv(const std::filesystem::path& path, bool has_header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string content = buffer.str();

    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < content.size()) {
        std::size_t eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        std::string_view line(content.data() + pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        pos = eol + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw EmptyInput("empty file: " + path.string());

    CsvTable table;
    std::size_t expected_cols = 0;
    std::size_t first_data_line = 0;

    if (has_header) {
        for (const auto f : split_fields(lines[0])) table.header.emplace_back(trim(f));
        expected_cols = table.header.size();
        first_data_line = 1;
    }

    for (std::size_t i = first_data_line; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;  // physical 1-based
        if (trim(lines[i]).empty()) throw ParseError("blank line", line_no, 1);
        const auto fields = split_fields(lines[i]);
        if (expected_cols == 0) expected_cols = fields.size();
        if (fields.size() != expected_cols)
            throw ParseError("ragged row: expected " + std::to_string(expected_cols) +
                                 " fields, found " + std::to_string(fields.size()),
                             line_no, fields.size());
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c)
            row.push_back(parse_cell(fields[c], line_no, c + 1));
        table.rows.push_back(std::move(row));
    }

    if (table.rows.empty()) throw EmptyInput("no data rows in " + path.string());
    return table;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::string out;
    if (!header.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c) out += ',';
            out += header[c];
        }
        out += '\n';
    }
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += format_double(row[c]);
        }
        out += '\n';
    }
    write_text_atomic(path, out);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write file: " + tmp.string());
        out << content;
        if (!out) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string to_kv_text(const KvPairs& pairs) {
    std::string out;
    for (const auto& [k, v] : pairs) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

KvPairs parse_kv_text(const std::string& text) {
    KvPairs pairs;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) continue;
        pairs.emplace_back(std::string(trim(line.substr(0, eq))),
                           std::string(trim(line.substr(eq + 1))));
    }
    return pairs;
}

void write_kv_sidecar(const std::filesystem::path& path, const KvPairs& pairs) {
    write_text_atomic(path, to_kv_text(pairs));
}

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return fnv1a64_hex(buffer.str());
}

}  // namespace sketchreg
