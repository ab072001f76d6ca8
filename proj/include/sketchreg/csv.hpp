#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace sketchreg {

/// Numeric CSV contents. `header` is empty when the file was read without one.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t num_rows() const { return rows.size(); }
    std::size_t num_cols() const { return rows.empty() ? 0 : rows.front().size(); }
};

/// Strict numeric CSV reader: comma separated, every row the same width,
/// cells parsed as finite decimal floats. Throws ParseError (1-based physical
/// row/col) or EmptyInput.
CsvTable read_numeric_csv(const std::filesystem::path& path, bool has_header);

/// Doubles are printed with 17 significant digits ("%.17g"), enough to
/// round-trip bit-exactly through read_numeric_csv.
std::string format_double(double v);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Writes content to path via a temp file + rename so readers never observe a
/// half-written file.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// key=value provenance sidecars, one pair per line.
using KvPairs = std::vector<std::pair<std::string, std::string>>;

std::string to_kv_text(const KvPairs& pairs);
KvPairs parse_kv_text(const std::string& text);
void write_kv_sidecar(const std::filesystem::path& path, const KvPairs& pairs);

/// FNV-1a (64-bit) content hash, hex encoded; used to stamp input files into
/// provenance sidecars.
std::string fnv1a64_hex(const std::string& bytes);
std::string hash_file(const std::filesystem::path& path);

}  // namespace sketchreg
