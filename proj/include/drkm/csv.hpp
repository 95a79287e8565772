#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace drkm {

/// A CSV document: `#`-prefixed metadata lines, one header row, data rows.
/// Fields follow RFC 4180 (quotes around fields holding a comma, quote, CR
/// or LF; embedded quotes doubled). Lines end in LF.
struct CsvTable {
    std::vector<std::string> meta;  ///< metadata lines without the leading "# "
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Value of the first metadata line "key=value", or empty.
    std::string meta_value(std::string_view key) const;
};

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);
/// Throws ParseError(line) unless the whole field is a valid number.
double parse_double(std::string_view field, std::size_t line);
long long parse_int(std::string_view field, std::size_t line);

std::string quote_field(std::string_view field);

void write_csv(std::ostream& out, const CsvTable& table);
/// Throws ParseError on an empty document, a missing header, unterminated
/// quotes or a row whose width differs from the header.
CsvTable read_csv(std::istream& in);

/// File wrappers; I/O failures raise IoError.
void save_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable load_csv(const std::filesystem::path& path);

/// Writes `content` to `path` (creating parent directories) or raises IoError.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace drkm
