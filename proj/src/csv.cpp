#include "drkm/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "drkm/error.hpp"

namespace drkm {

std::string CsvTable::meta_value(std::string_view key) const {
    for (const auto& m : meta) {
        if (m.size() > key.size() && m.compare(0, key.size(), key) == 0 && m[key.size()] == '=') {
            return m.substr(key.size() + 1);
        }
    }
    return {};
}

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

double parse_double(std::string_view field, std::size_t line) {
    double v = 0.0;
    const char* end = field.data() + field.size();
    const auto r = std::from_chars(field.data(), end, v);
    if (field.empty() || r.ec != std::errc() || r.ptr != end) {
        throw ParseError("not a number: '" + std::string(field) + "'", line);
    }
    return v;
}

long long parse_int(std::string_view field, std::size_t line) {
    long long v = 0;
    const char* end = field.data() + field.size();
    const auto r = std::from_chars(field.data(), end, v);
    if (field.empty() || r.ec != std::errc() || r.ptr != end) {
        throw ParseError("not an integer: '" + std::string(field) + "'", line);
    }
    return v;
}

std::string quote_field(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string q = "\"";
    for (char c : field) {
        if (c == '"') q += '"';
        q += c;
    }
    q += '"';
    return q;
}

namespace {

void write_row(std::ostream& out, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << quote_field(row[i]);
    }
    out << '\n';
}

// Splits one record starting at `pos`, advancing `pos` past its line break
// and `line` by the number of physical lines consumed.
std::vector<std::string> parse_record(const std::string& text, std::size_t& pos, std::size_t& line) {
    std::vector<std::string> fields;
    std::string cur;
    const std::size_t start_line = line;
    bool quoted = false, was_quoted = false;
    while (pos < text.size()) {
        const char c = text[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    cur += '"';
                    pos += 2;
                    continue;
                }
                quoted = false;
                ++pos;
                continue;
            }
            if (c == '\n') ++line;
            cur += c;
            ++pos;
            continue;
        }
        if (c == '"') {
            if (!cur.empty() || was_quoted) throw ParseError("stray quote inside field", line);
            quoted = was_quoted = true;
            ++pos;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
            ++pos;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
            ++pos;
            ++line;
            fields.push_back(std::move(cur));
            return fields;
        } else {
            if (was_quoted) throw ParseError("text after closing quote", line);
            cur += c;
            ++pos;
        }
    }
    if (quoted) throw ParseError("unterminated quoted field", start_line);
    fields.push_back(std::move(cur));
    ++line;
    return fields;
}

}  // namespace

void write_csv(std::ostream& out, const CsvTable& table) {
    for (const auto& m : table.meta) out << "# " << m << '\n';
    write_row(out, table.header);
    for (const auto& r : table.rows) write_row(out, r);
}

CsvTable read_csv(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    CsvTable t;
    std::size_t pos = 0, line = 1;
    bool have_header = false;
    while (pos < text.size()) {
        if (text[pos] == '#') {
            std::size_t eol = text.find('\n', pos);
            if (eol == std::string::npos) eol = text.size();
            std::string m = text.substr(pos + 1, eol - pos - 1);
            if (!m.empty() && m.back() == '\r') m.pop_back();
            if (!m.empty() && m.front() == ' ') m.erase(0, 1);
            t.meta.push_back(std::move(m));
            pos = eol + 1;
            ++line;
            continue;
        }
        const std::size_t row_line = line;
        auto fields = parse_record(text, pos, line);
        if (!have_header) {
            if (fields.size() == 1 && fields[0].empty()) throw ParseError("empty header row", row_line);
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() == 1 && fields[0].empty() && t.header.size() != 1) {
            throw ParseError("blank line", row_line);
        }
        if (fields.size() != t.header.size()) {
            throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             row_line);
        }
        t.rows.push_back(std::move(fields));
    }
    if (!have_header) throw ParseError(text.empty() ? "empty file" : "missing header row", line);
    return t;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void save_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ostringstream ss;
    write_csv(ss, table);
    write_text_file(path, ss.str());
}

CsvTable load_csv(const std::filesystem::path& path) {
    std::istringstream ss(read_text_file(path));
    return read_csv(ss);
}

}  // namespace drkm
