#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "grople/error.hpp"

namespace grople {

enum class AttributeKind { numeric, nominal };

struct Attribute {
    std::string name;
    AttributeKind kind = AttributeKind::numeric;
    std::vector<std::string> values; // nominal only, in declaration order

    bool operator==(const Attribute&) const = default;
};

/// Parsed ARFF contents. Nominal cells hold the index of the value in the
/// attribute's declared value set; numeric cells hold the value itself.
struct DataTable {
    std::string relation;
    std::vector<Attribute> attributes;
    std::vector<std::vector<double>> rows;

    std::size_t n_attributes() const { return attributes.size(); }
    std::size_t n_rows() const { return rows.size(); }

    bool operator==(const DataTable&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline bool iequals_prefix(std::string_view s, std::string_view keyword) {
    if (s.size() < keyword.size()) return false;
    for (std::size_t i = 0; i < keyword.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(keyword[i])))
            return false;
    }
    return true;
}

inline std::string unquote(std::string_view s) {
    if (s.size() >= 2 && ((s.front() == '\'' && s.back() == '\'') ||
                          (s.front() == '"' && s.back() == '"'))) {
        return std::string(s.substr(1, s.size() - 2));
    }
    return std::string(s);
}

/// Splits on `sep` outside of single/double quotes.
inline std::vector<std::string> split_quoted(std::string_view s, char sep,
                                             std::size_t line) {
    std::vector<std::string> out;
    std::string cur;
    char quote = 0;
    for (char c : s) {
        if (quote != 0) {
            cur += c;
            if (c == quote) quote = 0;
        } else if (c == '\'' || c == '"') {
            cur += c;
            quote = c;
        } else if (c == sep) {
            out.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quote != 0) throw parse_error("unterminated quote", line);
    out.emplace_back(trim(cur));
    return out;
}

inline double parse_double(std::string_view s, std::size_t line) {
    const std::string str(trim(s));
    if (str == "?") throw parse_error("missing values ('?') are not supported", line);
    try {
        std::size_t pos = 0;
        const double v = std::stod(str, &pos);
        if (pos != str.size()) throw parse_error("bad numeric value '" + str + "'", line);
        return v;
    } catch (const parse_error&) {
        throw;
    } catch (const std::exception&) {
        throw parse_error("bad numeric value '" + str + "'", line);
    }
}

inline double nominal_index(const Attribute& attr, std::string_view token,
                            std::size_t line) {
    const std::string value = unquote(trim(token));
    const auto it = std::find(attr.values.begin(), attr.values.end(), value);
    if (it == attr.values.end()) {
        throw parse_error("value '" + value + "' not in declared set of attribute '" +
                              attr.name + "'",
                          line);
    }
    return static_cast<double>(it - attr.values.begin());
}

inline bool needs_quoting(std::string_view s) {
    if (s.empty()) return true;
    return s.find_first_of(" \t,{}%'\"") != std::string_view::npos;
}

inline std::string quote_if_needed(const std::string& s) {
    if (!needs_quoting(s)) return s;
    std::string out = "'";
    out += s;
    out += "'";
    return out;
}

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

/// Parses ARFF text: @relation, @attribute (numeric or nominal), @data with
/// dense or sparse rows. '%' lines are comments; keywords are
/// case-insensitive. Unsupported attribute kinds (string, date) and missing
/// values ('?') are rejected.
inline DataTable parse_arff(std::istream& in) {
    DataTable table;
    std::string line;
    std::size_t line_no = 0;
    bool in_data = false;
    bool saw_relation = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string_view sv = detail::trim(line);
        if (sv.empty() || sv.front() == '%') continue;

        if (!in_data) {
            if (detail::iequals_prefix(sv, "@relation")) {
                saw_relation = true;
                table.relation = detail::unquote(detail::trim(sv.substr(9)));
            } else if (detail::iequals_prefix(sv, "@attribute")) {
                std::string_view rest = detail::trim(sv.substr(10));
                if (rest.empty()) throw parse_error("@attribute without a name", line_no);
                // Name is either quoted or runs to the first whitespace.
                std::string name;
                std::string_view type_part;
                if (rest.front() == '\'' || rest.front() == '"') {
                    const char q = rest.front();
                    const auto close = rest.find(q, 1);
                    if (close == std::string_view::npos)
                        throw parse_error("unterminated quote in attribute name", line_no);
                    name = std::string(rest.substr(1, close - 1));
                    type_part = detail::trim(rest.substr(close + 1));
                } else {
                    const auto ws = rest.find_first_of(" \t");
                    if (ws == std::string_view::npos)
                        throw parse_error("@attribute missing a type", line_no);
                    name = std::string(rest.substr(0, ws));
                    type_part = detail::trim(rest.substr(ws));
                }
                if (type_part.empty()) throw parse_error("@attribute missing a type", line_no);

                Attribute attr;
                attr.name = name;
                if (type_part.front() == '{') {
                    if (type_part.back() != '}')
                        throw parse_error("nominal value set missing closing '}'", line_no);
                    attr.kind = AttributeKind::nominal;
                    const auto inner = type_part.substr(1, type_part.size() - 2);
                    for (auto& v : detail::split_quoted(inner, ',', line_no)) {
                        attr.values.push_back(detail::unquote(detail::trim(v)));
                    }
                    if (attr.values.empty() ||
                        (attr.values.size() == 1 && attr.values[0].empty()))
                        throw parse_error("empty nominal value set", line_no);
                } else if (detail::iequals_prefix(type_part, "numeric") ||
                           detail::iequals_prefix(type_part, "real") ||
                           detail::iequals_prefix(type_part, "integer")) {
                    attr.kind = AttributeKind::numeric;
                } else {
                    throw parse_error("unsupported attribute type '" + std::string(type_part) +
                                          "'",
                                      line_no);
                }
                table.attributes.push_back(std::move(attr));
            } else if (detail::iequals_prefix(sv, "@data")) {
                if (table.attributes.empty())
                    throw parse_error("@data before any @attribute declaration", line_no);
                in_data = true;
            } else {
                throw parse_error("unrecognized declaration '" + std::string(sv) + "'", line_no);
            }
            continue;
        }

        // Data section.
        const std::size_t n = table.attributes.size();
        std::vector<double> row(n, 0.0);
        if (sv.front() == '{') {
            if (sv.back() != '}') throw parse_error("sparse row missing closing '}'", line_no);
            const auto inner = detail::trim(sv.substr(1, sv.size() - 2));
            std::vector<bool> seen(n, false);
            if (!inner.empty()) {
                for (auto& entry : detail::split_quoted(inner, ',', line_no)) {
                    const std::string_view ev = detail::trim(entry);
                    const auto ws = ev.find_first_of(" \t");
                    if (ws == std::string_view::npos)
                        throw parse_error("sparse entry '" + std::string(ev) +
                                              "' is not 'index value'",
                                          line_no);
                    const std::string idx_str(ev.substr(0, ws));
                    std::size_t idx = 0;
                    const auto res = std::from_chars(idx_str.data(),
                                                     idx_str.data() + idx_str.size(), idx);
                    if (res.ec != std::errc{} || res.ptr != idx_str.data() + idx_str.size())
                        throw parse_error("bad sparse index '" + idx_str + "'", line_no);
                    if (idx >= n)
                        throw parse_error("sparse index " + idx_str + " out of range (have " +
                                              std::to_string(n) + " attributes)",
                                          line_no);
                    if (seen[idx])
                        throw parse_error("duplicate sparse index " + idx_str, line_no);
                    seen[idx] = true;
                    const std::string_view val = detail::trim(ev.substr(ws));
                    const Attribute& attr = table.attributes[idx];
                    row[idx] = attr.kind == AttributeKind::numeric
                                   ? detail::parse_double(val, line_no)
                                   : detail::nominal_index(attr, val, line_no);
                }
            }
        } else {
            const auto cells = detail::split_quoted(sv, ',', line_no);
            if (cells.size() != n) {
                throw parse_error("row has " + std::to_string(cells.size()) +
                                      " values, expected " + std::to_string(n),
                                  line_no);
            }
            for (std::size_t i = 0; i < n; ++i) {
                const Attribute& attr = table.attributes[i];
                row[i] = attr.kind == AttributeKind::numeric
                             ? detail::parse_double(cells[i], line_no)
                             : detail::nominal_index(attr, cells[i], line_no);
            }
        }
        table.rows.push_back(std::move(row));
    }

    if (!saw_relation && table.attributes.empty())
        throw parse_error("not an ARFF file (no @relation or @attribute found)");
    if (!in_data) throw parse_error("missing @data section");
    return table;
}

inline DataTable parse_arff(const std::string& text) {
    std::istringstream in(text);
    return parse_arff(in);
}

/// Serializes a table as dense ARFF. parse_arff(write_arff(t)) == t.
inline void write_arff(std::ostream& out, const DataTable& table) {
    out << "@relation " << detail::quote_if_needed(table.relation) << "\n";
    for (const auto& attr : table.attributes) {
        out << "@attribute " << detail::quote_if_needed(attr.name) << " ";
        if (attr.kind == AttributeKind::numeric) {
            out << "numeric";
        } else {
            out << "{";
            for (std::size_t i = 0; i < attr.values.size(); ++i) {
                if (i > 0) out << ",";
                out << detail::quote_if_needed(attr.values[i]);
            }
            out << "}";
        }
        out << "\n";
    }
    out << "@data\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out << ",";
            const Attribute& attr = table.attributes[i];
            if (attr.kind == AttributeKind::numeric) {
                out << detail::format_double(row[i]);
            } else {
                out << detail::quote_if_needed(attr.values[static_cast<std::size_t>(row[i])]);
            }
        }
        out << "\n";
    }
}

inline std::string write_arff(const DataTable& table) {
    std::ostringstream out;
    write_arff(out, table);
    return out.str();
}

} // namespace grople
