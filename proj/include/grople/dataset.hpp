#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "grople/arff.hpp"
#include "grople/error.hpp"
#include "grople/rng.hpp"

namespace grople {

/// Feature matrix X (N x D) paired with a label matrix Y (N x L) whose
/// entries are exactly -1 or +1.
struct MultiLabelDataset {
    Eigen::MatrixXd X;
    Eigen::MatrixXd Y;
    std::vector<std::string> label_names;
    std::vector<std::string> feature_names;

    Eigen::Index n_instances() const { return X.rows(); }
    Eigen::Index n_features() const { return X.cols(); }
    Eigen::Index n_labels() const { return Y.cols(); }
};

struct FoldPlan {
    int k = 0;
    std::vector<int> assignments; // assignments[i] in [0, k)
    std::uint64_t seed = 0;

    std::vector<Eigen::Index> test_indices(int fold) const {
        std::vector<Eigen::Index> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] == fold) out.push_back(static_cast<Eigen::Index>(i));
        return out;
    }

    std::vector<Eigen::Index> train_indices(int fold) const {
        std::vector<Eigen::Index> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] != fold) out.push_back(static_cast<Eigen::Index>(i));
        return out;
    }
};

namespace detail {

// --- Minimal XML reader, just enough for MULAN label headers. ---

struct XmlCursor {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line = 1;

    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }

    char take() {
        const char c = text[pos++];
        if (c == '\n') ++line;
        return c;
    }

    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) take();
    }

    bool consume(std::string_view s) {
        if (text.substr(pos, s.size()) != s) return false;
        for (std::size_t i = 0; i < s.size(); ++i) take();
        return true;
    }

    void expect(std::string_view s, const char* what) {
        if (!consume(s)) throw parse_error(std::string("expected ") + what, line);
    }
};

inline std::string xml_decode(std::string_view s, std::size_t line) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out += s[i];
            continue;
        }
        const auto end = s.find(';', i);
        if (end == std::string_view::npos) throw parse_error("unterminated entity", line);
        const std::string_view ent = s.substr(i + 1, end - i - 1);
        if (ent == "amp") out += '&';
        else if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else throw parse_error("unknown entity '&" + std::string(ent) + ";'", line);
        i = end;
    }
    return out;
}

inline std::string xml_name(XmlCursor& c) {
    std::string name;
    while (!c.eof()) {
        const char ch = c.peek();
        if (std::isspace(static_cast<unsigned char>(ch)) || ch == '>' || ch == '/' ||
            ch == '=')
            break;
        name += c.take();
    }
    if (name.empty()) throw parse_error("expected an XML name", c.line);
    return name;
}

inline std::string local_name(const std::string& qualified) {
    const auto colon = qualified.find(':');
    return colon == std::string::npos ? qualified : qualified.substr(colon + 1);
}

inline void xml_skip_misc(XmlCursor& c) {
    for (;;) {
        c.skip_ws();
        if (c.consume("<?")) {
            while (!c.eof() && !c.consume("?>")) c.take();
        } else if (c.consume("<!--")) {
            while (!c.eof() && !c.consume("-->")) c.take();
        } else if (c.consume("<!")) { // DOCTYPE etc.
            while (!c.eof() && c.peek() != '>') c.take();
            if (!c.eof()) c.take();
        } else {
            return;
        }
    }
}

/// Parses one element (recursively) and appends the `name` attribute of
/// every element whose local name is `label`, in document order.
inline void xml_element(XmlCursor& c, std::vector<std::string>& labels) {
    c.expect("<", "'<'");
    const std::string tag = xml_name(c);
    std::optional<std::string> name_attr;
    bool self_closing = false;

    for (;;) {
        c.skip_ws();
        if (c.eof()) throw parse_error("unexpected end of XML inside a tag", c.line);
        if (c.consume("/>")) {
            self_closing = true;
            break;
        }
        if (c.consume(">")) break;
        const std::string attr = xml_name(c);
        c.skip_ws();
        c.expect("=", "'=' after attribute name");
        c.skip_ws();
        if (c.eof() || (c.peek() != '"' && c.peek() != '\''))
            throw parse_error("attribute value must be quoted", c.line);
        const char q = c.take();
        std::string raw;
        while (!c.eof() && c.peek() != q) raw += c.take();
        if (c.eof()) throw parse_error("unterminated attribute value", c.line);
        c.take();
        if (attr == "name") name_attr = xml_decode(raw, c.line);
    }

    if (local_name(tag) == "label") {
        if (!name_attr) throw parse_error("<label> element without a name attribute", c.line);
        labels.push_back(*name_attr);
    }
    if (self_closing) return;

    for (;;) {
        // Skip character data and comments until the next tag.
        while (!c.eof() && c.peek() != '<') c.take();
        if (c.eof()) throw parse_error("unclosed element <" + tag + ">", c.line);
        if (c.consume("<!--")) {
            while (!c.eof() && !c.consume("-->")) c.take();
            continue;
        }
        if (c.text.substr(c.pos, 2) == "</") {
            c.expect("</", "'</'");
            const std::string closing = xml_name(c);
            if (closing != tag)
                throw parse_error("mismatched closing tag </" + closing + "> for <" + tag + ">",
                                  c.line);
            c.skip_ws();
            c.expect(">", "'>'");
            return;
        }
        xml_element(c, labels);
    }
}

inline void split_csv_line(const std::string& line, std::vector<std::string>& out,
                           std::size_t line_no) {
    out.clear();
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (quoted) throw parse_error("unterminated quote in CSV", line_no);
    out.push_back(cur);
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

} // namespace detail

/// Reads a MULAN XML label header; returns label names in document order.
inline std::vector<std::string> parse_label_header(std::string_view text) {
    detail::XmlCursor c{text};
    std::vector<std::string> labels;
    detail::xml_skip_misc(c);
    if (c.eof()) throw parse_error("empty XML document");
    detail::xml_element(c, labels);
    detail::xml_skip_misc(c);
    if (!c.eof()) throw parse_error("trailing content after the root element", c.line);

    if (labels.empty()) throw value_error("label header declares no labels");
    std::set<std::string> seen;
    for (const auto& l : labels) {
        if (!seen.insert(l).second) throw value_error("duplicate label name '" + l + "'");
    }
    return labels;
}

inline std::vector<std::string> parse_label_header(std::istream& in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    return parse_label_header(std::string_view(text));
}

/// Builds the {-1,+1} label matrix plus feature matrix from a parsed table.
/// Label attributes must be binary nominal with "1" as the positive value.
/// Non-label nominal attributes are accepted when all their declared values
/// are numeric (common in MULAN files that declare binary features as
/// {0,1}); the cell then holds the declared value, not its index.
inline MultiLabelDataset assemble_dataset(const DataTable& table,
                                          const std::vector<std::string>& labels) {
    const std::size_t n_attr = table.n_attributes();
    std::vector<int> label_col(labels.size(), -1);
    std::vector<bool> is_label(n_attr, false);

    for (std::size_t l = 0; l < labels.size(); ++l) {
        for (std::size_t a = 0; a < n_attr; ++a) {
            if (table.attributes[a].name == labels[l]) {
                label_col[l] = static_cast<int>(a);
                is_label[a] = true;
                break;
            }
        }
        if (label_col[l] < 0)
            throw value_error("label '" + labels[l] + "' is not an attribute of the table");
        const Attribute& attr = table.attributes[static_cast<std::size_t>(label_col[l])];
        if (attr.kind != AttributeKind::nominal || attr.values.size() != 2 ||
            std::find(attr.values.begin(), attr.values.end(), "1") == attr.values.end()) {
            throw value_error("label '" + labels[l] +
                              "' is not a binary nominal attribute with values {0,1} or {-1,1}");
        }
    }

    MultiLabelDataset ds;
    ds.label_names = labels;

    std::vector<std::size_t> feature_cols;
    std::vector<std::vector<double>> nominal_feature_values; // per feature col, or empty
    for (std::size_t a = 0; a < n_attr; ++a) {
        if (is_label[a]) continue;
        const Attribute& attr = table.attributes[a];
        std::vector<double> mapped;
        if (attr.kind == AttributeKind::nominal) {
            for (const auto& v : attr.values) {
                try {
                    std::size_t pos = 0;
                    mapped.push_back(std::stod(v, &pos));
                    if (pos != v.size()) throw std::invalid_argument(v);
                } catch (const std::exception&) {
                    throw value_error("feature attribute '" + attr.name +
                                      "' is nominal with non-numeric values");
                }
            }
        }
        feature_cols.push_back(a);
        nominal_feature_values.push_back(std::move(mapped));
        ds.feature_names.push_back(attr.name);
    }

    const Eigen::Index n = static_cast<Eigen::Index>(table.n_rows());
    ds.X.resize(n, static_cast<Eigen::Index>(feature_cols.size()));
    ds.Y.resize(n, static_cast<Eigen::Index>(labels.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            const double cell = row[feature_cols[f]];
            ds.X(i, static_cast<Eigen::Index>(f)) =
                nominal_feature_values[f].empty()
                    ? cell
                    : nominal_feature_values[f][static_cast<std::size_t>(cell)];
        }
        for (std::size_t l = 0; l < labels.size(); ++l) {
            const Attribute& attr = table.attributes[static_cast<std::size_t>(label_col[l])];
            const std::string& v = attr.values[static_cast<std::size_t>(row[label_col[l]])];
            ds.Y(i, static_cast<Eigen::Index>(l)) = (v == "1") ? 1.0 : -1.0;
        }
    }
    return ds;
}

/// Seeded shuffle dealt round-robin into k folds. Fold sizes differ by at
/// most one; identical (n, k, seed) always yields the same plan.
inline FoldPlan k_fold_split(Eigen::Index n, int k, std::uint64_t seed) {
    if (k < 2 || static_cast<Eigen::Index>(k) > n)
        throw value_error("fold count must satisfy 2 <= k <= n (got k=" + std::to_string(k) +
                          ", n=" + std::to_string(n) + ")");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(seed, 0x666f6c64)); // "fold"
    rng.shuffle(order);

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(static_cast<std::size_t>(n), 0);
    for (std::size_t i = 0; i < order.size(); ++i)
        plan.assignments[static_cast<std::size_t>(order[i])] = static_cast<int>(i % k);
    return plan;
}

inline MultiLabelDataset subset(const MultiLabelDataset& ds,
                                const std::vector<Eigen::Index>& indices) {
    MultiLabelDataset out;
    out.label_names = ds.label_names;
    out.feature_names = ds.feature_names;
    out.X.resize(static_cast<Eigen::Index>(indices.size()), ds.X.cols());
    out.Y.resize(static_cast<Eigen::Index>(indices.size()), ds.Y.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        out.X.row(static_cast<Eigen::Index>(i)) = ds.X.row(indices[i]);
        out.Y.row(static_cast<Eigen::Index>(i)) = ds.Y.row(indices[i]);
    }
    return out;
}

/// Per-column z-scoring with population standard deviation. Zero-variance
/// columns keep scale 1 so they pass through unscaled.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& X) {
        Standardizer s;
        const double n = static_cast<double>(X.rows());
        s.mean = X.colwise().mean();
        s.scale.resize(X.cols());
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            const double var = (X.col(j).array() - s.mean(j)).square().sum() / n;
            const double sd = std::sqrt(var);
            s.scale(j) = sd > 0.0 ? sd : 1.0;
        }
        return s;
    }

    Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const {
        if (X.cols() != mean.size())
            throw dimension_error("standardizer fitted on " + std::to_string(mean.size()) +
                                  " columns, got " + std::to_string(X.cols()));
        return (X.rowwise() - mean.transpose()).array().rowwise() /
               scale.transpose().array();
    }
};

// --- Dataset cache: a directory holding features.csv and labels.csv. ---

namespace detail {

inline void write_named_csv(const std::filesystem::path& path,
                            const std::vector<std::string>& names,
                            const Eigen::MatrixXd& M) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (j > 0) out << ",";
        out << csv_quote(names[j]);
    }
    out << "\n";
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (j > 0) out << ",";
            out << format_double(M(i, j));
        }
        out << "\n";
    }
}

inline std::pair<std::vector<std::string>, Eigen::MatrixXd> read_named_csv(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot read " + path.string());
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw parse_error("empty CSV " + path.string());
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> names;
    split_csv_line(line, names, line_no);

    std::vector<std::vector<double>> rows;
    std::vector<std::string> cells;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        split_csv_line(line, cells, line_no);
        if (cells.size() != names.size())
            throw parse_error("row has " + std::to_string(cells.size()) +
                                  " cells, header has " + std::to_string(names.size()),
                              line_no);
        std::vector<double> row(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j)
            row[j] = parse_double(cells[j], line_no);
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < names.size(); ++j)
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return {std::move(names), std::move(M)};
}

} // namespace detail

inline void save_cache(const std::filesystem::path& dir, const MultiLabelDataset& ds) {
    std::filesystem::create_directories(dir);
    detail::write_named_csv(dir / "features.csv", ds.feature_names, ds.X);
    detail::write_named_csv(dir / "labels.csv", ds.label_names, ds.Y);
}

inline MultiLabelDataset load_cache(const std::filesystem::path& dir) {
    MultiLabelDataset ds;
    auto [fnames, X] = detail::read_named_csv(dir / "features.csv");
    auto [lnames, Y] = detail::read_named_csv(dir / "labels.csv");
    if (X.rows() != Y.rows())
        throw parse_error("cache features.csv and labels.csv disagree on row count");
    for (Eigen::Index i = 0; i < Y.rows(); ++i)
        for (Eigen::Index j = 0; j < Y.cols(); ++j)
            if (Y(i, j) != 1.0 && Y(i, j) != -1.0)
                throw parse_error("cached label matrix contains an entry that is not -1 or +1");
    ds.feature_names = std::move(fnames);
    ds.label_names = std::move(lnames);
    ds.X = std::move(X);
    ds.Y = std::move(Y);
    return ds;
}

inline MultiLabelDataset load_mulan(const std::filesystem::path& arff_path,
                                    const std::filesystem::path& xml_path) {
    std::ifstream arff_in(arff_path);
    if (!arff_in) throw io_error("cannot read " + arff_path.string());
    std::ifstream xml_in(xml_path);
    if (!xml_in) throw io_error("cannot read " + xml_path.string());
    DataTable table;
    try {
        table = parse_arff(arff_in);
    } catch (const parse_error& e) {
        throw parse_error(arff_path.string() + ": " + e.what());
    }
    std::vector<std::string> labels;
    try {
        labels = parse_label_header(xml_in);
    } catch (const error& e) {
        throw parse_error(xml_path.string() + ": " + e.what());
    }
    return assemble_dataset(table, labels);
}

} // namespace grople
