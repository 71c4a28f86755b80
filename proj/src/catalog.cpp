#include "aggjoin/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "aggjoin/error.hpp"

namespace aggjoin {

namespace {

std::vector<std::string> split_csv_line(const std::string& line, size_t line_no) {
    std::vector<std::string> fields;
    std::string current;
    bool in_quotes = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"' && current.empty()) {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (in_quotes) {
        raise(ErrorKind::Ingest, "unterminated quote at line " + std::to_string(line_no));
    }
    fields.push_back(current);
    return fields;
}

Value parse_field(const std::string& field, AttributeType type, size_t line_no) {
    if (field.empty()) return Value::null();
    switch (type) {
        case AttributeType::Int64: {
            int64_t v = 0;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc() || ptr != field.data() + field.size()) {
                raise(ErrorKind::Ingest,
                      "cannot parse '" + field + "' as int64 at line " + std::to_string(line_no));
            }
            return Value::from_int(v);
        }
        case AttributeType::Float64: {
            try {
                size_t consumed = 0;
                double v = std::stod(field, &consumed);
                if (consumed != field.size()) throw std::invalid_argument(field);
                return Value::from_float(v);
            } catch (const std::exception&) {
                raise(ErrorKind::Ingest,
                      "cannot parse '" + field + "' as float64 at line " + std::to_string(line_no));
            }
        }
        case AttributeType::Bool: {
            if (field == "true" || field == "1") return Value::from_bool(true);
            if (field == "false" || field == "0") return Value::from_bool(false);
            raise(ErrorKind::Ingest,
                  "cannot parse '" + field + "' as bool at line " + std::to_string(line_no));
        }
        case AttributeType::Text:
            return Value::from_text(field);
    }
    raise(ErrorKind::Internal, "unreachable field type");
}

std::string strip(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_header_line(const std::vector<std::string>& fields, const Schema& schema) {
    if (fields.size() != schema.size()) return false;
    for (size_t i = 0; i < fields.size(); ++i) {
        std::string f = strip(fields[i]);
        // Accept both bare names and name:type cells.
        auto colon = f.find(':');
        if (colon != std::string::npos) f = f.substr(0, colon);
        if (f != schema[i].name) return false;
    }
    return true;
}

Relation load_csv_lines(std::istream& in, const std::string& path, const std::string& name,
                        const Schema& schema) {
    Relation rel(name, schema);
    std::string line;
    size_t line_no = 0;
    bool first = true;
    Row row(schema.size());
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line, line_no);
        if (first) {
            first = false;
            if (is_header_line(fields, schema)) continue;
        }
        if (fields.size() != schema.size()) {
            raise(ErrorKind::Ingest, path + ": wrong field count (" +
                                         std::to_string(fields.size()) + " vs schema " +
                                         std::to_string(schema.size()) + ") at line " +
                                         std::to_string(line_no));
        }
        for (size_t i = 0; i < fields.size(); ++i) {
            row[i] = parse_field(fields[i], schema[i].type, line_no);
        }
        rel.append_row(row);
    }
    return rel;
}

} // namespace

bool Constraints::has_unique_key_within(const std::string& relation,
                                        const std::vector<std::string>& attributes) const {
    for (const auto& key : unique_keys) {
        if (key.relation != relation) continue;
        bool covered = true;
        for (const auto& attr : key.attributes) {
            if (std::find(attributes.begin(), attributes.end(), attr) == attributes.end()) {
                covered = false;
                break;
            }
        }
        if (covered) return true;
    }
    return false;
}

bool Constraints::has_foreign_key(const std::string& from_rel,
                                  const std::vector<std::string>& from_attrs,
                                  const std::string& to_rel,
                                  const std::vector<std::string>& to_attrs) const {
    for (const auto& fk : foreign_keys) {
        if (fk.referencing_relation == from_rel && fk.referenced_relation == to_rel &&
            fk.referencing_attributes == from_attrs && fk.referenced_attributes == to_attrs) {
            return true;
        }
    }
    return false;
}

void Catalog::add(Relation relation) {
    std::string name = relation.name();
    relations_.insert_or_assign(name, std::move(relation));
}

bool Catalog::contains(const std::string& name) const { return relations_.count(name) > 0; }

const Relation& Catalog::get(const std::string& name) const {
    auto it = relations_.find(name);
    if (it == relations_.end()) {
        raise(ErrorKind::Resolve, "unknown relation '" + name + "'");
    }
    return it->second;
}

std::vector<std::string> Catalog::relation_names() const {
    std::vector<std::string> names;
    names.reserve(relations_.size());
    for (const auto& [name, rel] : relations_) names.push_back(name);
    return names;
}

Relation load_csv(const std::string& path, const std::string& name, const Schema& schema) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::Io, "cannot open '" + path + "'");
    return load_csv_lines(in, path, name, schema);
}

Relation load_csv_with_typed_header(const std::string& path, const std::string& name) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::Io, "cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) {
        raise(ErrorKind::Ingest, path + ": empty file, expected a name:type header");
    }
    if (!header.empty() && header.back() == '\r') header.pop_back();
    Schema schema;
    for (const auto& cell : split_csv_line(header, 1)) {
        std::string f = strip(cell);
        auto colon = f.find(':');
        if (colon == std::string::npos) {
            raise(ErrorKind::Ingest, path + ": header cell '" + f + "' is not name:type");
        }
        schema.push_back({f.substr(0, colon), attribute_type_from_string(f.substr(colon + 1))});
    }
    return load_csv_lines(in, path, name, schema);
}

Relation load_edge_list(const std::string& path, bool directed) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::Io, "cannot open '" + path + "'");
    Relation rel("edge", Schema{{"fromNode", AttributeType::Int64},
                                {"toNode", AttributeType::Int64}});
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = strip(line);
        if (t.empty() || t[0] == '#') continue;
        std::istringstream tokens(t);
        std::string a, b, extra;
        if (!(tokens >> a >> b) || (tokens >> extra)) {
            raise(ErrorKind::Ingest,
                  path + ": expected two node ids at line " + std::to_string(line_no));
        }
        int64_t u = 0, v = 0;
        auto parse_node = [&](const std::string& tok, int64_t& out) {
            auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
            if (ec != std::errc() || ptr != tok.data() + tok.size()) {
                raise(ErrorKind::Ingest, path + ": non-integer node id '" + tok + "' at line " +
                                             std::to_string(line_no));
            }
        };
        parse_node(a, u);
        parse_node(b, v);
        Value fwd[2] = {Value::from_int(u), Value::from_int(v)};
        rel.append_row(fwd);
        if (!directed) {
            Value rev[2] = {Value::from_int(v), Value::from_int(u)};
            rel.append_row(rev);
        }
    }
    return rel;
}

Catalog& register_constraints(Catalog& catalog, const Constraints& constraints) {
    auto check_attrs = [&](const std::string& rel_name, const std::vector<std::string>& attrs) {
        const Relation& rel = catalog.get(rel_name);
        for (const auto& attr : attrs) {
            if (rel.column_index(attr) < 0) {
                raise(ErrorKind::Resolve,
                      "unknown attribute '" + attr + "' in relation '" + rel_name + "'");
            }
        }
    };

    for (const auto& key : constraints.unique_keys) {
        check_attrs(key.relation, key.attributes);
        const Relation& rel = catalog.get(key.relation);
        std::vector<int> cols;
        for (const auto& attr : key.attributes) cols.push_back(rel.column_index(attr));
        std::unordered_set<Row, RowHash, RowEq> seen;
        seen.reserve(rel.cardinality());
        for (size_t r = 0; r < rel.cardinality(); ++r) {
            Row key_row;
            key_row.reserve(cols.size());
            for (int c : cols) key_row.push_back(rel.at(r, c));
            if (!seen.insert(key_row).second) {
                std::string attrs;
                for (const auto& a : key.attributes) attrs += (attrs.empty() ? "" : ",") + a;
                raise(ErrorKind::Constraint, "declared unique key " + key.relation + "(" + attrs +
                                                 ") has duplicate values in the data");
            }
        }
    }
    for (const auto& fk : constraints.foreign_keys) {
        check_attrs(fk.referencing_relation, fk.referencing_attributes);
        check_attrs(fk.referenced_relation, fk.referenced_attributes);
        if (!constraints.has_unique_key_within(fk.referenced_relation, fk.referenced_attributes)) {
            raise(ErrorKind::Constraint,
                  "foreign key into " + fk.referenced_relation +
                      " must reference a declared unique key");
        }
    }
    catalog.constraints_ = constraints;
    return catalog;
}

namespace {

// Parses `rel(a, b)`; returns {rel, attrs}.
std::pair<std::string, std::vector<std::string>> parse_key_ref(const std::string& text,
                                                               size_t line_no) {
    auto open = text.find('(');
    auto close = text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        raise(ErrorKind::Parse,
              "constraint line " + std::to_string(line_no) + ": expected rel(attrs)");
    }
    std::string rel = strip(text.substr(0, open));
    std::vector<std::string> attrs;
    std::string inside = text.substr(open + 1, close - open - 1);
    std::stringstream ss(inside);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::string a = strip(item);
        if (!a.empty()) attrs.push_back(a);
    }
    if (rel.empty() || attrs.empty()) {
        raise(ErrorKind::Parse,
              "constraint line " + std::to_string(line_no) + ": expected rel(attrs)");
    }
    return {rel, attrs};
}

} // namespace

Constraints parse_constraints_text(const std::string& text) {
    Constraints out;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = strip(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.rfind("unique", 0) == 0) {
            auto [rel, attrs] = parse_key_ref(strip(t.substr(6)), line_no);
            out.unique_keys.push_back({rel, attrs});
        } else if (t.rfind("fk", 0) == 0) {
            auto arrow = t.find("->");
            if (arrow == std::string::npos) {
                raise(ErrorKind::Parse,
                      "constraint line " + std::to_string(line_no) + ": fk needs '->'");
            }
            auto [from_rel, from_attrs] = parse_key_ref(strip(t.substr(2, arrow - 2)), line_no);
            auto [to_rel, to_attrs] = parse_key_ref(strip(t.substr(arrow + 2)), line_no);
            if (from_attrs.size() != to_attrs.size()) {
                raise(ErrorKind::Parse, "constraint line " + std::to_string(line_no) +
                                            ": fk attribute counts differ");
            }
            out.foreign_keys.push_back({from_rel, from_attrs, to_rel, to_attrs});
        } else {
            raise(ErrorKind::Parse, "constraint line " + std::to_string(line_no) +
                                        ": expected 'unique' or 'fk'");
        }
    }
    return out;
}

Constraints parse_constraints_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::Io, "cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_constraints_text(buffer.str());
}

} // namespace aggjoin
