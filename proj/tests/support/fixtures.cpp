#include "fixtures.hpp"

#include <cmath>
#include <sstream>

#include "aggjoin/parser.hpp"

namespace aggjoin::testing {

std::string source_dir() { return AGGJOIN_SOURCE_DIR; }

std::string data_dir(const std::string& name) { return source_dir() + "/data/" + name; }

std::string query_path(const std::string& name) { return source_dir() + "/queries/" + name; }

Catalog load_tpch_toy() {
    Catalog catalog;
    std::string dir = data_dir("tpch_toy");
    for (const char* name : {"region", "nation", "supplier", "partsupp", "part"}) {
        catalog.add(load_csv_with_typed_header(dir + "/" + name + ".csv", name));
    }
    return catalog;
}

Catalog load_tpch_toy_ext() {
    Catalog catalog;
    std::string dir = data_dir("tpch_toy_ext");
    for (const char* name : {"region", "nation", "supplier", "partsupp", "part"}) {
        catalog.add(load_csv_with_typed_header(dir + "/" + name + ".csv", name));
    }
    catalog.add(load_edge_list(data_dir("graphs") + "/chain5.el", true));
    return catalog;
}

Query parse_bundled(const std::string& query_file, const Catalog& catalog) {
    return parse_query_file(query_path(query_file), catalog);
}

namespace {

bool pred_holds(const Predicate& pred, std::span<const Value> atom_row) {
    const Value& v = atom_row[pred.attr.column];
    if (v.is_null()) return false;
    if (pred.is_in_list) {
        for (const auto& cand : pred.in_list) {
            if (v.same_as(cand)) return true;
        }
        return false;
    }
    int c = v.compare(pred.constant);
    switch (pred.op) {
        case CompareOp::Eq: return c == 0;
        case CompareOp::Ne: return c != 0;
        case CompareOp::Lt: return c < 0;
        case CompareOp::Le: return c <= 0;
        case CompareOp::Gt: return c > 0;
        case CompareOp::Ge: return c >= 0;
    }
    return false;
}

} // namespace

std::vector<Row> enumerate_join(const Query& query, const Catalog& catalog) {
    std::vector<const Relation*> rels;
    std::vector<size_t> offsets{0};
    for (const auto& atom : query.atoms) {
        rels.push_back(&catalog.get(atom.relation));
        offsets.push_back(offsets.back() + rels.back()->arity());
    }
    std::vector<Row> out;
    Row current(offsets.back());
    std::vector<size_t> choice(query.atoms.size(), 0);

    // Depth-first over one row per atom.
    size_t depth = 0;
    while (true) {
        if (choice[depth] >= rels[depth]->cardinality()) {
            if (depth == 0) break;
            choice[depth] = 0;
            --depth;
            ++choice[depth];
            continue;
        }
        auto row = rels[depth]->row(choice[depth]);
        std::copy(row.begin(), row.end(), current.begin() + offsets[depth]);

        bool ok = true;
        for (const auto& pred : query.atoms[depth].local_predicates) {
            ok = ok && pred_holds(pred, row);
        }
        for (const auto& jc : query.join_conditions) {
            if (!ok) break;
            size_t hi = std::max(jc.left.atom, jc.right.atom);
            if (hi != depth) continue;
            const Value& l = current[offsets[jc.left.atom] + jc.left.column];
            const Value& r = current[offsets[jc.right.atom] + jc.right.column];
            ok = !l.is_null() && !r.is_null() && l.same_as(r);
        }
        if (!ok) {
            ++choice[depth];
            continue;
        }
        if (depth + 1 == query.atoms.size()) {
            out.push_back(current);
            ++choice[depth];
        } else {
            ++depth;
            choice[depth] = 0;
        }
    }
    return out;
}

bool values_close(const Value& a, const Value& b) {
    if (a.is_null() || b.is_null()) return a.is_null() && b.is_null();
    bool na = a.tag() == Value::Tag::Int || a.tag() == Value::Tag::Float;
    bool nb = b.tag() == Value::Tag::Int || b.tag() == Value::Tag::Float;
    if (na && nb) {
        if (a.tag() == Value::Tag::Int && b.tag() == Value::Tag::Int) {
            return a.as_int() == b.as_int();
        }
        double x = a.numeric(), y = b.numeric();
        double scale = std::max({1e-12, std::fabs(x), std::fabs(y)});
        return std::fabs(x - y) <= 1e-9 * scale;
    }
    return a.same_as(b);
}

bool tables_close(const ResultTable& a, const ResultTable& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (size_t r = 0; r < a.rows.size(); ++r) {
        if (a.rows[r].size() != b.rows[r].size()) return false;
        for (size_t c = 0; c < a.rows[r].size(); ++c) {
            if (!values_close(a.rows[r][c], b.rows[r][c])) return false;
        }
    }
    return true;
}

std::string table_diff(const ResultTable& a, const ResultTable& b) {
    std::ostringstream out;
    out << "left (" << a.rows.size() << " rows):\n" << a.to_csv();
    out << "right (" << b.rows.size() << " rows):\n" << b.to_csv();
    return out.str();
}

} // namespace aggjoin::testing
