#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aggjoin/relation.hpp"

namespace aggjoin {

struct UniqueKey {
    std::string relation;
    std::vector<std::string> attributes;
};

struct ForeignKey {
    std::string referencing_relation;
    std::vector<std::string> referencing_attributes;
    std::string referenced_relation;
    std::vector<std::string> referenced_attributes;
};

/// Declared keys, registered explicitly (the engine has no DDL). Referenced
/// attributes of every foreign key must be a declared unique key.
struct Constraints {
    std::vector<UniqueKey> unique_keys;
    std::vector<ForeignKey> foreign_keys;

    bool empty() const { return unique_keys.empty() && foreign_keys.empty(); }

    bool has_unique_key_within(const std::string& relation,
                               const std::vector<std::string>& attributes) const;
    bool has_foreign_key(const std::string& from_rel,
                         const std::vector<std::string>& from_attrs,
                         const std::string& to_rel,
                         const std::vector<std::string>& to_attrs) const;
};

class Catalog {
public:
    void add(Relation relation);
    bool contains(const std::string& name) const;
    const Relation& get(const std::string& name) const;
    std::vector<std::string> relation_names() const;

    const Constraints& constraints() const { return constraints_; }

private:
    friend Catalog& register_constraints(Catalog& catalog, const Constraints& constraints);
    std::map<std::string, Relation> relations_;
    Constraints constraints_;
};

/// CSV ingestion. The file may start with a header line repeating the schema
/// names (it is skipped); every other line is data. Empty fields are NULL.
/// Dialect: comma-separated, double-quote quoting with "" as an escaped
/// quote, UTF-8, no multi-line fields.
Relation load_csv(const std::string& path, const std::string& name, const Schema& schema);

/// Self-describing CSV: header cells are `name:type`.
Relation load_csv_with_typed_header(const std::string& path, const std::string& name);

/// SNAP-style edge list: whitespace-separated node-id pairs, '#' comment
/// lines. Produces relation "edge" (fromNode:Int64, toNode:Int64); an
/// undirected load emits both (u,v) and (v,u) for every input line.
Relation load_edge_list(const std::string& path, bool directed);

/// Attaches constraints after validating that every declared unique key holds
/// in the loaded data and that foreign keys reference declared unique keys.
Catalog& register_constraints(Catalog& catalog, const Constraints& constraints);

/// Constraint file syntax, one entry per line ('#' comments allowed):
///   unique <rel>(<attr>[, <attr>...])
///   fk <rel>(<attrs>) -> <rel>(<attrs>)
Constraints parse_constraints_file(const std::string& path);
Constraints parse_constraints_text(const std::string& text);

} // namespace aggjoin
