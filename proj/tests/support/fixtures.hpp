#pragma once

#include <string>
#include <vector>

#include "aggjoin/catalog.hpp"
#include "aggjoin/executor.hpp"
#include "aggjoin/query.hpp"

namespace aggjoin::testing {

std::string source_dir();
std::string data_dir(const std::string& name);
std::string query_path(const std::string& name);

/// tpch_toy: five-relation star with duplicate keys and dangling tuples.
/// tpch_toy_ext: same shape plus r_x / p_y / ps_supplycost and the chain5 edges.
Catalog load_tpch_toy();
Catalog load_tpch_toy_ext();

Query parse_bundled(const std::string& query_file, const Catalog& catalog);

/// Independent nested-loop evaluation of the query's join (no hashing, no
/// semi-joins): every combination of one row per atom, checked against all
/// join conditions and local predicates. The flat row layout matches the
/// naive evaluator's (atom-major). Exponential; toy inputs only.
std::vector<Row> enumerate_join(const Query& query, const Catalog& catalog);

/// Value comparison with 1e-9 relative tolerance on floats.
bool values_close(const Value& a, const Value& b);
bool tables_close(const ResultTable& a, const ResultTable& b);
std::string table_diff(const ResultTable& a, const ResultTable& b);

} // namespace aggjoin::testing
