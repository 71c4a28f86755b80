#pragma once

#include <string>

#include "aggjoin/catalog.hpp"
#include "aggjoin/query.hpp"

namespace aggjoin {

/// Parses one statement of the supported subset:
///   SELECT <agg or group attr list> FROM <rel [alias] list>
///   [WHERE <AND-conjunction of equi-joins and local predicates>]
///   [GROUP BY <attr list>] [;]
///
/// Everything is resolved against the catalog. Rejections are specific:
/// inequality between two atoms -> NotSupported("theta-join"), nested
/// SELECT -> NotSupported("subquery — decorrelate first"), unresolved or
/// ambiguous attributes -> Resolve errors with the offending name.
Query parse_query(const std::string& text, const Catalog& catalog);

/// Canonical SQL form of a query; parse(render(q)) == q on the subset.
std::string render_query(const Query& query);

Query parse_query_file(const std::string& path, const Catalog& catalog);

} // namespace aggjoin
