#pragma once

#include <cstdint>

#include "aggjoin/catalog.hpp"
#include "aggjoin/executor.hpp"
#include "aggjoin/query.hpp"

namespace aggjoin {

struct NaiveResult {
    ResultTable table;
    ExecStats stats;
    uint64_t full_join_rows = 0;
};

/// Reference evaluator: materialises the full left-deep join of all atoms in
/// query order (hash joins, local filters pushed to scans), then groups and
/// evaluates the aggregates textbook-style over the materialised rows. Kept
/// deliberately simple; this is the correctness oracle.
///
/// Every join's exact output cardinality is computed from group sizes before
/// materialising; exceeding tuple_budget raises Error(Budget) without
/// allocating the blown-up intermediate.
NaiveResult naive_execute(const Query& query, const Catalog& catalog, uint64_t tuple_budget);

/// Number of homomorphisms of the directed path with `path_edges` edges into
/// the edge relation, via dynamic programming over edges (checked
/// arithmetic). Independent of both evaluators; used when the naive join
/// would blow the budget.
uint64_t count_walks(const Relation& edges, int path_edges);

} // namespace aggjoin
