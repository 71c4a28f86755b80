#pragma once

#include "aggjoin/catalog.hpp"
#include "aggjoin/classifier.hpp"
#include "aggjoin/plan.hpp"

namespace aggjoin {

/// Propagated Agg column placement for every aggregate whose guard is not the
/// root: MIN/MAX get one column, COUNT gets a 0/1-initialised count column,
/// SUM and AVG get a value column plus a companion count column. Aggregates
/// guarded by the root itself place nothing.
std::vector<AggColumnSpec> place_piecewise_aggregates(const Query& query, const Hypergraph& hg,
                                                      const JoinTree& rooted_tree,
                                                      const Classification& cls);

/// Rewrites the query's aggregate list against the frequency column and the
/// placed Agg columns. `has_freq` is false for plans that never create c
/// (single-atom plans and 0MA semi-join plans); those evaluate textbook-style.
std::vector<FinalAggregateSpec> rewrite_final_aggregates(const Query& query,
                                                         const Hypergraph& hg,
                                                         const Classification& cls,
                                                         const std::vector<AggColumnSpec>& specs,
                                                         bool has_freq);

/// Builds the logical plan for an applicable classification. The tree must
/// already be rerooted at cls.guards.root_guard.
Plan build_plan(const Query& query, const Hypergraph& hg, const JoinTree& rooted_tree,
                const Classification& cls, Mode mode);

/// FK/PK refinements: (a) provably one-partner frequency-1 links become
/// semi-joins, (b) GroupSum nodes with provably singleton groups disappear,
/// (c) non-unique child join inputs get a pre-grouping GroupSum. A no-op
/// without registered constraints. Idempotent.
void apply_fkpk(Plan& plan, const Query& query, const Hypergraph& hg,
                const Constraints& constraints);

struct PlannedQuery {
    Hypergraph hypergraph;
    JoinTree tree; // rerooted at the root guard
    Classification classification;
    Plan plan;
};

/// Convenience pipeline: hypergraph, GYO, classify, reroot, build. Throws
/// Error(NotApplicable) when the classification rejects the query and
/// CyclicError when there is no join tree.
PlannedQuery plan_query(const Query& query, const Catalog& catalog, Mode mode,
                        bool with_fkpk = false);

} // namespace aggjoin
