#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aggjoin/jointree.hpp"
#include "aggjoin/query.hpp"

namespace aggjoin {

enum class QueryClass { ZeroMA, Guarded, PiecewiseGuarded, NotApplicable };

enum class RejectReason {
    None,
    Cyclic,
    UnguardedAggregate,
    UnguardedGrouping,
    NonRootStatisticalAggregate,
};

const char* to_string(QueryClass cls);
const char* to_string(RejectReason reason);

struct GuardAssignment {
    int root_guard = -1;
    // aggregate index -> tree node guarding it (the covering node highest up
    // in the tree rooted at root_guard; equal-depth ties -> smallest atom).
    std::vector<int> aggregate_guard;
};

struct Classification {
    QueryClass query_class = QueryClass::NotApplicable;
    RejectReason reason = RejectReason::None;
    GuardAssignment guards;

    bool applicable() const { return query_class != QueryClass::NotApplicable; }
    static Classification not_applicable(RejectReason reason);
};

/// Coverage predicates, exposed for the fragment-containment tests.
/// An atom covers an attribute set when its hyperedge contains every vertex.
std::optional<int> find_full_guard(const Query& query, const Hypergraph& hypergraph);
std::vector<int> find_root_guard_candidates(const Query& query, const Hypergraph& hypergraph);
bool all_aggregates_set_safe(const Query& query);

/// Classifies an acyclic query against the tree built from it. The caller
/// must reroot the tree at guards.root_guard before planning. Cyclic queries
/// never reach this function; build Classification::not_applicable(Cyclic)
/// from the CyclicError instead.
Classification classify(const Query& query, const Hypergraph& hypergraph, const JoinTree& tree);

std::string classification_to_json(const Classification& cls, const Query& query);

} // namespace aggjoin
