#include "aggjoin/classifier.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "aggjoin/error.hpp"

namespace aggjoin {

namespace {

std::set<int> vertices_of(const std::vector<AttrRef>& attrs, const Hypergraph& hg) {
    std::set<int> out;
    for (const auto& a : attrs) out.insert(hg.vertex_of(a));
    return out;
}

bool atom_covers(const Hypergraph& hg, int atom, const std::set<int>& vertices) {
    return std::includes(hg.edges[atom].begin(), hg.edges[atom].end(), vertices.begin(),
                         vertices.end());
}

} // namespace

const char* to_string(QueryClass cls) {
    switch (cls) {
        case QueryClass::ZeroMA: return "zero-ma";
        case QueryClass::Guarded: return "guarded";
        case QueryClass::PiecewiseGuarded: return "piecewise-guarded";
        case QueryClass::NotApplicable: return "not-applicable";
    }
    return "?";
}

const char* to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::None: return "none";
        case RejectReason::Cyclic: return "cyclic";
        case RejectReason::UnguardedAggregate: return "unguarded-aggregate";
        case RejectReason::UnguardedGrouping: return "unguarded-grouping";
        case RejectReason::NonRootStatisticalAggregate: return "non-root-statistical-aggregate";
    }
    return "?";
}

Classification Classification::not_applicable(RejectReason reason) {
    Classification cls;
    cls.query_class = QueryClass::NotApplicable;
    cls.reason = reason;
    return cls;
}

std::optional<int> find_full_guard(const Query& query, const Hypergraph& hg) {
    std::set<int> required = vertices_of(query.group_by, hg);
    for (const auto& agg : query.aggregates) {
        auto vs = vertices_of(agg.attributes(), hg);
        required.insert(vs.begin(), vs.end());
    }
    for (size_t a = 0; a < query.atoms.size(); ++a) {
        if (atom_covers(hg, static_cast<int>(a), required)) return static_cast<int>(a);
    }
    return std::nullopt;
}

std::vector<int> find_root_guard_candidates(const Query& query, const Hypergraph& hg) {
    std::set<int> required = vertices_of(query.group_by, hg);
    for (const auto& agg : query.aggregates) {
        if (!is_relaxed_aggregate(agg.function)) {
            auto vs = vertices_of(agg.attributes(), hg);
            required.insert(vs.begin(), vs.end());
        }
    }
    std::vector<int> out;
    for (size_t a = 0; a < query.atoms.size(); ++a) {
        if (atom_covers(hg, static_cast<int>(a), required)) out.push_back(static_cast<int>(a));
    }
    return out;
}

bool all_aggregates_set_safe(const Query& query) {
    return std::all_of(query.aggregates.begin(), query.aggregates.end(),
                       [](const AggregateExpr& a) { return is_set_safe(a.function); });
}

namespace {

// Guard of one aggregate: covering node highest up in the tree rooted at the
// root guard, smallest atom index among equal depths.
int pick_aggregate_guard(const Hypergraph& hg, const JoinTree& rooted,
                         const std::set<int>& vertices) {
    int best = -1, best_depth = -1;
    for (size_t a = 0; a < hg.edges.size(); ++a) {
        if (!atom_covers(hg, static_cast<int>(a), vertices)) continue;
        int d = rooted.depth(static_cast<int>(a));
        if (best < 0 || d < best_depth) {
            best = static_cast<int>(a);
            best_depth = d;
        }
    }
    return best;
}

GuardAssignment assign_guards(const Query& query, const Hypergraph& hg, const JoinTree& tree,
                              int root_guard) {
    GuardAssignment guards;
    guards.root_guard = root_guard;
    JoinTree rooted = reroot(tree, root_guard);
    for (const auto& agg : query.aggregates) {
        guards.aggregate_guard.push_back(
            pick_aggregate_guard(hg, rooted, vertices_of(agg.attributes(), hg)));
    }
    return guards;
}

} // namespace

Classification classify(const Query& query, const Hypergraph& hg, const JoinTree& tree) {
    // Every aggregate needs some covering atom, no matter the class.
    for (const auto& agg : query.aggregates) {
        auto vs = vertices_of(agg.attributes(), hg);
        bool covered = false;
        for (size_t a = 0; a < query.atoms.size() && !covered; ++a) {
            covered = atom_covers(hg, static_cast<int>(a), vs);
        }
        if (!covered) {
            return Classification::not_applicable(RejectReason::UnguardedAggregate);
        }
    }

    Classification cls;
    if (auto guard = find_full_guard(query, hg)) {
        cls.query_class =
            all_aggregates_set_safe(query) ? QueryClass::ZeroMA : QueryClass::Guarded;
        cls.guards = assign_guards(query, hg, tree, *guard);
        return cls;
    }

    std::set<int> group_vs = vertices_of(query.group_by, hg);
    bool grouping_covered = false;
    for (size_t a = 0; a < query.atoms.size() && !grouping_covered; ++a) {
        grouping_covered = atom_covers(hg, static_cast<int>(a), group_vs);
    }
    if (!grouping_covered) {
        return Classification::not_applicable(RejectReason::UnguardedGrouping);
    }

    auto candidates = find_root_guard_candidates(query, hg);
    if (candidates.empty()) {
        return Classification::not_applicable(RejectReason::NonRootStatisticalAggregate);
    }
    cls.query_class = QueryClass::PiecewiseGuarded;
    cls.guards = assign_guards(query, hg, tree, candidates.front());
    return cls;
}

std::string classification_to_json(const Classification& cls, const Query& query) {
    nlohmann::json j;
    j["class"] = to_string(cls.query_class);
    if (cls.query_class == QueryClass::NotApplicable) {
        j["reason"] = to_string(cls.reason);
        return j.dump(2);
    }
    j["root_guard"] = {{"atom", cls.guards.root_guard},
                       {"alias", query.atoms[cls.guards.root_guard].alias},
                       {"relation", query.atoms[cls.guards.root_guard].relation}};
    nlohmann::json agg_guards = nlohmann::json::array();
    for (size_t i = 0; i < cls.guards.aggregate_guard.size(); ++i) {
        int g = cls.guards.aggregate_guard[i];
        agg_guards.push_back({{"aggregate", to_string(query.aggregates[i].function)},
                              {"atom", g},
                              {"alias", query.atoms[g].alias}});
    }
    j["aggregate_guards"] = agg_guards;
    return j.dump(2);
}

} // namespace aggjoin
