#pragma once

#include <memory>
#include <string>
#include <vector>

#include "aggjoin/catalog.hpp"
#include "aggjoin/value.hpp"

namespace aggjoin {

enum class AggregateFunction {
    CountStar,
    Count,
    CountDistinct,
    Sum,
    Avg,
    Min,
    Max,
    Median,
    Percentile,
    Variance,
    Stddev,
    Corr,
};

const char* to_string(AggregateFunction fn);

/// The relaxed family: these may be guarded off-root in a piecewise-guarded
/// query. Everything else needs the root guard.
bool is_relaxed_aggregate(AggregateFunction fn);

/// Result unchanged under duplicate elimination.
bool is_set_safe(AggregateFunction fn);

/// Attribute reference, resolved to (atom index, column index) after parsing.
struct AttrRef {
    int atom = -1;
    int column = -1;
    std::string text; // as written in the query, for rendering and messages

    bool operator==(const AttrRef& other) const {
        return atom == other.atom && column == other.column;
    }
};

/// Scalar expression over one atom's attributes: constants and + - * /.
struct ScalarExpr {
    enum class Kind { Const, Attr, Add, Sub, Mul, Div, Neg };
    Kind kind = Kind::Const;
    Value constant;
    AttrRef attr;
    std::unique_ptr<ScalarExpr> left, right;

    static std::unique_ptr<ScalarExpr> make_const(Value v);
    static std::unique_ptr<ScalarExpr> make_attr(AttrRef a);
    static std::unique_ptr<ScalarExpr> make_binary(Kind k, std::unique_ptr<ScalarExpr> l,
                                                   std::unique_ptr<ScalarExpr> r);
    static std::unique_ptr<ScalarExpr> make_neg(std::unique_ptr<ScalarExpr> e);

    std::unique_ptr<ScalarExpr> clone() const;
    void collect_attrs(std::vector<AttrRef>& out) const;
    std::string render() const;
};

struct AggregateExpr {
    AggregateFunction function;
    std::unique_ptr<ScalarExpr> expr;   // null for COUNT(*)
    std::unique_ptr<ScalarExpr> expr2;  // second argument of CORR
    double fraction = 0.5;              // PERCENTILE only
    std::string alias;

    std::vector<AttrRef> attributes() const;
    AggregateExpr clone() const;
};

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

const char* to_string(CompareOp op);

/// Local predicate on a single atom: attr <op> constant, or attr IN (list).
struct Predicate {
    AttrRef attr;
    bool is_in_list = false;
    CompareOp op = CompareOp::Eq;
    Value constant;
    std::vector<Value> in_list;

    std::string render() const;
};

struct QueryAtom {
    std::string relation;
    std::string alias;
    std::vector<Predicate> local_predicates;
};

/// Equality between attributes of two distinct atoms.
struct JoinCondition {
    AttrRef left;
    AttrRef right;
};

/// A resolved aggregate query: grouping and aggregates over an equi-join of
/// the atoms, with per-atom selections already separated out.
struct Query {
    std::vector<QueryAtom> atoms;
    std::vector<JoinCondition> join_conditions;
    std::vector<AttrRef> group_by;
    std::vector<AggregateExpr> aggregates;

    Query clone() const;
};

} // namespace aggjoin
