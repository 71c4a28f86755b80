#pragma once

#include <memory>
#include <string>
#include <vector>

#include "aggjoin/classifier.hpp"
#include "aggjoin/jointree.hpp"
#include "aggjoin/query.hpp"

namespace aggjoin {

enum class Mode { Baseline, GuAO, GuAOPlus };
enum class ExecVariant { Hash, Merge };

const char* to_string(Mode mode);
const char* to_string(ExecVariant variant);

/// One propagated aggregate column: placed on every node along the path from
/// the guard up to the root. SUM-combine columns on strict ancestors start
/// at 1; MIN/MAX columns start at NULL (the combine identity).
struct AggColumnSpec {
    enum class Combine { Min, Max, Sum };
    enum class Init { GuardExpr, NullIndicator }; // NullIndicator: 0 if f_j is NULL, else 1

    int aggregate_index = -1;
    Combine combine = Combine::Sum;
    Init init = Init::GuardExpr;
    AttributeType type = AttributeType::Int64;
    int guard_node = -1;
    std::vector<int> path; // guard -> ... -> root, inclusive
    std::string column;
    std::unique_ptr<ScalarExpr> expr; // f_j with attrs rewritten to canonical names

    AggColumnSpec clone() const;
};

/// Final-aggregate evaluation recipe after rewriting against the frequency
/// column c and any propagated Agg columns.
struct FinalAggregateSpec {
    enum class Eval {
        SumFreq,             // COUNT(*)        -> SUM(c)
        CountWeighted,       // COUNT(B)        -> SUM(IF(ISNULL(B), 0, c))
        SumWeighted,         // SUM(B)          -> SUM(B * c)
        AvgWeighted,         // SUM(B * c) / COUNT(B)
        PercentileWeighted,  // MEDIAN/PERCENTILE over (B, c), PERCENTILE_CONT
        VarianceWeighted,
        StddevWeighted,
        CorrWeighted,
        MinPlain,            // set-safe: ignore c
        MaxPlain,
        CountDistinctPlain,
        AggColumnMin,        // read the propagated column
        AggColumnMax,
        AggColumnSum,        // NULL when the companion count is 0
        AggColumnCount,
        AggColumnAvg,
    };

    AggregateFunction function = AggregateFunction::CountStar;
    Eval eval = Eval::SumFreq;
    std::string output_name;
    std::unique_ptr<ScalarExpr> expr, expr2; // canonical-name exprs over the root
    double fraction = 0.5;
    std::string agg_column;   // value column for AggColumn* evals
    std::string count_column; // companion count column (sum/avg)
    bool sample_variance = false;

    FinalAggregateSpec clone() const;
};

struct ProjectEntry {
    enum class Kind { Pass, CombineSum, CombineMin, CombineMax, ScaleSumByChildFreq };
    Kind kind = Kind::Pass;
    std::string out;
    std::string a; // source column
    std::string b; // second source (child-side column)
};

struct GroupCombine {
    std::string column;
    AggColumnSpec::Combine combine = AggColumnSpec::Combine::Sum;
};

struct PlanNode {
    enum class Op { Scan, Filter, FreqInit, Join, AggJoin, SemiJoin, GroupSum, Project, FinalAggregate };
    Op op;
    int id = -1;

    // Scan
    int atom = -1;
    std::string relation_name;

    // Filter
    std::vector<Predicate> predicates;

    // FreqInit / leaf projection: canonical output attributes, plus which
    // Agg specs initialise here (guard) or start as identities (ancestor).
    std::vector<std::string> output_columns;
    std::vector<int> guard_inits;
    std::vector<int> ancestor_inits;
    bool add_freq = true;

    // Join / SemiJoin / AggJoin
    std::vector<std::string> keys;
    int parent_atom = -1, child_atom = -1;
    std::vector<int> child_aggs;  // I_S: spec indices carried by the child side
    std::vector<int> parent_aggs; // I_R: spec indices present only on the parent side

    // Project
    std::vector<ProjectEntry> project;
    bool multiply_child_freq = false;

    // GroupSum
    std::vector<std::string> group_columns;
    std::vector<GroupCombine> combines;

    // FinalAggregate
    std::vector<std::string> final_group_columns;
    std::vector<std::string> final_group_names;
    std::vector<FinalAggregateSpec> finals;
    bool has_freq = true;

    std::vector<std::unique_ptr<PlanNode>> children;

    std::unique_ptr<PlanNode> clone() const;
};

const char* to_string(PlanNode::Op op);

struct Plan {
    Mode mode = Mode::GuAO;
    QueryClass query_class = QueryClass::Guarded;
    std::unique_ptr<PlanNode> root;
    std::vector<AggColumnSpec> agg_specs;

    Plan clone() const;
};

std::string render_plan_text(const Plan& plan);
std::string render_plan_dot(const Plan& plan);

} // namespace aggjoin
