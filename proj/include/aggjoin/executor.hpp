#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aggjoin/catalog.hpp"
#include "aggjoin/plan.hpp"

namespace aggjoin {

struct ExecColumn {
    std::string name;
    AttributeType type;
};

/// Runtime relation: canonical-named columns, optional frequency vector c
/// (strictly positive unsigned counts), Agg columns stored as plain columns.
struct ExecRelation {
    std::vector<ExecColumn> columns;
    std::vector<Value> data; // row-major
    size_t rows = 0;
    bool has_freq = false;
    std::vector<uint64_t> freq;

    size_t arity() const { return columns.size(); }
    std::span<const Value> row(size_t i) const {
        return std::span<const Value>(data.data() + i * arity(), arity());
    }
    const Value& at(size_t r, size_t c) const { return data[r * arity() + c]; }
    int column_index(const std::string& name) const;
    int require_column(const std::string& name) const;
    void append_row(std::span<const Value> values, uint64_t freq_value = 1);
};

struct OperatorStats {
    int id;
    std::string op;
    uint64_t out_rows;
    double ms;
};

struct ExecStats {
    std::string mode;
    std::string variant;
    double total_ms = 0.0;
    std::vector<OperatorStats> operators;
    uint64_t peak_materialised_tuples = 0;

    void record(int id, std::string op, uint64_t out_rows, double ms);
};

std::string stats_to_json(const ExecStats& stats);

struct ResultTable {
    std::vector<std::string> column_names;
    std::vector<Row> rows;

    std::string to_csv() const;
};

/// Appends c=1 plus the node's Agg columns to a filtered base relation and
/// prunes to `output_columns`. Guard specs evaluate f_j per tuple (SUM-style
/// NULL folds to 0, the companion count carries the NULL information; COUNT
/// initialises the 0/1 indicator); ancestor SUM-style columns start at 1 and
/// MIN/MAX columns start at NULL, the combine identity.
ExecRelation init_freq_and_aggs(const ExecRelation& base,
                                const std::vector<AggColumnSpec>& all_specs,
                                const std::vector<int>& guard_specs,
                                const std::vector<int>& ancestor_specs,
                                const std::vector<std::string>& output_columns,
                                bool add_freq);

/// Frequency- and aggregate-propagating join, hash flavour. Output carries
/// exactly R's schema and only R tuples with at least one partner in S; per
/// emitted tuple c multiplies by the partner frequency sum sc, I_S columns
/// combine with the partner aggregate (MIN/MAX) or multiply by the partner
/// sum (SUM-style), and I_R SUM-style columns multiply by sc.
ExecRelation agg_hash_join(const ExecRelation& r, const ExecRelation& s,
                           const std::vector<std::string>& keys,
                           const std::vector<AggColumnSpec>& all_specs,
                           const std::vector<int>& child_specs,
                           const std::vector<int>& parent_specs);

/// Sort-merge flavour; multiset-identical output, emitted in key order.
ExecRelation agg_merge_join(const ExecRelation& r, const ExecRelation& s,
                            const std::vector<std::string>& keys,
                            const std::vector<AggColumnSpec>& all_specs,
                            const std::vector<int>& child_specs,
                            const std::vector<int>& parent_specs);

ExecRelation semi_join(const ExecRelation& r, const ExecRelation& s,
                       const std::vector<std::string>& keys);

ExecRelation group_sum_aggregate(const ExecRelation& input,
                                 const std::vector<std::string>& group_columns,
                                 const std::vector<GroupCombine>& combines);

ResultTable final_aggregate(const ExecRelation& root,
                            const std::vector<FinalAggregateSpec>& specs,
                            const std::vector<std::string>& group_columns,
                            const std::vector<std::string>& group_names, bool has_freq);

struct ExecutionResult {
    ResultTable table;
    ExecStats stats;
    ExecRelation root_relation; // FinalAggregate input, for inspection
};

ExecutionResult execute(const Plan& plan, const Catalog& catalog, ExecVariant variant);

} // namespace aggjoin
