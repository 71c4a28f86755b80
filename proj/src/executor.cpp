#include "aggjoin/executor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "aggjoin/error.hpp"

namespace aggjoin {

namespace {

// --- checked arithmetic -----------------------------------------------------

uint64_t add_u64(uint64_t a, uint64_t b, const char* op) {
    uint64_t out;
    if (__builtin_add_overflow(a, b, &out)) {
        raise(ErrorKind::Overflow, std::string("unsigned 64-bit overflow in ") + op);
    }
    return out;
}

uint64_t mul_u64(uint64_t a, uint64_t b, const char* op) {
    uint64_t out;
    if (__builtin_mul_overflow(a, b, &out)) {
        raise(ErrorKind::Overflow, std::string("unsigned 64-bit overflow in ") + op);
    }
    return out;
}

int64_t add_i64(int64_t a, int64_t b, const char* op) {
    int64_t out;
    if (__builtin_add_overflow(a, b, &out)) {
        raise(ErrorKind::Overflow, std::string("signed 64-bit overflow in ") + op);
    }
    return out;
}

int64_t mul_i64(int64_t a, int64_t b, const char* op) {
    int64_t out;
    if (__builtin_mul_overflow(a, b, &out)) {
        raise(ErrorKind::Overflow, std::string("signed 64-bit overflow in ") + op);
    }
    return out;
}

int64_t i64_from_u64(uint64_t v, const char* op) {
    if (v > static_cast<uint64_t>(std::numeric_limits<int64_t>::max())) {
        raise(ErrorKind::Overflow, std::string("count exceeds signed 64-bit range in ") + op);
    }
    return static_cast<int64_t>(v);
}

// --- value-level combine helpers ---------------------------------------------

Value numeric_mul(const Value& a, const Value& b, AttributeType type, const char* op) {
    if (a.is_null() || b.is_null()) return Value::null();
    if (type == AttributeType::Int64) return Value::from_int(mul_i64(a.as_int(), b.as_int(), op));
    return Value::from_float(a.numeric() * b.numeric());
}

Value numeric_mul_count(const Value& a, uint64_t count, AttributeType type, const char* op) {
    if (a.is_null()) return Value::null();
    if (type == AttributeType::Int64) {
        return Value::from_int(mul_i64(a.as_int(), i64_from_u64(count, op), op));
    }
    return Value::from_float(a.numeric() * static_cast<double>(count));
}

Value numeric_add(const Value& a, const Value& b, AttributeType type, const char* op) {
    if (a.is_null()) return b;
    if (b.is_null()) return a;
    if (type == AttributeType::Int64) return Value::from_int(add_i64(a.as_int(), b.as_int(), op));
    return Value::from_float(a.numeric() + b.numeric());
}

// NULL is the identity; SQL MIN/MAX skip NULLs.
Value minmax_combine(const Value& a, const Value& b, bool is_min) {
    if (a.is_null()) return b;
    if (b.is_null()) return a;
    int c = a.compare(b);
    return (is_min ? c <= 0 : c >= 0) ? a : b;
}

Value combine_values(const Value& a, const Value& b, AggColumnSpec::Combine combine,
                     AttributeType type, const char* op) {
    switch (combine) {
        case AggColumnSpec::Combine::Min: return minmax_combine(a, b, true);
        case AggColumnSpec::Combine::Max: return minmax_combine(a, b, false);
        case AggColumnSpec::Combine::Sum: return numeric_add(a, b, type, op);
    }
    return Value::null();
}

// --- expression evaluation over canonical rows --------------------------------

using ColumnIndex = std::unordered_map<std::string, int>;

ColumnIndex make_index(const ExecRelation& rel) {
    ColumnIndex idx;
    for (size_t i = 0; i < rel.columns.size(); ++i) {
        idx.emplace(rel.columns[i].name, static_cast<int>(i));
    }
    return idx;
}

Value eval_expr(const ScalarExpr& e, std::span<const Value> row, const ColumnIndex& idx) {
    switch (e.kind) {
        case ScalarExpr::Kind::Const:
            return e.constant;
        case ScalarExpr::Kind::Attr: {
            auto it = idx.find(e.attr.text);
            if (it == idx.end()) {
                raise(ErrorKind::Internal, "expression references missing column " + e.attr.text);
            }
            return row[it->second];
        }
        case ScalarExpr::Kind::Neg: {
            Value v = eval_expr(*e.left, row, idx);
            if (v.is_null()) return v;
            if (v.tag() == Value::Tag::Int) return Value::from_int(mul_i64(v.as_int(), -1, "negate"));
            if (v.tag() == Value::Tag::Float) return Value::from_float(-v.as_float());
            raise(ErrorKind::Eval, "negation of a non-numeric value");
        }
        default: {
            Value l = eval_expr(*e.left, row, idx);
            Value r = eval_expr(*e.right, row, idx);
            if (l.is_null() || r.is_null()) return Value::null();
            bool numeric = (l.tag() == Value::Tag::Int || l.tag() == Value::Tag::Float) &&
                           (r.tag() == Value::Tag::Int || r.tag() == Value::Tag::Float);
            if (!numeric) raise(ErrorKind::Eval, "arithmetic over non-numeric values");
            bool both_int = l.tag() == Value::Tag::Int && r.tag() == Value::Tag::Int;
            switch (e.kind) {
                case ScalarExpr::Kind::Add:
                    return both_int ? Value::from_int(add_i64(l.as_int(), r.as_int(), "expression"))
                                    : Value::from_float(l.numeric() + r.numeric());
                case ScalarExpr::Kind::Sub:
                    return both_int
                               ? Value::from_int(add_i64(l.as_int(), mul_i64(r.as_int(), -1, "expression"), "expression"))
                               : Value::from_float(l.numeric() - r.numeric());
                case ScalarExpr::Kind::Mul:
                    return both_int ? Value::from_int(mul_i64(l.as_int(), r.as_int(), "expression"))
                                    : Value::from_float(l.numeric() * r.numeric());
                case ScalarExpr::Kind::Div: {
                    double d = r.numeric();
                    if (d == 0.0) raise(ErrorKind::Eval, "division by zero");
                    return Value::from_float(l.numeric() / d);
                }
                default:
                    raise(ErrorKind::Internal, "bad expression kind");
            }
        }
    }
}

std::vector<int> resolve_columns(const ExecRelation& rel, const std::vector<std::string>& names) {
    std::vector<int> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(rel.require_column(n));
    return out;
}

Row key_of(const ExecRelation& rel, size_t row, const std::vector<int>& cols) {
    Row key;
    key.reserve(cols.size());
    for (int c : cols) key.push_back(rel.at(row, c));
    return key;
}

bool key_has_null(const Row& key) {
    return std::any_of(key.begin(), key.end(), [](const Value& v) { return v.is_null(); });
}

int key_compare(const Row& a, const Row& b) {
    for (size_t i = 0; i < a.size(); ++i) {
        int c = a[i].compare(b[i]);
        if (c != 0) return c;
    }
    return 0;
}

} // namespace

// --- ExecRelation --------------------------------------------------------------

int ExecRelation::column_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

int ExecRelation::require_column(const std::string& name) const {
    int idx = column_index(name);
    if (idx < 0) raise(ErrorKind::Internal, "missing runtime column '" + name + "'");
    return idx;
}

void ExecRelation::append_row(std::span<const Value> values, uint64_t freq_value) {
    data.insert(data.end(), values.begin(), values.end());
    if (has_freq) freq.push_back(freq_value);
    ++rows;
}

void ExecStats::record(int id, std::string op, uint64_t out_rows, double ms) {
    operators.push_back({id, std::move(op), out_rows, ms});
    peak_materialised_tuples = std::max(peak_materialised_tuples, out_rows);
}

std::string stats_to_json(const ExecStats& stats) {
    nlohmann::json j;
    j["mode"] = stats.mode;
    j["variant"] = stats.variant;
    j["total_ms"] = stats.total_ms;
    nlohmann::json ops = nlohmann::json::array();
    for (const auto& op : stats.operators) {
        ops.push_back({{"id", op.id}, {"op", op.op}, {"out_rows", op.out_rows}, {"ms", op.ms}});
    }
    j["operators"] = ops;
    j["peak_materialised_tuples"] = stats.peak_materialised_tuples;
    return j.dump(2);
}

std::string ResultTable::to_csv() const {
    std::string out;
    for (size_t i = 0; i < column_names.size(); ++i) {
        if (i) out += ",";
        out += column_names[i];
    }
    out += "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            out += row[i].to_display_string();
        }
        out += "\n";
    }
    return out;
}

// --- operators -------------------------------------------------------------------

ExecRelation init_freq_and_aggs(const ExecRelation& base,
                                const std::vector<AggColumnSpec>& all_specs,
                                const std::vector<int>& guard_specs,
                                const std::vector<int>& ancestor_specs,
                                const std::vector<std::string>& output_columns,
                                bool add_freq) {
    ExecRelation out;
    out.has_freq = add_freq;
    std::vector<int> keep = resolve_columns(base, output_columns);
    for (int c : keep) out.columns.push_back(base.columns[c]);
    for (int s : guard_specs) {
        out.columns.push_back({all_specs[s].column, all_specs[s].type});
    }
    for (int s : ancestor_specs) {
        out.columns.push_back({all_specs[s].column, all_specs[s].type});
    }
    ColumnIndex idx = make_index(base);

    Row buffer(out.columns.size());
    for (size_t r = 0; r < base.rows; ++r) {
        auto row = base.row(r);
        size_t slot = 0;
        for (int c : keep) buffer[slot++] = row[c];
        for (int s : guard_specs) {
            const AggColumnSpec& spec = all_specs[s];
            Value v = eval_expr(*spec.expr, row, idx);
            if (spec.init == AggColumnSpec::Init::NullIndicator) {
                buffer[slot++] = Value::from_int(v.is_null() ? 0 : 1);
            } else if (spec.combine == AggColumnSpec::Combine::Sum) {
                // SUM-style guard init: NULL contributes nothing; the
                // companion count column carries the NULL information.
                buffer[slot++] = v.is_null()
                                     ? (spec.type == AttributeType::Int64
                                            ? Value::from_int(0)
                                            : Value::from_float(0.0))
                                     : v;
            } else {
                buffer[slot++] = v;
            }
        }
        for (int s : ancestor_specs) {
            const AggColumnSpec& spec = all_specs[s];
            buffer[slot++] = spec.combine == AggColumnSpec::Combine::Sum ? Value::from_int(1)
                                                                         : Value::null();
        }
        out.append_row(buffer, 1);
    }
    // Ancestor SUM columns of float type still start at integer 1; normalise.
    for (size_t col = 0; col < out.columns.size(); ++col) {
        if (out.columns[col].type == AttributeType::Float64) {
            for (size_t r = 0; r < out.rows; ++r) {
                Value& v = out.data[r * out.arity() + col];
                if (v.tag() == Value::Tag::Int) v = Value::from_float(static_cast<double>(v.as_int()));
            }
        }
    }
    return out;
}

namespace {

struct SideGroup {
    uint64_t sc = 0;
    std::vector<Value> vals; // one per child spec
};

// Aggregates one S-group for the AggJoin: sc plus val_s for each I_S column.
void fold_into_group(SideGroup& group, const ExecRelation& s, size_t row,
                     const std::vector<AggColumnSpec>& all_specs,
                     const std::vector<int>& child_specs, const std::vector<int>& s_cols) {
    group.sc = add_u64(group.sc, s.freq[row], "AggJoin frequency sum");
    for (size_t k = 0; k < child_specs.size(); ++k) {
        const AggColumnSpec& spec = all_specs[child_specs[k]];
        const Value& v = s.at(row, s_cols[k]);
        group.vals[k] =
            combine_values(group.vals[k], v, spec.combine, spec.type, "AggJoin aggregate sum");
    }
}

// Applies a folded S-group to one R tuple (Algorithm-style update).
void apply_group_to_row(Row& row, uint64_t& freq, const SideGroup& group,
                        const std::vector<AggColumnSpec>& all_specs,
                        const std::vector<int>& child_specs, const std::vector<int>& r_child_cols,
                        const std::vector<int>& parent_specs,
                        const std::vector<int>& r_parent_cols) {
    freq = mul_u64(freq, group.sc, "AggJoin frequency product");
    for (size_t k = 0; k < child_specs.size(); ++k) {
        const AggColumnSpec& spec = all_specs[child_specs[k]];
        Value& slot = row[r_child_cols[k]];
        if (spec.combine == AggColumnSpec::Combine::Sum) {
            slot = numeric_mul(slot, group.vals[k], spec.type, "AggJoin aggregate product");
        } else {
            slot = minmax_combine(group.vals[k], slot,
                                  spec.combine == AggColumnSpec::Combine::Min);
        }
    }
    for (size_t k = 0; k < parent_specs.size(); ++k) {
        const AggColumnSpec& spec = all_specs[parent_specs[k]];
        if (spec.combine != AggColumnSpec::Combine::Sum) continue;
        Value& slot = row[r_parent_cols[k]];
        slot = numeric_mul_count(slot, group.sc, spec.type, "AggJoin aggregate scaling");
    }
}

} // namespace

ExecRelation agg_hash_join(const ExecRelation& r, const ExecRelation& s,
                           const std::vector<std::string>& keys,
                           const std::vector<AggColumnSpec>& all_specs,
                           const std::vector<int>& child_specs,
                           const std::vector<int>& parent_specs) {
    std::vector<int> r_keys = resolve_columns(r, keys);
    std::vector<int> s_keys = resolve_columns(s, keys);
    std::vector<int> s_cols, r_child_cols, r_parent_cols;
    for (int spec : child_specs) {
        s_cols.push_back(s.require_column(all_specs[spec].column));
        r_child_cols.push_back(r.require_column(all_specs[spec].column));
    }
    for (int spec : parent_specs) {
        r_parent_cols.push_back(r.require_column(all_specs[spec].column));
    }

    std::unordered_map<Row, SideGroup, RowHash, RowEq> groups;
    groups.reserve(s.rows);
    for (size_t i = 0; i < s.rows; ++i) {
        Row key = key_of(s, i, s_keys);
        if (key_has_null(key)) continue;
        auto [it, inserted] = groups.try_emplace(std::move(key));
        if (inserted) it->second.vals.assign(child_specs.size(), Value::null());
        fold_into_group(it->second, s, i, all_specs, child_specs, s_cols);
    }

    ExecRelation out;
    out.columns = r.columns;
    out.has_freq = r.has_freq;
    Row buffer(r.arity());
    for (size_t i = 0; i < r.rows; ++i) {
        Row key = key_of(r, i, r_keys);
        if (key_has_null(key)) continue;
        auto it = groups.find(key);
        if (it == groups.end()) continue;
        auto row = r.row(i);
        buffer.assign(row.begin(), row.end());
        uint64_t f = r.has_freq ? r.freq[i] : 1;
        apply_group_to_row(buffer, f, it->second, all_specs, child_specs, r_child_cols,
                           parent_specs, r_parent_cols);
        out.append_row(buffer, f);
    }
    return out;
}

ExecRelation agg_merge_join(const ExecRelation& r, const ExecRelation& s,
                            const std::vector<std::string>& keys,
                            const std::vector<AggColumnSpec>& all_specs,
                            const std::vector<int>& child_specs,
                            const std::vector<int>& parent_specs) {
    std::vector<int> r_keys = resolve_columns(r, keys);
    std::vector<int> s_keys = resolve_columns(s, keys);
    std::vector<int> s_cols, r_child_cols, r_parent_cols;
    for (int spec : child_specs) {
        s_cols.push_back(s.require_column(all_specs[spec].column));
        r_child_cols.push_back(r.require_column(all_specs[spec].column));
    }
    for (int spec : parent_specs) {
        r_parent_cols.push_back(r.require_column(all_specs[spec].column));
    }

    // Sort row indices by key; rows with NULL keys never match and drop here.
    auto sorted_indices = [](const ExecRelation& rel, const std::vector<int>& cols) {
        std::vector<size_t> idx;
        idx.reserve(rel.rows);
        for (size_t i = 0; i < rel.rows; ++i) {
            bool null_key = false;
            for (int c : cols) null_key = null_key || rel.at(i, c).is_null();
            if (!null_key) idx.push_back(i);
        }
        std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            for (int c : cols) {
                int cmp = rel.at(a, c).compare(rel.at(b, c));
                if (cmp != 0) return cmp < 0;
            }
            return false;
        });
        return idx;
    };
    std::vector<size_t> ri = sorted_indices(r, r_keys);
    std::vector<size_t> si = sorted_indices(s, s_keys);

    ExecRelation out;
    out.columns = r.columns;
    out.has_freq = r.has_freq;

    size_t i = 0, j = 0;
    Row buffer(r.arity());
    while (i < ri.size() && j < si.size()) {
        Row rkey = key_of(r, ri[i], r_keys);
        Row skey = key_of(s, si[j], s_keys);
        int cmp = key_compare(rkey, skey);
        if (cmp < 0) {
            ++i;
            continue;
        }
        if (cmp > 0) {
            ++j;
            continue;
        }
        // Fold the full S run for this key.
        SideGroup group;
        group.vals.assign(child_specs.size(), Value::null());
        size_t j_end = j;
        while (j_end < si.size() && key_compare(key_of(s, si[j_end], s_keys), rkey) == 0) {
            fold_into_group(group, s, si[j_end], all_specs, child_specs, s_cols);
            ++j_end;
        }
        // Emit the full R run.
        while (i < ri.size() && key_compare(key_of(r, ri[i], r_keys), rkey) == 0) {
            auto row = r.row(ri[i]);
            buffer.assign(row.begin(), row.end());
            uint64_t f = r.has_freq ? r.freq[ri[i]] : 1;
            apply_group_to_row(buffer, f, group, all_specs, child_specs, r_child_cols,
                               parent_specs, r_parent_cols);
            out.append_row(buffer, f);
            ++i;
        }
        j = j_end;
    }
    return out;
}

ExecRelation semi_join(const ExecRelation& r, const ExecRelation& s,
                       const std::vector<std::string>& keys) {
    std::vector<int> r_keys = resolve_columns(r, keys);
    std::vector<int> s_keys = resolve_columns(s, keys);
    std::unordered_set<Row, RowHash, RowEq> present;
    present.reserve(s.rows);
    for (size_t i = 0; i < s.rows; ++i) {
        Row key = key_of(s, i, s_keys);
        if (!key_has_null(key)) present.insert(std::move(key));
    }
    ExecRelation out;
    out.columns = r.columns;
    out.has_freq = r.has_freq;
    for (size_t i = 0; i < r.rows; ++i) {
        Row key = key_of(r, i, r_keys);
        if (key_has_null(key) || !present.count(key)) continue;
        out.append_row(r.row(i), r.has_freq ? r.freq[i] : 1);
    }
    return out;
}

ExecRelation group_sum_aggregate(const ExecRelation& input,
                                 const std::vector<std::string>& group_columns,
                                 const std::vector<GroupCombine>& combines) {
    std::vector<int> group_cols = resolve_columns(input, group_columns);
    std::vector<int> agg_cols;
    for (const auto& c : combines) agg_cols.push_back(input.require_column(c.column));

    ExecRelation out;
    out.has_freq = input.has_freq;
    for (int c : group_cols) out.columns.push_back(input.columns[c]);
    for (int c : agg_cols) out.columns.push_back(input.columns[c]);

    std::unordered_map<Row, size_t, RowHash, RowEq> group_of;
    std::vector<Row> group_rows;
    std::vector<uint64_t> group_freq;
    for (size_t i = 0; i < input.rows; ++i) {
        Row key = key_of(input, i, group_cols);
        auto [it, inserted] = group_of.try_emplace(key, group_rows.size());
        if (inserted) {
            Row row = key;
            for (int c : agg_cols) row.push_back(input.at(i, c));
            group_rows.push_back(std::move(row));
            group_freq.push_back(input.has_freq ? input.freq[i] : 1);
            continue;
        }
        size_t g = it->second;
        if (input.has_freq) {
            group_freq[g] = add_u64(group_freq[g], input.freq[i], "GroupSum frequency sum");
        }
        for (size_t k = 0; k < combines.size(); ++k) {
            Value& slot = group_rows[g][group_cols.size() + k];
            slot = combine_values(slot, input.at(i, agg_cols[k]), combines[k].combine,
                                  input.columns[agg_cols[k]].type, "GroupSum aggregate");
        }
    }
    for (size_t g = 0; g < group_rows.size(); ++g) {
        out.append_row(group_rows[g], group_freq[g]);
    }
    return out;
}

// --- final aggregation ------------------------------------------------------------

namespace {

double percentile_cont(std::vector<std::pair<double, uint64_t>>& weighted, double fraction) {
    std::sort(weighted.begin(), weighted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    uint64_t total = 0;
    for (const auto& [v, w] : weighted) total += w;
    if (total == 0) raise(ErrorKind::Internal, "percentile over empty set");
    double h = fraction * static_cast<double>(total - 1);
    uint64_t lo_index = static_cast<uint64_t>(std::floor(h));
    double t = h - static_cast<double>(lo_index);

    auto value_at = [&](uint64_t index) {
        uint64_t cumulative = 0;
        for (const auto& [v, w] : weighted) {
            cumulative += w;
            if (index < cumulative) return v;
        }
        return weighted.back().first;
    };
    double lo = value_at(lo_index);
    if (t == 0.0) return lo;
    double hi = value_at(lo_index + 1);
    return lo + t * (hi - lo);
}

struct GroupSlice {
    std::vector<size_t> row_indices;
};

Value eval_final_spec(const FinalAggregateSpec& spec, const ExecRelation& root,
                      const ColumnIndex& idx, const GroupSlice& group, bool has_freq) {
    auto weight = [&](size_t r) { return has_freq ? root.freq[r] : uint64_t{1}; };
    auto arg = [&](size_t r) { return eval_expr(*spec.expr, root.row(r), idx); };

    switch (spec.eval) {
        case FinalAggregateSpec::Eval::SumFreq: {
            uint64_t total = 0;
            for (size_t r : group.row_indices) total = add_u64(total, weight(r), "FinalAggregate COUNT");
            return Value::from_int(i64_from_u64(total, "FinalAggregate COUNT"));
        }
        case FinalAggregateSpec::Eval::CountWeighted: {
            uint64_t total = 0;
            for (size_t r : group.row_indices) {
                if (!arg(r).is_null()) total = add_u64(total, weight(r), "FinalAggregate COUNT");
            }
            return Value::from_int(i64_from_u64(total, "FinalAggregate COUNT"));
        }
        case FinalAggregateSpec::Eval::SumWeighted: {
            bool any = false;
            bool as_int = true;
            int64_t int_sum = 0;
            double float_sum = 0.0;
            for (size_t r : group.row_indices) {
                Value v = arg(r);
                if (v.is_null()) continue;
                any = true;
                if (as_int && v.tag() == Value::Tag::Int) {
                    int_sum = add_i64(int_sum,
                                      mul_i64(v.as_int(), i64_from_u64(weight(r), "FinalAggregate SUM"),
                                              "FinalAggregate SUM"),
                                      "FinalAggregate SUM");
                } else {
                    if (as_int) {
                        float_sum = static_cast<double>(int_sum);
                        as_int = false;
                    }
                    float_sum += v.numeric() * static_cast<double>(weight(r));
                }
            }
            if (!any) return Value::null();
            return as_int ? Value::from_int(int_sum) : Value::from_float(float_sum);
        }
        case FinalAggregateSpec::Eval::AvgWeighted: {
            double sum = 0.0;
            uint64_t count = 0;
            for (size_t r : group.row_indices) {
                Value v = arg(r);
                if (v.is_null()) continue;
                sum += v.numeric() * static_cast<double>(weight(r));
                count = add_u64(count, weight(r), "FinalAggregate AVG");
            }
            if (count == 0) return Value::null();
            return Value::from_float(sum / static_cast<double>(count));
        }
        case FinalAggregateSpec::Eval::PercentileWeighted: {
            std::vector<std::pair<double, uint64_t>> weighted;
            for (size_t r : group.row_indices) {
                Value v = arg(r);
                if (v.is_null()) continue;
                weighted.emplace_back(v.numeric(), weight(r));
            }
            if (weighted.empty()) return Value::null();
            return Value::from_float(percentile_cont(weighted, spec.fraction));
        }
        case FinalAggregateSpec::Eval::VarianceWeighted:
        case FinalAggregateSpec::Eval::StddevWeighted: {
            double n = 0.0, sum = 0.0, sum_sq = 0.0;
            for (size_t r : group.row_indices) {
                Value v = arg(r);
                if (v.is_null()) continue;
                double w = static_cast<double>(weight(r));
                n += w;
                sum += w * v.numeric();
                sum_sq += w * v.numeric() * v.numeric();
            }
            if (n == 0.0) return Value::null();
            double mean = sum / n;
            double var = std::max(0.0, sum_sq / n - mean * mean);
            if (spec.sample_variance) {
                if (n <= 1.0) return Value::null();
                var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
            }
            return Value::from_float(spec.eval == FinalAggregateSpec::Eval::VarianceWeighted
                                         ? var
                                         : std::sqrt(var));
        }
        case FinalAggregateSpec::Eval::CorrWeighted: {
            double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (size_t r : group.row_indices) {
                Value x = arg(r);
                Value y = eval_expr(*spec.expr2, root.row(r), idx);
                if (x.is_null() || y.is_null()) continue;
                double w = static_cast<double>(weight(r));
                n += w;
                sx += w * x.numeric();
                sy += w * y.numeric();
                sxx += w * x.numeric() * x.numeric();
                syy += w * y.numeric() * y.numeric();
                sxy += w * x.numeric() * y.numeric();
            }
            if (n == 0.0) return Value::null();
            double cov = sxy / n - (sx / n) * (sy / n);
            double vx = std::max(0.0, sxx / n - (sx / n) * (sx / n));
            double vy = std::max(0.0, syy / n - (sy / n) * (sy / n));
            if (vx == 0.0 || vy == 0.0) return Value::null();
            return Value::from_float(cov / std::sqrt(vx * vy));
        }
        case FinalAggregateSpec::Eval::MinPlain:
        case FinalAggregateSpec::Eval::MaxPlain: {
            Value best = Value::null();
            for (size_t r : group.row_indices) {
                best = minmax_combine(best, arg(r),
                                      spec.eval == FinalAggregateSpec::Eval::MinPlain);
            }
            return best;
        }
        case FinalAggregateSpec::Eval::CountDistinctPlain: {
            std::unordered_set<Row, RowHash, RowEq> seen;
            for (size_t r : group.row_indices) {
                Value v = arg(r);
                if (!v.is_null()) seen.insert(Row{v});
            }
            return Value::from_int(static_cast<int64_t>(seen.size()));
        }
        case FinalAggregateSpec::Eval::AggColumnMin:
        case FinalAggregateSpec::Eval::AggColumnMax: {
            int col = root.require_column(spec.agg_column);
            Value best = Value::null();
            for (size_t r : group.row_indices) {
                best = minmax_combine(best, root.at(r, col),
                                      spec.eval == FinalAggregateSpec::Eval::AggColumnMin);
            }
            return best;
        }
        case FinalAggregateSpec::Eval::AggColumnCount: {
            int col = root.require_column(spec.agg_column);
            int64_t total = 0;
            for (size_t r : group.row_indices) {
                const Value& v = root.at(r, col);
                if (!v.is_null()) total = add_i64(total, v.as_int(), "FinalAggregate COUNT");
            }
            return Value::from_int(total);
        }
        case FinalAggregateSpec::Eval::AggColumnSum:
        case FinalAggregateSpec::Eval::AggColumnAvg: {
            int col = root.require_column(spec.agg_column);
            int cnt_col = root.require_column(spec.count_column);
            AttributeType type = root.columns[col].type;
            int64_t count = 0;
            Value sum = Value::null();
            for (size_t r : group.row_indices) {
                count = add_i64(count, root.at(r, cnt_col).as_int(), "FinalAggregate SUM");
                sum = numeric_add(sum, root.at(r, col), type, "FinalAggregate SUM");
            }
            if (count == 0) return Value::null();
            if (spec.eval == FinalAggregateSpec::Eval::AggColumnSum) return sum;
            return Value::from_float(sum.numeric() / static_cast<double>(count));
        }
    }
    return Value::null();
}

} // namespace

ResultTable final_aggregate(const ExecRelation& root,
                            const std::vector<FinalAggregateSpec>& specs,
                            const std::vector<std::string>& group_columns,
                            const std::vector<std::string>& group_names, bool has_freq) {
    ResultTable table;
    for (const auto& name : group_names) table.column_names.push_back(name);
    for (const auto& spec : specs) table.column_names.push_back(spec.output_name);

    std::vector<int> group_cols = resolve_columns(root, group_columns);
    ColumnIndex idx = make_index(root);

    std::unordered_map<Row, size_t, RowHash, RowEq> group_of;
    std::vector<Row> group_keys;
    std::vector<GroupSlice> groups;
    for (size_t r = 0; r < root.rows; ++r) {
        Row key = key_of(root, r, group_cols);
        auto [it, inserted] = group_of.try_emplace(key, groups.size());
        if (inserted) {
            group_keys.push_back(std::move(key));
            groups.push_back({});
        }
        groups[it->second].row_indices.push_back(r);
    }

    if (groups.empty() && group_columns.empty()) {
        // SQL scalar-aggregate semantics on empty input.
        Row row;
        for (const auto& spec : specs) {
            bool count_like = spec.eval == FinalAggregateSpec::Eval::SumFreq ||
                              spec.eval == FinalAggregateSpec::Eval::CountWeighted ||
                              spec.eval == FinalAggregateSpec::Eval::CountDistinctPlain ||
                              spec.eval == FinalAggregateSpec::Eval::AggColumnCount;
            row.push_back(count_like ? Value::from_int(0) : Value::null());
        }
        table.rows.push_back(std::move(row));
        return table;
    }

    for (size_t g = 0; g < groups.size(); ++g) {
        Row row = group_keys[g];
        for (const auto& spec : specs) {
            row.push_back(eval_final_spec(spec, root, idx, groups[g], has_freq));
        }
        table.rows.push_back(std::move(row));
    }
    // Deterministic output: sort on the group key prefix.
    size_t key_len = group_columns.size();
    std::sort(table.rows.begin(), table.rows.end(), [key_len](const Row& a, const Row& b) {
        for (size_t i = 0; i < key_len; ++i) {
            int c = a[i].compare(b[i]);
            if (c != 0) return c < 0;
        }
        return false;
    });
    return table;
}

// --- plan interpreter -----------------------------------------------------------------

namespace {

class PlanInterpreter {
public:
    PlanInterpreter(const Plan& plan, const Catalog& catalog, ExecVariant variant)
        : plan_(plan), catalog_(catalog), variant_(variant) {}

    ExecutionResult run() {
        auto start = std::chrono::steady_clock::now();
        ExecutionResult result;
        const PlanNode& final = *plan_.root;
        if (final.op != PlanNode::Op::FinalAggregate) {
            raise(ErrorKind::Internal, "plan root must be FinalAggregate");
        }
        result.root_relation = eval(*final.children[0]);

        auto t0 = std::chrono::steady_clock::now();
        result.table =
            final_aggregate(result.root_relation, final.finals, final.final_group_columns,
                            final.final_group_names, final.has_freq);
        stats_.record(final.id, "FinalAggregate", result.table.rows.size(), ms_since(t0));

        stats_.mode = to_string(plan_.mode);
        stats_.variant = to_string(variant_);
        stats_.total_ms = ms_since(start);
        result.stats = std::move(stats_);
        return result;
    }

private:
    const Plan& plan_;
    const Catalog& catalog_;
    ExecVariant variant_;
    ExecStats stats_;

    static double ms_since(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    }

    ExecRelation eval(const PlanNode& node) {
        switch (node.op) {
            case PlanNode::Op::Scan:
            case PlanNode::Op::Filter:
                return leaf(node, node);
            case PlanNode::Op::FreqInit:
            case PlanNode::Op::Project:
                if (node.children[0]->op == PlanNode::Op::Filter) return leaf(node, node);
                break;
            default:
                break;
        }

        switch (node.op) {
            case PlanNode::Op::Join: {
                ExecRelation left = eval(*node.children[0]);
                ExecRelation right = eval(*node.children[1]);
                auto t0 = std::chrono::steady_clock::now();
                ExecRelation out = plain_join(node, left, right);
                stats_.record(node.id, "Join", out.rows, ms_since(t0));
                return out;
            }
            case PlanNode::Op::AggJoin: {
                ExecRelation left = eval(*node.children[0]);
                ExecRelation right = eval(*node.children[1]);
                auto t0 = std::chrono::steady_clock::now();
                ExecRelation out =
                    variant_ == ExecVariant::Hash
                        ? agg_hash_join(left, right, node.keys, plan_.agg_specs, node.child_aggs,
                                        node.parent_aggs)
                        : agg_merge_join(left, right, node.keys, plan_.agg_specs, node.child_aggs,
                                         node.parent_aggs);
                if (out.rows > left.rows) {
                    raise(ErrorKind::Internal, "AggJoin emitted more tuples than its input");
                }
                stats_.record(node.id, "AggJoin", out.rows, ms_since(t0));
                return out;
            }
            case PlanNode::Op::SemiJoin: {
                ExecRelation left = eval(*node.children[0]);
                ExecRelation right = eval(*node.children[1]);
                auto t0 = std::chrono::steady_clock::now();
                ExecRelation out = semi_join(left, right, node.keys);
                stats_.record(node.id, "SemiJoin", out.rows, ms_since(t0));
                return out;
            }
            case PlanNode::Op::Project: {
                ExecRelation input = eval(*node.children[0]);
                auto t0 = std::chrono::steady_clock::now();
                ExecRelation out = project(node, input);
                stats_.record(node.id, "Project", out.rows, ms_since(t0));
                return out;
            }
            case PlanNode::Op::GroupSum: {
                ExecRelation input = eval(*node.children[0]);
                auto t0 = std::chrono::steady_clock::now();
                ExecRelation out = group_sum_aggregate(input, node.group_columns, node.combines);
                stats_.record(node.id, "GroupSum", out.rows, ms_since(t0));
                return out;
            }
            default:
                raise(ErrorKind::Internal, std::string("unexpected plan node ") +
                                               to_string(node.op));
        }
    }

    // Scan + Filter (+ FreqInit / leaf Project) fused into one materialisation.
    ExecRelation leaf(const PlanNode& top, const PlanNode& node) {
        const PlanNode* prep = nullptr;
        const PlanNode* filter = nullptr;
        const PlanNode* scan = nullptr;
        if (node.op == PlanNode::Op::FreqInit || node.op == PlanNode::Op::Project) {
            prep = &node;
            filter = node.children[0].get();
        } else if (node.op == PlanNode::Op::Filter) {
            filter = &node;
        } else {
            scan = &node;
        }
        if (filter) scan = filter->children[0].get();

        auto t0 = std::chrono::steady_clock::now();
        ExecRelation base = scan_filter(*scan, filter);
        ExecRelation out;
        if (prep) {
            out = init_freq_and_aggs(base, plan_.agg_specs, prep->guard_inits,
                                     prep->ancestor_inits, prep->output_columns,
                                     prep->add_freq && prep->op == PlanNode::Op::FreqInit);
        } else {
            out = std::move(base);
        }
        stats_.record(top.id, to_string(top.op), out.rows, ms_since(t0));
        return out;
    }

    ExecRelation scan_filter(const PlanNode& scan, const PlanNode* filter) {
        const Relation& rel = catalog_.get(scan.relation_name);
        // Canonical renaming; duplicate vertices within one atom become an
        // implicit equality filter and a single output column.
        std::vector<int> keep_cols;
        std::vector<std::pair<int, int>> equal_pairs;
        std::unordered_map<std::string, int> first_col;
        for (size_t c = 0; c < rel.arity(); ++c) {
            const std::string& name = scan.output_columns[c];
            auto it = first_col.find(name);
            if (it == first_col.end()) {
                first_col.emplace(name, static_cast<int>(c));
                keep_cols.push_back(static_cast<int>(c));
            } else {
                equal_pairs.emplace_back(it->second, static_cast<int>(c));
            }
        }
        ExecRelation out;
        for (int c : keep_cols) {
            out.columns.push_back({scan.output_columns[c], rel.schema()[c].type});
        }
        Row buffer(keep_cols.size());
        for (size_t r = 0; r < rel.cardinality(); ++r) {
            auto row = rel.row(r);
            bool keep = true;
            for (const auto& [a, b] : equal_pairs) {
                keep = keep && !row[a].is_null() && row[a].same_as(row[b]);
            }
            if (keep && filter) {
                for (const auto& pred : filter->predicates) {
                    if (!matches(pred, row)) {
                        keep = false;
                        break;
                    }
                }
            }
            if (!keep) continue;
            for (size_t k = 0; k < keep_cols.size(); ++k) buffer[k] = row[keep_cols[k]];
            out.append_row(buffer, 1);
        }
        return out;
    }

    static bool matches(const Predicate& pred, std::span<const Value> base_row) {
        const Value& v = base_row[pred.attr.column];
        if (v.is_null()) return false;
        if (pred.is_in_list) {
            for (const auto& cand : pred.in_list) {
                if (v.same_as(cand)) return true;
            }
            return false;
        }
        int c = v.compare(pred.constant);
        switch (pred.op) {
            case CompareOp::Eq: return c == 0;
            case CompareOp::Ne: return c != 0;
            case CompareOp::Lt: return c < 0;
            case CompareOp::Le: return c <= 0;
            case CompareOp::Gt: return c > 0;
            case CompareOp::Ge: return c >= 0;
        }
        return false;
    }

    // GuAO pairwise join: R columns + child-side Agg columns (renamed "~s")
    // + the child frequency as column "c~s"; output freq stays the R freq.
    ExecRelation plain_join(const PlanNode& node, const ExecRelation& r, const ExecRelation& s) {
        std::vector<int> r_keys = resolve_columns(r, node.keys);
        std::vector<int> s_keys = resolve_columns(s, node.keys);
        std::set<std::string> key_set(node.keys.begin(), node.keys.end());
        std::set<std::string> child_agg_names;
        for (int spec : node.child_aggs) child_agg_names.insert(plan_.agg_specs[spec].column);

        std::vector<int> s_extra;
        ExecRelation out;
        out.columns = r.columns;
        out.has_freq = r.has_freq;
        for (size_t c = 0; c < s.columns.size(); ++c) {
            const std::string& name = s.columns[c].name;
            if (key_set.count(name)) continue;
            s_extra.push_back(static_cast<int>(c));
            out.columns.push_back({child_agg_names.count(name) ? name + "~s" : name,
                                   s.columns[c].type});
        }
        if (s.has_freq) out.columns.push_back({"c~s", AttributeType::Int64});

        auto emit = [&](size_t ri, size_t si, Row& buffer) {
            auto rrow = r.row(ri);
            buffer.assign(rrow.begin(), rrow.end());
            for (int c : s_extra) buffer.push_back(s.at(si, c));
            if (s.has_freq) {
                buffer.push_back(Value::from_int(i64_from_u64(s.freq[si], "Join child frequency")));
            }
            out.append_row(buffer, r.has_freq ? r.freq[ri] : 1);
        };

        Row buffer;
        if (variant_ == ExecVariant::Hash) {
            std::unordered_map<Row, std::vector<size_t>, RowHash, RowEq> table;
            table.reserve(s.rows);
            for (size_t i = 0; i < s.rows; ++i) {
                Row key = key_of(s, i, s_keys);
                if (!key_has_null(key)) table[std::move(key)].push_back(i);
            }
            for (size_t i = 0; i < r.rows; ++i) {
                Row key = key_of(r, i, r_keys);
                if (key_has_null(key)) continue;
                auto it = table.find(key);
                if (it == table.end()) continue;
                for (size_t si : it->second) emit(i, si, buffer);
            }
        } else {
            auto sorted_indices = [](const ExecRelation& rel, const std::vector<int>& cols) {
                std::vector<size_t> idx;
                for (size_t i = 0; i < rel.rows; ++i) {
                    bool null_key = false;
                    for (int c : cols) null_key = null_key || rel.at(i, c).is_null();
                    if (!null_key) idx.push_back(i);
                }
                std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
                    for (int c : cols) {
                        int cmp = rel.at(a, c).compare(rel.at(b, c));
                        if (cmp != 0) return cmp < 0;
                    }
                    return false;
                });
                return idx;
            };
            auto ri = sorted_indices(r, r_keys);
            auto si = sorted_indices(s, s_keys);
            size_t i = 0, j = 0;
            while (i < ri.size() && j < si.size()) {
                Row rkey = key_of(r, ri[i], r_keys);
                Row skey = key_of(s, si[j], s_keys);
                int cmp = key_compare(rkey, skey);
                if (cmp < 0) {
                    ++i;
                    continue;
                }
                if (cmp > 0) {
                    ++j;
                    continue;
                }
                size_t j_end = j;
                while (j_end < si.size() && key_compare(key_of(s, si[j_end], s_keys), rkey) == 0) {
                    ++j_end;
                }
                while (i < ri.size() && key_compare(key_of(r, ri[i], r_keys), rkey) == 0) {
                    for (size_t k = j; k < j_end; ++k) emit(ri[i], si[k], buffer);
                    ++i;
                }
                j = j_end;
            }
        }
        return out;
    }

    ExecRelation project(const PlanNode& node, const ExecRelation& input) {
        ExecRelation out;
        out.has_freq = input.has_freq;
        struct Bound {
            ProjectEntry::Kind kind;
            int a, b;
            AttributeType type;
        };
        std::vector<Bound> bound;
        for (const auto& e : node.project) {
            Bound b{};
            b.kind = e.kind;
            b.a = input.require_column(e.a);
            b.b = e.kind == ProjectEntry::Kind::Pass ? -1 : input.require_column(e.b);
            b.type = input.columns[b.a].type;
            bound.push_back(b);
            out.columns.push_back({e.out, b.type});
        }
        int child_freq_col = node.multiply_child_freq ? input.require_column("c~s") : -1;

        Row buffer(bound.size());
        for (size_t r = 0; r < input.rows; ++r) {
            auto row = input.row(r);
            for (size_t k = 0; k < bound.size(); ++k) {
                const Bound& b = bound[k];
                switch (b.kind) {
                    case ProjectEntry::Kind::Pass:
                        buffer[k] = row[b.a];
                        break;
                    case ProjectEntry::Kind::CombineSum:
                        buffer[k] = numeric_mul(row[b.a], row[b.b], b.type, "Project aggregate");
                        break;
                    case ProjectEntry::Kind::CombineMin:
                        buffer[k] = minmax_combine(row[b.b], row[b.a], true);
                        break;
                    case ProjectEntry::Kind::CombineMax:
                        buffer[k] = minmax_combine(row[b.b], row[b.a], false);
                        break;
                    case ProjectEntry::Kind::ScaleSumByChildFreq: {
                        const Value& cf = row[b.b];
                        buffer[k] = numeric_mul_count(row[b.a],
                                                      static_cast<uint64_t>(cf.as_int()), b.type,
                                                      "Project aggregate");
                        break;
                    }
                }
            }
            uint64_t f = input.has_freq ? input.freq[r] : 1;
            if (child_freq_col >= 0) {
                f = mul_u64(f, static_cast<uint64_t>(input.at(r, child_freq_col).as_int()),
                            "Project frequency product");
            }
            out.append_row(buffer, f);
        }
        return out;
    }
};

} // namespace

ExecutionResult execute(const Plan& plan, const Catalog& catalog, ExecVariant variant) {
    PlanInterpreter interpreter(plan, catalog, variant);
    return interpreter.run();
}

} // namespace aggjoin
