#include "aggjoin/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "aggjoin/error.hpp"

namespace aggjoin {

namespace {

// The oracle carries its own small arithmetic so that it shares nothing with
// the optimised execution path beyond the Value type.

int64_t oracle_add(int64_t a, int64_t b) {
    int64_t out;
    if (__builtin_add_overflow(a, b, &out)) {
        raise(ErrorKind::Overflow, "signed 64-bit overflow in naive aggregate");
    }
    return out;
}

int64_t oracle_mul(int64_t a, int64_t b) {
    int64_t out;
    if (__builtin_mul_overflow(a, b, &out)) {
        raise(ErrorKind::Overflow, "signed 64-bit overflow in naive aggregate");
    }
    return out;
}

Value eval_flat(const ScalarExpr& e, const Row& row, const std::vector<size_t>& offsets) {
    switch (e.kind) {
        case ScalarExpr::Kind::Const:
            return e.constant;
        case ScalarExpr::Kind::Attr:
            return row[offsets[e.attr.atom] + e.attr.column];
        case ScalarExpr::Kind::Neg: {
            Value v = eval_flat(*e.left, row, offsets);
            if (v.is_null()) return v;
            if (v.tag() == Value::Tag::Int) return Value::from_int(oracle_mul(v.as_int(), -1));
            return Value::from_float(-v.as_float());
        }
        default: {
            Value l = eval_flat(*e.left, row, offsets);
            Value r = eval_flat(*e.right, row, offsets);
            if (l.is_null() || r.is_null()) return Value::null();
            bool both_int = l.tag() == Value::Tag::Int && r.tag() == Value::Tag::Int;
            switch (e.kind) {
                case ScalarExpr::Kind::Add:
                    return both_int ? Value::from_int(oracle_add(l.as_int(), r.as_int()))
                                    : Value::from_float(l.numeric() + r.numeric());
                case ScalarExpr::Kind::Sub:
                    return both_int
                               ? Value::from_int(oracle_add(l.as_int(), oracle_mul(r.as_int(), -1)))
                               : Value::from_float(l.numeric() - r.numeric());
                case ScalarExpr::Kind::Mul:
                    return both_int ? Value::from_int(oracle_mul(l.as_int(), r.as_int()))
                                    : Value::from_float(l.numeric() * r.numeric());
                case ScalarExpr::Kind::Div: {
                    if (r.numeric() == 0.0) raise(ErrorKind::Eval, "division by zero");
                    return Value::from_float(l.numeric() / r.numeric());
                }
                default:
                    raise(ErrorKind::Internal, "bad expression kind");
            }
        }
    }
}

bool pred_matches(const Predicate& pred, std::span<const Value> row) {
    const Value& v = row[pred.attr.column];
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

double interpolated_percentile(std::vector<double>& values, double fraction) {
    std::sort(values.begin(), values.end());
    double h = fraction * static_cast<double>(values.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(h));
    double t = h - static_cast<double>(lo);
    if (t == 0.0 || lo + 1 >= values.size()) return values[lo];
    return values[lo] + t * (values[lo + 1] - values[lo]);
}

Value textbook_aggregate(const AggregateExpr& agg, const std::vector<const Row*>& rows,
                         const std::vector<size_t>& offsets) {
    switch (agg.function) {
        case AggregateFunction::CountStar:
            return Value::from_int(static_cast<int64_t>(rows.size()));
        case AggregateFunction::Count: {
            int64_t n = 0;
            for (const Row* r : rows) {
                if (!eval_flat(*agg.expr, *r, offsets).is_null()) n = oracle_add(n, 1);
            }
            return Value::from_int(n);
        }
        case AggregateFunction::CountDistinct: {
            std::unordered_set<Row, RowHash, RowEq> seen;
            for (const Row* r : rows) {
                Value v = eval_flat(*agg.expr, *r, offsets);
                if (!v.is_null()) seen.insert(Row{v});
            }
            return Value::from_int(static_cast<int64_t>(seen.size()));
        }
        case AggregateFunction::Sum: {
            bool any = false, as_int = true;
            int64_t int_sum = 0;
            double float_sum = 0.0;
            for (const Row* r : rows) {
                Value v = eval_flat(*agg.expr, *r, offsets);
                if (v.is_null()) continue;
                any = true;
                if (as_int && v.tag() == Value::Tag::Int) {
                    int_sum = oracle_add(int_sum, v.as_int());
                } else {
                    if (as_int) {
                        float_sum = static_cast<double>(int_sum);
                        as_int = false;
                    }
                    float_sum += v.numeric();
                }
            }
            if (!any) return Value::null();
            return as_int ? Value::from_int(int_sum) : Value::from_float(float_sum);
        }
        case AggregateFunction::Avg: {
            double sum = 0.0;
            int64_t n = 0;
            for (const Row* r : rows) {
                Value v = eval_flat(*agg.expr, *r, offsets);
                if (v.is_null()) continue;
                sum += v.numeric();
                n = oracle_add(n, 1);
            }
            if (n == 0) return Value::null();
            return Value::from_float(sum / static_cast<double>(n));
        }
        case AggregateFunction::Min:
        case AggregateFunction::Max: {
            Value best = Value::null();
            for (const Row* r : rows) {
                Value v = eval_flat(*agg.expr, *r, offsets);
                if (v.is_null()) continue;
                if (best.is_null()) {
                    best = v;
                } else {
                    int c = v.compare(best);
                    if (agg.function == AggregateFunction::Min ? c < 0 : c > 0) best = v;
                }
            }
            return best;
        }
        case AggregateFunction::Median:
        case AggregateFunction::Percentile: {
            std::vector<double> values;
            for (const Row* r : rows) {
                Value v = eval_flat(*agg.expr, *r, offsets);
                if (!v.is_null()) values.push_back(v.numeric());
            }
            if (values.empty()) return Value::null();
            double fraction =
                agg.function == AggregateFunction::Median ? 0.5 : agg.fraction;
            return Value::from_float(interpolated_percentile(values, fraction));
        }
        case AggregateFunction::Variance:
        case AggregateFunction::Stddev: {
            std::vector<double> values;
            for (const Row* r : rows) {
                Value v = eval_flat(*agg.expr, *r, offsets);
                if (!v.is_null()) values.push_back(v.numeric());
            }
            if (values.empty()) return Value::null();
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            double var = 0.0;
            for (double v : values) var += (v - mean) * (v - mean);
            var /= static_cast<double>(values.size());
            return Value::from_float(agg.function == AggregateFunction::Variance ? var
                                                                                 : std::sqrt(var));
        }
        case AggregateFunction::Corr: {
            std::vector<std::pair<double, double>> pairs;
            for (const Row* r : rows) {
                Value x = eval_flat(*agg.expr, *r, offsets);
                Value y = eval_flat(*agg.expr2, *r, offsets);
                if (!x.is_null() && !y.is_null()) pairs.emplace_back(x.numeric(), y.numeric());
            }
            if (pairs.empty()) return Value::null();
            double mx = 0.0, my = 0.0;
            for (const auto& [x, y] : pairs) {
                mx += x;
                my += y;
            }
            mx /= static_cast<double>(pairs.size());
            my /= static_cast<double>(pairs.size());
            double cov = 0.0, vx = 0.0, vy = 0.0;
            for (const auto& [x, y] : pairs) {
                cov += (x - mx) * (y - my);
                vx += (x - mx) * (x - mx);
                vy += (y - my) * (y - my);
            }
            if (vx == 0.0 || vy == 0.0) return Value::null();
            return Value::from_float(cov / std::sqrt(vx * vy));
        }
    }
    return Value::null();
}

std::string output_name_for(const AggregateExpr& agg) {
    if (!agg.alias.empty()) return agg.alias;
    switch (agg.function) {
        case AggregateFunction::CountStar: return "COUNT(*)";
        case AggregateFunction::CountDistinct:
            return "COUNT(DISTINCT " + agg.expr->render() + ")";
        case AggregateFunction::Corr:
            return "CORR(" + agg.expr->render() + ", " + agg.expr2->render() + ")";
        default:
            return std::string(to_string(agg.function)) + "(" +
                   (agg.expr ? agg.expr->render() : "") + ")";
    }
}

} // namespace

NaiveResult naive_execute(const Query& query, const Catalog& catalog, uint64_t tuple_budget) {
    if (tuple_budget == 0) raise(ErrorKind::Usage, "tuple budget must be positive");
    auto start = std::chrono::steady_clock::now();
    NaiveResult result;
    result.stats.mode = "baseline";
    result.stats.variant = "hash";
    int op_id = 0;

    // Filtered scans, full base columns.
    std::vector<std::vector<Row>> scans(query.atoms.size());
    std::vector<size_t> offsets(query.atoms.size() + 1, 0);
    for (size_t a = 0; a < query.atoms.size(); ++a) {
        const Relation& rel = catalog.get(query.atoms[a].relation);
        offsets[a + 1] = offsets[a] + rel.arity();
        for (size_t r = 0; r < rel.cardinality(); ++r) {
            auto base = rel.row(r);
            bool keep = true;
            for (const auto& pred : query.atoms[a].local_predicates) {
                if (!pred_matches(pred, base)) {
                    keep = false;
                    break;
                }
            }
            if (keep) scans[a].emplace_back(base.begin(), base.end());
        }
        result.stats.record(op_id++, "Scan(" + query.atoms[a].alias + ")", scans[a].size(), 0.0);
    }

    std::vector<Row> acc = std::move(scans[0]);
    for (size_t a = 1; a < query.atoms.size(); ++a) {
        auto t0 = std::chrono::steady_clock::now();
        // Equi-join keys connecting atom a to the accumulated prefix.
        std::vector<std::pair<size_t, size_t>> keys; // (acc flat col, atom-local col)
        for (const auto& jc : query.join_conditions) {
            if (jc.left.atom == static_cast<int>(a) && jc.right.atom < static_cast<int>(a)) {
                keys.emplace_back(offsets[jc.right.atom] + jc.right.column, jc.left.column);
            } else if (jc.right.atom == static_cast<int>(a) &&
                       jc.left.atom < static_cast<int>(a)) {
                keys.emplace_back(offsets[jc.left.atom] + jc.left.column, jc.right.column);
            }
        }

        std::unordered_map<Row, std::vector<size_t>, RowHash, RowEq> table;
        table.reserve(scans[a].size());
        for (size_t i = 0; i < scans[a].size(); ++i) {
            Row key;
            key.reserve(keys.size());
            bool null_key = false;
            for (const auto& [acc_col, local_col] : keys) {
                const Value& v = scans[a][i][local_col];
                null_key = null_key || v.is_null();
                key.push_back(v);
            }
            if (!null_key) table[std::move(key)].push_back(i);
        }

        // Exact output cardinality before materialising anything.
        uint64_t out_count = 0;
        std::vector<const std::vector<size_t>*> matches(acc.size(), nullptr);
        for (size_t i = 0; i < acc.size(); ++i) {
            Row key;
            key.reserve(keys.size());
            bool null_key = false;
            for (const auto& [acc_col, local_col] : keys) {
                const Value& v = acc[i][acc_col];
                null_key = null_key || v.is_null();
                key.push_back(v);
            }
            if (null_key) continue;
            auto it = table.find(key);
            if (it == table.end()) continue;
            matches[i] = &it->second;
            out_count += it->second.size();
            if (out_count > tuple_budget) {
                raise(ErrorKind::Budget,
                      "naive join after atom " + query.atoms[a].alias + " exceeds the budget of " +
                          std::to_string(tuple_budget) + " tuples");
            }
        }

        std::vector<Row> next;
        next.reserve(out_count);
        for (size_t i = 0; i < acc.size(); ++i) {
            if (!matches[i]) continue;
            for (size_t j : *matches[i]) {
                Row row = acc[i];
                row.insert(row.end(), scans[a][j].begin(), scans[a][j].end());
                next.push_back(std::move(row));
            }
        }
        acc = std::move(next);
        result.stats.record(
            op_id++, "Join(" + query.atoms[a].alias + ")", acc.size(),
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count());
    }
    result.full_join_rows = acc.size();

    // Grouping and textbook aggregation over the materialised rows.
    std::vector<size_t> group_cols;
    for (const auto& g : query.group_by) group_cols.push_back(offsets[g.atom] + g.column);

    for (const auto& g : query.group_by) result.table.column_names.push_back(g.text);
    for (const auto& agg : query.aggregates) {
        result.table.column_names.push_back(output_name_for(agg));
    }

    std::unordered_map<Row, size_t, RowHash, RowEq> group_of;
    std::vector<Row> group_keys;
    std::vector<std::vector<const Row*>> groups;
    for (const auto& row : acc) {
        Row key;
        for (size_t c : group_cols) key.push_back(row[c]);
        auto [it, inserted] = group_of.try_emplace(key, groups.size());
        if (inserted) {
            group_keys.push_back(std::move(key));
            groups.push_back({});
        }
        groups[it->second].push_back(&row);
    }

    if (groups.empty() && group_cols.empty()) {
        Row out;
        for (const auto& agg : query.aggregates) {
            bool count_like = agg.function == AggregateFunction::CountStar ||
                              agg.function == AggregateFunction::Count ||
                              agg.function == AggregateFunction::CountDistinct;
            out.push_back(count_like ? Value::from_int(0) : Value::null());
        }
        result.table.rows.push_back(std::move(out));
    } else {
        for (size_t g = 0; g < groups.size(); ++g) {
            Row out = group_keys[g];
            for (const auto& agg : query.aggregates) {
                out.push_back(textbook_aggregate(agg, groups[g], offsets));
            }
            result.table.rows.push_back(std::move(out));
        }
    }
    size_t key_len = group_cols.size();
    std::sort(result.table.rows.begin(), result.table.rows.end(),
              [key_len](const Row& a, const Row& b) {
                  for (size_t i = 0; i < key_len; ++i) {
                      int c = a[i].compare(b[i]);
                      if (c != 0) return c < 0;
                  }
                  return false;
              });

    result.stats.record(op_id++, "GroupAggregate", result.table.rows.size(), 0.0);
    result.stats.total_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return result;
}

uint64_t count_walks(const Relation& edges, int path_edges) {
    if (path_edges < 0) raise(ErrorKind::Usage, "path length must be non-negative");
    int from_col = edges.column_index("fromNode");
    int to_col = edges.column_index("toNode");
    if (from_col < 0 || to_col < 0) {
        raise(ErrorKind::Resolve, "walk counting needs an edge relation (fromNode, toNode)");
    }

    std::unordered_map<int64_t, size_t> node_id;
    auto intern = [&](int64_t v) {
        auto [it, inserted] = node_id.try_emplace(v, node_id.size());
        return it->second;
    };
    std::vector<std::pair<size_t, size_t>> adj;
    adj.reserve(edges.cardinality());
    for (size_t r = 0; r < edges.cardinality(); ++r) {
        const Value& f = edges.at(r, from_col);
        const Value& t = edges.at(r, to_col);
        if (f.is_null() || t.is_null()) continue;
        adj.emplace_back(intern(f.as_int()), intern(t.as_int()));
    }

    std::vector<uint64_t> count(node_id.size(), 1), next;
    for (int step = 0; step < path_edges; ++step) {
        next.assign(node_id.size(), 0);
        for (const auto& [u, v] : adj) {
            uint64_t sum;
            if (__builtin_add_overflow(next[u], count[v], &sum)) {
                raise(ErrorKind::Overflow, "unsigned 64-bit overflow in walk counting");
            }
            next[u] = sum;
        }
        count.swap(next);
    }
    uint64_t total = 0;
    for (uint64_t c : count) {
        if (__builtin_add_overflow(total, c, &total)) {
            raise(ErrorKind::Overflow, "unsigned 64-bit overflow in walk counting");
        }
    }
    return total;
}

} // namespace aggjoin
