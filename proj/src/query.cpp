#include "aggjoin/query.hpp"

#include "aggjoin/error.hpp"

namespace aggjoin {

const char* to_string(AggregateFunction fn) {
    switch (fn) {
        case AggregateFunction::CountStar: return "COUNT(*)";
        case AggregateFunction::Count: return "COUNT";
        case AggregateFunction::CountDistinct: return "COUNT DISTINCT";
        case AggregateFunction::Sum: return "SUM";
        case AggregateFunction::Avg: return "AVG";
        case AggregateFunction::Min: return "MIN";
        case AggregateFunction::Max: return "MAX";
        case AggregateFunction::Median: return "MEDIAN";
        case AggregateFunction::Percentile: return "PERCENTILE";
        case AggregateFunction::Variance: return "VARIANCE";
        case AggregateFunction::Stddev: return "STDDEV";
        case AggregateFunction::Corr: return "CORR";
    }
    return "?";
}

bool is_relaxed_aggregate(AggregateFunction fn) {
    switch (fn) {
        case AggregateFunction::Min:
        case AggregateFunction::Max:
        case AggregateFunction::Sum:
        case AggregateFunction::Count:
        case AggregateFunction::CountStar:
        case AggregateFunction::Avg:
            return true;
        default:
            return false;
    }
}

bool is_set_safe(AggregateFunction fn) {
    return fn == AggregateFunction::Min || fn == AggregateFunction::Max ||
           fn == AggregateFunction::CountDistinct;
}

const char* to_string(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "=";
        case CompareOp::Ne: return "<>";
        case CompareOp::Lt: return "<";
        case CompareOp::Le: return "<=";
        case CompareOp::Gt: return ">";
        case CompareOp::Ge: return ">=";
    }
    return "?";
}

std::unique_ptr<ScalarExpr> ScalarExpr::make_const(Value v) {
    auto e = std::make_unique<ScalarExpr>();
    e->kind = Kind::Const;
    e->constant = v;
    return e;
}

std::unique_ptr<ScalarExpr> ScalarExpr::make_attr(AttrRef a) {
    auto e = std::make_unique<ScalarExpr>();
    e->kind = Kind::Attr;
    e->attr = std::move(a);
    return e;
}

std::unique_ptr<ScalarExpr> ScalarExpr::make_binary(Kind k, std::unique_ptr<ScalarExpr> l,
                                                    std::unique_ptr<ScalarExpr> r) {
    auto e = std::make_unique<ScalarExpr>();
    e->kind = k;
    e->left = std::move(l);
    e->right = std::move(r);
    return e;
}

std::unique_ptr<ScalarExpr> ScalarExpr::make_neg(std::unique_ptr<ScalarExpr> inner) {
    auto e = std::make_unique<ScalarExpr>();
    e->kind = Kind::Neg;
    e->left = std::move(inner);
    return e;
}

std::unique_ptr<ScalarExpr> ScalarExpr::clone() const {
    auto e = std::make_unique<ScalarExpr>();
    e->kind = kind;
    e->constant = constant;
    e->attr = attr;
    if (left) e->left = left->clone();
    if (right) e->right = right->clone();
    return e;
}

void ScalarExpr::collect_attrs(std::vector<AttrRef>& out) const {
    if (kind == Kind::Attr) out.push_back(attr);
    if (left) left->collect_attrs(out);
    if (right) right->collect_attrs(out);
}

std::string ScalarExpr::render() const {
    switch (kind) {
        case Kind::Const: {
            if (constant.tag() == Value::Tag::Text) {
                std::string body(constant.as_text());
                std::string quoted = "'";
                for (char c : body) {
                    if (c == '\'') quoted += "''";
                    else quoted.push_back(c);
                }
                return quoted + "'";
            }
            return constant.to_display_string();
        }
        case Kind::Attr: return attr.text;
        case Kind::Add: return "(" + left->render() + " + " + right->render() + ")";
        case Kind::Sub: return "(" + left->render() + " - " + right->render() + ")";
        case Kind::Mul: return "(" + left->render() + " * " + right->render() + ")";
        case Kind::Div: return "(" + left->render() + " / " + right->render() + ")";
        case Kind::Neg: return "(-" + left->render() + ")";
    }
    return "?";
}

std::vector<AttrRef> AggregateExpr::attributes() const {
    std::vector<AttrRef> out;
    if (expr) expr->collect_attrs(out);
    if (expr2) expr2->collect_attrs(out);
    return out;
}

AggregateExpr AggregateExpr::clone() const {
    AggregateExpr out;
    out.function = function;
    if (expr) out.expr = expr->clone();
    if (expr2) out.expr2 = expr2->clone();
    out.fraction = fraction;
    out.alias = alias;
    return out;
}

std::string Predicate::render() const {
    if (is_in_list) {
        std::string out = attr.text + " IN (";
        for (size_t i = 0; i < in_list.size(); ++i) {
            if (i) out += ", ";
            ScalarExpr c;
            c.kind = ScalarExpr::Kind::Const;
            c.constant = in_list[i];
            out += c.render();
        }
        return out + ")";
    }
    ScalarExpr c;
    c.kind = ScalarExpr::Kind::Const;
    c.constant = constant;
    return attr.text + " " + to_string(op) + " " + c.render();
}

Query Query::clone() const {
    Query out;
    out.atoms = atoms;
    out.join_conditions = join_conditions;
    out.group_by = group_by;
    for (const auto& agg : aggregates) out.aggregates.push_back(agg.clone());
    return out;
}

} // namespace aggjoin
