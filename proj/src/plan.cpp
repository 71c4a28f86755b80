#include "aggjoin/plan.hpp"

#include <sstream>

namespace aggjoin {

const char* to_string(Mode mode) {
    switch (mode) {
        case Mode::Baseline: return "baseline";
        case Mode::GuAO: return "guao";
        case Mode::GuAOPlus: return "guao-plus";
    }
    return "?";
}

const char* to_string(ExecVariant variant) {
    return variant == ExecVariant::Hash ? "hash" : "merge";
}

const char* to_string(PlanNode::Op op) {
    switch (op) {
        case PlanNode::Op::Scan: return "Scan";
        case PlanNode::Op::Filter: return "Filter";
        case PlanNode::Op::FreqInit: return "FreqInit";
        case PlanNode::Op::Join: return "Join";
        case PlanNode::Op::AggJoin: return "AggJoin";
        case PlanNode::Op::SemiJoin: return "SemiJoin";
        case PlanNode::Op::GroupSum: return "GroupSum";
        case PlanNode::Op::Project: return "Project";
        case PlanNode::Op::FinalAggregate: return "FinalAggregate";
    }
    return "?";
}

AggColumnSpec AggColumnSpec::clone() const {
    AggColumnSpec out;
    out.aggregate_index = aggregate_index;
    out.combine = combine;
    out.init = init;
    out.type = type;
    out.guard_node = guard_node;
    out.path = path;
    out.column = column;
    if (expr) out.expr = expr->clone();
    return out;
}

FinalAggregateSpec FinalAggregateSpec::clone() const {
    FinalAggregateSpec out;
    out.function = function;
    out.eval = eval;
    out.output_name = output_name;
    if (expr) out.expr = expr->clone();
    if (expr2) out.expr2 = expr2->clone();
    out.fraction = fraction;
    out.agg_column = agg_column;
    out.count_column = count_column;
    out.sample_variance = sample_variance;
    return out;
}

std::unique_ptr<PlanNode> PlanNode::clone() const {
    auto out = std::make_unique<PlanNode>();
    out->op = op;
    out->id = id;
    out->atom = atom;
    out->relation_name = relation_name;
    out->predicates = predicates;
    out->output_columns = output_columns;
    out->guard_inits = guard_inits;
    out->ancestor_inits = ancestor_inits;
    out->add_freq = add_freq;
    out->keys = keys;
    out->parent_atom = parent_atom;
    out->child_atom = child_atom;
    out->child_aggs = child_aggs;
    out->parent_aggs = parent_aggs;
    out->project = project;
    out->multiply_child_freq = multiply_child_freq;
    out->group_columns = group_columns;
    out->combines = combines;
    out->final_group_columns = final_group_columns;
    out->final_group_names = final_group_names;
    for (const auto& f : finals) out->finals.push_back(f.clone());
    out->has_freq = has_freq;
    for (const auto& c : children) out->children.push_back(c->clone());
    return out;
}

Plan Plan::clone() const {
    Plan out;
    out.mode = mode;
    out.query_class = query_class;
    if (root) out.root = root->clone();
    for (const auto& s : agg_specs) out.agg_specs.push_back(s.clone());
    return out;
}

namespace {

std::string join_strings(const std::vector<std::string>& parts, const char* sep = ", ") {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string node_label(const PlanNode& node, const Plan& plan) {
    std::ostringstream out;
    out << to_string(node.op);
    switch (node.op) {
        case PlanNode::Op::Scan:
            out << "[" << node.relation_name << " #" << node.atom << "]";
            break;
        case PlanNode::Op::Filter: {
            std::vector<std::string> preds;
            for (const auto& p : node.predicates) preds.push_back(p.render());
            out << "[" << join_strings(preds, " AND ") << "]";
            break;
        }
        case PlanNode::Op::FreqInit: {
            out << "[cols: " << join_strings(node.output_columns);
            if (node.add_freq) out << "; c<-1";
            for (int s : node.guard_inits) {
                out << "; " << plan.agg_specs[s].column << "<-"
                    << (plan.agg_specs[s].init == AggColumnSpec::Init::GuardExpr
                            ? plan.agg_specs[s].expr->render()
                            : "isnull-indicator(" + plan.agg_specs[s].expr->render() + ")");
            }
            for (int s : node.ancestor_inits) {
                out << "; " << plan.agg_specs[s].column
                    << (plan.agg_specs[s].combine == AggColumnSpec::Combine::Sum ? "<-1"
                                                                                 : "<-id");
            }
            out << "]";
            break;
        }
        case PlanNode::Op::Join:
        case PlanNode::Op::SemiJoin:
        case PlanNode::Op::AggJoin: {
            out << "[keys: " << join_strings(node.keys);
            if (node.op == PlanNode::Op::AggJoin) {
                std::vector<std::string> is, ir;
                for (int s : node.child_aggs) is.push_back(plan.agg_specs[s].column);
                for (int s : node.parent_aggs) ir.push_back(plan.agg_specs[s].column);
                out << "; I_S: {" << join_strings(is) << "}; I_R: {" << join_strings(ir) << "}";
            }
            out << "]";
            break;
        }
        case PlanNode::Op::Project: {
            std::vector<std::string> entries;
            if (node.multiply_child_freq) entries.push_back("c<-c*c~s");
            for (const auto& e : node.project) {
                switch (e.kind) {
                    case ProjectEntry::Kind::Pass: entries.push_back(e.out); break;
                    case ProjectEntry::Kind::CombineSum:
                        entries.push_back(e.out + "<-" + e.a + "*" + e.b);
                        break;
                    case ProjectEntry::Kind::CombineMin:
                        entries.push_back(e.out + "<-min(" + e.a + "," + e.b + ")");
                        break;
                    case ProjectEntry::Kind::CombineMax:
                        entries.push_back(e.out + "<-max(" + e.a + "," + e.b + ")");
                        break;
                    case ProjectEntry::Kind::ScaleSumByChildFreq:
                        entries.push_back(e.out + "<-" + e.a + "*" + e.b);
                        break;
                }
            }
            out << "[" << join_strings(entries) << "]";
            break;
        }
        case PlanNode::Op::GroupSum: {
            out << "[group: " << join_strings(node.group_columns) << "; c<-SUM(c)";
            for (const auto& c : node.combines) {
                const char* fn = c.combine == AggColumnSpec::Combine::Sum ? "SUM"
                                 : c.combine == AggColumnSpec::Combine::Min ? "MIN"
                                                                            : "MAX";
                out << "; " << c.column << "<-" << fn << "(" << c.column << ")";
            }
            out << "]";
            break;
        }
        case PlanNode::Op::FinalAggregate: {
            out << "[group: " << join_strings(node.final_group_names) << "; ";
            std::vector<std::string> specs;
            for (const auto& f : node.finals) {
                std::string body;
                switch (f.eval) {
                    case FinalAggregateSpec::Eval::SumFreq: body = "SUM(c)"; break;
                    case FinalAggregateSpec::Eval::CountWeighted:
                        body = "SUM(IF(ISNULL(" + f.expr->render() + "),0,c))";
                        break;
                    case FinalAggregateSpec::Eval::SumWeighted:
                        body = "SUM(" + f.expr->render() + "*c)";
                        break;
                    case FinalAggregateSpec::Eval::AvgWeighted:
                        body = "SUM(" + f.expr->render() + "*c)/COUNT";
                        break;
                    case FinalAggregateSpec::Eval::PercentileWeighted: {
                        std::ostringstream frac;
                        frac << f.fraction;
                        body = "PERCENTILE(" + frac.str() + ", " + f.expr->render() + ", c)";
                        break;
                    }
                    case FinalAggregateSpec::Eval::VarianceWeighted:
                        body = "VAR(" + f.expr->render() + ", c)";
                        break;
                    case FinalAggregateSpec::Eval::StddevWeighted:
                        body = "STDDEV(" + f.expr->render() + ", c)";
                        break;
                    case FinalAggregateSpec::Eval::CorrWeighted:
                        body = "CORR(" + f.expr->render() + ", " + f.expr2->render() + ", c)";
                        break;
                    case FinalAggregateSpec::Eval::MinPlain:
                        body = "MIN(" + f.expr->render() + ")";
                        break;
                    case FinalAggregateSpec::Eval::MaxPlain:
                        body = "MAX(" + f.expr->render() + ")";
                        break;
                    case FinalAggregateSpec::Eval::CountDistinctPlain:
                        body = "COUNT(DISTINCT " + f.expr->render() + ")";
                        break;
                    case FinalAggregateSpec::Eval::AggColumnMin:
                        body = "MIN(" + f.agg_column + ")";
                        break;
                    case FinalAggregateSpec::Eval::AggColumnMax:
                        body = "MAX(" + f.agg_column + ")";
                        break;
                    case FinalAggregateSpec::Eval::AggColumnSum:
                        body = "SUM(" + f.agg_column + ") [0 rows via " + f.count_column + "]";
                        break;
                    case FinalAggregateSpec::Eval::AggColumnCount:
                        body = "SUM(" + f.agg_column + ")";
                        break;
                    case FinalAggregateSpec::Eval::AggColumnAvg:
                        body = "SUM(" + f.agg_column + ")/SUM(" + f.count_column + ")";
                        break;
                }
                specs.push_back(f.output_name + " <- " + body);
            }
            out << join_strings(specs) << "]";
            break;
        }
    }
    return out.str();
}

void render_node_text(const PlanNode& node, const Plan& plan, int indent, std::string& out) {
    out.append(indent * 2, ' ');
    out += node_label(node, plan);
    out += "\n";
    for (const auto& c : node.children) render_node_text(*c, plan, indent + 1, out);
}

void render_node_dot(const PlanNode& node, const Plan& plan, std::ostringstream& out,
                     int& counter, int parent_id) {
    int my_id = counter++;
    std::string label = node_label(node, plan);
    for (auto& ch : label) {
        if (ch == '"') ch = '\'';
    }
    out << "  p" << my_id << " [shape=box,label=\"" << label << "\"];\n";
    if (parent_id >= 0) out << "  p" << parent_id << " -> p" << my_id << ";\n";
    for (const auto& c : node.children) render_node_dot(*c, plan, out, counter, my_id);
}

} // namespace

std::string render_plan_text(const Plan& plan) {
    std::string out;
    if (plan.root) render_node_text(*plan.root, plan, 0, out);
    return out;
}

std::string render_plan_dot(const Plan& plan) {
    std::ostringstream out;
    out << "digraph plan {\n";
    int counter = 0;
    if (plan.root) render_node_dot(*plan.root, plan, out, counter, -1);
    out << "}\n";
    return out.str();
}

} // namespace aggjoin
