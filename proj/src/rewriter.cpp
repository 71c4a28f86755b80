#include "aggjoin/rewriter.hpp"

#include <algorithm>
#include <set>

#include "aggjoin/error.hpp"

namespace aggjoin {

namespace {

std::unique_ptr<ScalarExpr> canonicalize_expr(const ScalarExpr& expr, const Hypergraph& hg) {
    auto out = expr.clone();
    // Rewrite attribute references to canonical vertex names.
    std::vector<ScalarExpr*> stack{out.get()};
    while (!stack.empty()) {
        ScalarExpr* e = stack.back();
        stack.pop_back();
        if (e->kind == ScalarExpr::Kind::Attr) {
            e->attr.text = hg.vertex_names[hg.vertex_of(e->attr)];
        }
        if (e->left) stack.push_back(e->left.get());
        if (e->right) stack.push_back(e->right.get());
    }
    return out;
}

AttributeType infer_expr_type(const ScalarExpr& expr, const Hypergraph& hg) {
    switch (expr.kind) {
        case ScalarExpr::Kind::Const:
            switch (expr.constant.tag()) {
                case Value::Tag::Int: return AttributeType::Int64;
                case Value::Tag::Float: return AttributeType::Float64;
                case Value::Tag::Text: return AttributeType::Text;
                case Value::Tag::Bool: return AttributeType::Bool;
                default: return AttributeType::Int64;
            }
        case ScalarExpr::Kind::Attr:
            return hg.vertex_types[hg.vertex_of(expr.attr)];
        case ScalarExpr::Kind::Neg:
            return infer_expr_type(*expr.left, hg);
        case ScalarExpr::Kind::Div:
            return AttributeType::Float64;
        default: {
            AttributeType l = infer_expr_type(*expr.left, hg);
            AttributeType r = infer_expr_type(*expr.right, hg);
            if (l == AttributeType::Text || r == AttributeType::Text ||
                l == AttributeType::Bool || r == AttributeType::Bool) {
                raise(ErrorKind::Plan, "arithmetic over non-numeric attribute");
            }
            return (l == AttributeType::Int64 && r == AttributeType::Int64)
                       ? AttributeType::Int64
                       : AttributeType::Float64;
        }
    }
}

std::vector<int> path_to_root(const JoinTree& tree, int node) {
    std::vector<int> path;
    for (int u = node; u >= 0; u = tree.parent[u]) path.push_back(u);
    return path;
}

} // namespace

std::vector<AggColumnSpec> place_piecewise_aggregates(const Query& query, const Hypergraph& hg,
                                                      const JoinTree& rooted_tree,
                                                      const Classification& cls) {
    std::vector<AggColumnSpec> specs;
    for (size_t j = 0; j < query.aggregates.size(); ++j) {
        const AggregateExpr& agg = query.aggregates[j];
        int guard = cls.guards.aggregate_guard[j];
        if (guard < 0 || guard == rooted_tree.root) continue;
        if (!is_relaxed_aggregate(agg.function)) {
            raise(ErrorKind::Internal,
                  "statistical aggregate with off-root guard survived classification");
        }
        if (agg.function == AggregateFunction::CountStar) continue;

        std::vector<int> path = path_to_root(rooted_tree, guard);
        std::string base = "agg" + std::to_string(j + 1);
        auto expr = canonicalize_expr(*agg.expr, hg);
        AttributeType expr_type = infer_expr_type(*agg.expr, hg);

        auto make = [&](AggColumnSpec::Combine combine, AggColumnSpec::Init init,
                        AttributeType type, std::string column) {
            AggColumnSpec s;
            s.aggregate_index = static_cast<int>(j);
            s.combine = combine;
            s.init = init;
            s.type = type;
            s.guard_node = guard;
            s.path = path;
            s.column = std::move(column);
            s.expr = expr->clone();
            return s;
        };

        switch (agg.function) {
            case AggregateFunction::Min:
                specs.push_back(make(AggColumnSpec::Combine::Min, AggColumnSpec::Init::GuardExpr,
                                     expr_type, base));
                break;
            case AggregateFunction::Max:
                specs.push_back(make(AggColumnSpec::Combine::Max, AggColumnSpec::Init::GuardExpr,
                                     expr_type, base));
                break;
            case AggregateFunction::Count:
                specs.push_back(make(AggColumnSpec::Combine::Sum,
                                     AggColumnSpec::Init::NullIndicator, AttributeType::Int64,
                                     base));
                break;
            case AggregateFunction::Sum:
                if (expr_type != AttributeType::Int64 && expr_type != AttributeType::Float64) {
                    raise(ErrorKind::Plan, "SUM over a non-numeric expression");
                }
                specs.push_back(make(AggColumnSpec::Combine::Sum, AggColumnSpec::Init::GuardExpr,
                                     expr_type, base));
                specs.push_back(make(AggColumnSpec::Combine::Sum,
                                     AggColumnSpec::Init::NullIndicator, AttributeType::Int64,
                                     base + "_cnt"));
                break;
            case AggregateFunction::Avg:
                if (expr_type != AttributeType::Int64 && expr_type != AttributeType::Float64) {
                    raise(ErrorKind::Plan, "AVG over a non-numeric expression");
                }
                specs.push_back(make(AggColumnSpec::Combine::Sum, AggColumnSpec::Init::GuardExpr,
                                     expr_type, base + "_sum"));
                specs.push_back(make(AggColumnSpec::Combine::Sum,
                                     AggColumnSpec::Init::NullIndicator, AttributeType::Int64,
                                     base + "_cnt"));
                break;
            default:
                raise(ErrorKind::Internal, "unexpected relaxed aggregate");
        }
    }
    return specs;
}

std::vector<FinalAggregateSpec> rewrite_final_aggregates(const Query& query,
                                                         const Hypergraph& hg,
                                                         const Classification& cls,
                                                         const std::vector<AggColumnSpec>& specs,
                                                         bool has_freq) {
    (void)cls;
    std::vector<FinalAggregateSpec> out;
    for (size_t j = 0; j < query.aggregates.size(); ++j) {
        const AggregateExpr& agg = query.aggregates[j];
        FinalAggregateSpec f;
        f.function = agg.function;
        f.fraction = agg.fraction;
        if (!agg.alias.empty()) {
            f.output_name = agg.alias;
        } else {
            Query tmp;
            // Cheap canonical display name: the rendered call.
            switch (agg.function) {
                case AggregateFunction::CountStar: f.output_name = "COUNT(*)"; break;
                case AggregateFunction::CountDistinct:
                    f.output_name = "COUNT(DISTINCT " + agg.expr->render() + ")";
                    break;
                case AggregateFunction::Corr:
                    f.output_name =
                        "CORR(" + agg.expr->render() + ", " + agg.expr2->render() + ")";
                    break;
                default:
                    f.output_name =
                        std::string(to_string(agg.function)) + "(" +
                        (agg.expr ? agg.expr->render() : "") + ")";
                    break;
            }
        }

        const AggColumnSpec* value_spec = nullptr;
        const AggColumnSpec* count_spec = nullptr;
        for (const auto& s : specs) {
            if (s.aggregate_index != static_cast<int>(j)) continue;
            if (s.init == AggColumnSpec::Init::NullIndicator &&
                (agg.function == AggregateFunction::Sum ||
                 agg.function == AggregateFunction::Avg)) {
                count_spec = &s;
            } else {
                value_spec = &s;
            }
        }

        if (value_spec || count_spec) {
            switch (agg.function) {
                case AggregateFunction::Min:
                    f.eval = FinalAggregateSpec::Eval::AggColumnMin;
                    f.agg_column = value_spec->column;
                    break;
                case AggregateFunction::Max:
                    f.eval = FinalAggregateSpec::Eval::AggColumnMax;
                    f.agg_column = value_spec->column;
                    break;
                case AggregateFunction::Count:
                    f.eval = FinalAggregateSpec::Eval::AggColumnCount;
                    f.agg_column = value_spec->column;
                    break;
                case AggregateFunction::Sum:
                    f.eval = FinalAggregateSpec::Eval::AggColumnSum;
                    f.agg_column = value_spec->column;
                    f.count_column = count_spec->column;
                    break;
                case AggregateFunction::Avg:
                    f.eval = FinalAggregateSpec::Eval::AggColumnAvg;
                    f.agg_column = value_spec->column;
                    f.count_column = count_spec->column;
                    break;
                default:
                    raise(ErrorKind::Internal, "agg column placed for a non-relaxed aggregate");
            }
            out.push_back(std::move(f));
            continue;
        }

        // Root-evaluated. With no frequency column the same recipes run with
        // implicit weight 1, which is the textbook semantics.
        (void)has_freq;
        switch (agg.function) {
            case AggregateFunction::CountStar:
                f.eval = FinalAggregateSpec::Eval::SumFreq;
                break;
            case AggregateFunction::Count:
                f.eval = FinalAggregateSpec::Eval::CountWeighted;
                break;
            case AggregateFunction::Sum:
                f.eval = FinalAggregateSpec::Eval::SumWeighted;
                break;
            case AggregateFunction::Avg:
                f.eval = FinalAggregateSpec::Eval::AvgWeighted;
                break;
            case AggregateFunction::Median:
                f.eval = FinalAggregateSpec::Eval::PercentileWeighted;
                f.fraction = 0.5;
                break;
            case AggregateFunction::Percentile:
                f.eval = FinalAggregateSpec::Eval::PercentileWeighted;
                break;
            case AggregateFunction::Variance:
                f.eval = FinalAggregateSpec::Eval::VarianceWeighted;
                break;
            case AggregateFunction::Stddev:
                f.eval = FinalAggregateSpec::Eval::StddevWeighted;
                break;
            case AggregateFunction::Corr:
                f.eval = FinalAggregateSpec::Eval::CorrWeighted;
                break;
            case AggregateFunction::Min:
                f.eval = FinalAggregateSpec::Eval::MinPlain;
                break;
            case AggregateFunction::Max:
                f.eval = FinalAggregateSpec::Eval::MaxPlain;
                break;
            case AggregateFunction::CountDistinct:
                f.eval = FinalAggregateSpec::Eval::CountDistinctPlain;
                break;
        }
        if (agg.expr) f.expr = canonicalize_expr(*agg.expr, hg);
        if (agg.expr2) f.expr2 = canonicalize_expr(*agg.expr2, hg);
        out.push_back(std::move(f));
    }
    return out;
}

namespace {

struct PlanBuilder {
    const Query& query;
    const Hypergraph& hg;
    const JoinTree& tree;
    const Classification& cls;
    Mode mode;
    bool zero_ma;
    bool single_atom;
    bool has_freq;
    Plan plan;
    std::set<int> root_needs;

    PlanBuilder(const Query& q, const Hypergraph& h, const JoinTree& t, const Classification& c,
                Mode m)
        : query(q), hg(h), tree(t), cls(c), mode(m) {
        zero_ma = cls.query_class == QueryClass::ZeroMA;
        single_atom = query.atoms.size() == 1;
        has_freq = !zero_ma && !single_atom;
    }

    std::vector<std::string> names_of(const std::set<int>& vertices) const {
        std::vector<std::string> out;
        out.reserve(vertices.size());
        for (int v : vertices) out.push_back(hg.vertex_names[v]);
        return out;
    }

    std::set<int> shared_set(int u, int v) const {
        auto sh = tree.shared_vertices(u, v);
        return std::set<int>(sh.begin(), sh.end());
    }

    bool spec_on_node(const AggColumnSpec& s, int u) const {
        return std::find(s.path.begin(), s.path.end(), u) != s.path.end();
    }

    std::vector<GroupCombine> node_combines(int u) const {
        std::vector<GroupCombine> out;
        for (const auto& s : plan.agg_specs) {
            if (spec_on_node(s, u)) out.push_back({s.column, s.combine});
        }
        return out;
    }

    std::unique_ptr<PlanNode> leaf_prep(int u, const std::set<int>& out_vertices) {
        auto scan = std::make_unique<PlanNode>();
        scan->op = PlanNode::Op::Scan;
        scan->atom = u;
        scan->relation_name = query.atoms[u].relation;
        // Canonical name per base column; the executor renames while scanning.
        for (int v : hg.atom_vertices[u]) {
            scan->output_columns.push_back(hg.vertex_names[v]);
        }

        auto filter = std::make_unique<PlanNode>();
        filter->op = PlanNode::Op::Filter;
        filter->atom = u;
        filter->predicates = query.atoms[u].local_predicates;
        filter->children.push_back(std::move(scan));

        if (single_atom) return filter; // Scan -> Filter -> FinalAggregate

        auto prep = std::make_unique<PlanNode>();
        prep->op = has_freq ? PlanNode::Op::FreqInit : PlanNode::Op::Project;
        prep->atom = u;
        prep->add_freq = has_freq;
        prep->output_columns = names_of(out_vertices);
        if (!has_freq) {
            for (const auto& c : prep->output_columns) {
                prep->project.push_back({ProjectEntry::Kind::Pass, c, c, ""});
            }
        }
        for (size_t s = 0; s < plan.agg_specs.size(); ++s) {
            const auto& spec = plan.agg_specs[s];
            if (spec.guard_node == u) {
                prep->guard_inits.push_back(static_cast<int>(s));
            } else if (spec_on_node(spec, u)) {
                prep->ancestor_inits.push_back(static_cast<int>(s));
            }
        }
        prep->children.push_back(std::move(filter));
        return prep;
    }

    std::unique_ptr<PlanNode> build_node(int u) {
        std::set<int> needed = u == tree.root ? root_needs : shared_set(u, tree.parent[u]);
        std::vector<std::set<int>> child_keys;
        for (int v : tree.children[u]) child_keys.push_back(shared_set(u, v));

        std::set<int> initial = needed;
        for (const auto& k : child_keys) initial.insert(k.begin(), k.end());
        auto running = leaf_prep(u, initial);

        for (size_t i = 0; i < tree.children[u].size(); ++i) {
            int v = tree.children[u][i];
            auto sub = build_node(v);
            std::set<int> visible = needed;
            for (size_t j = i + 1; j < child_keys.size(); ++j) {
                visible.insert(child_keys[j].begin(), child_keys[j].end());
            }
            running = join_child(u, v, std::move(running), std::move(sub), child_keys[i],
                                 visible);
        }
        return running;
    }

    std::unique_ptr<PlanNode> join_child(int u, int v, std::unique_ptr<PlanNode> left,
                                         std::unique_ptr<PlanNode> right,
                                         const std::set<int>& keys,
                                         const std::set<int>& visible) {
        std::vector<int> is_specs, ir_specs;
        for (size_t s = 0; s < plan.agg_specs.size(); ++s) {
            if (spec_on_node(plan.agg_specs[s], v)) {
                is_specs.push_back(static_cast<int>(s));
            } else if (spec_on_node(plan.agg_specs[s], u)) {
                ir_specs.push_back(static_cast<int>(s));
            }
        }

        if (zero_ma) {
            auto semi = std::make_unique<PlanNode>();
            semi->op = PlanNode::Op::SemiJoin;
            semi->keys = names_of(keys);
            semi->parent_atom = u;
            semi->child_atom = v;
            semi->children.push_back(std::move(left));
            semi->children.push_back(std::move(right));
            return semi;
        }

        if (mode == Mode::GuAOPlus) {
            auto aj = std::make_unique<PlanNode>();
            aj->op = PlanNode::Op::AggJoin;
            aj->keys = names_of(keys);
            aj->parent_atom = u;
            aj->child_atom = v;
            aj->child_aggs = is_specs;
            aj->parent_aggs = ir_specs;
            aj->children.push_back(std::move(left));
            aj->children.push_back(std::move(right));
            return aj;
        }

        auto join = std::make_unique<PlanNode>();
        join->op = PlanNode::Op::Join;
        join->keys = names_of(keys);
        join->parent_atom = u;
        join->child_atom = v;
        join->child_aggs = is_specs;
        join->parent_aggs = ir_specs;
        join->children.push_back(std::move(left));
        join->children.push_back(std::move(right));

        auto project = std::make_unique<PlanNode>();
        project->op = PlanNode::Op::Project;
        project->atom = u;
        project->multiply_child_freq = true;
        for (const auto& name : names_of(visible)) {
            project->project.push_back({ProjectEntry::Kind::Pass, name, name, ""});
        }
        for (int s : is_specs) {
            const auto& spec = plan.agg_specs[s];
            ProjectEntry::Kind kind =
                spec.combine == AggColumnSpec::Combine::Sum ? ProjectEntry::Kind::CombineSum
                : spec.combine == AggColumnSpec::Combine::Min ? ProjectEntry::Kind::CombineMin
                                                              : ProjectEntry::Kind::CombineMax;
            project->project.push_back({kind, spec.column, spec.column, spec.column + "~s"});
        }
        for (int s : ir_specs) {
            const auto& spec = plan.agg_specs[s];
            if (spec.combine == AggColumnSpec::Combine::Sum) {
                project->project.push_back(
                    {ProjectEntry::Kind::ScaleSumByChildFreq, spec.column, spec.column, "c~s"});
            } else {
                project->project.push_back({ProjectEntry::Kind::Pass, spec.column, spec.column, ""});
            }
        }
        project->children.push_back(std::move(join));

        auto group = std::make_unique<PlanNode>();
        group->op = PlanNode::Op::GroupSum;
        group->atom = u;
        group->group_columns = names_of(visible);
        group->combines = node_combines(u);
        group->children.push_back(std::move(project));
        return group;
    }

    Plan build() {
        plan.mode = mode;
        plan.query_class = cls.query_class;
        plan.agg_specs = place_piecewise_aggregates(query, hg, tree, cls);

        auto finals = rewrite_final_aggregates(query, hg, cls, plan.agg_specs, has_freq);

        for (const auto& g : query.group_by) root_needs.insert(hg.vertex_of(g));
        for (size_t j = 0; j < query.aggregates.size(); ++j) {
            bool placed = false;
            for (const auto& s : plan.agg_specs) {
                if (s.aggregate_index == static_cast<int>(j)) placed = true;
            }
            if (placed) continue;
            for (const auto& a : query.aggregates[j].attributes()) {
                root_needs.insert(hg.vertex_of(a));
            }
        }

        auto body = build_node(tree.root);

        auto final = std::make_unique<PlanNode>();
        final->op = PlanNode::Op::FinalAggregate;
        final->has_freq = has_freq;
        final->finals = std::move(finals);
        for (const auto& g : query.group_by) {
            final->final_group_columns.push_back(hg.vertex_names[hg.vertex_of(g)]);
            final->final_group_names.push_back(g.text);
        }
        final->children.push_back(std::move(body));
        plan.root = std::move(final);

        // Stable ids in execution (post-) order.
        int counter = 0;
        assign_ids(*plan.root, counter);
        return std::move(plan);
    }

    static void assign_ids(PlanNode& node, int& counter) {
        for (auto& c : node.children) assign_ids(*c, counter);
        node.id = counter++;
    }
};

} // namespace

Plan build_plan(const Query& query, const Hypergraph& hg, const JoinTree& rooted_tree,
                const Classification& cls, Mode mode) {
    if (!cls.applicable()) {
        raise(ErrorKind::Plan, std::string("cannot plan a not-applicable query (") +
                                   to_string(cls.reason) + ")");
    }
    if (mode == Mode::Baseline) {
        raise(ErrorKind::Plan, "baseline mode does not use the rewritten plan");
    }
    if (rooted_tree.root != cls.guards.root_guard) {
        raise(ErrorKind::Plan, "tree must be rerooted at the root guard before planning");
    }
    PlanBuilder builder(query, hg, rooted_tree, cls, mode);
    return builder.build();
}

namespace {

// FK/PK rewrite helpers ------------------------------------------------------

struct FkpkContext {
    const Query& query;
    const Hypergraph& hg;
    const Constraints& constraints;
    std::vector<AggColumnSpec>* agg_specs;

    std::vector<std::string> key_attrs(int atom, const std::vector<std::string>& key_names) const {
        std::vector<std::string> out;
        for (const auto& name : key_names) {
            int vertex = -1;
            for (size_t v = 0; v < hg.vertex_names.size(); ++v) {
                if (hg.vertex_names[v] == name) vertex = static_cast<int>(v);
            }
            out.push_back(vertex < 0 ? "" : hg.attr_of_vertex(atom, vertex));
        }
        return out;
    }

    bool link_is_fk_unique(const PlanNode& join) const {
        auto parent_attrs = key_attrs(join.parent_atom, join.keys);
        auto child_attrs = key_attrs(join.child_atom, join.keys);
        const std::string& parent_rel = query.atoms[join.parent_atom].relation;
        const std::string& child_rel = query.atoms[join.child_atom].relation;

        bool fk = false;
        for (const auto& cand : constraints.foreign_keys) {
            if (cand.referencing_relation != parent_rel ||
                cand.referenced_relation != child_rel ||
                cand.referencing_attributes.size() != parent_attrs.size()) {
                continue;
            }
            // Pairwise match, order-insensitive.
            std::vector<bool> used(parent_attrs.size(), false);
            bool all = true;
            for (size_t i = 0; i < parent_attrs.size() && all; ++i) {
                bool found = false;
                for (size_t k = 0; k < cand.referencing_attributes.size(); ++k) {
                    if (used[k]) continue;
                    if (cand.referencing_attributes[k] == parent_attrs[i] &&
                        cand.referenced_attributes[k] == child_attrs[i]) {
                        used[k] = true;
                        found = true;
                        break;
                    }
                }
                all = found;
            }
            if (all) {
                fk = true;
                break;
            }
        }
        if (!fk) return false;
        return constraints.has_unique_key_within(child_rel, child_attrs);
    }

    // True when the subplan's output provably carries frequency 1 everywhere.
    static bool freq1_pure(const PlanNode& node) {
        switch (node.op) {
            case PlanNode::Op::FreqInit:
                return node.add_freq;
            case PlanNode::Op::SemiJoin:
                return freq1_pure(*node.children[0]);
            case PlanNode::Op::Project:
                return !node.multiply_child_freq && freq1_pure(*node.children[0]);
            default:
                return false;
        }
    }

    bool grouping_has_unique_key(int atom, const std::vector<std::string>& group_columns) const {
        auto attrs = key_attrs(atom, group_columns);
        std::vector<std::string> present;
        for (const auto& a : attrs) {
            if (!a.empty()) present.push_back(a);
        }
        return constraints.has_unique_key_within(query.atoms[atom].relation, present);
    }
};

void convert_join_to_semi(PlanNode& join) {
    join.op = PlanNode::Op::SemiJoin;
}

// Rewrites the Project above a replaced Join: the child-side frequency column
// is gone, so the multiply and any ScaleSumByChildFreq entries drop out.
void strip_child_freq_from_project(PlanNode& project) {
    project.multiply_child_freq = false;
    for (auto& e : project.project) {
        if (e.kind == ProjectEntry::Kind::ScaleSumByChildFreq) {
            e.kind = ProjectEntry::Kind::Pass;
            e.a = e.out;
            e.b.clear();
        }
    }
}

void fkpk_transform(std::unique_ptr<PlanNode>& node, const FkpkContext& ctx) {
    for (auto& child : node->children) fkpk_transform(child, ctx);

    // (a) for the physical-operator plan: AggJoin -> SemiJoin.
    if (node->op == PlanNode::Op::AggJoin) {
        if (node->child_aggs.empty() && ctx.link_is_fk_unique(*node) &&
            FkpkContext::freq1_pure(*node->children[1])) {
            convert_join_to_semi(*node);
        }
        return;
    }

    // Logical-plan join group: GroupSum -> Project -> Join/SemiJoin.
    if (node->op == PlanNode::Op::GroupSum && node->children.size() == 1 &&
        node->children[0]->op == PlanNode::Op::Project &&
        node->children[0]->children.size() == 1) {
        PlanNode& project = *node->children[0];
        PlanNode& join = *project.children[0];
        if (join.op == PlanNode::Op::Join || join.op == PlanNode::Op::SemiJoin) {
            if (join.op == PlanNode::Op::Join && join.child_aggs.empty() &&
                ctx.link_is_fk_unique(join) && FkpkContext::freq1_pure(*join.children[1])) {
                convert_join_to_semi(join);
                strip_child_freq_from_project(project);
            }
            // (b) drop the summation when it provably does nothing: either
            // every group is a singleton (grouping attributes contain a unique
            // key of the parent's base relation and the child contributes at
            // most one partner), or everything below carries frequency 1, so
            // the grouping could only merge interchangeable c=1 duplicates.
            bool one_partner =
                join.op == PlanNode::Op::SemiJoin ||
                ctx.constraints.has_unique_key_within(
                    ctx.query.atoms[join.child_atom].relation,
                    ctx.key_attrs(join.child_atom, join.keys));
            bool singleton_groups =
                one_partner &&
                ctx.grouping_has_unique_key(join.parent_atom, node->group_columns);
            if (singleton_groups || FkpkContext::freq1_pure(project)) {
                node = std::move(node->children[0]);
            }
        }
    }

    // (c) pre-group a non-unique leaf child before a (full) Join.
    if (node->op == PlanNode::Op::Join) {
        auto& right = node->children[1];
        if (right->op == PlanNode::Op::FreqInit &&
            !ctx.grouping_has_unique_key(node->child_atom, right->output_columns)) {
            auto group = std::make_unique<PlanNode>();
            group->op = PlanNode::Op::GroupSum;
            group->atom = node->child_atom;
            group->group_columns = right->output_columns;
            for (const auto& s : *ctx.agg_specs) {
                if (std::find(s.path.begin(), s.path.end(), node->child_atom) != s.path.end()) {
                    group->combines.push_back({s.column, s.combine});
                }
            }
            group->children.push_back(std::move(right));
            node->children[1] = std::move(group);
        }
    }
}

} // namespace

void apply_fkpk(Plan& plan, const Query& query, const Hypergraph& hg,
                const Constraints& constraints) {
    if (constraints.empty()) return;
    if (!plan.root) return;
    FkpkContext ctx{query, hg, constraints, &plan.agg_specs};
    fkpk_transform(plan.root, ctx);
    int counter = 0;
    // Re-number after structural changes.
    struct {
        void operator()(PlanNode& node, int& counter) {
            for (auto& c : node.children) (*this)(*c, counter);
            node.id = counter++;
        }
    } renumber;
    renumber(*plan.root, counter);
}

PlannedQuery plan_query(const Query& query, const Catalog& catalog, Mode mode, bool with_fkpk) {
    PlannedQuery out{to_hypergraph(query, catalog), JoinTree{}, Classification{}, Plan{}};
    try {
        out.tree = gyo_join_tree(out.hypergraph);
    } catch (const CyclicError&) {
        out.classification = Classification::not_applicable(RejectReason::Cyclic);
        raise(ErrorKind::NotApplicable, "query is not applicable: cyclic");
    }
    out.classification = classify(query, out.hypergraph, out.tree);
    if (!out.classification.applicable()) {
        raise(ErrorKind::NotApplicable, std::string("query is not applicable: ") +
                                            to_string(out.classification.reason));
    }
    out.tree = reroot(out.tree, out.classification.guards.root_guard);
    out.plan = build_plan(query, out.hypergraph, out.tree, out.classification, mode);
    if (with_fkpk) {
        apply_fkpk(out.plan, query, out.hypergraph, catalog.constraints());
    }
    return out;
}

} // namespace aggjoin
