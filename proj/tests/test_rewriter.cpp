#include <doctest.h>

#include <random>

#include "aggjoin/baseline.hpp"
#include "aggjoin/executor.hpp"
#include "aggjoin/parser.hpp"
#include "aggjoin/rewriter.hpp"
#include "support/fixtures.hpp"
#include "support/random_queries.hpp"

using namespace aggjoin;

namespace {

int count_nodes(const PlanNode& node, PlanNode::Op op) {
    int n = node.op == op ? 1 : 0;
    for (const auto& c : node.children) n += count_nodes(*c, op);
    return n;
}

const PlanNode* find_node(const PlanNode& node, PlanNode::Op op) {
    if (node.op == op) return &node;
    for (const auto& c : node.children) {
        if (const PlanNode* f = find_node(*c, op)) return f;
    }
    return nullptr;
}

} // namespace

TEST_CASE("build: guao plan mirrors the per-join group shape") {
    Catalog catalog = testing::load_tpch_toy();
    Query q = testing::parse_bundled("median_acctbal.sql", catalog);
    PlannedQuery planned = plan_query(q, catalog, Mode::GuAO);

    CHECK(planned.plan.root->op == PlanNode::Op::FinalAggregate);
    REQUIRE(planned.plan.root->finals.size() == 1);
    CHECK(planned.plan.root->finals[0].eval == FinalAggregateSpec::Eval::PercentileWeighted);
    CHECK(planned.plan.root->finals[0].fraction == doctest::Approx(0.5));

    // Four parent/child pairs, each Join -> Project -> GroupSum; five leaves.
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::Join) == 4);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::Project) == 4);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::GroupSum) == 4);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::FreqInit) == 5);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::Scan) == 5);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::AggJoin) == 0);

    // Every GroupSum sits directly on a Project on a Join.
    std::vector<const PlanNode*> stack{planned.plan.root.get()};
    while (!stack.empty()) {
        const PlanNode* n = stack.back();
        stack.pop_back();
        if (n->op == PlanNode::Op::GroupSum) {
            REQUIRE(n->children.size() == 1);
            CHECK(n->children[0]->op == PlanNode::Op::Project);
            CHECK(n->children[0]->children[0]->op == PlanNode::Op::Join);
        }
        for (const auto& c : n->children) stack.push_back(c.get());
    }
}

TEST_CASE("build: guao-plus collapses each group into one AggJoin") {
    Catalog catalog = testing::load_tpch_toy();
    Query q = testing::parse_bundled("median_acctbal.sql", catalog);
    PlannedQuery planned = plan_query(q, catalog, Mode::GuAOPlus);

    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::AggJoin) == 4);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::Join) == 0);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::GroupSum) == 0);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::FreqInit) == 5);

    // Root guard is supplier; the top AggJoin's parent side is supplier and
    // the edges mirror the join tree: supplier-partsupp, supplier-nation,
    // partsupp-part, nation-region.
    const PlanNode* body = planned.plan.root->children[0].get();
    REQUIRE(body->op == PlanNode::Op::AggJoin);
    std::set<std::pair<int, int>> edges;
    std::vector<const PlanNode*> stack{body};
    while (!stack.empty()) {
        const PlanNode* n = stack.back();
        stack.pop_back();
        if (n->op == PlanNode::Op::AggJoin) {
            edges.insert({n->parent_atom, n->child_atom});
        }
        for (const auto& c : n->children) stack.push_back(c.get());
    }
    CHECK(edges == std::set<std::pair<int, int>>{{2, 1}, {2, 3}, {1, 0}, {3, 4}});
}

TEST_CASE("build: single-atom query is scan-filter-aggregate") {
    Catalog catalog = testing::load_tpch_toy();
    Query q = parse_query("SELECT MIN(s_acctbal) FROM supplier", catalog);
    PlannedQuery planned = plan_query(q, catalog, Mode::GuAO);
    const PlanNode& root = *planned.plan.root;
    CHECK(root.op == PlanNode::Op::FinalAggregate);
    REQUIRE(root.children.size() == 1);
    CHECK(root.children[0]->op == PlanNode::Op::Filter);
    CHECK(root.children[0]->children[0]->op == PlanNode::Op::Scan);
    CHECK(count_nodes(root, PlanNode::Op::FreqInit) == 0);
    CHECK(!root.has_freq);
}

TEST_CASE("build: 0MA plans use semi-joins and no frequency column") {
    Catalog catalog = testing::load_tpch_toy_ext();
    Query q = testing::parse_bundled("q2_min_0ma.sql", catalog);
    PlannedQuery planned = plan_query(q, catalog, Mode::GuAO);
    CHECK(planned.classification.query_class == QueryClass::ZeroMA);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::SemiJoin) == 3);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::Join) == 0);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::FreqInit) == 0);
    CHECK(!planned.plan.root->has_freq);

    PlannedQuery plus = plan_query(q, catalog, Mode::GuAOPlus);
    CHECK(count_nodes(*plus.plan.root, PlanNode::Op::SemiJoin) == 3);
    CHECK(count_nodes(*plus.plan.root, PlanNode::Op::AggJoin) == 0);
}

TEST_CASE("rewrite: recipe per aggregate") {
    Catalog catalog = testing::load_tpch_toy_ext();
    Query q = parse_query(
        "SELECT COUNT(*), COUNT(s_acctbal), SUM(s_acctbal), AVG(s_acctbal), "
        "MEDIAN(s_acctbal), MIN(s_acctbal), COUNT(DISTINCT s_acctbal) "
        "FROM supplier, nation WHERE n_nationkey = s_nationkey",
        catalog);
    PlannedQuery planned = plan_query(q, catalog, Mode::GuAO);
    const auto& finals = planned.plan.root->finals;
    REQUIRE(finals.size() == 7);
    CHECK(finals[0].eval == FinalAggregateSpec::Eval::SumFreq);
    CHECK(finals[1].eval == FinalAggregateSpec::Eval::CountWeighted);
    CHECK(finals[2].eval == FinalAggregateSpec::Eval::SumWeighted);
    CHECK(finals[3].eval == FinalAggregateSpec::Eval::AvgWeighted);
    CHECK(finals[4].eval == FinalAggregateSpec::Eval::PercentileWeighted);
    CHECK(finals[5].eval == FinalAggregateSpec::Eval::MinPlain); // set-safe, ignores c
    CHECK(finals[6].eval == FinalAggregateSpec::Eval::CountDistinctPlain);
}

TEST_CASE("placement: the worked piecewise query places both paths") {
    Catalog catalog = testing::load_tpch_toy_ext();
    Query q = testing::parse_bundled("piecewise_min_sum.sql", catalog);
    PlannedQuery planned = plan_query(q, catalog, Mode::GuAOPlus);

    // MIN(r_x): one column along region -> nation -> supplier.
    // SUM(p_y): value + count columns along part -> partsupp -> supplier.
    REQUIRE(planned.plan.agg_specs.size() == 3);
    const auto& min_spec = planned.plan.agg_specs[0];
    CHECK(min_spec.combine == AggColumnSpec::Combine::Min);
    CHECK(min_spec.guard_node == 4);
    CHECK(min_spec.path == std::vector<int>{4, 3, 2});
    CHECK(min_spec.column == "agg1");

    const auto& sum_spec = planned.plan.agg_specs[1];
    CHECK(sum_spec.combine == AggColumnSpec::Combine::Sum);
    CHECK(sum_spec.init == AggColumnSpec::Init::GuardExpr);
    CHECK(sum_spec.guard_node == 0);
    CHECK(sum_spec.path == std::vector<int>{0, 1, 2});
    CHECK(sum_spec.column == "agg2");

    const auto& cnt_spec = planned.plan.agg_specs[2];
    CHECK(cnt_spec.init == AggColumnSpec::Init::NullIndicator);
    CHECK(cnt_spec.column == "agg2_cnt");
    CHECK(cnt_spec.path == sum_spec.path);

    const auto& finals = planned.plan.root->finals;
    REQUIRE(finals.size() == 2);
    CHECK(finals[0].eval == FinalAggregateSpec::Eval::AggColumnMin);
    CHECK(finals[0].agg_column == "agg1");
    CHECK(finals[1].eval == FinalAggregateSpec::Eval::AggColumnSum);
    CHECK(finals[1].agg_column == "agg2");
    CHECK(finals[1].count_column == "agg2_cnt");
}

TEST_CASE("placement: root-guarded aggregates place nothing") {
    Catalog catalog = testing::load_tpch_toy();
    Query q = testing::parse_bundled("median_acctbal.sql", catalog);
    PlannedQuery planned = plan_query(q, catalog, Mode::GuAOPlus);
    CHECK(planned.plan.agg_specs.empty());
}

TEST_CASE("placement: two aggregates sharing an off-root guard get distinct columns") {
    Catalog catalog = testing::load_tpch_toy_ext();
    Query q = parse_query(
        "SELECT MIN(r_x), MAX(r_x) FROM supplier, nation, region "
        "WHERE n_nationkey = s_nationkey AND r_regionkey = n_regionkey "
        "GROUP BY s_suppkey",
        catalog);
    PlannedQuery planned = plan_query(q, catalog, Mode::GuAOPlus);
    REQUIRE(planned.plan.agg_specs.size() == 2);
    CHECK(planned.plan.agg_specs[0].column != planned.plan.agg_specs[1].column);
    CHECK(planned.plan.agg_specs[0].path == planned.plan.agg_specs[1].path);
}

TEST_CASE("fkpk: no constraints means identity") {
    Catalog catalog = testing::load_tpch_toy();
    Query q = testing::parse_bundled("median_acctbal.sql", catalog);
    PlannedQuery planned = plan_query(q, catalog, Mode::GuAO);
    std::string before = render_plan_text(planned.plan);
    apply_fkpk(planned.plan, q, planned.hypergraph, Constraints{});
    CHECK(render_plan_text(planned.plan) == before);
}

TEST_CASE("fkpk: full key information turns every join into a semi-join") {
    Catalog catalog = testing::load_tpch_toy();
    Constraints cs = parse_constraints_file(testing::data_dir("tpch_toy") + "/constraints_fkpk.txt");
    Query q = testing::parse_bundled("median_acctbal.sql", catalog);

    PlannedQuery planned = plan_query(q, catalog, Mode::GuAO);
    apply_fkpk(planned.plan, q, planned.hypergraph, cs);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::SemiJoin) == 4);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::Join) == 0);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::GroupSum) == 0);

    // Idempotent.
    std::string once = render_plan_text(planned.plan);
    apply_fkpk(planned.plan, q, planned.hypergraph, cs);
    CHECK(render_plan_text(planned.plan) == once);

    PlannedQuery plus = plan_query(q, catalog, Mode::GuAOPlus);
    apply_fkpk(plus.plan, q, plus.hypergraph, cs);
    CHECK(count_nodes(*plus.plan.root, PlanNode::Op::SemiJoin) == 4);
    CHECK(count_nodes(*plus.plan.root, PlanNode::Op::AggJoin) == 0);
}

TEST_CASE("fkpk: partial keys rewrite only the provable links") {
    Catalog catalog = testing::load_tpch_toy();
    // Only the nation->region link is declared.
    Constraints cs = parse_constraints_text(
        "unique region(r_regionkey)\n"
        "fk nation(n_regionkey) -> region(r_regionkey)\n");
    Query q = testing::parse_bundled("median_acctbal.sql", catalog);
    PlannedQuery planned = plan_query(q, catalog, Mode::GuAO);
    apply_fkpk(planned.plan, q, planned.hypergraph, cs);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::SemiJoin) == 1);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::Join) == 3);
    // nation's GroupSum disappears (all-ones input after the semi-join), the
    // three groups above the remaining full joins stay, and the non-unique
    // part leaf gains a pre-grouping GroupSum: 4 in total.
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::GroupSum) == 4);
    const PlanNode* semi = find_node(*planned.plan.root, PlanNode::Op::SemiJoin);
    REQUIRE(semi);
    CHECK(count_nodes(*semi, PlanNode::Op::GroupSum) == 0);
    bool pre_grouped_leaf = false;
    std::vector<const PlanNode*> stack{planned.plan.root.get()};
    while (!stack.empty()) {
        const PlanNode* n = stack.back();
        stack.pop_back();
        if (n->op == PlanNode::Op::Join && n->children[1]->op == PlanNode::Op::GroupSum &&
            n->children[1]->children[0]->op == PlanNode::Op::FreqInit) {
            pre_grouped_leaf = true;
        }
        for (const auto& c : n->children) stack.push_back(c.get());
    }
    CHECK(pre_grouped_leaf);
}

TEST_CASE("fkpk: pre-grouping inserted for a non-unique leaf child") {
    Catalog catalog = testing::load_tpch_toy();
    // partsupp.ps_suppkey is not unique; declaring an unrelated unique key
    // enables the rewrite pass without making any link provable.
    Constraints cs = parse_constraints_text("unique part(p_partkey)\n");
    Query q = parse_query(
        "SELECT MEDIAN(s_acctbal) FROM supplier, partsupp WHERE s_suppkey = ps_suppkey",
        catalog);
    PlannedQuery planned = plan_query(q, catalog, Mode::GuAO);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::GroupSum) == 1);
    apply_fkpk(planned.plan, q, planned.hypergraph, cs);
    // A pre-grouping GroupSum appears under the join, on the child side.
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::GroupSum) == 2);
    const PlanNode* join = find_node(*planned.plan.root, PlanNode::Op::Join);
    REQUIRE(join);
    CHECK(join->children[1]->op == PlanNode::Op::GroupSum);

    std::string once = render_plan_text(planned.plan);
    apply_fkpk(planned.plan, q, planned.hypergraph, cs);
    CHECK(render_plan_text(planned.plan) == once);
}

TEST_CASE("fkpk: aggregate-bearing edges stay joins") {
    Catalog catalog = testing::load_tpch_toy_ext();
    Constraints cs = parse_constraints_text(
        "unique region(r_regionkey)\n"
        "unique nation(n_nationkey)\n"
        "unique partsupp(ps_suppkey)\n"
        "unique part(p_partkey)\n"
        "fk nation(n_regionkey) -> region(r_regionkey)\n"
        "fk supplier(s_nationkey) -> nation(n_nationkey)\n"
        "fk supplier(s_suppkey) -> partsupp(ps_suppkey)\n"
        "fk partsupp(ps_partkey) -> part(p_partkey)\n");
    Query q = testing::parse_bundled("piecewise_min_sum.sql", catalog);
    PlannedQuery planned = plan_query(q, catalog, Mode::GuAOPlus);
    apply_fkpk(planned.plan, q, planned.hypergraph, cs);
    // Agg columns flow along every tree edge here, so nothing is replaced.
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::AggJoin) == 4);
    CHECK(count_nodes(*planned.plan.root, PlanNode::Op::SemiJoin) == 0);
}

TEST_CASE("fkpk: never changes results on random key-respecting data") {
    // Random chains/stars of relations where every child join attribute is a
    // key (0..n-1, unique) and every referencing attribute is drawn from it,
    // with extra payload columns and a mix of root and off-root aggregates.
    std::mt19937 rng(60601);
    auto rand_int = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    for (int trial = 0; trial < 30; ++trial) {
        int n_atoms = rand_int(2, 5);
        Catalog catalog;
        std::string constraint_text;
        std::vector<int> key_counts(n_atoms);
        std::vector<int> parent_of(n_atoms, -1);
        for (int i = 1; i < n_atoms; ++i) parent_of[i] = rand_int(0, i - 1);

        // Relation i carries a self key "k", a payload "v", and one
        // referencing column "f<j>" per child j.
        for (int i = 0; i < n_atoms; ++i) {
            Schema schema{{"k", AttributeType::Int64}, {"v", AttributeType::Int64}};
            for (int j = i + 1; j < n_atoms; ++j) {
                if (parent_of[j] == i) {
                    schema.push_back({"f" + std::to_string(j), AttributeType::Int64});
                }
            }
            key_counts[i] = rand_int(3, 25);
            Relation rel("r" + std::to_string(i), schema);
            catalog.add(std::move(rel));
        }
        // Fill bottom-up so referencing values exist.
        for (int i = n_atoms - 1; i >= 0; --i) {
            const Relation& shape = catalog.get("r" + std::to_string(i));
            Relation rel(shape.name(), shape.schema());
            Row row(shape.arity());
            for (int r = 0; r < key_counts[i]; ++r) {
                row[0] = Value::from_int(r);
                row[1] = Value::from_int(rand_int(0, 9));
                for (size_t c = 2; c < shape.arity(); ++c) {
                    int child = std::stoi(shape.schema()[c].name.substr(1));
                    row[c] = Value::from_int(rand_int(0, key_counts[child] - 1));
                }
                rel.append_row(row);
            }
            catalog.add(std::move(rel));
            constraint_text += "unique r" + std::to_string(i) + "(k)\n";
        }
        for (int j = 1; j < n_atoms; ++j) {
            constraint_text += "fk r" + std::to_string(parent_of[j]) + "(f" + std::to_string(j) +
                               ") -> r" + std::to_string(j) + "(k)\n";
        }
        Constraints cs = parse_constraints_text(constraint_text);
        register_constraints(catalog, cs);

        // Aggregates over payloads of random atoms; grouping on atom 0.
        std::string sql = "SELECT ";
        const char* fns[] = {"SUM", "MIN", "MAX", "COUNT", "AVG"};
        int n_aggs = rand_int(1, 3);
        for (int a = 0; a < n_aggs; ++a) {
            if (a) sql += ", ";
            sql += std::string(fns[rand_int(0, 4)]) + "(t" + std::to_string(rand_int(0, n_atoms - 1)) +
                   ".v)";
        }
        sql += " FROM ";
        for (int i = 0; i < n_atoms; ++i) {
            if (i) sql += ", ";
            sql += "r" + std::to_string(i) + " t" + std::to_string(i);
        }
        sql += " WHERE ";
        for (int j = 1; j < n_atoms; ++j) {
            if (j > 1) sql += " AND ";
            sql += "t" + std::to_string(parent_of[j]) + ".f" + std::to_string(j) + " = t" +
                   std::to_string(j) + ".k";
        }
        if (rand_int(0, 1)) sql += " GROUP BY t0.v";

        Query q = parse_query(sql, catalog);
        NaiveResult naive = naive_execute(q, catalog, 10'000'000);
        for (Mode mode : {Mode::GuAO, Mode::GuAOPlus}) {
            PlannedQuery plain = plan_query(q, catalog, mode);
            PlannedQuery rewritten = plan_query(q, catalog, mode);
            apply_fkpk(rewritten.plan, q, rewritten.hypergraph, cs);
            std::string once = render_plan_text(rewritten.plan);
            apply_fkpk(rewritten.plan, q, rewritten.hypergraph, cs);
            REQUIRE(render_plan_text(rewritten.plan) == once);
            for (ExecVariant variant : {ExecVariant::Hash, ExecVariant::Merge}) {
                ExecutionResult a = execute(plain.plan, catalog, variant);
                ExecutionResult b = execute(rewritten.plan, catalog, variant);
                if (!testing::tables_close(a.table, naive.table) ||
                    !testing::tables_close(b.table, naive.table)) {
                    MESSAGE("sql: ", sql);
                    MESSAGE("constraints:\n", constraint_text);
                    MESSAGE(testing::table_diff(b.table, naive.table));
                    FAIL("fk/pk rewrite changed the result");
                }
            }
        }
    }
}

TEST_CASE("plan rendering mentions operators and rewrites") {
    Catalog catalog = testing::load_tpch_toy();
    Query q = testing::parse_bundled("median_acctbal.sql", catalog);
    PlannedQuery planned = plan_query(q, catalog, Mode::GuAOPlus);
    std::string text = render_plan_text(planned.plan);
    CHECK(text.find("AggJoin") != std::string::npos);
    CHECK(text.find("PERCENTILE") != std::string::npos);
    std::string dot = render_plan_dot(planned.plan);
    CHECK(dot.find("digraph plan") != std::string::npos);
}

TEST_CASE("plan: not-applicable queries cannot be planned") {
    Catalog catalog = testing::load_tpch_toy_ext();
    Query q = testing::parse_bundled("sum_cross_atom.sql", catalog);
    CHECK_THROWS_AS(plan_query(q, catalog, Mode::GuAOPlus), Error);
    Query cyclic = testing::parse_bundled("triangle.sql", catalog);
    CHECK_THROWS_AS(plan_query(cyclic, catalog, Mode::GuAOPlus), Error);
}
