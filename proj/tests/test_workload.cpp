#include <doctest.h>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "aggjoin/baseline.hpp"
#include "aggjoin/executor.hpp"
#include "aggjoin/parser.hpp"
#include "aggjoin/rewriter.hpp"
#include "aggjoin/workload.hpp"
#include "support/fixtures.hpp"

using namespace aggjoin;

namespace {

std::string squash_whitespace(const std::string& text) {
    std::string out;
    bool in_space = true;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) out += ' ';
            in_space = true;
        } else {
            out += c;
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

Catalog random_graph_catalog(std::mt19937& rng, int nodes, int edges) {
    Relation edge("edge", Schema{{"fromNode", AttributeType::Int64},
                                 {"toNode", AttributeType::Int64}});
    for (int i = 0; i < edges; ++i) {
        Value row[2] = {Value::from_int((int64_t)(rng() % nodes)),
                        Value::from_int((int64_t)(rng() % nodes))};
        edge.append_row(row);
    }
    Catalog catalog;
    catalog.add(std::move(edge));
    return catalog;
}

} // namespace

TEST_CASE("workload: path-03 renders the documented SQL") {
    std::string expected =
        "SELECT COUNT(*) FROM "
        "edge e1, edge e2, edge e3, edge e4 "
        "WHERE e1.toNode = e2.fromNode "
        "AND e2.toNode = e3.fromNode "
        "AND e3.toNode = e4.fromNode";
    CHECK(squash_whitespace(workload_sql(WorkloadKind::Path, 3)) == expected);

    // The bundled query file is exactly the generator's output.
    std::ifstream in(testing::query_path("path-03.sql"));
    std::stringstream buffer;
    buffer << in.rdbuf();
    CHECK(buffer.str() == workload_sql(WorkloadKind::Path, 3));
}

TEST_CASE("workload: smallest path and tree shapes") {
    Catalog catalog = testing::load_tpch_toy_ext();

    Query p1 = parse_query(workload_sql(WorkloadKind::Path, 1), catalog);
    CHECK(p1.atoms.size() == 2);
    CHECK(p1.join_conditions.size() == 1);

    Query t1 = parse_query(workload_sql(WorkloadKind::Tree, 1), catalog);
    CHECK(t1.atoms.size() == 3);
    REQUIRE(t1.join_conditions.size() == 2);
    // both joins hang off e1.toNode
    CHECK(t1.join_conditions[0].left.text == "e1.toNode");
    CHECK(t1.join_conditions[1].left.text == "e1.toNode");

    CHECK(parse_query(workload_sql(WorkloadKind::Tree, 2), catalog).atoms.size() == 5);
    CHECK(parse_query(workload_sql(WorkloadKind::Tree, 3), catalog).atoms.size() == 5);
    CHECK_THROWS_AS(workload_sql(WorkloadKind::Tree, 4), Error);
    CHECK_THROWS_AS(workload_sql(WorkloadKind::Path, 0), Error);
}

TEST_CASE("workload: file writer") {
    std::string dir = std::filesystem::temp_directory_path() / "aj_workloads";
    std::string path = write_workload_file(WorkloadKind::Path, 5, dir);
    CHECK(path.find("path-05.sql") != std::string::npos);
    std::ifstream in(path);
    CHECK(in.good());
}

TEST_CASE("workload: generated paths match the walk-count oracle") {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 3; ++trial) {
        Catalog catalog = random_graph_catalog(rng, 40, 120);
        for (int joins = 1; joins <= 4; ++joins) {
            Query q = parse_query(workload_sql(WorkloadKind::Path, joins), catalog);
            PlannedQuery planned = plan_query(q, catalog, Mode::GuAOPlus);
            ExecutionResult result = execute(planned.plan, catalog, ExecVariant::Hash);
            CHECK(result.table.rows[0][0].as_int() ==
                  static_cast<int64_t>(count_walks(catalog.get("edge"), joins + 1)));
        }
    }
}

TEST_CASE("workload: tree queries agree with the naive oracle") {
    std::mt19937 rng(78);
    for (int trial = 0; trial < 3; ++trial) {
        Catalog catalog = random_graph_catalog(rng, 12, 30);
        for (int size = 1; size <= 3; ++size) {
            Query q = parse_query(workload_sql(WorkloadKind::Tree, size), catalog);
            NaiveResult naive = naive_execute(q, catalog, 100'000'000);
            for (Mode mode : {Mode::GuAO, Mode::GuAOPlus}) {
                PlannedQuery planned = plan_query(q, catalog, mode);
                ExecutionResult result = execute(planned.plan, catalog, ExecVariant::Hash);
                CHECK(result.table.rows[0][0].as_int() == naive.table.rows[0][0].as_int());
            }
        }
    }
}
