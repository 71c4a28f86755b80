#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aggjoin/baseline.hpp"
#include "aggjoin/catalog.hpp"
#include "aggjoin/classifier.hpp"
#include "aggjoin/executor.hpp"
#include "aggjoin/parser.hpp"
#include "aggjoin/rewriter.hpp"
#include "aggjoin/workload.hpp"

namespace fs = std::filesystem;
using namespace aggjoin;

namespace {

int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::Usage: return 2;
        case ErrorKind::Parse:
        case ErrorKind::NotSupported:
        case ErrorKind::Resolve:
        case ErrorKind::Ingest:
        case ErrorKind::Constraint: return 3;
        case ErrorKind::Cyclic:
        case ErrorKind::NotApplicable: return 4;
        case ErrorKind::Budget: return 5;
        case ErrorKind::OracleMismatch: return 6;
        default: return 1;
    }
}

Catalog load_data_dir(const std::string& dir, bool undirected) {
    Catalog catalog;
    if (!fs::is_directory(dir)) raise(ErrorKind::Io, "'" + dir + "' is not a directory");
    std::vector<fs::path> entries;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) entries.push_back(entry.path());
    }
    std::sort(entries.begin(), entries.end());
    for (const auto& path : entries) {
        std::string ext = path.extension().string();
        if (ext == ".csv") {
            catalog.add(load_csv_with_typed_header(path.string(), path.stem().string()));
        } else if (ext == ".el" || ext == ".edgelist") {
            if (catalog.contains("edge")) {
                raise(ErrorKind::Ingest, "multiple edge-list files in '" + dir + "'");
            }
            catalog.add(load_edge_list(path.string(), !undirected));
        }
    }
    if (catalog.relation_names().empty()) {
        raise(ErrorKind::Io, "no .csv or .el files under '" + dir + "'");
    }
    return catalog;
}

struct ModeRun {
    Mode mode;
    ResultTable table;
    ExecStats stats;
};

bool values_close(const Value& a, const Value& b) {
    if (a.is_null() || b.is_null()) return a.is_null() && b.is_null();
    bool fa = a.tag() == Value::Tag::Float || a.tag() == Value::Tag::Int;
    bool fb = b.tag() == Value::Tag::Float || b.tag() == Value::Tag::Int;
    if (fa && fb) {
        if (a.tag() == Value::Tag::Int && b.tag() == Value::Tag::Int) {
            return a.as_int() == b.as_int();
        }
        double x = a.numeric(), y = b.numeric();
        double scale = std::max({1e-12, std::fabs(x), std::fabs(y)});
        return std::fabs(x - y) <= 1e-9 * scale;
    }
    return a.same_as(b);
}

bool tables_close(const ResultTable& a, const ResultTable& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (size_t r = 0; r < a.rows.size(); ++r) {
        if (a.rows[r].size() != b.rows[r].size()) return false;
        for (size_t c = 0; c < a.rows[r].size(); ++c) {
            if (!values_close(a.rows[r][c], b.rows[r][c])) return false;
        }
    }
    return true;
}

Mode mode_from_string(const std::string& text) {
    if (text == "baseline") return Mode::Baseline;
    if (text == "guao") return Mode::GuAO;
    if (text == "guao-plus") return Mode::GuAOPlus;
    raise(ErrorKind::Usage, "unknown mode '" + text + "'");
}

ModeRun run_one_mode(const Query& query, const Catalog& catalog, Mode mode, ExecVariant variant,
                     uint64_t budget, bool with_fkpk, bool explain) {
    ModeRun run;
    run.mode = mode;
    if (mode == Mode::Baseline) {
        NaiveResult naive = naive_execute(query, catalog, budget);
        run.table = std::move(naive.table);
        run.stats = std::move(naive.stats);
        return run;
    }
    PlannedQuery planned = plan_query(query, catalog, mode, false);
    if (explain) {
        std::cerr << "-- join tree (" << to_string(mode) << ")\n"
                  << render_tree_text(planned.tree, query) << render_tree_dot(planned.tree, query)
                  << "-- plan\n"
                  << render_plan_text(planned.plan) << render_plan_dot(planned.plan);
    }
    if (with_fkpk) {
        apply_fkpk(planned.plan, query, planned.hypergraph, catalog.constraints());
        if (explain) {
            std::cerr << "-- plan after fk/pk rewrite\n"
                      << render_plan_text(planned.plan) << render_plan_dot(planned.plan);
        }
    }
    ExecutionResult result = execute(planned.plan, catalog, variant);
    run.table = std::move(result.table);
    run.stats = std::move(result.stats);
    return run;
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) raise(ErrorKind::Io, "cannot write '" + path + "'");
    out << body;
}

int cmd_load_check(const std::string& data, const std::string& fkpk, bool undirected) {
    Catalog catalog = load_data_dir(data, undirected);
    for (const auto& name : catalog.relation_names()) {
        const Relation& rel = catalog.get(name);
        std::cout << name << ": " << rel.cardinality() << " rows (";
        for (size_t i = 0; i < rel.schema().size(); ++i) {
            if (i) std::cout << ", ";
            std::cout << rel.schema()[i].name << ":" << to_string(rel.schema()[i].type);
        }
        std::cout << ")\n";
    }
    if (!fkpk.empty()) {
        register_constraints(catalog, parse_constraints_file(fkpk));
        std::cout << "constraints ok: " << catalog.constraints().unique_keys.size()
                  << " unique, " << catalog.constraints().foreign_keys.size() << " fk\n";
    }
    return 0;
}

int cmd_classify(const std::string& query_path, const std::string& data, bool undirected) {
    Catalog catalog = load_data_dir(data, undirected);
    Query query = parse_query_file(query_path, catalog);
    Hypergraph hg = to_hypergraph(query, catalog);
    Classification cls;
    try {
        JoinTree tree = gyo_join_tree(hg);
        cls = classify(query, hg, tree);
    } catch (const CyclicError&) {
        cls = Classification::not_applicable(RejectReason::Cyclic);
    }
    std::cout << classification_to_json(cls, query) << "\n";
    return 0;
}

int cmd_run(const std::string& query_path, const std::string& data,
            const std::vector<std::string>& mode_names, const std::string& variant_name,
            const std::string& fkpk, uint64_t budget, bool explain, const std::string& stats_path,
            bool compare_oracle, const std::string& out_path, bool undirected) {
    Catalog catalog = load_data_dir(data, undirected);
    if (!fkpk.empty()) register_constraints(catalog, parse_constraints_file(fkpk));
    Query query = parse_query_file(query_path, catalog);
    ExecVariant variant = variant_name == "merge" ? ExecVariant::Merge : ExecVariant::Hash;

    std::vector<Mode> modes;
    for (const auto& name : mode_names) modes.push_back(mode_from_string(name));
    if (modes.empty()) modes.push_back(Mode::GuAOPlus);

    std::vector<ModeRun> runs;
    for (Mode mode : modes) {
        runs.push_back(run_one_mode(query, catalog, mode, variant, budget, !fkpk.empty(), explain));
    }

    std::string csv = runs.front().table.to_csv();
    if (!out_path.empty()) {
        write_text_file(out_path, csv);
    } else {
        for (const auto& run : runs) {
            std::cout << "# mode=" << to_string(run.mode) << " variant=" << variant_name
                      << " peak=" << run.stats.peak_materialised_tuples << "\n"
                      << run.table.to_csv();
        }
    }
    if (!stats_path.empty()) {
        nlohmann::json all = nlohmann::json::array();
        for (const auto& run : runs) {
            all.push_back(nlohmann::json::parse(stats_to_json(run.stats)));
        }
        write_text_file(stats_path, all.dump(2) + "\n");
    }

    if (compare_oracle) {
        NaiveResult oracle = naive_execute(query, catalog, budget);
        for (const auto& run : runs) {
            if (run.mode != Mode::Baseline && !tables_close(run.table, oracle.table)) {
                raise(ErrorKind::OracleMismatch,
                      std::string("mode ") + to_string(run.mode) + " disagrees with the oracle");
            }
        }
        for (size_t i = 1; i < runs.size(); ++i) {
            if (!tables_close(runs[i].table, runs.front().table)) {
                raise(ErrorKind::OracleMismatch, "modes disagree with each other");
            }
        }
        std::cout << "ALL MODES AGREE";
        if (oracle.table.rows.size() == 1) {
            std::cout << ":";
            for (size_t c = 0; c < oracle.table.column_names.size(); ++c) {
                std::cout << " " << oracle.table.column_names[c] << "="
                          << oracle.table.rows[0][c].to_display_string();
            }
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_generate(const std::string& kind_name, int size, const std::string& out_dir) {
    WorkloadKind kind;
    if (kind_name == "path") {
        kind = WorkloadKind::Path;
    } else if (kind_name == "tree") {
        kind = WorkloadKind::Tree;
    } else {
        raise(ErrorKind::Usage, "kind must be 'path' or 'tree'");
    }
    std::cout << write_workload_file(kind, size, out_dir) << "\n";
    return 0;
}

int cmd_bench(const std::string& query_path, const std::string& data, const std::string& mode_name,
              const std::string& variant_name, const std::string& fkpk, uint64_t budget, int reps,
              int warmup, const std::string& stats_path, bool undirected) {
    if (reps < 1) raise(ErrorKind::Usage, "--reps must be at least 1");
    Catalog catalog = load_data_dir(data, undirected);
    if (!fkpk.empty()) register_constraints(catalog, parse_constraints_file(fkpk));
    Query query = parse_query_file(query_path, catalog);
    Mode mode = mode_from_string(mode_name);
    ExecVariant variant = variant_name == "merge" ? ExecVariant::Merge : ExecVariant::Hash;

    std::vector<double> times;
    ExecStats last_stats;
    for (int i = 0; i < warmup + reps; ++i) {
        ModeRun run = run_one_mode(query, catalog, mode, variant, budget, !fkpk.empty(), false);
        if (i >= warmup) times.push_back(run.stats.total_ms);
        last_stats = std::move(run.stats);
    }
    double mean = 0;
    for (double t : times) mean += t;
    mean /= times.size();
    double var = 0;
    for (double t : times) var += (t - mean) * (t - mean);
    double stddev = times.size() > 1 ? std::sqrt(var / (times.size() - 1)) : 0.0;

    std::cout << "mode=" << mode_name << " reps=" << reps << " warmup=" << warmup
              << " mean_ms=" << mean << " std_ms=" << stddev << "\n";
    if (!stats_path.empty()) {
        nlohmann::json j;
        j["mode"] = mode_name;
        j["variant"] = variant_name;
        j["reps"] = reps;
        j["warmup"] = warmup;
        j["mean_ms"] = mean;
        j["std_ms"] = stddev;
        j["runs_ms"] = times;
        j["last_run"] = nlohmann::json::parse(stats_to_json(last_stats));
        write_text_file(stats_path, j.dump(2) + "\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"In-memory evaluator for guarded and piecewise-guarded aggregate queries"};
    app.require_subcommand(1);

    std::string data, query_path, fkpk, stats_path, out_path, variant = "hash";
    std::vector<std::string> modes;
    uint64_t budget = 10'000'000;
    bool explain = false, compare_oracle = false, undirected = false;

    auto add_data_opts = [&](CLI::App* cmd, bool with_query) {
        cmd->add_option("--data", data, "data directory (*.csv typed-header, *.el edge lists)")
            ->required();
        cmd->add_flag("--undirected", undirected, "load edge lists as undirected");
        if (with_query) cmd->add_option("--query", query_path, "query file")->required();
    };

    auto* load_check = app.add_subcommand("load-check", "load a data directory and report");
    add_data_opts(load_check, false);
    load_check->add_option("--fkpk", fkpk, "constraints file to validate");

    auto* classify_cmd = app.add_subcommand("classify", "classify a query");
    add_data_opts(classify_cmd, true);

    auto* run = app.add_subcommand("run", "execute a query");
    add_data_opts(run, true);
    run->add_option("--mode", modes, "baseline | guao | guao-plus (repeatable)");
    run->add_option("--variant", variant, "hash | merge")
        ->check(CLI::IsMember({"hash", "merge"}));
    run->add_option("--fkpk", fkpk, "constraints file enabling the FK/PK rewrites");
    run->add_option("--budget", budget, "baseline tuple budget");
    run->add_flag("--explain", explain, "print join tree and plans to stderr");
    run->add_option("--stats", stats_path, "write execution stats JSON");
    run->add_flag("--compare-oracle", compare_oracle, "check all modes against the naive oracle");
    run->add_option("--out", out_path, "write the result CSV here instead of stdout");

    std::string kind = "path";
    int size = 3;
    std::string out_dir = ".";
    auto* generate = app.add_subcommand("generate", "emit path/tree workload queries");
    generate->add_option("--kind", kind, "path | tree")->required();
    generate->add_option("--size", size, "join count (path) or shape 1..3 (tree)")->required();
    generate->add_option("--out", out_dir, "output directory");

    int reps = 5, warmup = 1;
    std::string bench_mode = "guao-plus";
    auto* bench = app.add_subcommand("bench", "repeat a query and report timing");
    add_data_opts(bench, true);
    bench->add_option("--mode", bench_mode, "baseline | guao | guao-plus");
    bench->add_option("--variant", variant, "hash | merge")
        ->check(CLI::IsMember({"hash", "merge"}));
    bench->add_option("--fkpk", fkpk, "constraints file");
    bench->add_option("--budget", budget, "baseline tuple budget");
    bench->add_option("--reps", reps, "measured repetitions");
    bench->add_option("--warmup", warmup, "warm-up runs");
    bench->add_option("--stats", stats_path, "write bench stats JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (load_check->parsed()) return cmd_load_check(data, fkpk, undirected);
        if (classify_cmd->parsed()) return cmd_classify(query_path, data, undirected);
        if (run->parsed()) {
            return cmd_run(query_path, data, modes, variant, fkpk, budget, explain, stats_path,
                           compare_oracle, out_path, undirected);
        }
        if (generate->parsed()) return cmd_generate(kind, size, out_dir);
        if (bench->parsed()) {
            return cmd_bench(query_path, data, bench_mode, variant, fkpk, budget, reps, warmup,
                             stats_path, undirected);
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
