#include "aggjoin/workload.hpp"

#include <filesystem>
#include <fstream>
#include <vector>

#include "aggjoin/error.hpp"

namespace aggjoin {

namespace {

std::string render_edge_query(int atoms, const std::vector<std::pair<int, int>>& joins) {
    std::string sql = "SELECT COUNT(*) FROM\n";
    for (int i = 1; i <= atoms; ++i) {
        if (i > 1) sql += ", ";
        sql += "edge e" + std::to_string(i);
    }
    sql += "\n";
    for (size_t k = 0; k < joins.size(); ++k) {
        sql += k == 0 ? "WHERE " : " AND  ";
        sql += "e" + std::to_string(joins[k].first) + ".toNode = e" +
               std::to_string(joins[k].second) + ".fromNode\n";
    }
    return sql;
}

} // namespace

std::string workload_sql(WorkloadKind kind, int size) {
    if (size < 1) raise(ErrorKind::Usage, "workload size must be at least 1");
    if (kind == WorkloadKind::Path) {
        std::vector<std::pair<int, int>> joins;
        for (int i = 1; i <= size; ++i) joins.emplace_back(i, i + 1);
        return render_edge_query(size + 1, joins);
    }
    switch (size) {
        case 1:
            return render_edge_query(3, {{1, 2}, {1, 3}});
        case 2:
            return render_edge_query(5, {{1, 2}, {1, 3}, {2, 4}, {2, 5}});
        case 3:
            return render_edge_query(5, {{1, 2}, {2, 3}, {1, 4}, {2, 5}});
        default:
            raise(ErrorKind::Usage, "tree workloads are defined for sizes 1..3");
    }
}

std::string workload_name(WorkloadKind kind, int size) {
    std::string n = std::to_string(size);
    if (n.size() < 2) n = "0" + n;
    return (kind == WorkloadKind::Path ? "path-" : "tree-") + n;
}

std::string write_workload_file(WorkloadKind kind, int size, const std::string& out_dir) {
    std::string sql = workload_sql(kind, size);
    std::filesystem::create_directories(out_dir);
    std::string path = out_dir + "/" + workload_name(kind, size) + ".sql";
    std::ofstream out(path);
    if (!out) raise(ErrorKind::Io, "cannot write '" + path + "'");
    out << sql;
    return path;
}

} // namespace aggjoin
