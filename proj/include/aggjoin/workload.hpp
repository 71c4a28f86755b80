#pragma once

#include <string>

namespace aggjoin {

enum class WorkloadKind { Path, Tree };

/// path-k: k+1 edge atoms chained on toNode = fromNode, COUNT(*).
/// tree-1: one binary branch       e1.to = e2.from, e1.to = e3.from
/// tree-2: two nested branches     + e2.to = e4.from, e2.to = e5.from
/// tree-3: depth-2 caterpillar     e1-e2 spine with a leg at each spine head
std::string workload_sql(WorkloadKind kind, int size);

std::string workload_name(WorkloadKind kind, int size); // e.g. "path-03"

/// Writes <name>.sql under out_dir and returns the full path.
std::string write_workload_file(WorkloadKind kind, int size, const std::string& out_dir);

} // namespace aggjoin
