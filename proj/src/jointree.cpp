#include "aggjoin/jointree.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace aggjoin {

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

Hypergraph to_hypergraph(const Query& query, const Catalog& catalog) {
    // One slot per (atom, column), merged by the transitive closure of the
    // equi-join conditions.
    std::vector<size_t> atom_offset(query.atoms.size() + 1, 0);
    std::vector<const Relation*> rels(query.atoms.size());
    for (size_t a = 0; a < query.atoms.size(); ++a) {
        rels[a] = &catalog.get(query.atoms[a].relation);
        atom_offset[a + 1] = atom_offset[a] + rels[a]->arity();
    }
    UnionFind uf(atom_offset.back());
    auto slot = [&](const AttrRef& r) { return atom_offset[r.atom] + r.column; };
    for (const auto& jc : query.join_conditions) {
        uf.unite(static_cast<int>(slot(jc.left)), static_cast<int>(slot(jc.right)));
    }

    Hypergraph hg;
    std::vector<int> class_vertex(atom_offset.back(), -1);
    hg.atom_vertices.resize(query.atoms.size());
    hg.atom_attr_names.resize(query.atoms.size());
    hg.edges.resize(query.atoms.size());
    for (size_t a = 0; a < query.atoms.size(); ++a) {
        hg.atom_vertices[a].resize(rels[a]->arity());
        hg.atom_attr_names[a].resize(rels[a]->arity());
        for (size_t c = 0; c < rels[a]->arity(); ++c) {
            hg.atom_attr_names[a][c] = rels[a]->schema()[c].name;
            int cls = uf.find(static_cast<int>(atom_offset[a] + c));
            if (class_vertex[cls] < 0) {
                class_vertex[cls] = static_cast<int>(hg.vertex_names.size());
                hg.vertex_names.push_back(query.atoms[a].alias + "." + rels[a]->schema()[c].name);
                hg.vertex_types.push_back(rels[a]->schema()[c].type);
            } else if (hg.vertex_types[class_vertex[cls]] != rels[a]->schema()[c].type) {
                raise(ErrorKind::NotSupported,
                      "join class mixes attribute types at " + query.atoms[a].alias + "." +
                          rels[a]->schema()[c].name);
            }
            hg.atom_vertices[a][c] = class_vertex[cls];
            hg.edges[a].insert(class_vertex[cls]);
        }
    }
    return hg;
}

std::vector<int> JoinTree::shared_vertices(int u, int v) const {
    std::vector<int> out;
    std::set_intersection(node_vertices[u].begin(), node_vertices[u].end(),
                          node_vertices[v].begin(), node_vertices[v].end(),
                          std::back_inserter(out));
    return out;
}

std::vector<int> JoinTree::postorder() const {
    std::vector<int> order;
    std::vector<int> stack{root};
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        order.push_back(u);
        for (int c : children[u]) stack.push_back(c);
    }
    std::reverse(order.begin(), order.end());
    return order;
}

int JoinTree::depth(int node) const {
    int d = 0;
    while (parent[node] >= 0) {
        node = parent[node];
        ++d;
    }
    return d;
}

CyclicError::CyclicError(std::vector<int> residual_atoms)
    : Error(ErrorKind::Cyclic,
            [&residual_atoms] {
                std::string msg = "query hypergraph is cyclic; irreducible atoms:";
                for (int a : residual_atoms) msg += " " + std::to_string(a);
                return msg;
            }()),
      residual_(std::move(residual_atoms)) {}

JoinTree gyo_join_tree(const Hypergraph& hypergraph) {
    size_t n = hypergraph.edges.size();
    if (n == 0) raise(ErrorKind::Internal, "empty hypergraph");

    JoinTree tree;
    tree.parent.assign(n, -1);
    tree.children.assign(n, {});
    tree.node_vertices = hypergraph.edges;

    std::vector<bool> removed(n, false);
    size_t remaining = n;
    // Vertex occurrence counts over the remaining edges.
    std::vector<int> occurrences(hypergraph.vertex_count(), 0);
    for (const auto& edge : hypergraph.edges) {
        for (int v : edge) ++occurrences[v];
    }

    while (remaining > 1) {
        int ear = -1, witness = -1;
        for (size_t e = 0; e < n && ear < 0; ++e) {
            if (removed[e]) continue;
            // The part of e visible to other edges.
            std::vector<int> shared;
            for (int v : hypergraph.edges[e]) {
                if (occurrences[v] >= 2) shared.push_back(v);
            }
            for (size_t w = 0; w < n; ++w) {
                if (w == e || removed[w]) continue;
                bool covered = true;
                for (int v : shared) {
                    if (!hypergraph.edges[w].count(v)) {
                        covered = false;
                        break;
                    }
                }
                if (covered) {
                    ear = static_cast<int>(e);
                    witness = static_cast<int>(w);
                    break;
                }
            }
        }
        if (ear < 0) {
            std::vector<int> residual;
            for (size_t e = 0; e < n; ++e) {
                if (!removed[e]) residual.push_back(static_cast<int>(e));
            }
            throw CyclicError(std::move(residual));
        }
        removed[ear] = true;
        --remaining;
        for (int v : hypergraph.edges[ear]) --occurrences[v];
        tree.parent[ear] = witness;
        tree.children[witness].push_back(ear);
    }
    for (size_t e = 0; e < n; ++e) {
        if (!removed[e]) tree.root = static_cast<int>(e);
    }

    // Cartesian-product subtrees hang directly under the root.
    for (size_t e = 0; e < n; ++e) {
        int p = tree.parent[e];
        if (p < 0 || p == tree.root) continue;
        if (tree.shared_vertices(static_cast<int>(e), p).empty()) {
            auto& siblings = tree.children[p];
            siblings.erase(std::find(siblings.begin(), siblings.end(), static_cast<int>(e)));
            tree.parent[e] = tree.root;
            tree.children[tree.root].push_back(static_cast<int>(e));
        }
    }
    for (auto& kids : tree.children) std::sort(kids.begin(), kids.end());
    return tree;
}

JoinTree reroot(const JoinTree& tree, int new_root) {
    if (new_root < 0 || new_root >= static_cast<int>(tree.size())) {
        raise(ErrorKind::Plan, "reroot: unknown node " + std::to_string(new_root));
    }
    JoinTree out = tree;
    if (new_root == tree.root) return out;
    // Reverse parent links along the old root -> new_root path.
    std::vector<int> path;
    for (int u = new_root; u >= 0; u = tree.parent[u]) path.push_back(u);
    out.root = new_root;
    out.parent[new_root] = -1;
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        out.parent[path[i + 1]] = path[i];
    }
    // Rebuild children from parents.
    out.children.assign(tree.size(), {});
    for (size_t u = 0; u < tree.size(); ++u) {
        if (out.parent[u] >= 0) out.children[out.parent[u]].push_back(static_cast<int>(u));
    }
    for (auto& kids : out.children) std::sort(kids.begin(), kids.end());
    return out;
}

bool verify_connectedness(const JoinTree& tree) {
    size_t n = tree.size();
    std::set<int> all_vertices;
    for (const auto& vs : tree.node_vertices) all_vertices.insert(vs.begin(), vs.end());
    for (int v : all_vertices) {
        std::vector<int> members;
        for (size_t u = 0; u < n; ++u) {
            if (tree.node_vertices[u].count(v)) members.push_back(static_cast<int>(u));
        }
        if (members.size() <= 1) continue;
        // BFS within the member-induced subgraph of the tree.
        std::set<int> member_set(members.begin(), members.end());
        std::vector<int> stack{members[0]};
        std::set<int> seen{members[0]};
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            std::vector<int> adjacent = tree.children[u];
            if (tree.parent[u] >= 0) adjacent.push_back(tree.parent[u]);
            for (int w : adjacent) {
                if (member_set.count(w) && !seen.count(w)) {
                    seen.insert(w);
                    stack.push_back(w);
                }
            }
        }
        if (seen.size() != members.size()) return false;
    }
    return true;
}

namespace {

void render_node(const JoinTree& tree, const Query& query, int node, int indent,
                 std::string& out) {
    out.append(indent * 2, ' ');
    out += query.atoms[node].relation;
    if (query.atoms[node].alias != query.atoms[node].relation) {
        out += " " + query.atoms[node].alias;
    }
    out += "\n";
    for (int c : tree.children[node]) render_node(tree, query, c, indent + 1, out);
}

} // namespace

std::string render_tree_text(const JoinTree& tree, const Query& query) {
    std::string out;
    render_node(tree, query, tree.root, 0, out);
    return out;
}

std::string render_tree_dot(const JoinTree& tree, const Query& query) {
    std::ostringstream out;
    out << "graph jointree {\n";
    for (size_t u = 0; u < tree.size(); ++u) {
        out << "  n" << u << " [label=\"" << query.atoms[u].alias << "\"];\n";
    }
    for (size_t u = 0; u < tree.size(); ++u) {
        if (tree.parent[u] >= 0) out << "  n" << tree.parent[u] << " -- n" << u << ";\n";
    }
    out << "}\n";
    return out.str();
}

} // namespace aggjoin
