#pragma once

#include <set>
#include <string>
#include <vector>

#include "aggjoin/catalog.hpp"
#include "aggjoin/error.hpp"
#include "aggjoin/query.hpp"

namespace aggjoin {

/// Query hypergraph after equi-join renaming: one vertex per equivalence
/// class of attributes (join-merged) or per private attribute, one edge per
/// atom. Vertex names are the first-written "alias.attr" of the class.
struct Hypergraph {
    std::vector<std::string> vertex_names;
    std::vector<AttributeType> vertex_types;
    // atom -> column -> vertex id
    std::vector<std::vector<int>> atom_vertices;
    // atom -> column -> base attribute name (relation schema name)
    std::vector<std::vector<std::string>> atom_attr_names;
    // atom -> deduplicated vertex set
    std::vector<std::set<int>> edges;

    int vertex_of(const AttrRef& ref) const { return atom_vertices[ref.atom][ref.column]; }
    size_t vertex_count() const { return vertex_names.size(); }

    /// First base attribute of `atom` belonging to the vertex, or "".
    std::string attr_of_vertex(int atom, int vertex) const {
        for (size_t c = 0; c < atom_vertices[atom].size(); ++c) {
            if (atom_vertices[atom][c] == vertex) return atom_attr_names[atom][c];
        }
        return "";
    }
};

Hypergraph to_hypergraph(const Query& query, const Catalog& catalog);

/// Rooted join tree over the query atoms. Node ids are atom indices; the
/// labelling is the identity. Children are kept in ascending atom order.
struct JoinTree {
    int root = 0;
    std::vector<int> parent;                 // -1 at the root
    std::vector<std::vector<int>> children;
    std::vector<std::set<int>> node_vertices;

    size_t size() const { return parent.size(); }
    std::vector<int> shared_vertices(int u, int v) const;
    /// Nodes in a bottom-up order (children before parents).
    std::vector<int> postorder() const;
    int depth(int node) const;
};

class CyclicError : public Error {
public:
    explicit CyclicError(std::vector<int> residual_atoms);
    const std::vector<int>& residual_atoms() const { return residual_; }

private:
    std::vector<int> residual_;
};

/// GYO reduction. Ears are removed lowest-atom-index first and attached as
/// children of their (lowest-index) witness; the last remaining edge is the
/// root. Subtrees sharing no vertex with the rest re-hang directly under the
/// root. Throws CyclicError with the irreducible edges when the reduction
/// stalls.
JoinTree gyo_join_tree(const Hypergraph& hypergraph);

JoinTree reroot(const JoinTree& tree, int new_root);

bool verify_connectedness(const JoinTree& tree);

std::string render_tree_text(const JoinTree& tree, const Query& query);
std::string render_tree_dot(const JoinTree& tree, const Query& query);

} // namespace aggjoin
