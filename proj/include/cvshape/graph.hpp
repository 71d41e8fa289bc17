#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cvshape/gaussian.hpp"

namespace cvshape {

/// Node label of a cluster graph. Labels survive node removal, so after
/// deleting node 3 from a 1-2-3-4 wire the survivors are still 1, 2 and 4.
using NodeId = int;

struct Edge {
    NodeId a;
    NodeId b;
    int sign;
};

/// Undirected simple graph with +-1 edge weights. The state attached to a
/// graph stores its modes in ascending node order.
class ClusterGraph {
   public:
    ClusterGraph() = default;
    explicit ClusterGraph(const std::vector<NodeId> &nodes);

    /// Wire 1 - 2 - ... - n with all edge signs +1.
    static ClusterGraph linear(int n);

    void add_node(NodeId node);
    /// Throws on self-loops, unknown nodes, duplicate edges or a sign other than +-1.
    void add_edge(NodeId a, NodeId b, int sign = 1);
    void remove_edge(NodeId a, NodeId b);
    void remove_node(NodeId node);
    void set_edge_sign(NodeId a, NodeId b, int sign);

    bool contains(NodeId node) const { return adjacency_.count(node) != 0; }
    bool adjacent(NodeId a, NodeId b) const;
    int edge_sign(NodeId a, NodeId b) const;

    std::vector<NodeId> nodes() const;
    std::vector<NodeId> neighbors(NodeId node) const;
    std::size_t degree(NodeId node) const;
    std::vector<Edge> edges() const;

    std::size_t num_nodes() const { return adjacency_.size(); }
    std::size_t num_edges() const;

    /// Position of `node` in the ascending node order, i.e. its mode index.
    std::size_t mode_index(NodeId node) const;

    /// Signed adjacency matrix in mode order.
    Matrix adjacency_matrix() const;

    bool operator==(const ClusterGraph &) const = default;

   private:
    void require(NodeId node, const char *what) const;

    std::map<NodeId, std::map<NodeId, int>> adjacency_;
};

/// One term of a nullifier: coefficient * quadrature of a node.
struct NullifierTerm {
    NodeId node;
    Quadrature quadrature;
    double coefficient;
};

/// Quadrature combination anchored at a node, e.g. p_2 - x_1 - x_3.
struct Nullifier {
    NodeId label;
    std::vector<NullifierTerm> terms;

    /// Exactly one p-term with coefficient +1; every other term an x-term with coefficient +-1.
    bool has_graph_structure() const;

    /// Map node labels to mode indices of `graph`.
    LinearForm on_modes(const ClusterGraph &graph) const;

    /// Human-readable form, e.g. "p1-x2" or "p1+x4".
    std::string to_string() const;
};

Nullifier nullifier_of(const ClusterGraph &graph, NodeId node);

/// One nullifier per node: p_i - sum_{j in N_i} sign(ij) x_j, in node order.
std::vector<Nullifier> nullifiers_of(const ClusterGraph &graph);

/// Variance of a node-labelled nullifier on a state whose modes follow `graph`.
double nullifier_variance(const GaussianState &state, const ClusterGraph &graph, const Nullifier &form);

/// Canonical construction: p-squeezed vacua (one dB value per node, in node
/// order) followed by a QND gate of gain sign(ij) on every edge.
SymplecticTransform canonical_symplectic(const ClusterGraph &graph, const std::vector<double> &db);
GaussianState build_canonical(const ClusterGraph &graph, const std::vector<double> &db);
GaussianState build_canonical(const ClusterGraph &graph, double db);

/// Product of the QND gates of every edge.
SymplecticTransform cz_symplectic(const ClusterGraph &graph);

/// Local phases {pi, -pi/2, pi/2, 0} that turn the 1-2-3-4 wire into a ring.
/// Throws unless `wire` is exactly that graph.
std::vector<std::pair<NodeId, double>> wire_to_ring_phases(const ClusterGraph &wire);

/// The signed 4-ring 1-3-2-4-1 whose nullifiers the rotated wire satisfies.
ClusterGraph ring_after_wire_phases();

}  // namespace cvshape
