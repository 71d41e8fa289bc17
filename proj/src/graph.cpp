#include "cvshape/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace cvshape {

ClusterGraph::ClusterGraph(const std::vector<NodeId> &nodes) {
    for (auto n : nodes) add_node(n);
}

ClusterGraph ClusterGraph::linear(int n) {
    if (n < 1) throw std::invalid_argument("linear: need at least one node");
    ClusterGraph g;
    for (int i = 1; i <= n; ++i) g.add_node(i);
    for (int i = 1; i < n; ++i) g.add_edge(i, i + 1);
    return g;
}

void ClusterGraph::require(NodeId node, const char *what) const {
    if (!contains(node)) {
        throw std::invalid_argument(std::string(what) + ": node " + std::to_string(node) + " not in graph");
    }
}

void ClusterGraph::add_node(NodeId node) {
    if (contains(node)) throw std::invalid_argument("add_node: duplicate node " + std::to_string(node));
    adjacency_[node];
}

void ClusterGraph::add_edge(NodeId a, NodeId b, int sign) {
    require(a, "add_edge");
    require(b, "add_edge");
    if (a == b) throw std::invalid_argument("add_edge: self-loop on node " + std::to_string(a));
    if (sign != 1 && sign != -1) throw std::invalid_argument("add_edge: sign must be +1 or -1");
    if (adjacent(a, b)) {
        throw std::invalid_argument("add_edge: duplicate edge " + std::to_string(a) + "-" + std::to_string(b));
    }
    adjacency_[a][b] = sign;
    adjacency_[b][a] = sign;
}

void ClusterGraph::remove_edge(NodeId a, NodeId b) {
    if (!adjacent(a, b)) throw std::invalid_argument("remove_edge: no such edge");
    adjacency_[a].erase(b);
    adjacency_[b].erase(a);
}

void ClusterGraph::remove_node(NodeId node) {
    require(node, "remove_node");
    for (const auto &[nb, sign] : adjacency_.at(node)) adjacency_[nb].erase(node);
    adjacency_.erase(node);
}

void ClusterGraph::set_edge_sign(NodeId a, NodeId b, int sign) {
    if (!adjacent(a, b)) throw std::invalid_argument("set_edge_sign: no such edge");
    if (sign != 1 && sign != -1) throw std::invalid_argument("set_edge_sign: sign must be +1 or -1");
    adjacency_[a][b] = sign;
    adjacency_[b][a] = sign;
}

bool ClusterGraph::adjacent(NodeId a, NodeId b) const {
    auto it = adjacency_.find(a);
    return it != adjacency_.end() && it->second.count(b) != 0;
}

int ClusterGraph::edge_sign(NodeId a, NodeId b) const {
    if (!adjacent(a, b)) {
        throw std::invalid_argument("edge_sign: " + std::to_string(a) + "-" + std::to_string(b) + " is not an edge");
    }
    return adjacency_.at(a).at(b);
}

std::vector<NodeId> ClusterGraph::nodes() const {
    std::vector<NodeId> out;
    out.reserve(adjacency_.size());
    for (const auto &[n, nbrs] : adjacency_) out.push_back(n);
    return out;
}

std::vector<NodeId> ClusterGraph::neighbors(NodeId node) const {
    require(node, "neighbors");
    std::vector<NodeId> out;
    for (const auto &[nb, sign] : adjacency_.at(node)) out.push_back(nb);
    return out;
}

std::size_t ClusterGraph::degree(NodeId node) const {
    require(node, "degree");
    return adjacency_.at(node).size();
}

std::vector<Edge> ClusterGraph::edges() const {
    std::vector<Edge> out;
    for (const auto &[a, nbrs] : adjacency_) {
        for (const auto &[b, sign] : nbrs) {
            if (a < b) out.push_back({a, b, sign});
        }
    }
    return out;
}

std::size_t ClusterGraph::num_edges() const {
    std::size_t total = 0;
    for (const auto &[n, nbrs] : adjacency_) total += nbrs.size();
    return total / 2;
}

std::size_t ClusterGraph::mode_index(NodeId node) const {
    auto it = adjacency_.find(node);
    if (it == adjacency_.end()) {
        throw std::invalid_argument("mode_index: node " + std::to_string(node) + " not in graph");
    }
    return static_cast<std::size_t>(std::distance(adjacency_.begin(), it));
}

Matrix ClusterGraph::adjacency_matrix() const {
    const auto n = static_cast<Eigen::Index>(num_nodes());
    Matrix a = Matrix::Zero(n, n);
    for (const auto &e : edges()) {
        const auto i = static_cast<Eigen::Index>(mode_index(e.a));
        const auto j = static_cast<Eigen::Index>(mode_index(e.b));
        a(i, j) = e.sign;
        a(j, i) = e.sign;
    }
    return a;
}

bool Nullifier::has_graph_structure() const {
    int p_terms = 0;
    for (const auto &t : terms) {
        if (t.quadrature == Quadrature::P) {
            if (t.coefficient != 1.0 || t.node != label) return false;
            ++p_terms;
        } else if (t.coefficient != 1.0 && t.coefficient != -1.0) {
            return false;
        }
    }
    return p_terms == 1;
}

LinearForm Nullifier::on_modes(const ClusterGraph &graph) const {
    LinearForm form;
    form.terms.reserve(terms.size());
    for (const auto &t : terms) form.terms.push_back({graph.mode_index(t.node), t.quadrature, t.coefficient});
    return form;
}

std::string Nullifier::to_string() const {
    std::ostringstream out;
    bool first = true;
    for (const auto &t : terms) {
        if (t.coefficient < 0) {
            out << '-';
        } else if (!first) {
            out << '+';
        }
        const double mag = std::abs(t.coefficient);
        if (mag != 1.0) out << mag << '*';
        out << cvshape::to_string(t.quadrature) << t.node;
        first = false;
    }
    return out.str();
}

Nullifier nullifier_of(const ClusterGraph &graph, NodeId node) {
    Nullifier n{node, {{node, Quadrature::P, 1.0}}};
    for (auto nb : graph.neighbors(node)) {
        n.terms.push_back({nb, Quadrature::X, -static_cast<double>(graph.edge_sign(node, nb))});
    }
    return n;
}

std::vector<Nullifier> nullifiers_of(const ClusterGraph &graph) {
    std::vector<Nullifier> out;
    for (auto node : graph.nodes()) out.push_back(nullifier_of(graph, node));
    return out;
}

double nullifier_variance(const GaussianState &state, const ClusterGraph &graph, const Nullifier &form) {
    if (state.num_modes() != graph.num_nodes()) {
        throw std::invalid_argument("nullifier_variance: state and graph sizes differ");
    }
    return quadrature_variance(state, form.on_modes(graph));
}

SymplecticTransform cz_symplectic(const ClusterGraph &graph) {
    const auto n = graph.num_nodes();
    auto t = SymplecticTransform::identity(n);
    for (const auto &e : graph.edges()) {
        t = t.then(qnd_gate(n, graph.mode_index(e.a), graph.mode_index(e.b), e.sign));
    }
    return t;
}

SymplecticTransform canonical_symplectic(const ClusterGraph &graph, const std::vector<double> &db) {
    const auto n = graph.num_nodes();
    if (db.size() != n) {
        throw std::invalid_argument("canonical_symplectic: need one squeezing value per node");
    }
    auto t = SymplecticTransform::identity(n);
    for (std::size_t m = 0; m < n; ++m) {
        if (!(db[m] >= 0.0)) throw std::invalid_argument("canonical_symplectic: squeezing must be >= 0 dB");
        t = t.then(squeezer(n, m, db[m], Quadrature::P));
    }
    return t.then(cz_symplectic(graph));
}

GaussianState build_canonical(const ClusterGraph &graph, const std::vector<double> &db) {
    if (graph.num_nodes() == 0) throw std::invalid_argument("build_canonical: empty graph");
    return apply(vacuum(graph.num_nodes()), canonical_symplectic(graph, db));
}

GaussianState build_canonical(const ClusterGraph &graph, double db) {
    return build_canonical(graph, std::vector<double>(graph.num_nodes(), db));
}

std::vector<std::pair<NodeId, double>> wire_to_ring_phases(const ClusterGraph &wire) {
    if (!(wire == ClusterGraph::linear(4))) {
        throw std::invalid_argument("wire_to_ring_phases: expected the four-node wire 1-2-3-4");
    }
    constexpr double pi = std::numbers::pi;
    return {{1, pi}, {2, -pi / 2}, {3, pi / 2}, {4, 0.0}};
}

ClusterGraph ring_after_wire_phases() {
    ClusterGraph g(std::vector<NodeId>{1, 2, 3, 4});
    g.add_edge(1, 3, -1);
    g.add_edge(3, 2, 1);
    g.add_edge(2, 4, -1);
    g.add_edge(4, 1, 1);
    return g;
}

}  // namespace cvshape
