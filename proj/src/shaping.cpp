#include "cvshape/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>

namespace cvshape {

namespace {

std::string node_name(NodeId n) { return "node " + std::to_string(n); }

Vector quadrature_selector(std::size_t n_modes, std::size_t mode, double angle) {
    Vector u = Vector::Zero(static_cast<Eigen::Index>(2 * n_modes));
    u(static_cast<Eigen::Index>(mode)) = std::cos(angle);
    u(static_cast<Eigen::Index>(n_modes + mode)) = std::sin(angle);
    return u;
}

std::pair<GaussianState, HomodyneOutcome> finish_homodyne(const GaussianState &state, std::size_t mode,
                                                          double angle, double value, const Conditioning &c) {
    Vector mean = state.mean() + c.gain * (value - c.marginal_mean);
    Matrix cov = c.cov(c.keep, c.keep);
    GaussianState post(mean(c.keep), 0.5 * (cov + cov.transpose()));
    return {std::move(post), HomodyneOutcome{static_cast<NodeId>(mode), angle, value, c.marginal_mean, c.marginal_var}};
}

}  // namespace

Conditioning condition_on_quadrature(const Vector &mean, const Matrix &cov, std::size_t mode, double angle) {
    const auto n = static_cast<std::size_t>(mean.size() / 2);
    if (mode >= n) throw std::out_of_range("homodyne: mode " + std::to_string(mode) + " out of range");
    if (n < 2) throw std::invalid_argument("homodyne: cannot measure the only remaining mode");

    Conditioning c;
    c.selector = quadrature_selector(n, mode, angle);
    c.marginal_mean = c.selector.dot(mean);
    const Vector cu = cov * c.selector;
    c.marginal_var = c.selector.dot(cu);
    if (!(c.marginal_var >= kMarginalVarianceFloor)) {
        throw std::domain_error("homodyne: marginal variance " + std::to_string(c.marginal_var) +
                                " of the measured quadrature is below the floor");
    }
    c.gain = cu / c.marginal_var;
    c.cov = cov - cu * cu.transpose() / c.marginal_var;
    for (std::size_t m = 0; m < n; ++m) {
        if (m != mode) c.keep.push_back(static_cast<Eigen::Index>(m));
    }
    for (std::size_t m = 0; m < n; ++m) {
        if (m != mode) c.keep.push_back(static_cast<Eigen::Index>(n + m));
    }
    return c;
}

std::pair<GaussianState, HomodyneOutcome> homodyne(const GaussianState &state, std::size_t mode, double angle,
                                                   double value) {
    const auto c = condition_on_quadrature(state.mean(), state.cov(), mode, angle);
    return finish_homodyne(state, mode, angle, value, c);
}

std::pair<GaussianState, HomodyneOutcome> homodyne(const GaussianState &state, std::size_t mode, double angle,
                                                   std::mt19937_64 &rng) {
    const auto c = condition_on_quadrature(state.mean(), state.cov(), mode, angle);
    std::normal_distribution<double> normal(c.marginal_mean, std::sqrt(c.marginal_var));
    return finish_homodyne(state, mode, angle, normal(rng), c);
}

GaussianState feedforward(const GaussianState &state, const ClusterGraph &graph, const FeedforwardRule &rule,
                          std::span<const HomodyneOutcome> outcomes) {
    if (state.num_modes() != graph.num_nodes()) {
        throw std::invalid_argument("feedforward: state and graph sizes differ");
    }
    Vector mean = state.mean();
    for (const auto &e : rule) {
        if (e.source >= outcomes.size()) {
            throw std::invalid_argument("feedforward: dangling reference to outcome " + std::to_string(e.source));
        }
        if (!outcomes[e.source].value) {
            throw std::invalid_argument("feedforward: outcome " + std::to_string(e.source) + " has no value");
        }
        if (!graph.contains(e.target)) {
            throw std::invalid_argument("feedforward: target " + node_name(e.target) + " not in state");
        }
        if (!std::isfinite(e.gain)) throw std::invalid_argument("feedforward: gain must be finite");
        const auto idx = quadrature_index(state.num_modes(), graph.mode_index(e.target), e.quadrature);
        mean(static_cast<Eigen::Index>(idx)) += e.gain * *outcomes[e.source].value;
    }
    return GaussianState(std::move(mean), state.cov());
}

ShapingResult execute(const GaussianState &state, const ClusterGraph &graph, const ShapingProtocol &protocol,
                      ClusterGraph graph_after, const OutcomePolicy &policy, const LossModel &loss) {
    if (state.num_modes() != graph.num_nodes()) {
        throw std::invalid_argument("execute: state and graph sizes differ");
    }
    std::set<NodeId> measured;
    for (const auto &m : protocol.measurements) {
        if (!graph.contains(m.node)) throw std::invalid_argument("execute: " + node_name(m.node) + " not in graph");
        if (!measured.insert(m.node).second) {
            throw std::invalid_argument("execute: " + node_name(m.node) + " measured twice");
        }
    }
    std::vector<NodeId> survivors;
    for (auto n : graph.nodes()) {
        if (!measured.count(n)) survivors.push_back(n);
    }
    if (survivors != graph_after.nodes()) {
        throw std::invalid_argument("execute: resulting graph does not match the unmeasured nodes");
    }
    for (const auto &e : protocol.feedforward) {
        if (e.source >= protocol.measurements.size()) {
            throw std::invalid_argument("execute: dangling reference to outcome " + std::to_string(e.source));
        }
        if (!graph_after.contains(e.target)) {
            throw std::invalid_argument("execute: feedforward target " + node_name(e.target) + " is not a survivor");
        }
    }

    ShapingResult result{state, std::move(graph_after), {}, {}, protocol};
    for (const auto &m : protocol.measurements) result.removed.push_back(m.node);

    GaussianState current = state;
    for (const auto &m : protocol.measurements) {
        const double eta = loss.efficiency(LossStage::Detection, m.node);
        if (eta != 1.0) current = apply_loss(current, graph.mode_index(m.node), eta);
    }
    for (const auto &e : protocol.feedforward) {
        const double eta = loss.efficiency(LossStage::FeedforwardTap, e.target);
        if (eta != 1.0) current = apply_loss(current, graph.mode_index(e.target), eta);
    }

    if (std::holds_alternative<AveragedOutcomes>(policy)) {
        // Deterministic feedforward integrated over outcomes is the linear map
        // q_target += gain * u_source^T r on the full state, followed by
        // tracing out the measured modes.
        const auto n = graph.num_nodes();
        Matrix map = Matrix::Identity(static_cast<Eigen::Index>(2 * n), static_cast<Eigen::Index>(2 * n));
        std::vector<Vector> selectors;
        for (const auto &m : protocol.measurements) {
            selectors.push_back(quadrature_selector(n, graph.mode_index(m.node), m.angle));
            const Vector &u = selectors.back();
            const double var = u.dot(current.cov() * u);
            if (!(var >= kMarginalVarianceFloor)) {
                throw std::domain_error("execute: marginal variance of " + node_name(m.node) + " is below the floor");
            }
            result.outcomes.push_back({m.node, m.angle, std::nullopt, u.dot(current.mean()), var});
        }
        for (const auto &e : protocol.feedforward) {
            const auto row = quadrature_index(n, graph.mode_index(e.target), e.quadrature);
            map.row(static_cast<Eigen::Index>(row)) += e.gain * selectors[e.source].transpose();
        }
        Matrix cov = map * current.cov() * map.transpose();
        current = GaussianState(map * current.mean(), 0.5 * (cov + cov.transpose()));
        std::vector<std::size_t> keep;
        for (auto node : survivors) keep.push_back(graph.mode_index(node));
        result.state = current.marginal(keep);
        return result;
    }

    std::vector<NodeId> live = graph.nodes();
    for (std::size_t k = 0; k < protocol.measurements.size(); ++k) {
        const auto &m = protocol.measurements[k];
        const auto mode = static_cast<std::size_t>(std::find(live.begin(), live.end(), m.node) - live.begin());
        std::pair<GaussianState, HomodyneOutcome> step = [&] {
            if (const auto *forced = std::get_if<ForcedOutcomes>(&policy)) {
                if (forced->values.size() != protocol.measurements.size()) {
                    throw std::invalid_argument("execute: need one forced outcome per measurement");
                }
                return homodyne(current, mode, m.angle, forced->values[k]);
            }
            return homodyne(current, mode, m.angle, std::get<SampledOutcomes>(policy).rng.get());
        }();
        step.second.mode = m.node;
        result.outcomes.push_back(step.second);
        current = std::move(step.first);
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(mode));
    }
    result.state = feedforward(current, result.graph, protocol.feedforward, result.outcomes);
    return result;
}

ShapingProtocol removal_protocol(const ClusterGraph &graph, NodeId j, double gain) {
    if (!graph.contains(j)) throw std::invalid_argument("remove_node: " + node_name(j) + " not in graph");
    ShapingProtocol protocol;
    protocol.measurements.push_back({j, 0.0});
    for (auto i : graph.neighbors(j)) {
        protocol.feedforward.push_back({0, i, Quadrature::P, gain * graph.edge_sign(i, j)});
    }
    return protocol;
}

ShapingResult remove_node(const GaussianState &state, const ClusterGraph &graph, NodeId j, double gain,
                          const OutcomePolicy &policy, const LossModel &loss) {
    auto protocol = removal_protocol(graph, j, gain);
    ClusterGraph after = graph;
    after.remove_node(j);
    return execute(state, graph, protocol, std::move(after), policy, loss);
}

std::pair<NodeId, NodeId> wire_segment_ends(const ClusterGraph &graph, NodeId a, NodeId b) {
    for (auto n : {a, b}) {
        if (!graph.contains(n)) throw std::invalid_argument("shorten_wire: " + node_name(n) + " not in graph");
    }
    if (a == b || !graph.adjacent(a, b)) {
        throw std::invalid_argument("shorten_wire: inner nodes " + std::to_string(a) + " and " + std::to_string(b) +
                                    " must be adjacent");
    }
    auto outer = [&](NodeId inner, NodeId other) {
        const auto nbrs = graph.neighbors(inner);
        if (nbrs.size() != 2) {
            throw std::invalid_argument("shorten_wire: " + node_name(inner) + " has " + std::to_string(nbrs.size()) +
                                        " neighbours; remove extra neighbours first");
        }
        return nbrs[0] == other ? nbrs[1] : nbrs[0];
    };
    const NodeId end_a = outer(a, b);
    const NodeId end_b = outer(b, a);
    if (end_a == end_b) {
        throw std::invalid_argument("shorten_wire: " + node_name(end_a) + " is adjacent to both inner nodes");
    }
    if (graph.adjacent(end_a, end_b)) {
        throw std::invalid_argument("shorten_wire: outer nodes " + std::to_string(end_a) + " and " +
                                    std::to_string(end_b) + " are already neighbours");
    }
    return {end_a, end_b};
}

ShapingProtocol shortening_protocol(const ClusterGraph &graph, NodeId a, NodeId b, double gain) {
    const auto [end_a, end_b] = wire_segment_ends(graph, a, b);
    const int s_aa = graph.edge_sign(end_a, a);
    const int s_ab = graph.edge_sign(a, b);
    const int s_bb = graph.edge_sign(b, end_b);
    ShapingProtocol protocol;
    constexpr double quarter = std::numbers::pi / 2;
    protocol.measurements = {{a, quarter}, {b, quarter}};
    // p_a carries x_b's partner term of end_b's nullifier and vice versa.
    protocol.feedforward.push_back({0, end_b, Quadrature::P, gain * s_bb * s_ab});
    protocol.feedforward.push_back({1, end_a, Quadrature::P, gain * s_aa * s_ab});
    return protocol;
}

ClusterGraph shortened_graph(const ClusterGraph &graph, NodeId a, NodeId b) {
    const auto [end_a, end_b] = wire_segment_ends(graph, a, b);
    const int sign = -graph.edge_sign(end_a, a) * graph.edge_sign(a, b) * graph.edge_sign(b, end_b);
    ClusterGraph after = graph;
    after.remove_node(a);
    after.remove_node(b);
    after.add_edge(end_a, end_b, sign);
    return after;
}

ShapingResult shorten_wire(const GaussianState &state, const ClusterGraph &graph, NodeId a, NodeId b, double gain,
                           const OutcomePolicy &policy, const LossModel &loss) {
    auto protocol = shortening_protocol(graph, a, b, gain);
    return execute(state, graph, protocol, shortened_graph(graph, a, b), policy, loss);
}

ShapingResult shorten_wire_via_ring(const GaussianState &state, const ClusterGraph &wire,
                                    const OutcomePolicy &policy) {
    const auto phases = wire_to_ring_phases(wire);
    GaussianState rotated = state;
    for (const auto &[node, theta] : phases) {
        rotated = apply(rotated, phase_shift(rotated.num_modes(), wire.mode_index(node), theta));
    }
    const ClusterGraph ring = ring_after_wire_phases();

    // Split forced outcomes between the two removals.
    OutcomePolicy first = policy;
    OutcomePolicy second = policy;
    if (const auto *forced = std::get_if<ForcedOutcomes>(&policy)) {
        if (forced->values.size() != 2) throw std::invalid_argument("shorten_wire_via_ring: need two outcomes");
        first = ForcedOutcomes{{forced->values[0]}};
        second = ForcedOutcomes{{forced->values[1]}};
    }
    auto step1 = remove_node(rotated, ring, 2, -1.0, first);
    auto step2 = remove_node(step1.state, step1.graph, 3, -1.0, second);

    // Undo the pi rotation left on node 1; node 4 carries none.
    GaussianState back = apply(step2.state, phase_shift(2, step2.graph.mode_index(1), -std::numbers::pi));

    ShapingResult result{std::move(back), shortened_graph(wire, 2, 3), {}, {2, 3}, {}};
    result.outcomes = step1.outcomes;
    result.outcomes.insert(result.outcomes.end(), step2.outcomes.begin(), step2.outcomes.end());
    result.protocol.measurements = {{2, 0.0}, {3, 0.0}};
    result.protocol.feedforward = step1.protocol.feedforward;
    for (auto e : step2.protocol.feedforward) {
        e.source = 1;
        result.protocol.feedforward.push_back(e);
    }
    return result;
}

}  // namespace cvshape
