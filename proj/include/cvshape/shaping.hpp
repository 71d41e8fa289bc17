#pragma once

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "cvshape/gaussian.hpp"
#include "cvshape/graph.hpp"

namespace cvshape {

/// Measured quadratures with a marginal variance below this are rejected.
inline constexpr double kMarginalVarianceFloor = 1e-12;

/// Result of one homodyne detection of x cos(angle) + p sin(angle).
/// `value` is empty when the measurement was averaged over its outcomes.
struct HomodyneOutcome {
    NodeId mode;
    double angle;
    std::optional<double> value;
    double marginal_mean;
    double marginal_var;
};

/// Gaussian conditioning on one rotated quadrature, before the measured mode
/// is dropped. Shared by the state-level homodyne and the trajectory kernel.
struct Conditioning {
    Vector selector;
    double marginal_mean;
    double marginal_var;
    /// cov * selector / marginal_var: mean shift per unit of (outcome - marginal_mean).
    Vector gain;
    /// Outcome-independent conditional covariance, full dimension.
    Matrix cov;
    /// Phase-space indices that survive once the measured mode is dropped.
    std::vector<Eigen::Index> keep;
};

/// Throws std::domain_error if the marginal variance is below the floor.
Conditioning condition_on_quadrature(const Vector &mean, const Matrix &cov, std::size_t mode, double angle);

/// Measure mode `mode` (an index) with a given outcome; the mode is removed
/// from the returned state. Throws if it is the only mode.
std::pair<GaussianState, HomodyneOutcome> homodyne(const GaussianState &state, std::size_t mode, double angle,
                                                   double value);
/// Same, drawing the outcome from its marginal.
std::pair<GaussianState, HomodyneOutcome> homodyne(const GaussianState &state, std::size_t mode, double angle,
                                                   std::mt19937_64 &rng);

/// Displace `quadrature` of node `target` by gain * (value of outcome `source`).
struct FeedforwardEntry {
    std::size_t source;
    NodeId target;
    Quadrature quadrature;
    double gain;
};

using FeedforwardRule = std::vector<FeedforwardEntry>;

/// Apply a feedforward rule on a state whose modes follow `graph`. Throws on a
/// dangling outcome reference, an averaged outcome, or a missing target.
GaussianState feedforward(const GaussianState &state, const ClusterGraph &graph, const FeedforwardRule &rule,
                          std::span<const HomodyneOutcome> outcomes);

struct MeasurementStep {
    NodeId node;
    double angle;
};

/// Measure every listed node, then apply the feedforward rule. Outcome indices
/// in the rule refer to positions in `measurements`.
struct ShapingProtocol {
    std::vector<MeasurementStep> measurements;
    FeedforwardRule feedforward;
};

/// Outcomes are integrated out: the state is the ensemble average of all
/// trajectories with deterministic feedforward. This is what a spectrum
/// analyser sees and is the analytic path of the shaping operations.
struct AveragedOutcomes {};
/// Condition on the listed outcome values, one per measurement.
struct ForcedOutcomes {
    std::vector<double> values;
};
/// Draw each outcome from its conditional marginal.
struct SampledOutcomes {
    std::reference_wrapper<std::mt19937_64> rng;
};

using OutcomePolicy = std::variant<AveragedOutcomes, ForcedOutcomes, SampledOutcomes>;

struct ShapingResult {
    GaussianState state;
    ClusterGraph graph;
    std::vector<HomodyneOutcome> outcomes;
    std::vector<NodeId> removed;
    ShapingProtocol protocol;
};

/// Execute a protocol. `graph_after` is the graph of the surviving nodes.
/// Detection loss acts on each measured mode before its homodyne, and
/// feedforward-tap loss on each target mode before its displacement.
ShapingResult execute(const GaussianState &state, const ClusterGraph &graph, const ShapingProtocol &protocol,
                      ClusterGraph graph_after, const OutcomePolicy &policy = AveragedOutcomes{},
                      const LossModel &loss = LossModel::lossless());

/// Measure x_j and displace every neighbour, p_i += gain * sign(ij) * x_j.
/// With gain -1 the neighbour nullifiers keep their form with x_j replaced by
/// the outcome, so their variances are preserved.
ShapingResult remove_node(const GaussianState &state, const ClusterGraph &graph, NodeId j, double gain = -1.0,
                          const OutcomePolicy &policy = AveragedOutcomes{},
                          const LossModel &loss = LossModel::lossless());

/// Measurement and feedforward plan of remove_node, without executing it.
ShapingProtocol removal_protocol(const ClusterGraph &graph, NodeId j, double gain = -1.0);

/// Outer neighbours (o_a, o_b) of a wire segment o_a - a - b - o_b. Throws
/// std::invalid_argument naming the offending node when a or b has other
/// neighbours, the segment is not a path, or the outer nodes are already joined.
std::pair<NodeId, NodeId> wire_segment_ends(const ClusterGraph &graph, NodeId a, NodeId b);

/// Remove inner nodes a, b of the segment o_a - a - b - o_b by measuring p_a
/// and p_b; p_{o_b} += gain * s * p_a and p_{o_a} += gain * s' * p_b with the
/// sign products s, s' of the segment. o_a and o_b become neighbours with sign
/// -sign(o_a a) sign(a b) sign(b o_b).
ShapingResult shorten_wire(const GaussianState &state, const ClusterGraph &graph, NodeId a, NodeId b,
                           double gain = -1.0, const OutcomePolicy &policy = AveragedOutcomes{},
                           const LossModel &loss = LossModel::lossless());

ShapingProtocol shortening_protocol(const ClusterGraph &graph, NodeId a, NodeId b, double gain = -1.0);
ClusterGraph shortened_graph(const ClusterGraph &graph, NodeId a, NodeId b);

/// Wire shortening through the ring: rotate the 1-2-3-4 wire by the local
/// ring phases, remove nodes 2 and 3 by x measurements, then undo the
/// residual rotation of node 1. The result uses the same frame and graph as
/// shorten_wire(state, wire, 2, 3).
ShapingResult shorten_wire_via_ring(const GaussianState &state, const ClusterGraph &wire,
                                    const OutcomePolicy &policy = AveragedOutcomes{});

}  // namespace cvshape
