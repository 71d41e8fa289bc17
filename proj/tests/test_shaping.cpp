#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cvshape/criteria.hpp"
#include "cvshape/graph.hpp"
#include "cvshape/shaping.hpp"

using namespace cvshape;

namespace {

double var_of(const GaussianState &s, const ClusterGraph &g, NodeId node) {
    return nullifier_variance(s, g, nullifier_of(g, node));
}

}  // namespace

TEST(Homodyne, ConditioningOnSqueezedPartner) {
    const auto g = ClusterGraph::linear(2);
    const auto s = build_canonical(g, 10.0);
    const auto [after, outcome] = homodyne(s, 1, 0.0, 0.3);
    EXPECT_EQ(after.num_modes(), 1u);
    ASSERT_TRUE(outcome.value.has_value());
    EXPECT_DOUBLE_EQ(*outcome.value, 0.3);
    // Given x2, p1 is pinned near x2 up to the nullifier noise.
    EXPECT_NEAR(after.cov()(1, 1), squeezed_variance(10.0), 1e-12);
    EXPECT_NEAR(after.mean()(1), 0.3, 1e-9 + 0.3 * squeezed_variance(10.0) / outcome.marginal_var + 1e-9);
}

TEST(Homodyne, ConditionalCovarianceIgnoresOutcome) {
    const auto s = build_canonical(ClusterGraph::linear(3), 5.0);
    const auto a = homodyne(s, 1, 0.4, -2.0).first;
    const auto b = homodyne(s, 1, 0.4, 3.0).first;
    EXPECT_TRUE(a.cov().isApprox(b.cov(), 1e-14));
    EXPECT_FALSE(a.mean().isApprox(b.mean()));
}

TEST(Homodyne, RejectsSingleModeAndZeroVariance) {
    EXPECT_THROW(homodyne(vacuum(1), 0, 0.0, 0.0), std::invalid_argument);
    Matrix c = 0.25 * Matrix::Identity(4, 4);
    c(0, 0) = 0.0;
    EXPECT_THROW(condition_on_quadrature(Vector::Zero(4), c, 0, 0.0), std::domain_error);
}

TEST(Feedforward, Validation) {
    const auto g = ClusterGraph::linear(2);
    const auto s = vacuum(2);
    std::vector<HomodyneOutcome> none;
    EXPECT_THROW(feedforward(s, g, {{0, 1, Quadrature::P, 1.0}}, none), std::invalid_argument);
    std::vector<HomodyneOutcome> averaged{{3, 0.0, std::nullopt, 0.0, 0.25}};
    EXPECT_THROW(feedforward(s, g, {{0, 1, Quadrature::P, 1.0}}, averaged), std::invalid_argument);
    std::vector<HomodyneOutcome> one{{3, 0.0, 1.0, 0.0, 0.25}};
    EXPECT_THROW(feedforward(s, g, {{0, 7, Quadrature::P, 1.0}}, one), std::invalid_argument);
    EXPECT_THROW(feedforward(s, g, {{0, 1, Quadrature::P, NAN}}, one), std::invalid_argument);
    const auto moved = feedforward(s, g, {{0, 2, Quadrature::P, -2.0}}, one);
    EXPECT_DOUBLE_EQ(moved.mean()(3), -2.0);
}

TEST(RemoveNode, EdgeModeLeavesShorterWire) {
    const auto g = ClusterGraph::linear(4);
    const auto r = remove_node(build_canonical(g, 5.0), g, 4);
    EXPECT_EQ(r.graph, ClusterGraph::linear(3));
    for (auto n : r.graph.nodes()) EXPECT_NEAR(var_of(r.state, r.graph, n), 0.0790569, 1e-7);
}

TEST(RemoveNode, InnerModeSplitsWire) {
    const auto g = ClusterGraph::linear(4);
    const auto r = remove_node(build_canonical(g, 5.0), g, 3);
    EXPECT_EQ(r.graph.num_edges(), 1u);
    EXPECT_TRUE(r.graph.adjacent(1, 2));
    EXPECT_EQ(r.graph.degree(4), 0u);
    EXPECT_NEAR(var_of(r.state, r.graph, 1), 0.0790569, 1e-7);
    EXPECT_NEAR(var_of(r.state, r.graph, 2), 0.0790569, 1e-7);
    // Node 4 is now a plain squeezed vacuum.
    const auto res = residual_squeezing_db(r.state, r.graph.mode_index(4));
    EXPECT_NEAR(res.squeezed_db, -5.0, 1e-9);
    EXPECT_NEAR(res.angle, std::numbers::pi / 2, 1e-9);
}

TEST(RemoveNode, ForcedOutcomesMatchAveragedCovarianceOnNullifiers) {
    const auto g = ClusterGraph::linear(4);
    const auto s = build_canonical(g, 5.0);
    const auto avg = remove_node(s, g, 3);
    for (double v : {-1.7, 0.0, 2.4}) {
        const auto forced = remove_node(s, g, 3, -1.0, ForcedOutcomes{{v}});
        for (auto n : {1, 2}) EXPECT_NEAR(var_of(forced.state, forced.graph, n), var_of(avg.state, avg.graph, n), 1e-12);
        // With gain -1 the nullifier means are outcome free as well.
        EXPECT_NEAR(quadrature_mean(forced.state, nullifier_of(forced.graph, 2).on_modes(forced.graph)), 0.0, 1e-12);
    }
}

TEST(RemoveNode, WithoutFeedforwardNeighbourNullifierDegrades) {
    const auto g = ClusterGraph::linear(3);
    const auto s = build_canonical(g, 5.0);
    const auto good = remove_node(s, g, 3);
    const auto none = remove_node(s, g, 3, 0.0);
    EXPECT_GT(var_of(none.state, none.graph, 2), var_of(good.state, good.graph, 2) + 0.1);
}

TEST(RemoveNode, DetectionLossMonotone) {
    const auto g = ClusterGraph::linear(4);
    const auto s = build_canonical(g, 5.0);
    double last = 0.0;
    for (double eta : {1.0, 0.9, 0.7, 0.5}) {
        const auto r = remove_node(s, g, 3, -1.0, AveragedOutcomes{}, LossModel::uniform(LossStage::Detection, eta));
        const double v = var_of(r.state, r.graph, 2);
        EXPECT_GE(v, last - 1e-15);
        last = v;
    }
}

TEST(RemoveNode, DisplacedInputGivesSameCovariance) {
    const auto g = ClusterGraph::linear(3);
    GaussianState s = build_canonical(g, 5.0);
    const auto shifted = apply(s, displacement(3, 1, Quadrature::X, 0.8));
    const auto a = remove_node(s, g, 3);
    const auto b = remove_node(shifted, g, 3);
    EXPECT_TRUE(a.state.cov().isApprox(b.state.cov(), 1e-14));
}

TEST(Shorten, LosslessFiveDb) {
    const auto g = ClusterGraph::linear(4);
    const auto r = shorten_wire(build_canonical(g, 5.0), g, 2, 3);
    ASSERT_EQ(r.graph.num_nodes(), 2u);
    ASSERT_TRUE(r.graph.adjacent(1, 4));
    for (auto n : {1, 4}) EXPECT_NEAR(var_of(r.state, r.graph, n), 0.158114, 1e-6);
}

TEST(Shorten, InfiniteSqueezingLimit) {
    const auto g = ClusterGraph::linear(4);
    const auto r = shorten_wire(build_canonical(g, 60.0), g, 2, 3);
    for (auto n : {1, 4}) EXPECT_LT(var_of(r.state, r.graph, n), 1e-5);
}

TEST(Shorten, NewEdgeSign) {
    const auto g = ClusterGraph::linear(4);
    EXPECT_EQ(shortened_graph(g, 2, 3).edge_sign(1, 4), -1);
    ClusterGraph h = g;
    h.set_edge_sign(2, 3, -1);
    EXPECT_EQ(shortened_graph(h, 2, 3).edge_sign(1, 4), 1);
    const auto r = shorten_wire(build_canonical(h, 30.0), h, 2, 3);
    for (auto n : {1, 4}) EXPECT_LT(var_of(r.state, r.graph, n), 1e-2);
}

TEST(Shorten, LongerWireKeepsOuterNullifiers) {
    const auto g = ClusterGraph::linear(6);
    const auto r = shorten_wire(build_canonical(g, 20.0), g, 3, 4);
    EXPECT_TRUE(r.graph.adjacent(2, 5));
    EXPECT_NEAR(var_of(r.state, r.graph, 1), squeezed_variance(20.0), 1e-12);
    for (auto n : r.graph.nodes()) EXPECT_LT(var_of(r.state, r.graph, n), 3 * squeezed_variance(20.0) + 1e-12);
}

TEST(Shorten, SegmentErrors) {
    const auto g = ClusterGraph::linear(4);
    EXPECT_THROW(wire_segment_ends(g, 1, 2), std::invalid_argument);
    EXPECT_THROW(wire_segment_ends(g, 2, 4), std::invalid_argument);
    ClusterGraph h = g;
    h.add_edge(1, 4);
    EXPECT_THROW(wire_segment_ends(h, 2, 3), std::invalid_argument);
    ClusterGraph branched = g;
    branched.add_node(5);
    branched.add_edge(2, 5);
    try {
        wire_segment_ends(branched, 2, 3);
        FAIL();
    } catch (const std::invalid_argument &e) {
        EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
    }
}

TEST(Shorten, RingRouteMatchesDirect) {
    const auto g = ClusterGraph::linear(4);
    for (double db : {0.0, 5.0, 12.0}) {
        const auto s = build_canonical(g, db);
        const auto direct = shorten_wire(s, g, 2, 3);
        const auto ring = shorten_wire_via_ring(s, g);
        EXPECT_EQ(direct.graph, ring.graph);
        EXPECT_LT((direct.state.cov() - ring.state.cov()).cwiseAbs().maxCoeff(), 1e-10) << db;
    }
}

TEST(Shorten, SampledTrajectoryKeepsNullifierVariance) {
    const auto g = ClusterGraph::linear(4);
    const auto s = build_canonical(g, 5.0);
    std::mt19937_64 rng(1);
    const auto r = shorten_wire(s, g, 2, 3, -1.0, SampledOutcomes{rng});
    ASSERT_EQ(r.outcomes.size(), 2u);
    EXPECT_TRUE(r.outcomes[0].value.has_value());
    for (auto n : {1, 4}) EXPECT_LE(var_of(r.state, r.graph, n), 0.158114 + 1e-6);
}
