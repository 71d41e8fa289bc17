#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "cvshape/criteria.hpp"
#include "cvshape/graph.hpp"

using namespace cvshape;

TEST(Graph, LinearWire) {
    const auto g = ClusterGraph::linear(4);
    EXPECT_EQ(g.num_nodes(), 4u);
    EXPECT_EQ(g.num_edges(), 3u);
    EXPECT_TRUE(g.adjacent(2, 3));
    EXPECT_FALSE(g.adjacent(1, 3));
    EXPECT_EQ(g.degree(1), 1u);
    EXPECT_EQ(g.degree(2), 2u);
}

TEST(Graph, EdgeValidation) {
    ClusterGraph g({1, 2});
    EXPECT_THROW(g.add_edge(1, 1), std::invalid_argument);
    EXPECT_THROW(g.add_edge(1, 3), std::invalid_argument);
    EXPECT_THROW(g.add_edge(1, 2, 2), std::invalid_argument);
    g.add_edge(1, 2, -1);
    EXPECT_THROW(g.add_edge(2, 1), std::invalid_argument);
    EXPECT_EQ(g.edge_sign(2, 1), -1);
    g.remove_edge(1, 2);
    EXPECT_EQ(g.num_edges(), 0u);
    EXPECT_THROW(g.remove_edge(1, 2), std::invalid_argument);
}

TEST(Graph, NullifierForms) {
    const auto g = ClusterGraph::linear(4);
    const auto n = nullifiers_of(g);
    ASSERT_EQ(n.size(), 4u);
    EXPECT_EQ(n[0].to_string(), "p1-x2");
    EXPECT_EQ(n[1].to_string(), "p2-x1-x3");
    EXPECT_EQ(n[3].to_string(), "p4-x3");
    EXPECT_TRUE(n[1].has_graph_structure());
}

TEST(Graph, VacuumNullifierValues) {
    const auto g = ClusterGraph::linear(4);
    const auto s = vacuum(4);
    const double expected[] = {0.5, 0.75, 0.75, 0.5};
    const auto n = nullifiers_of(g);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(nullifier_variance(s, g, n[k]), expected[k], 1e-15);
}

TEST(Graph, CanonicalNullifiersEqualInputSqueezing) {
    const auto g = ClusterGraph::linear(4);
    const auto s = build_canonical(g, 5.0);
    for (const auto &f : nullifiers_of(g)) EXPECT_NEAR(nullifier_variance(s, g, f), 0.0790569, 1e-7);
    EXPECT_TRUE(s.is_physical());
}

TEST(Graph, CanonicalPerNodeSqueezing) {
    const auto g = ClusterGraph::linear(3);
    const auto s = build_canonical(g, std::vector<double>{3.0, 6.0, 9.0});
    const auto n = nullifiers_of(g);
    EXPECT_NEAR(nullifier_variance(s, g, n[1]), squeezed_variance(6.0), 1e-12);
    EXPECT_THROW(build_canonical(g, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Graph, NegativeEdgeSignsFollowGain) {
    ClusterGraph g({1, 2, 3});
    g.add_edge(1, 2, -1);
    g.add_edge(2, 3, 1);
    const auto s = build_canonical(g, 8.0);
    for (const auto &f : nullifiers_of(g)) EXPECT_NEAR(nullifier_variance(s, g, f), squeezed_variance(8.0), 1e-12);
}

TEST(Graph, RelabelingInvariance) {
    ClusterGraph a({1, 2, 3, 4});
    a.add_edge(1, 2);
    a.add_edge(2, 3);
    a.add_edge(2, 4, -1);
    ClusterGraph b({10, 20, 30, 40});
    b.add_edge(10, 20);
    b.add_edge(20, 30);
    b.add_edge(20, 40, -1);
    const auto sa = build_canonical(a, 6.0);
    const auto sb = build_canonical(b, 6.0);
    EXPECT_TRUE(sa.cov().isApprox(sb.cov(), 1e-14));
    const auto na = nullifiers_of(a);
    const auto nb = nullifiers_of(b);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_NEAR(nullifier_variance(sa, a, na[k]), nullifier_variance(sb, b, nb[k]), 1e-14);
    }
}

TEST(Graph, EmptyGraphIsProductOfSqueezers) {
    ClusterGraph g({1, 2});
    const auto s = build_canonical(g, 5.0);
    EXPECT_NEAR(s.cov()(2, 2), squeezed_variance(5.0), 1e-12);
    EXPECT_NEAR(s.cov()(0, 2), 0.0, 1e-15);
}

TEST(Graph, CzSymplecticMatchesCanonicalAtZeroDb) {
    const auto g = ClusterGraph::linear(4);
    EXPECT_TRUE(cz_symplectic(g).matrix.isApprox(canonical_symplectic(g, std::vector<double>(4, 0.0)).matrix));
}

TEST(Graph, RingPhases) {
    const auto phases = wire_to_ring_phases(ClusterGraph::linear(4));
    ASSERT_EQ(phases.size(), 4u);
    EXPECT_EQ(phases[0].first, 1);
    EXPECT_DOUBLE_EQ(phases[0].second, std::numbers::pi);
    EXPECT_DOUBLE_EQ(phases[1].second, -std::numbers::pi / 2);
    EXPECT_DOUBLE_EQ(phases[2].second, std::numbers::pi / 2);
    EXPECT_DOUBLE_EQ(phases[3].second, 0.0);
    EXPECT_THROW(wire_to_ring_phases(ClusterGraph::linear(3)), std::invalid_argument);
}

TEST(Graph, RingPhasesTurnWireIntoRing) {
    const auto wire = ClusterGraph::linear(4);
    GaussianState s = build_canonical(wire, 60.0);
    for (const auto &[node, theta] : wire_to_ring_phases(wire)) {
        s = apply(s, phase_shift(4, wire.mode_index(node), theta));
    }
    const auto ring = ring_after_wire_phases();
    EXPECT_EQ(ring.num_edges(), 4u);
    for (const auto &f : nullifiers_of(ring)) EXPECT_LT(nullifier_variance(s, ring, f), 1e-5) << f.to_string();
}

TEST(Graph, RandomGraphsPassCriteria) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + static_cast<int>(u(rng) * 8);
        ClusterGraph g = ClusterGraph::linear(n);
        for (int a = 1; a <= n; ++a) {
            for (int b = a + 2; b <= n; ++b) {
                if (u(rng) < 0.3) g.add_edge(a, b, u(rng) < 0.5 ? 1 : -1);
            }
        }
        const auto s = build_canonical(g, 1.0 + 14.0 * u(rng));
        EXPECT_TRUE(check_cluster_criteria(s, g).all_pass());
        EXPECT_TRUE(s.is_physical());
    }
}
