#include <gtest/gtest.h>

#include <cmath>

#include "cvshape/criteria.hpp"

using namespace cvshape;

TEST(Criteria, VacuumFailsStrictBound) {
    const auto g = ClusterGraph::linear(2);
    const auto r = check_cluster_criteria(vacuum(2), g);
    ASSERT_EQ(r.nullifiers.size(), 2u);
    EXPECT_DOUBLE_EQ(r.nullifiers[0].variance, 0.5);
    EXPECT_FALSE(r.nullifiers[0].pass);
    EXPECT_FALSE(r.all_pass());
    EXPECT_DOUBLE_EQ(r.pairwise[0].sum_variance, 1.0);
    EXPECT_FALSE(r.pairwise[0].pass);
}

TEST(Criteria, SqueezedWirePasses) {
    const auto g = ClusterGraph::linear(4);
    const auto r = check_cluster_criteria(build_canonical(g, 5.0), g);
    EXPECT_TRUE(r.all_pass());
    EXPECT_EQ(r.pairwise.size(), 3u);
    EXPECT_TRUE(r.residual_squeezing.empty());
    EXPECT_NEAR(r.nullifiers[1].db, 10 * std::log10(0.0790569 / 0.75), 1e-5);
}

TEST(Criteria, DbConvention) {
    EXPECT_NEAR(nullifier_db(0.158114, 2), -5.0, 1e-5);
    EXPECT_NEAR(nullifier_db(0.25, 1), 0.0, 1e-15);
    EXPECT_THROW(nullifier_db(0.0, 2), std::invalid_argument);
    EXPECT_THROW(nullifier_db(0.1, 0), std::invalid_argument);
}

TEST(Criteria, IsolatedNodesReportResidualSqueezing) {
    ClusterGraph g({1, 2});
    const auto s = tensor(squeezed_vacuum(3.0, Quadrature::X), squeezed_vacuum(0.0, Quadrature::P));
    const auto r = check_cluster_criteria(s, g);
    ASSERT_EQ(r.residual_squeezing.size(), 2u);
    EXPECT_NEAR(r.residual_squeezing[0].squeezed_db, -3.0, 1e-12);
    EXPECT_NEAR(r.residual_squeezing[0].antisqueezed_db, 3.0, 1e-12);
    EXPECT_NEAR(r.residual_squeezing[0].angle, 0.0, 1e-12);
    EXPECT_NEAR(r.residual_squeezing[1].squeezed_db, 0.0, 1e-12);
    EXPECT_EQ(r.residual_squeezing[1].node, 2);
}

TEST(Criteria, ExplicitForms) {
    const auto g = ClusterGraph::linear(4);
    ClusterGraph h({1, 4});
    h.add_edge(1, 4);
    const auto v = check_nullifiers(vacuum(2), h, nullifiers_of(h));
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0].form.to_string(), "p1-x4");
    EXPECT_DOUBLE_EQ(v[0].bound, 0.5);
}
