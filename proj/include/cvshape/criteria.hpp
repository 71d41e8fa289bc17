#pragma once

#include <string>
#include <vector>

#include "cvshape/gaussian.hpp"
#include "cvshape/graph.hpp"

namespace cvshape {

/// Single-nullifier inseparability bound: two shot-noise units.
inline constexpr double kNullifierBound = 0.5;
/// Bound on the sum of two adjacent nullifier variances.
inline constexpr double kPairwiseBound = 1.0;

struct NullifierVerdict {
    Nullifier form;
    double variance;
    double bound;
    bool pass;
    /// Variance relative to the shot noise of all terms, k/4 for k terms.
    double db;
};

struct PairwiseVerdict {
    NodeId i;
    NodeId j;
    double sum_variance;
    double bound;
    bool pass;
};

struct ResidualSqueezing {
    NodeId node;
    double squeezed_db;
    double antisqueezed_db;
    /// Angle of the least noisy quadrature x cos(angle) + p sin(angle), in [0, pi).
    double angle;
};

struct CriteriaReport {
    std::vector<NullifierVerdict> nullifiers;
    std::vector<PairwiseVerdict> pairwise;
    /// One entry per node without neighbours.
    std::vector<ResidualSqueezing> residual_squeezing;
    std::string reference_convention;

    bool all_pass() const;
};

/// Var(nullifier_i) < 1/2 for every node, and Var(n_i) + Var(n_j) < 1 for every edge.
/// Both inequalities are strict.
CriteriaReport check_cluster_criteria(const GaussianState &state, const ClusterGraph &graph);

/// Same checks for explicitly given forms.
std::vector<NullifierVerdict> check_nullifiers(const GaussianState &state, const ClusterGraph &graph,
                                               const std::vector<Nullifier> &forms);

/// Diagonalise the 2x2 marginal of `mode` and report both variances in dB
/// relative to 1/4. A vacuum-like marginal reports angle 0.
ResidualSqueezing residual_squeezing_db(const GaussianState &state, std::size_t mode);

/// 10 log10(variance / (k/4)) for a k-term form. Throws on variance <= 0.
double nullifier_db(double variance, const Nullifier &form);
double nullifier_db(double variance, std::size_t terms);

}  // namespace cvshape
