#include "cvshape/criteria.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cvshape {

bool CriteriaReport::all_pass() const {
    for (const auto &v : nullifiers) {
        if (!v.pass) return false;
    }
    for (const auto &v : pairwise) {
        if (!v.pass) return false;
    }
    return true;
}

double nullifier_db(double variance, std::size_t terms) {
    if (!(variance > 0.0)) throw std::invalid_argument("nullifier_db: variance must be positive");
    if (terms == 0) throw std::invalid_argument("nullifier_db: empty form");
    return 10.0 * std::log10(variance / (static_cast<double>(terms) * kVacuumVariance));
}

double nullifier_db(double variance, const Nullifier &form) { return nullifier_db(variance, form.terms.size()); }

std::vector<NullifierVerdict> check_nullifiers(const GaussianState &state, const ClusterGraph &graph,
                                               const std::vector<Nullifier> &forms) {
    std::vector<NullifierVerdict> out;
    out.reserve(forms.size());
    for (const auto &f : forms) {
        const double v = nullifier_variance(state, graph, f);
        out.push_back({f, v, kNullifierBound, v < kNullifierBound, nullifier_db(v, f)});
    }
    return out;
}

CriteriaReport check_cluster_criteria(const GaussianState &state, const ClusterGraph &graph) {
    CriteriaReport report;
    report.reference_convention = "nullifier dB relative to k/4 for a k-term form; residual squeezing relative to 1/4";
    report.nullifiers = check_nullifiers(state, graph, nullifiers_of(graph));

    const auto nodes = graph.nodes();
    auto variance_of = [&](NodeId n) {
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            if (nodes[k] == n) return report.nullifiers[k].variance;
        }
        throw std::logic_error("check_cluster_criteria: node missing from report");
    };
    for (const auto &e : graph.edges()) {
        const double sum = variance_of(e.a) + variance_of(e.b);
        report.pairwise.push_back({e.a, e.b, sum, kPairwiseBound, sum < kPairwiseBound});
    }
    for (auto n : nodes) {
        if (graph.degree(n) == 0) {
            auto r = residual_squeezing_db(state, graph.mode_index(n));
            r.node = n;
            report.residual_squeezing.push_back(r);
        }
    }
    return report;
}

ResidualSqueezing residual_squeezing_db(const GaussianState &state, std::size_t mode) {
    const Eigen::Matrix2d block = state.mode_covariance(mode);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(block);
    const auto &values = solver.eigenvalues();
    ResidualSqueezing out{static_cast<NodeId>(mode), 10.0 * std::log10(values(0) / kVacuumVariance),
                          10.0 * std::log10(values(1) / kVacuumVariance), 0.0};
    if (values(1) - values(0) > 1e-12 * values(1)) {
        const Eigen::Vector2d dir = solver.eigenvectors().col(0);
        double angle = std::atan2(dir(1), dir(0));
        if (angle < 0) angle += std::numbers::pi;
        if (angle >= std::numbers::pi - 1e-15) angle -= std::numbers::pi;
        out.angle = angle;
    }
    return out;
}

}  // namespace cvshape
