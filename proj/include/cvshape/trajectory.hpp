#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvshape/gaussian.hpp"
#include "cvshape/graph.hpp"
#include "cvshape/shaping.hpp"

namespace cvshape {

struct TrajectoryStage {
    ShapingProtocol protocol;
    ClusterGraph graph_before;
    ClusterGraph graph_after;
};

/// A prepared state followed by shaping stages, verified on the surviving
/// modes. Detection loss acts on every measured mode before its homodyne and
/// on the survivors before verification; tap loss acts on feedforward targets.
struct TrajectoryPlan {
    GaussianState initial;
    ClusterGraph initial_graph;
    std::vector<TrajectoryStage> stages;
    LossModel loss;
    /// Forms to report, labelled by nodes of the final graph.
    std::vector<Nullifier> monitored;

    const ClusterGraph &final_graph() const;
    void add_stage(const ShapingResult &result);
};

/// Outcome-averaged state of the survivors, including detection loss.
GaussianState analytic_final_state(const TrajectoryPlan &plan);

struct NullifierStatistics {
    std::string form;
    double analytic_var;
    std::optional<double> sample_mean;
    std::optional<double> sample_var;
    std::optional<double> stderr_var;
    std::size_t trials;
};

struct TrajectoryStatistics {
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    std::vector<NullifierStatistics> nullifiers;
    Matrix analytic_cov;
    Vector sample_mean;
    /// Absent for fewer than two trials.
    std::optional<Matrix> sample_cov;
    std::optional<Matrix> cov_stderr;
};

/// Sample `trials` measurement records with feedforward, then draw the
/// verification quadratures from each conditional state. Trials are split
/// into fixed chunks, each with its own generator derived from `seed`, so the
/// statistics do not depend on the number of worker threads.
TrajectoryStatistics run_trajectory(const TrajectoryPlan &plan, std::size_t trials, std::uint64_t seed,
                                    unsigned threads = 0);

}  // namespace cvshape
