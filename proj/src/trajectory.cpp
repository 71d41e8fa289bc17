#include "cvshape/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>
#include <variant>

namespace cvshape {

namespace {

constexpr std::size_t kChunkSize = 4096;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

struct ScaleOp {
    std::vector<Eigen::Index> indices;
    double factor;
};

struct MeasureOp {
    Vector selector;
    double stddev;
    Vector gain;
    std::vector<Eigen::Index> keep;
};

struct DisplaceOp {
    Eigen::Index index;
    std::size_t source;
    double gain;
};

using KernelOp = std::variant<ScaleOp, MeasureOp, DisplaceOp>;

// Per-trial work only touches the mean: Gaussian conditioning leaves the
// covariance outcome-independent, so the covariance chain is computed once.
struct Kernel {
    Vector initial_mean;
    std::vector<KernelOp> ops;
    std::size_t num_outcomes = 0;
    Matrix sample_factor;
};

class KernelBuilder {
   public:
    KernelBuilder(const GaussianState &initial, const ClusterGraph &graph)
        : mean_(Vector::Zero(initial.mean().size())), cov_(initial.cov()), live_(graph.nodes()) {
        kernel_.initial_mean = initial.mean();
    }

    void loss(NodeId node, double eta) {
        if (eta == 1.0) return;
        const auto mode = index_of(node);
        const auto n = live_.size();
        GaussianState s(mean_, cov_);
        cov_ = apply_loss(s, mode, eta).cov();
        kernel_.ops.emplace_back(ScaleOp{{static_cast<Eigen::Index>(mode), static_cast<Eigen::Index>(n + mode)},
                                         std::sqrt(eta)});
    }

    void measure(NodeId node, double angle) {
        const auto mode = index_of(node);
        const auto c = condition_on_quadrature(mean_, cov_, mode, angle);
        kernel_.ops.emplace_back(MeasureOp{c.selector, std::sqrt(c.marginal_var), c.gain, c.keep});
        Matrix next = c.cov(c.keep, c.keep);
        cov_ = 0.5 * (next + next.transpose());
        mean_ = Vector::Zero(cov_.rows());
        live_.erase(live_.begin() + static_cast<std::ptrdiff_t>(mode));
        ++kernel_.num_outcomes;
    }

    void displace(NodeId target, Quadrature q, std::size_t source, double gain) {
        const auto idx = quadrature_index(live_.size(), index_of(target), q);
        kernel_.ops.emplace_back(DisplaceOp{static_cast<Eigen::Index>(idx), source, gain});
    }

    const std::vector<NodeId> &live() const { return live_; }

    Kernel finish() {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(cov_);
        const Vector root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        kernel_.sample_factor = solver.eigenvectors() * root.asDiagonal();
        return std::move(kernel_);
    }

   private:
    std::size_t index_of(NodeId node) const {
        auto it = std::find(live_.begin(), live_.end(), node);
        if (it == live_.end()) throw std::invalid_argument("run_trajectory: node " + std::to_string(node) + " is gone");
        return static_cast<std::size_t>(it - live_.begin());
    }

    Vector mean_;
    Matrix cov_;
    std::vector<NodeId> live_;
    Kernel kernel_;
};

Kernel compile(const TrajectoryPlan &plan) {
    KernelBuilder b(plan.initial, plan.initial_graph);
    std::size_t outcome_offset = 0;
    for (const auto &stage : plan.stages) {
        const auto &p = stage.protocol;
        for (const auto &m : p.measurements) b.loss(m.node, plan.loss.efficiency(LossStage::Detection, m.node));
        for (const auto &e : p.feedforward) b.loss(e.target, plan.loss.efficiency(LossStage::FeedforwardTap, e.target));
        for (const auto &m : p.measurements) b.measure(m.node, m.angle);
        for (const auto &e : p.feedforward) b.displace(e.target, e.quadrature, outcome_offset + e.source, e.gain);
        outcome_offset += p.measurements.size();
    }
    const auto survivors = b.live();
    for (auto n : survivors) b.loss(n, plan.loss.efficiency(LossStage::Detection, n));
    return b.finish();
}

struct ChunkStats {
    std::size_t count = 0;
    Vector mean;
    Matrix m2;
};

ChunkStats run_chunk(const Kernel &k, std::size_t count, std::uint64_t stream_seed) {
    std::mt19937_64 rng(stream_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto dim = k.sample_factor.rows();
    Matrix samples(dim, static_cast<Eigen::Index>(count));
    std::vector<double> outcomes(k.num_outcomes);
    Vector z(dim);
    for (std::size_t t = 0; t < count; ++t) {
        Vector mu = k.initial_mean;
        std::size_t next_outcome = 0;
        for (const auto &op : k.ops) {
            if (const auto *s = std::get_if<ScaleOp>(&op)) {
                for (auto i : s->indices) mu(i) *= s->factor;
            } else if (const auto *m = std::get_if<MeasureOp>(&op)) {
                const double expected = m->selector.dot(mu);
                const double value = expected + m->stddev * normal(rng);
                mu += m->gain * (value - expected);
                mu = mu(m->keep).eval();
                outcomes[next_outcome++] = value;
            } else {
                const auto &d = std::get<DisplaceOp>(op);
                mu(d.index) += d.gain * outcomes[d.source];
            }
        }
        for (Eigen::Index i = 0; i < dim; ++i) z(i) = normal(rng);
        samples.col(static_cast<Eigen::Index>(t)) = mu + k.sample_factor * z;
    }
    ChunkStats out;
    out.count = count;
    out.mean = samples.rowwise().mean();
    const Matrix centered = samples.colwise() - out.mean;
    out.m2 = centered * centered.transpose();
    return out;
}

void merge(ChunkStats &into, const ChunkStats &other) {
    if (into.count == 0) {
        into = other;
        return;
    }
    const double na = static_cast<double>(into.count);
    const double nb = static_cast<double>(other.count);
    const double n = na + nb;
    const Vector delta = other.mean - into.mean;
    into.mean += delta * (nb / n);
    into.m2 += other.m2 + delta * delta.transpose() * (na * nb / n);
    into.count += other.count;
}

}  // namespace

const ClusterGraph &TrajectoryPlan::final_graph() const {
    return stages.empty() ? initial_graph : stages.back().graph_after;
}

void TrajectoryPlan::add_stage(const ShapingResult &result) {
    stages.push_back({result.protocol, final_graph(), result.graph});
}

GaussianState analytic_final_state(const TrajectoryPlan &plan) {
    GaussianState state = plan.initial;
    for (const auto &stage : plan.stages) {
        state = execute(state, stage.graph_before, stage.protocol, stage.graph_after, AveragedOutcomes{}, plan.loss)
                    .state;
    }
    const auto &graph = plan.final_graph();
    for (auto n : graph.nodes()) {
        const double eta = plan.loss.efficiency(LossStage::Detection, n);
        if (eta != 1.0) state = apply_loss(state, graph.mode_index(n), eta);
    }
    return state;
}

TrajectoryStatistics run_trajectory(const TrajectoryPlan &plan, std::size_t trials, std::uint64_t seed,
                                    unsigned threads) {
    if (trials == 0) throw std::invalid_argument("run_trajectory: need at least one trial");
    const GaussianState analytic = analytic_final_state(plan);
    const Kernel kernel = compile(plan);

    const std::size_t chunks = (trials + kChunkSize - 1) / kChunkSize;
    std::vector<ChunkStats> results(chunks);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
    auto worker = [&](unsigned id) {
        for (std::size_t c = id; c < chunks; c += threads) {
            const std::size_t count = std::min(kChunkSize, trials - c * kChunkSize);
            results[c] = run_chunk(kernel, count, splitmix64(seed ^ splitmix64(c + 1)));
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    }
    ChunkStats total;
    for (const auto &r : results) merge(total, r);

    TrajectoryStatistics stats;
    stats.trials = trials;
    stats.seed = seed;
    stats.analytic_cov = analytic.cov();
    stats.sample_mean = total.mean;
    if (trials >= 2) {
        const double dof = static_cast<double>(trials - 1);
        const Matrix cov = total.m2 / dof;
        Matrix se(cov.rows(), cov.cols());
        for (Eigen::Index a = 0; a < cov.rows(); ++a) {
            for (Eigen::Index b = 0; b < cov.cols(); ++b) {
                se(a, b) = std::sqrt((cov(a, a) * cov(b, b) + cov(a, b) * cov(a, b)) / dof);
            }
        }
        stats.sample_cov = cov;
        stats.cov_stderr = se;
    }
    const auto &graph = plan.final_graph();
    for (const auto &f : plan.monitored) {
        const Vector c = f.on_modes(graph).coefficients(graph.num_nodes());
        NullifierStatistics ns{f.to_string(), c.dot(analytic.cov() * c), c.dot(total.mean), std::nullopt,
                               std::nullopt, trials};
        if (stats.sample_cov) {
            const double v = c.dot(*stats.sample_cov * c);
            ns.sample_var = v;
            ns.stderr_var = v * std::sqrt(2.0 / static_cast<double>(trials - 1));
        }
        stats.nullifiers.push_back(std::move(ns));
    }
    return stats;
}

}  // namespace cvshape
