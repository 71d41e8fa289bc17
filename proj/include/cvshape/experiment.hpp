#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvshape/criteria.hpp"
#include "cvshape/graph.hpp"
#include "cvshape/shaping.hpp"
#include "cvshape/trajectory.hpp"

namespace cvshape {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char *kSeedEnvVar = "CVSHAPE_SEED";

enum class Scenario { RemoveEdge, RemoveInner, ShortenWire, RingRouteCheck, Custom };
enum class Construction { Canonical, Compiled, PresetPaper };
enum class ReportFormat { Json, Csv };

std::string to_string(Scenario s);
std::string to_string(Construction c);
std::string to_string(ReportFormat f);
Scenario scenario_from_string(const std::string &name);
Construction construction_from_string(const std::string &name);
ReportFormat format_from_string(const std::string &name);

/// One step of a custom scenario: remove one node, or shorten through two.
struct ShapingOperation {
    enum class Kind { Remove, Shorten } kind;
    NodeId a;
    NodeId b = 0;
};

struct ExperimentConfig {
    Scenario scenario = Scenario::RemoveEdge;
    Construction construction = Construction::PresetPaper;
    ClusterGraph graph = ClusterGraph::linear(4);
    /// Per node; nodes without an entry use `default_db`.
    double default_db = 5.0;
    std::map<NodeId, double> squeezing_db;
    LossModel loss;
    /// Uniform propagation efficiency solved from this initial two-term
    /// nullifier variance. Ignored when `lossless` is set.
    std::optional<double> calibrate_target = 0.25;
    bool lossless = false;
    /// Feedforward gain for every target, and per-target replacements.
    double feedforward_gain = -1.0;
    std::map<NodeId, double> feedforward_gains;
    /// Scenario node choices; empty means the scenario default.
    std::vector<NodeId> targets;
    std::vector<ShapingOperation> operations;
    std::size_t trials = 0;
    std::uint64_t seed = 20240501;
    unsigned threads = 0;
    std::string output;
    ReportFormat format = ReportFormat::Json;
    bool record_wall_time = false;

    std::vector<double> squeezing_vector() const;
};

/// Key/value text, one `key = value` per line, `#` starts a comment.
ExperimentConfig parse_config(std::istream &in);
ExperimentConfig load_config(const std::string &path);

/// Efficiency eta with eta * v0 + (1 - eta) * k/4 = target. Throws
/// std::invalid_argument unless v0 <= target < k/4.
double calibrate_efficiency(double target, double v0, std::size_t terms);
LossModel calibrate_loss(double target, double v0, std::size_t terms);

struct TranscriptStage {
    std::string operation;
    ShapingProtocol protocol;
    std::vector<NodeId> measured_nodes;
    ClusterGraph graph_after;
};

struct RingRouteComparison {
    Matrix direct_cov;
    Matrix ring_cov;
    double discrepancy;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::optional<double> calibrated_eta;
    std::optional<double> calibration_v0;
    ClusterGraph initial_graph;
    CriteriaReport initial;
    std::vector<TranscriptStage> transcript;
    ClusterGraph final_graph;
    CriteriaReport final;
    Matrix final_cov;
    std::optional<TrajectoryStatistics> monte_carlo;
    std::optional<RingRouteComparison> ring_route;
    /// Published variances for the scenario's final forms, keyed by form.
    std::map<std::string, double> published;
    double wall_time_s = 0.0;

    bool all_pass() const { return initial.all_pass() && final.all_pass(); }
};

/// Build, verify, shape and verify again. Throws std::invalid_argument on
/// configuration or scenario precondition errors.
ExperimentReport run(const ExperimentConfig &config);

/// Numbers carry six significant digits; key order is fixed.
nlohmann::ordered_json report_to_json(const ExperimentReport &report);
std::string report_to_csv(const ExperimentReport &report);
/// Checks the versioned report layout; returns the problems found.
std::vector<std::string> validate_report_json(const nlohmann::json &doc);
void emit(const ExperimentReport &report, ReportFormat format, const std::string &path);

}  // namespace cvshape
