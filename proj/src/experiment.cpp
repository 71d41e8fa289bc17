#include "cvshape/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "cvshape/network.hpp"

namespace cvshape {

namespace {

std::string trim(const std::string &s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(item);
    return out;
}

std::vector<std::string> words(const std::string &s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

[[noreturn]] void config_error(int line, const std::string &what) {
    throw std::invalid_argument("config line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string &s, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception &) {
        config_error(line, "expected a number, got '" + s + "'");
    }
}

long long parse_integer(const std::string &s, int line) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception &) {
        config_error(line, "expected an integer, got '" + s + "'");
    }
}

NodeId parse_node(const std::string &s, int line) { return static_cast<NodeId>(parse_integer(s, line)); }

bool parse_bool(const std::string &s, int line) {
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    config_error(line, "expected true or false, got '" + s + "'");
}

void check_eta(double eta, int line) {
    if (!(eta > 0.0 && eta <= 1.0)) config_error(line, "efficiency must lie in (0, 1]");
}

NodeId pick_node(const ClusterGraph &g, bool want_edge) {
    const auto nodes = g.nodes();
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
        const auto d = g.degree(*it);
        if (want_edge ? d == 1 : d >= 2) return *it;
    }
    throw std::invalid_argument(want_edge ? "remove-edge: graph has no node of degree 1"
                                          : "remove-inner: graph has no node of degree 2 or more");
}

}  // namespace

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::RemoveEdge:
            return "remove-edge";
        case Scenario::RemoveInner:
            return "remove-inner";
        case Scenario::ShortenWire:
            return "shorten-wire";
        case Scenario::RingRouteCheck:
            return "ring-route-check";
        case Scenario::Custom:
            return "custom";
    }
    return "?";
}

std::string to_string(Construction c) {
    switch (c) {
        case Construction::Canonical:
            return "canonical";
        case Construction::Compiled:
            return "compiled";
        case Construction::PresetPaper:
            return "preset-paper";
    }
    return "?";
}

std::string to_string(ReportFormat f) { return f == ReportFormat::Json ? "json" : "csv"; }

Scenario scenario_from_string(const std::string &name) {
    for (auto s : {Scenario::RemoveEdge, Scenario::RemoveInner, Scenario::ShortenWire, Scenario::RingRouteCheck,
                   Scenario::Custom}) {
        if (to_string(s) == name) return s;
    }
    throw std::invalid_argument("unknown scenario '" + name + "'");
}

Construction construction_from_string(const std::string &name) {
    for (auto c : {Construction::Canonical, Construction::Compiled, Construction::PresetPaper}) {
        if (to_string(c) == name) return c;
    }
    throw std::invalid_argument("unknown construction '" + name + "'");
}

ReportFormat format_from_string(const std::string &name) {
    if (name == "json") return ReportFormat::Json;
    if (name == "csv") return ReportFormat::Csv;
    throw std::invalid_argument("unknown format '" + name + "'");
}

std::vector<double> ExperimentConfig::squeezing_vector() const {
    std::vector<double> out;
    for (auto n : graph.nodes()) {
        auto it = squeezing_db.find(n);
        out.push_back(it == squeezing_db.end() ? default_db : it->second);
    }
    return out;
}

ExperimentConfig parse_config(std::istream &in) {
    ExperimentConfig c;
    std::optional<std::vector<NodeId>> nodes;
    std::optional<std::vector<Edge>> edges;
    int wire = 0;
    int line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) config_error(line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "scenario") {
                c.scenario = scenario_from_string(value);
            } else if (key == "construction") {
                c.construction = construction_from_string(value);
            } else if (key == "format") {
                c.format = format_from_string(value);
            } else if (key == "output") {
                c.output = value;
            } else if (key == "trials") {
                const auto t = parse_integer(value, line_no);
                if (t < 0) config_error(line_no, "trials must be >= 0");
                c.trials = static_cast<std::size_t>(t);
            } else if (key == "seed") {
                c.seed = static_cast<std::uint64_t>(parse_integer(value, line_no));
            } else if (key == "threads") {
                const auto t = parse_integer(value, line_no);
                if (t < 0) config_error(line_no, "threads must be >= 0");
                c.threads = static_cast<unsigned>(t);
            } else if (key == "lossless") {
                c.lossless = parse_bool(value, line_no);
            } else if (key == "record_wall_time") {
                c.record_wall_time = parse_bool(value, line_no);
            } else if (key == "calibrate") {
                if (value == "off") {
                    c.calibrate_target.reset();
                } else {
                    c.calibrate_target = parse_double(value, line_no);
                }
            } else if (key == "squeezing_db") {
                for (const auto &w : words(value)) {
                    const auto parts = split(w, ':');
                    if (parts.size() == 1) {
                        c.default_db = parse_double(parts[0], line_no);
                    } else if (parts.size() == 2) {
                        c.squeezing_db[parse_node(parts[0], line_no)] = parse_double(parts[1], line_no);
                    } else {
                        config_error(line_no, "bad squeezing entry '" + w + "'");
                    }
                }
            } else if (key == "graph") {
                const auto parts = split(value, ':');
                if (parts.size() != 2 || parts[0] != "wire") config_error(line_no, "graph must be wire:N");
                wire = static_cast<int>(parse_integer(parts[1], line_no));
                if (wire < 1) config_error(line_no, "wire needs at least one node");
            } else if (key == "nodes") {
                nodes.emplace();
                for (const auto &w : words(value)) nodes->push_back(parse_node(w, line_no));
            } else if (key == "edges") {
                edges.emplace();
                for (const auto &w : words(value)) {
                    const auto sign_parts = split(w, ':');
                    const auto ends = split(sign_parts[0], '-');
                    if (ends.size() != 2 || sign_parts.size() > 2) config_error(line_no, "bad edge '" + w + "'");
                    int sign = 1;
                    if (sign_parts.size() == 2) sign = static_cast<int>(parse_integer(sign_parts[1], line_no));
                    edges->push_back({parse_node(ends[0], line_no), parse_node(ends[1], line_no), sign});
                }
            } else if (key.rfind("loss.", 0) == 0) {
                const auto parts = split(key.substr(5), '.');
                const auto stage = loss_stage_from_string(parts[0]);
                const double eta = parse_double(value, line_no);
                check_eta(eta, line_no);
                if (parts.size() == 1) {
                    c.loss.set_stage_default(stage, eta);
                } else if (parts.size() == 2) {
                    c.loss.set_efficiency(stage, parse_node(parts[1], line_no), eta);
                } else {
                    config_error(line_no, "bad loss key '" + key + "'");
                }
            } else if (key == "feedforward_gain") {
                c.feedforward_gain = parse_double(value, line_no);
            } else if (key.rfind("feedforward_gain.", 0) == 0) {
                c.feedforward_gains[parse_node(key.substr(17), line_no)] = parse_double(value, line_no);
            } else if (key == "targets") {
                c.targets.clear();
                for (const auto &w : words(value)) c.targets.push_back(parse_node(w, line_no));
            } else if (key == "operations") {
                c.operations.clear();
                for (const auto &w : words(value)) {
                    const auto parts = split(w, ':');
                    if (parts[0] == "remove" && parts.size() == 2) {
                        c.operations.push_back({ShapingOperation::Kind::Remove, parse_node(parts[1], line_no)});
                    } else if (parts[0] == "shorten" && parts.size() == 3) {
                        c.operations.push_back({ShapingOperation::Kind::Shorten, parse_node(parts[1], line_no),
                                                parse_node(parts[2], line_no)});
                    } else {
                        config_error(line_no, "bad operation '" + w + "'");
                    }
                }
            } else {
                config_error(line_no, "unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument &e) {
            const std::string what = e.what();
            if (what.rfind("config line", 0) == 0) throw;
            config_error(line_no, what);
        }
    }

    if (wire > 0 && (nodes || edges)) throw std::invalid_argument("config: use either graph or nodes/edges");
    if (wire > 0) c.graph = ClusterGraph::linear(wire);
    if (nodes || edges) {
        std::vector<NodeId> all = nodes.value_or(std::vector<NodeId>{});
        if (!nodes) {
            for (const auto &e : *edges) {
                for (auto n : {e.a, e.b}) {
                    if (std::find(all.begin(), all.end(), n) == all.end()) all.push_back(n);
                }
            }
        }
        ClusterGraph g;
        for (auto n : all) g.add_node(n);
        for (const auto &e : edges.value_or(std::vector<Edge>{})) g.add_edge(e.a, e.b, e.sign);
        c.graph = g;
    }
    return c;
}

ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    return parse_config(in);
}

double calibrate_efficiency(double target, double v0, std::size_t terms) {
    const double vac = static_cast<double>(terms) * kVacuumVariance;
    if (!(v0 > 0.0 && v0 < vac)) throw std::invalid_argument("calibrate_loss: lossless value must lie in (0, k/4)");
    if (!(target >= v0 && target < vac)) {
        throw std::invalid_argument("calibrate_loss: target " + std::to_string(target) + " outside [" +
                                    std::to_string(v0) + ", " + std::to_string(vac) + ")");
    }
    return (vac - target) / (vac - v0);
}

LossModel calibrate_loss(double target, double v0, std::size_t terms) {
    return LossModel::uniform(LossStage::Propagation, calibrate_efficiency(target, v0, terms));
}

namespace {

GaussianState prepare_state(const ExperimentConfig &c, const LossModel &loss) {
    const auto &g = c.graph;
    const auto db = c.squeezing_vector();
    std::vector<double> source;
    for (auto n : g.nodes()) source.push_back(loss.efficiency(LossStage::Source, n));

    GaussianState state = vacuum(1);
    switch (c.construction) {
        case Construction::Canonical: {
            std::optional<GaussianState> product;
            for (std::size_t m = 0; m < db.size(); ++m) {
                auto s = squeezed_vacuum(db[m], Quadrature::P);
                if (source[m] != 1.0) s = apply_loss(s, 0, source[m]);
                product = product ? tensor(*product, s) : s;
            }
            state = apply(*product, cz_symplectic(g));
            break;
        }
        case Construction::Compiled:
            state = prepare(compile_network(g, db), source);
            break;
        case Construction::PresetPaper:
            if (!(g == ClusterGraph::linear(4))) {
                throw std::invalid_argument("preset-paper construction needs the four-node wire 1-2-3-4");
            }
            state = prepare(preset_paper_network(db), source);
            break;
    }
    for (auto n : g.nodes()) {
        const double eta = loss.efficiency(LossStage::Propagation, n);
        if (eta != 1.0) state = apply_loss(state, g.mode_index(n), eta);
    }
    return state;
}

GaussianState with_detection_loss(GaussianState state, const ClusterGraph &g, const LossModel &loss) {
    for (auto n : g.nodes()) {
        const double eta = loss.efficiency(LossStage::Detection, n);
        if (eta != 1.0) state = apply_loss(state, g.mode_index(n), eta);
    }
    return state;
}

std::vector<ShapingOperation> scenario_operations(const ExperimentConfig &c) {
    const auto &g = c.graph;
    using Kind = ShapingOperation::Kind;
    auto need_targets = [&](std::size_t n) {
        if (!c.targets.empty() && c.targets.size() != n) {
            throw std::invalid_argument(to_string(c.scenario) + ": expected " + std::to_string(n) + " target node(s)");
        }
    };
    switch (c.scenario) {
        case Scenario::RemoveEdge: {
            need_targets(1);
            const NodeId j = c.targets.empty() ? pick_node(g, true) : c.targets[0];
            if (!g.contains(j)) throw std::invalid_argument("remove-edge: node " + std::to_string(j) + " not in graph");
            if (g.degree(j) != 1) {
                throw std::invalid_argument("remove-edge: node " + std::to_string(j) + " has degree " +
                                            std::to_string(g.degree(j)) + ", expected 1");
            }
            return {{Kind::Remove, j}};
        }
        case Scenario::RemoveInner: {
            need_targets(1);
            const NodeId j = c.targets.empty() ? pick_node(g, false) : c.targets[0];
            if (!g.contains(j)) throw std::invalid_argument("remove-inner: node " + std::to_string(j) + " not in graph");
            if (g.degree(j) < 2) {
                throw std::invalid_argument("remove-inner: node " + std::to_string(j) + " has degree " +
                                            std::to_string(g.degree(j)) + ", expected at least 2");
            }
            return {{Kind::Remove, j}};
        }
        case Scenario::ShortenWire:
        case Scenario::RingRouteCheck: {
            need_targets(2);
            if (c.scenario == Scenario::RingRouteCheck && !(g == ClusterGraph::linear(4))) {
                throw std::invalid_argument("ring-route-check: needs the four-node wire 1-2-3-4");
            }
            const NodeId a = c.targets.empty() ? 2 : c.targets[0];
            const NodeId b = c.targets.empty() ? 3 : c.targets[1];
            wire_segment_ends(g, a, b);
            return {{Kind::Shorten, a, b}};
        }
        case Scenario::Custom:
            if (c.operations.empty()) throw std::invalid_argument("custom: no operations given");
            return c.operations;
    }
    return {};
}

std::map<std::string, double> published_values(const ExperimentConfig &c, const std::vector<ShapingOperation> &ops) {
    if (!(c.graph == ClusterGraph::linear(4)) || ops.size() != 1) return {};
    const auto &op = ops[0];
    if (op.kind == ShapingOperation::Kind::Remove && op.a == 4) {
        return {{"p1-x2", 0.14}, {"p2-x1-x3", 0.22}, {"p3-x2", 0.26}};
    }
    if (op.kind == ShapingOperation::Kind::Remove && op.a == 3) {
        return {{"p1-x2", 0.17}, {"p2-x1", 0.25}, {"squeezed_db:4", -1.5}};
    }
    if (op.kind == ShapingOperation::Kind::Shorten && std::min(op.a, op.b) == 2 && std::max(op.a, op.b) == 3) {
        return {{"p1+x4", 0.25}, {"p4+x1", 0.24}};
    }
    return {};
}

}  // namespace

ExperimentReport run(const ExperimentConfig &config) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport report;
    report.config = config;
    const auto &g = config.graph;
    if (g.num_nodes() == 0) throw std::invalid_argument("run: empty graph");
    for (const auto &[node, db] : config.squeezing_db) {
        if (!g.contains(node)) throw std::invalid_argument("squeezing_db: node " + std::to_string(node) + " not in graph");
        if (!(db >= 0.0)) throw std::invalid_argument("squeezing_db: node " + std::to_string(node) + " below 0 dB");
    }
    if (!(config.default_db >= 0.0)) throw std::invalid_argument("squeezing_db: must be >= 0 dB");

    LossModel loss = config.lossless ? LossModel::lossless() : config.loss;
    if (!config.lossless && config.calibrate_target) {
        if (config.loss.stage_defaults().count(LossStage::Propagation) ||
            config.loss.overrides().count(LossStage::Propagation)) {
            throw std::invalid_argument("calibration sets the propagation efficiency; drop loss.propagation");
        }
        std::optional<NodeId> end;
        for (auto n : g.nodes()) {
            if (g.degree(n) == 1) {
                end = n;
                break;
            }
        }
        if (!end) throw std::invalid_argument("calibration needs a node of degree 1 (a two-term nullifier)");
        const auto clean = prepare_state(config, LossModel::lossless());
        const double v0 = nullifier_variance(clean, g, nullifier_of(g, *end));
        const double eta = calibrate_efficiency(*config.calibrate_target, v0, 2);
        loss.set_stage_default(LossStage::Propagation, eta);
        report.calibrated_eta = eta;
        report.calibration_v0 = v0;
    }
    report.config.loss = loss;

    const auto ops = scenario_operations(config);
    const GaussianState initial = prepare_state(config, loss);
    report.initial_graph = g;
    report.initial = check_cluster_criteria(with_detection_loss(initial, g, loss), g);

    auto gain_for = [&](NodeId target) {
        auto it = config.feedforward_gains.find(target);
        return it == config.feedforward_gains.end() ? config.feedforward_gain : it->second;
    };
    TrajectoryPlan plan{initial, g, {}, loss, {}};
    for (const auto &op : ops) {
        const ClusterGraph before = plan.final_graph();
        TranscriptStage stage;
        if (op.kind == ShapingOperation::Kind::Remove) {
            if (!before.contains(op.a)) throw std::invalid_argument("remove: node " + std::to_string(op.a) + " not in graph");
            stage.operation = "remove:" + std::to_string(op.a);
            stage.protocol = removal_protocol(before, op.a, 1.0);
            stage.graph_after = before;
            stage.graph_after.remove_node(op.a);
        } else {
            stage.operation = "shorten:" + std::to_string(op.a) + ":" + std::to_string(op.b);
            stage.protocol = shortening_protocol(before, op.a, op.b, 1.0);
            stage.graph_after = shortened_graph(before, op.a, op.b);
        }
        for (auto &e : stage.protocol.feedforward) e.gain *= gain_for(e.target);
        for (const auto &m : stage.protocol.measurements) stage.measured_nodes.push_back(m.node);
        plan.stages.push_back({stage.protocol, before, stage.graph_after});
        report.transcript.push_back(std::move(stage));
    }

    const GaussianState final_state = analytic_final_state(plan);
    report.final_graph = plan.final_graph();
    report.final = check_cluster_criteria(final_state, report.final_graph);
    report.final_cov = final_state.cov();
    report.published = published_values(config, ops);

    if (config.scenario == Scenario::RingRouteCheck) {
        const auto direct = shorten_wire(initial, g, ops[0].a, ops[0].b);
        const auto ring = shorten_wire_via_ring(initial, g);
        report.ring_route = RingRouteComparison{direct.state.cov(), ring.state.cov(),
                                                (direct.state.cov() - ring.state.cov()).cwiseAbs().maxCoeff()};
    }

    if (config.trials > 0) {
        plan.monitored = nullifiers_of(report.final_graph);
        report.monte_carlo = run_trajectory(plan, config.trials, config.seed, config.threads);
    }
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace cvshape
