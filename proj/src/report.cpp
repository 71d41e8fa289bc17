#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "cvshape/experiment.hpp"

namespace cvshape {

namespace {

using ojson = nlohmann::ordered_json;

// Six significant digits, parsed back so the dump shows no trailing noise.
ojson num(double v) {
    if (!std::isfinite(v)) return nullptr;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::stod(buf);
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

ojson matrix_json(const Matrix &m) {
    ojson rows = ojson::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        ojson row = ojson::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(num(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

ojson graph_json(const ClusterGraph &g) {
    ojson edges = ojson::array();
    for (const auto &e : g.edges()) edges.push_back({e.a, e.b, e.sign});
    return {{"nodes", g.nodes()}, {"edges", edges}};
}

ojson criteria_json(const CriteriaReport &r, const ClusterGraph &g) {
    ojson nullifiers = ojson::array();
    for (const auto &v : r.nullifiers) {
        nullifiers.push_back({{"form", v.form.to_string()},
                              {"variance", num(v.variance)},
                              {"bound", num(v.bound)},
                              {"pass", v.pass},
                              {"db", num(v.db)}});
    }
    ojson pairwise = ojson::array();
    for (const auto &p : r.pairwise) {
        pairwise.push_back(
            {{"i", p.i}, {"j", p.j}, {"sum_variance", num(p.sum_variance)}, {"bound", num(p.bound)}, {"pass", p.pass}});
    }
    ojson residual = ojson::array();
    for (const auto &s : r.residual_squeezing) {
        residual.push_back({{"node", s.node},
                            {"squeezed_db", num(s.squeezed_db)},
                            {"antisqueezed_db", num(s.antisqueezed_db)},
                            {"angle", num(s.angle)}});
    }
    return {{"graph", graph_json(g)},
            {"reference_convention", r.reference_convention},
            {"nullifiers", nullifiers},
            {"pairwise", pairwise},
            {"residual_squeezing", residual},
            {"all_pass", r.all_pass()}};
}

ojson loss_json(const LossModel &loss) {
    ojson defaults = ojson::object();
    for (const auto &[stage, eta] : loss.stage_defaults()) defaults[to_string(stage)] = num(eta);
    ojson overrides = ojson::object();
    for (const auto &[stage, per_node] : loss.overrides()) {
        ojson nodes = ojson::object();
        for (const auto &[node, eta] : per_node) nodes[std::to_string(node)] = num(eta);
        overrides[to_string(stage)] = nodes;
    }
    return {{"stage_defaults", defaults}, {"overrides", overrides}};
}

ojson config_json(const ExperimentConfig &c) {
    ojson squeezing = ojson::object();
    const auto db = c.squeezing_vector();
    const auto nodes = c.graph.nodes();
    for (std::size_t k = 0; k < nodes.size(); ++k) squeezing[std::to_string(nodes[k])] = num(db[k]);
    ojson gains = ojson::object();
    for (const auto &[node, gain] : c.feedforward_gains) gains[std::to_string(node)] = num(gain);
    ojson ops = ojson::array();
    for (const auto &op : c.operations) {
        ops.push_back(op.kind == ShapingOperation::Kind::Remove
                          ? "remove:" + std::to_string(op.a)
                          : "shorten:" + std::to_string(op.a) + ":" + std::to_string(op.b));
    }
    return {{"scenario", to_string(c.scenario)},
            {"construction", to_string(c.construction)},
            {"graph", graph_json(c.graph)},
            {"squeezing_db", squeezing},
            {"loss", loss_json(c.loss)},
            {"calibrate_target", c.calibrate_target ? num(*c.calibrate_target) : ojson(nullptr)},
            {"lossless", c.lossless},
            {"feedforward_gain", num(c.feedforward_gain)},
            {"feedforward_gains", gains},
            {"targets", c.targets},
            {"operations", ops},
            {"trials", c.trials},
            {"seed", c.seed}};
}

ojson transcript_json(const std::vector<TranscriptStage> &stages) {
    ojson out = ojson::array();
    for (const auto &s : stages) {
        ojson measurements = ojson::array();
        for (const auto &m : s.protocol.measurements) measurements.push_back({{"node", m.node}, {"angle", num(m.angle)}});
        ojson ff = ojson::array();
        for (const auto &e : s.protocol.feedforward) {
            ff.push_back({{"source_node", s.measured_nodes.at(e.source)},
                          {"target", e.target},
                          {"quadrature", to_string(e.quadrature)},
                          {"gain", num(e.gain)}});
        }
        out.push_back({{"operation", s.operation},
                       {"measurements", measurements},
                       {"feedforward", ff},
                       {"graph_after", graph_json(s.graph_after)}});
    }
    return out;
}

ojson monte_carlo_json(const TrajectoryStatistics &s) {
    ojson nullifiers = ojson::array();
    for (const auto &n : s.nullifiers) {
        auto opt = [](const std::optional<double> &v) { return v ? num(*v) : ojson(nullptr); };
        nullifiers.push_back({{"form", n.form},
                              {"analytic_variance", num(n.analytic_var)},
                              {"sample_mean", opt(n.sample_mean)},
                              {"sample_variance", opt(n.sample_var)},
                              {"stderr_variance", opt(n.stderr_var)}});
    }
    ojson out = {{"trials", s.trials}, {"seed", s.seed}, {"nullifiers", nullifiers}};
    out["sample_covariance"] = s.sample_cov ? matrix_json(*s.sample_cov) : ojson(nullptr);
    out["covariance_stderr"] = s.cov_stderr ? matrix_json(*s.cov_stderr) : ojson(nullptr);
    if (s.sample_cov && s.cov_stderr) {
        const Matrix z = (*s.sample_cov - s.analytic_cov).cwiseAbs().cwiseQuotient(*s.cov_stderr);
        out["max_abs_z"] = num(z.maxCoeff());
    } else {
        out["max_abs_z"] = nullptr;
    }
    return out;
}

void require(std::vector<std::string> &problems, const nlohmann::json &doc, const std::string &key,
             nlohmann::json::value_t type, const std::string &where) {
    if (!doc.is_object() || !doc.contains(key)) {
        problems.push_back(where + ": missing '" + key + "'");
        return;
    }
    const auto &v = doc.at(key);
    const bool number_ok = type == nlohmann::json::value_t::number_float && v.is_number();
    if (v.type() != type && !number_ok && !(type == nlohmann::json::value_t::number_unsigned && v.is_number_integer())) {
        problems.push_back(where + ": '" + key + "' has the wrong type");
    }
}

void validate_criteria(std::vector<std::string> &problems, const nlohmann::json &doc, const std::string &where) {
    using t = nlohmann::json::value_t;
    require(problems, doc, "graph", t::object, where);
    require(problems, doc, "nullifiers", t::array, where);
    require(problems, doc, "pairwise", t::array, where);
    require(problems, doc, "residual_squeezing", t::array, where);
    require(problems, doc, "all_pass", t::boolean, where);
    if (!doc.is_object() || !doc.contains("nullifiers") || !doc["nullifiers"].is_array()) return;
    for (const auto &n : doc["nullifiers"]) {
        require(problems, n, "form", t::string, where + ".nullifiers");
        require(problems, n, "variance", t::number_float, where + ".nullifiers");
        require(problems, n, "bound", t::number_float, where + ".nullifiers");
        require(problems, n, "pass", t::boolean, where + ".nullifiers");
        require(problems, n, "db", t::number_float, where + ".nullifiers");
    }
}

}  // namespace

nlohmann::ordered_json report_to_json(const ExperimentReport &r) {
    ojson doc;
    doc["schema_version"] = kReportSchemaVersion;
    doc["config"] = config_json(r.config);
    if (r.calibrated_eta) {
        doc["calibration"] = {{"target", num(*r.config.calibrate_target)},
                              {"lossless_two_term", num(*r.calibration_v0)},
                              {"eta", num(*r.calibrated_eta)}};
    } else {
        doc["calibration"] = nullptr;
    }
    doc["initial"] = criteria_json(r.initial, r.initial_graph);
    doc["transcript"] = transcript_json(r.transcript);
    doc["final"] = criteria_json(r.final, r.final_graph);
    doc["final_covariance"] = matrix_json(r.final_cov);
    ojson published = ojson::object();
    for (const auto &[form, value] : r.published) published[form] = num(value);
    doc["published"] = published;
    doc["monte_carlo"] = r.monte_carlo ? monte_carlo_json(*r.monte_carlo) : ojson(nullptr);
    if (r.ring_route) {
        doc["ring_route"] = {{"direct_covariance", matrix_json(r.ring_route->direct_cov)},
                             {"ring_covariance", matrix_json(r.ring_route->ring_cov)},
                             {"max_abs_difference", num(r.ring_route->discrepancy)}};
    } else {
        doc["ring_route"] = nullptr;
    }
    doc["all_pass"] = r.all_pass();
    if (r.config.record_wall_time) doc["wall_time_s"] = num(r.wall_time_s);
    return doc;
}

std::string report_to_csv(const ExperimentReport &r) {
    std::ostringstream out;
    out << "form,variance,bound,pass,db\n";
    for (const auto &v : r.final.nullifiers) {
        out << v.form.to_string() << ',' << fmt6(v.variance) << ',' << fmt6(v.bound) << ','
            << (v.pass ? "true" : "false") << ',' << fmt6(v.db) << '\n';
    }
    return out.str();
}

std::vector<std::string> validate_report_json(const nlohmann::json &doc) {
    using t = nlohmann::json::value_t;
    std::vector<std::string> problems;
    if (!doc.is_object()) return {"report is not an object"};
    require(problems, doc, "schema_version", t::number_unsigned, "report");
    if (doc.contains("schema_version") && doc["schema_version"] != kReportSchemaVersion) {
        problems.push_back("report: unsupported schema_version");
    }
    require(problems, doc, "config", t::object, "report");
    require(problems, doc, "initial", t::object, "report");
    require(problems, doc, "transcript", t::array, "report");
    require(problems, doc, "final", t::object, "report");
    require(problems, doc, "final_covariance", t::array, "report");
    require(problems, doc, "published", t::object, "report");
    require(problems, doc, "all_pass", t::boolean, "report");
    for (const char *key : {"calibration", "monte_carlo", "ring_route"}) {
        if (!doc.contains(key)) problems.push_back(std::string("report: missing '") + key + "'");
    }
    if (doc.contains("config")) {
        const auto &c = doc["config"];
        require(problems, c, "scenario", t::string, "config");
        require(problems, c, "construction", t::string, "config");
        require(problems, c, "graph", t::object, "config");
        require(problems, c, "trials", t::number_unsigned, "config");
        require(problems, c, "seed", t::number_unsigned, "config");
    }
    if (doc.contains("initial")) validate_criteria(problems, doc["initial"], "initial");
    if (doc.contains("final")) validate_criteria(problems, doc["final"], "final");
    if (doc.contains("monte_carlo") && doc["monte_carlo"].is_object()) {
        require(problems, doc["monte_carlo"], "trials", t::number_unsigned, "monte_carlo");
        require(problems, doc["monte_carlo"], "nullifiers", t::array, "monte_carlo");
    }
    return problems;
}

void emit(const ExperimentReport &report, ReportFormat format, const std::string &path) {
    const std::string text = format == ReportFormat::Json ? report_to_json(report).dump(2) + "\n" : report_to_csv(report);
    if (path.empty() || path == "-") {
        std::cout << text;
        if (!std::cout) throw std::runtime_error("emit: failed writing to stdout");
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit: cannot open " + path);
    out << text;
    out.close();
    if (!out) throw std::runtime_error("emit: failed writing " + path);
}

}  // namespace cvshape
