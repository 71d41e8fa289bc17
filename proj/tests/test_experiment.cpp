#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cvshape/experiment.hpp"

using namespace cvshape;

namespace {

ExperimentConfig parse(const std::string &text) {
    std::istringstream in(text);
    return parse_config(in);
}

ExperimentConfig lossless_canonical(Scenario s) {
    ExperimentConfig c;
    c.scenario = s;
    c.construction = Construction::Canonical;
    c.lossless = true;
    return c;
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Config, ParsesAllKeys) {
    const auto c = parse(R"(
# comment
scenario = custom
construction = compiled
nodes = 1 2 3 5
edges = 1-2 2-3 3-5:-1
squeezing_db = 6 5:4.5
loss.detection = 0.95
loss.feedforward_tap.3 = 0.9
calibrate = off
feedforward_gain = -0.9
feedforward_gain.2 = -1
operations = remove:5 remove:3
trials = 100
seed = 77
threads = 2
format = csv
output = out.csv
lossless = no
)");
    EXPECT_EQ(c.scenario, Scenario::Custom);
    EXPECT_EQ(c.construction, Construction::Compiled);
    EXPECT_EQ(c.graph.num_nodes(), 4u);
    EXPECT_EQ(c.graph.edge_sign(3, 5), -1);
    EXPECT_DOUBLE_EQ(c.default_db, 6.0);
    EXPECT_DOUBLE_EQ(c.squeezing_db.at(5), 4.5);
    EXPECT_DOUBLE_EQ(c.loss.efficiency(LossStage::Detection, 1), 0.95);
    EXPECT_DOUBLE_EQ(c.loss.efficiency(LossStage::FeedforwardTap, 3), 0.9);
    EXPECT_FALSE(c.calibrate_target.has_value());
    EXPECT_DOUBLE_EQ(c.feedforward_gains.at(2), -1.0);
    ASSERT_EQ(c.operations.size(), 2u);
    EXPECT_EQ(c.operations[0].a, 5);
    EXPECT_EQ(c.trials, 100u);
    EXPECT_EQ(c.seed, 77u);
    EXPECT_EQ(c.format, ReportFormat::Csv);
}

TEST(Config, Defaults) {
    const auto c = parse("");
    EXPECT_EQ(c.graph, ClusterGraph::linear(4));
    EXPECT_EQ(c.construction, Construction::PresetPaper);
    EXPECT_DOUBLE_EQ(*c.calibrate_target, 0.25);
    EXPECT_DOUBLE_EQ(c.default_db, 5.0);
}

TEST(Config, ErrorsCarryLineNumbers) {
    try {
        parse("scenario = remove-edge\ntrials = -3\n");
        FAIL();
    } catch (const std::invalid_argument &e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse("bogus = 1"), std::invalid_argument);
    EXPECT_THROW(parse("scenario = fly"), std::invalid_argument);
    EXPECT_THROW(parse("loss.detection = 1.5"), std::invalid_argument);
    EXPECT_THROW(parse("edges = 1-1"), std::invalid_argument);
    EXPECT_THROW(parse("graph = wire:4\nedges = 1-2"), std::invalid_argument);
    EXPECT_THROW(parse("no equals sign"), std::invalid_argument);
}

TEST(Calibration, ClosedForm) {
    EXPECT_NEAR(calibrate_efficiency(0.25, 0.158114, 2), 0.25 / (0.5 - 0.158114), 1e-15);
    EXPECT_NEAR(calibrate_efficiency(0.25, 0.158114, 2), 0.731238, 1e-6);
    EXPECT_DOUBLE_EQ(calibrate_efficiency(0.158114, 0.158114, 2), 1.0);
    EXPECT_THROW(calibrate_efficiency(0.5, 0.158114, 2), std::invalid_argument);
    EXPECT_THROW(calibrate_efficiency(0.1, 0.158114, 2), std::invalid_argument);
    const auto loss = calibrate_loss(0.25, 0.158114, 2);
    EXPECT_NEAR(loss.efficiency(LossStage::Propagation, 1), 0.731238, 1e-6);
}

TEST(Run, CalibratedInitialTwoTermIsTarget) {
    const auto r = run(ExperimentConfig{});
    ASSERT_TRUE(r.calibrated_eta.has_value());
    EXPECT_NEAR(*r.calibration_v0, 0.158114, 1e-6);
    EXPECT_NEAR(r.initial.nullifiers.front().variance, 0.25, 1e-12);
}

TEST(Run, RemoveEdgeLosslessPreservesVariances) {
    const auto r = run(lossless_canonical(Scenario::RemoveEdge));
    ASSERT_EQ(r.final.nullifiers.size(), 3u);
    for (const auto &v : r.final.nullifiers) EXPECT_NEAR(v.variance, 0.0790569, 1e-7);
    EXPECT_TRUE(r.all_pass());
}

TEST(Run, ShortenLossless) {
    const auto r = run(lossless_canonical(Scenario::ShortenWire));
    ASSERT_EQ(r.final.nullifiers.size(), 2u);
    EXPECT_EQ(r.final.nullifiers[0].form.to_string(), "p1+x4");
    for (const auto &v : r.final.nullifiers) EXPECT_NEAR(v.variance, 0.158114, 1e-6);
    EXPECT_EQ(r.published.at("p4+x1"), 0.24);
}

TEST(Run, RemoveInnerResidualSqueezing) {
    const auto r = run(lossless_canonical(Scenario::RemoveInner));
    ASSERT_EQ(r.final.residual_squeezing.size(), 1u);
    EXPECT_EQ(r.final.residual_squeezing[0].node, 4);
    EXPECT_NEAR(r.final.residual_squeezing[0].squeezed_db, -5.0, 1e-9);
}

TEST(Run, RingRouteReportsDiscrepancy) {
    const auto r = run(lossless_canonical(Scenario::RingRouteCheck));
    ASSERT_TRUE(r.ring_route.has_value());
    EXPECT_LT(r.ring_route->discrepancy, 1e-10);
}

TEST(Run, FeedforwardOverrideChangesResult) {
    auto c = lossless_canonical(Scenario::RemoveInner);
    c.feedforward_gains[2] = 0.0;
    const auto r = run(c);
    EXPECT_GT(r.final.nullifiers[1].variance, 0.3);
    EXPECT_NEAR(r.final.nullifiers[0].variance, 0.0790569, 1e-7);
}

TEST(Run, CustomOperations) {
    auto c = lossless_canonical(Scenario::Custom);
    c.graph = ClusterGraph::linear(6);
    c.operations = {{ShapingOperation::Kind::Shorten, 3, 4}, {ShapingOperation::Kind::Remove, 6}};
    const auto r = run(c);
    EXPECT_EQ(r.transcript.size(), 2u);
    EXPECT_EQ(r.final_graph.num_nodes(), 3u);
    EXPECT_TRUE(r.final_graph.adjacent(2, 5));
    EXPECT_TRUE(r.all_pass());
}

TEST(Run, PreconditionErrorsNameNode) {
    auto c = lossless_canonical(Scenario::RemoveEdge);
    c.targets = {2};
    try {
        run(c);
        FAIL();
    } catch (const std::invalid_argument &e) {
        EXPECT_NE(std::string(e.what()).find("node 2"), std::string::npos) << e.what();
    }
    auto p = ExperimentConfig{};
    p.graph = ClusterGraph::linear(5);
    EXPECT_THROW(run(p), std::invalid_argument);
    auto s = lossless_canonical(Scenario::ShortenWire);
    s.targets = {1, 2};
    EXPECT_THROW(run(s), std::invalid_argument);
}

TEST(Run, CompiledMatchesCanonical) {
    auto a = lossless_canonical(Scenario::ShortenWire);
    auto b = a;
    b.construction = Construction::Compiled;
    EXPECT_LT((run(a).final_cov - run(b).final_cov).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Report, DeterministicBytes) {
    ExperimentConfig c;
    c.scenario = Scenario::ShortenWire;
    c.trials = 5000;
    c.seed = 99;
    const auto a = report_to_json(run(c)).dump(2);
    c.threads = 3;
    const auto b = report_to_json(run(c)).dump(2);
    // Thread count is not part of the echoed configuration.
    EXPECT_EQ(a, b);
    const std::string pa = ::testing::TempDir() + "report_a.json";
    const std::string pb = ::testing::TempDir() + "report_b.json";
    emit(run(c), ReportFormat::Json, pa);
    emit(run(c), ReportFormat::Json, pb);
    EXPECT_EQ(read_file(pa), read_file(pb));
    std::remove(pa.c_str());
    std::remove(pb.c_str());
}

TEST(Report, JsonValidatesAndRoundTrips) {
    ExperimentConfig c;
    c.scenario = Scenario::RingRouteCheck;
    c.trials = 1000;
    const auto doc = report_to_json(run(c));
    const auto parsed = nlohmann::json::parse(doc.dump());
    EXPECT_TRUE(validate_report_json(parsed).empty());
    EXPECT_EQ(parsed["schema_version"], kReportSchemaVersion);
    EXPECT_EQ(nlohmann::ordered_json::parse(doc.dump()).dump(), doc.dump());
    auto broken = parsed;
    broken.erase("final");
    broken["schema_version"] = 9;
    EXPECT_EQ(validate_report_json(broken).size(), 2u);
}

TEST(Report, SixSignificantDigits) {
    const auto doc = report_to_json(run(lossless_canonical(Scenario::ShortenWire)));
    EXPECT_EQ(doc["final"]["nullifiers"][0]["variance"].dump(), "0.158114");
    EXPECT_FALSE(doc.contains("wall_time_s"));
}

TEST(Report, CsvColumns) {
    const auto csv = report_to_csv(run(lossless_canonical(Scenario::RemoveEdge)));
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "form,variance,bound,pass,db");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4);
    }
    EXPECT_EQ(rows, 3);
    EXPECT_NE(csv.find("p1-x2,0.0790569,0.5,true,-8.0103"), std::string::npos) << csv;
}

TEST(Report, EmitFailsOnBadPath) {
    EXPECT_THROW(emit(run(lossless_canonical(Scenario::RemoveEdge)), ReportFormat::Csv, "/nonexistent/dir/r.csv"),
                 std::runtime_error);
}
