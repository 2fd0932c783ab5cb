#include "inkwell/experiment.hpp"

#include <filesystem>

#include <gtest/gtest.h>

#include "inkwell/dataset_io.hpp"
#include "inkwell/errors.hpp"

namespace inkwell {
namespace {

ExperimentConfig SmallConfig(const std::string& name) {
  ExperimentConfig cfg;
  cfg.generation.counts = {{FaultVariant::Healthy, 40}};
  for (FaultVariant v : kFaultVariants) cfg.generation.counts[v] = 6;
  cfg.sysid.max_signals = 20;
  cfg.sysid.grid_points = 3;
  cfg.isolation.training_size = 60;
  cfg.isolation.grid_fractions = {1.0, 0.5};
  cfg.output_dir = std::filesystem::temp_directory_path() / ("inkwell_exp_" + name);
  std::filesystem::remove_all(cfg.output_dir);
  return cfg;
}

GTEST_TEST(TrainingCount, RoundsUp) {
  EXPECT_EQ(training_count(1.0, 2025), 2025);
  EXPECT_EQ(training_count(0.5, 2025), 1013);
  EXPECT_EQ(training_count(0.1, 2025), 203);
  EXPECT_THROW(training_count(0.0, 10), ValidationError);
  EXPECT_THROW(training_count(1.5, 10), ValidationError);
}

GTEST_TEST(IsolationCorpus, RoundRobinClasses) {
  GenerationConfig g = GenerationConfig::defaults();
  g.grid.n = 20;
  const LabeledDataset ds = generate_isolation_corpus(g, 5, 13);
  ASSERT_EQ(ds.size(), 13u);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(ds.entries[i].label, kFaultVariants[i % 6]);
  EXPECT_EQ(dataset_csv(generate_isolation_corpus(g, 5, 13)), dataset_csv(ds));
}

GTEST_TEST(ExperimentConfig, JsonRoundTrip) {
  ExperimentConfig cfg = SmallConfig("json");
  cfg.isolation.method = IsolationMethod::KNN;
  cfg.isolation.k = 3;
  cfg.filter.order = 6;
  const nlohmann::json j = cfg;
  const ExperimentConfig back = j.get<ExperimentConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(back.digest(), cfg.digest());
  cfg.test_seed += 1;
  EXPECT_NE(back.digest(), cfg.digest());
  EXPECT_THROW((nlohmann::json{{"isolation", {{"k", 0}}}}.get<ExperimentConfig>()), ValidationError);
  EXPECT_THROW(parse_isolation_input("z"), ValidationError);
  EXPECT_EQ(parse_isolation_method("knn"), IsolationMethod::KNN);
  EXPECT_EQ(to_string(IsolationInput::Output), "y");
}

GTEST_TEST(RunExperiment, SmallPipelineWritesArtifacts) {
  const ExperimentConfig cfg = SmallConfig("run");
  const ExperimentReport rep = run_experiment(cfg);
  EXPECT_EQ(rep.detection.counts.total(), 76);
  EXPECT_GT(rep.threshold, 0.0);
  EXPECT_GT(rep.detection.tdr, 0.8);
  ASSERT_TRUE(rep.primary.has_value());
  EXPECT_EQ(rep.cells.size(), 2u * 2u * 2u);
  for (const char* f : {"report.json", "model.json", "filter.json", "train.csv", "test.csv",
                        "residuals.csv", "templates.csv", "detection.json"})
    EXPECT_TRUE(std::filesystem::exists(cfg.output_dir / f)) << f;
  const nlohmann::json j = read_json_file(cfg.output_dir / "report.json");
  EXPECT_EQ(j, rep.to_json());
  EXPECT_EQ(j.at("provenance").at("config_digest").get<std::string>(), cfg.digest());
  EXPECT_EQ(j.at("isolation").at("cells").size(), 8u);
}

}  // namespace
}  // namespace inkwell
