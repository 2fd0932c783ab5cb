#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "inkwell/dataset_io.hpp"

namespace inkwell {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string err;
};

class Cli {
 public:
  explicit Cli(const std::string& name) : dir_(fs::temp_directory_path() / ("inkwell_cli_" + name)) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  Outcome Run(const std::string& args) const {
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" INKWELL_CLI_PATH "' " + args +
                            " > /dev/null 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.err = fs::exists(err) ? read_text_file(err) : "";
    return o;
  }

  fs::path Path(const std::string& f) const { return dir_ / f; }

 private:
  fs::path dir_;
};

GTEST_TEST(Cli, PipelineOfSubcommands) {
  const Cli cli("pipeline");
  ASSERT_EQ(cli.Run("gen --out data.csv --healthy 12 --faulty 3 --seed 4").code, 0);
  ASSERT_EQ(cli.Run("identify --data data.csv --out model.json --max-signals 6").code, 0);
  ASSERT_EQ(cli.Run("fd design --model model.json --out filter.json").code, 0);
  ASSERT_EQ(cli.Run("fd run --filter filter.json --data data.csv --out res.csv").code, 0);
  const nlohmann::json side = read_json_file(cli.Path("res.csv.json"));
  EXPECT_GT(side.at("threshold").get<double>(), 0.0);
  EXPECT_EQ(side.at("flags").size(), 30u);
  ASSERT_EQ(cli.Run("fi train --residuals res.csv --out t.csv").code, 0);
  ASSERT_EQ(cli.Run("fi run --templates t.csv --data res.csv --report iso.json").code, 0);
  EXPECT_TRUE(read_json_file(cli.Path("iso.json")).contains("isolation"));
  ASSERT_EQ(cli.Run("plot --kind spectra --data res.csv --out spec.csv").code, 0);
  EXPECT_TRUE(fs::exists(cli.Path("spec.csv")));
}

GTEST_TEST(Cli, ConfigErrorsExitWithTwo) {
  const Cli cli("config");
  write_text_file(cli.Path("bad.json"), "{ not json");
  Outcome o = cli.Run("gen --config bad.json --out d.csv");
  EXPECT_EQ(o.code, 2);
  const nlohmann::json line = nlohmann::json::parse(o.err);
  EXPECT_EQ(line.at("exit_code").get<int>(), 2);
  EXPECT_EQ(line.at("stage").get<std::string>(), "config");
  EXPECT_FALSE(line.at("error").get<std::string>().empty());

  EXPECT_EQ(cli.Run("gen").code, 2);
  EXPECT_EQ(cli.Run("fi run --method svm --data x.csv --report r.json").code, 2);
}

GTEST_TEST(Cli, StageFailuresExitWithThree) {
  const Cli cli("stage");
  ASSERT_EQ(cli.Run("gen --out data.csv --healthy 4 --faulty 0").code, 0);
  ASSERT_EQ(cli.Run("identify --data data.csv --out model.json --max-signals 2").code, 0);
  Outcome o = cli.Run("fd design --model model.json --dn 3 --out f.json");
  EXPECT_EQ(o.code, 3);
  const nlohmann::json line = nlohmann::json::parse(o.err);
  EXPECT_EQ(line.at("exit_code").get<int>(), 3);
  EXPECT_EQ(line.at("stage").get<std::string>(), "fd-design");

  o = cli.Run("identify --data missing.csv --out m.json");
  EXPECT_EQ(o.code, 3);
  EXPECT_EQ(nlohmann::json::parse(o.err).at("stage").get<std::string>(), "io");
}

}  // namespace
}  // namespace inkwell
