// Command-line front end: dataset generation, identification, residual
// filter design and evaluation, fault isolation, full experiments and plot
// data.
//
// Exit codes: 0 success, 2 configuration error, 3 stage failure. Failures
// print one JSON object {"error", "stage", "exit_code"} on stderr.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "inkwell/dataset_io.hpp"
#include "inkwell/experiment.hpp"
#include "inkwell/fd_filter.hpp"
#include "inkwell/fi_classifier.hpp"
#include "inkwell/metrics.hpp"
#include "inkwell/plot.hpp"
#include "inkwell/simulator.hpp"
#include "inkwell/sysid.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace inkwell {
namespace {

constexpr int kConfigError = 2;
constexpr int kStageError = 3;

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

// Runs fn, turning any library error into a ConfigError.
template <typename Fn>
auto load_config(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

int fail(const std::string& stage, const std::string& message, int code) {
  std::cerr << json{{"error", message}, {"stage", stage}, {"exit_code", code}}.dump() << std::endl;
  return code;
}

json config_section(const fs::path& path, const char* section) {
  if (path.empty()) return json::object();
  const json j = read_json_file(path);
  if (j.contains(section)) return j.at(section);
  return j;
}

// gen ------------------------------------------------------------------------

struct GenOptions {
  fs::path config;
  fs::path out;
  std::optional<std::uint64_t> seed;
  std::optional<int> healthy;
  std::optional<int> faulty;
  std::optional<double> noise;
};

void run_gen(const GenOptions& o) {
  const GenerationConfig cfg = load_config([&] {
    json j = config_section(o.config, "generation");
    if (!o.config.empty()) {
      const json root = read_json_file(o.config);
      if (root.contains("seeds") && !j.contains("seed")) j["seed"] = root.at("seeds").value("test", 1);
    }
    GenerationConfig c = j.get<GenerationConfig>();
    if (o.seed) c.seed = *o.seed;
    if (o.healthy) c.counts[FaultVariant::Healthy] = *o.healthy;
    if (o.faulty) {
      for (FaultVariant v : kFaultVariants) c.counts[v] = *o.faulty;
    }
    if (o.noise) c.noise_fraction = *o.noise;
    c.validate();
    return c;
  });
  save_dataset(generate_dataset(cfg), o.out);
}

// identify ---------------------------------------------------------------------

struct IdentifyOptions {
  fs::path config;
  fs::path data;
  fs::path out;
  std::optional<std::string> loss;
  std::optional<std::size_t> max_signals;
};

void run_identify(const IdentifyOptions& o) {
  const SysIdConfig cfg = load_config([&] {
    json j = config_section(o.config, "sysid");
    if (o.loss) j["loss"] = *o.loss;
    if (o.max_signals) j["max_signals"] = *o.max_signals;
    return j.get<SysIdConfig>();
  });
  const LabeledDataset ds = load_dataset(o.data);
  const std::vector<Signal> healthy = ds.signals_of(FaultVariant::Healthy);
  if (healthy.empty()) throw ValidationError("dataset has no healthy signals to identify from");
  try {
    write_json_file(o.out, identify(healthy, cfg));
  } catch (const IdentificationError& e) {
    write_json_file(o.out, e.best());
    throw;
  }
}

// fd design / fd run -----------------------------------------------------------

struct FdDesignOptions {
  fs::path config;
  fs::path model;
  fs::path out;
  std::optional<int> order;
  std::optional<double> oscillations;
  std::optional<double> window;
  std::optional<std::string> convention;
};

void run_fd_design(const FdDesignOptions& o) {
  const FilterConfig cfg = load_config([&] {
    json j = config_section(o.config, "filter");
    if (o.order) j["order"] = *o.order;
    if (o.oscillations) j["oscillations"] = *o.oscillations;
    if (o.window) j["window"] = *o.window;
    if (o.convention) j["frequency_convention"] = *o.convention;
    return j.get<FilterConfig>();
  });
  const IdentifiedModel model = load_config([&] { return read_json_file(o.model).get<IdentifiedModel>(); });
  const ResidualFilter f = synthesize_filter(model, cfg);
  for (std::size_t i = 0; i < f.sensitive.size(); ++i) {
    if (!f.sensitive[i]) {
      std::cerr << "warning: filter is blind to fault " << to_string(f.fault_order[i]) << "\n";
    }
  }
  write_json_file(o.out, f);
}

struct FdRunOptions {
  fs::path config;
  fs::path filter;
  fs::path data;
  fs::path calibration;
  fs::path out;
  std::optional<double> mu;
  std::optional<double> threshold;
  std::optional<std::string> statistic;
};

void run_fd_run(const FdRunOptions& o) {
  const FilterConfig cfg = load_config([&] {
    json j = config_section(o.config, "filter");
    if (o.mu) j["mu"] = *o.mu;
    if (o.statistic) j["statistic"] = *o.statistic;
    return j.get<FilterConfig>();
  });
  const ResidualFilter f = load_config([&] { return read_json_file(o.filter).get<ResidualFilter>(); });
  const LabeledDataset ds = load_dataset(o.data);
  const LabeledDataset residuals = residual_dataset(f, ds);

  double threshold = 0.0;
  if (o.threshold) {
    threshold = *o.threshold;
  } else {
    const LabeledDataset calib =
        o.calibration.empty() ? residuals : residual_dataset(f, load_dataset(o.calibration));
    threshold = calibrate_threshold(calib.signals_of(FaultVariant::Healthy), cfg.mu, cfg.statistic);
  }

  json energies = json::array();
  json flags = json::array();
  std::vector<std::pair<bool, bool>> outcomes;
  for (const auto& e : residuals.entries) {
    const double stat = residual_statistic(e.signal, cfg.statistic);
    const DetectionResult d = detect(stat, threshold);
    energies.push_back(stat);
    flags.push_back(d.is_faulty);
    outcomes.emplace_back(e.label != FaultVariant::Healthy, d.is_faulty);
  }
  write_text_file(o.out, dataset_csv(residuals));
  json side{{"threshold", threshold},
            {"mu", cfg.mu},
            {"statistic", cfg.statistic == DetectionStatistic::Energy ? "energy" : "peak"},
            {"filter_digest", filter_digest(f)},
            {"energies", energies},
            {"flags", flags}};
  if (!outcomes.empty()) side["detection"] = to_json(evaluate_detection(outcomes));
  write_json_file(sidecar_path(o.out), side);
}

// fi train / fi run -------------------------------------------------------------

struct FiTrainOptions {
  fs::path residuals;
  fs::path out;
};

void run_fi_train(const FiTrainOptions& o) {
  const LabeledDataset ds = load_dataset(o.residuals);
  const TemplateMatrix t = train_templates(ds);
  write_text_file(o.out, templates_csv(t));
  write_json_file(sidecar_path(o.out), templates_metadata(t));
}

struct FiRunOptions {
  fs::path templates;
  fs::path train;
  fs::path data;
  fs::path report;
  std::string method = "lr";
  int k = 1;
};

void run_fi_run(const FiRunOptions& o) {
  const IsolationMethod method = load_config([&] { return parse_isolation_method(o.method); });
  const LabeledDataset ds = load_dataset(o.data);

  // Flags from `fd run` restrict isolation to detected signals.
  std::vector<bool> flagged(ds.size(), true);
  std::optional<DetectionMetrics> detection;
  const fs::path side = sidecar_path(o.data);
  if (fs::exists(side)) {
    const json j = read_json_file(side);
    if (j.contains("flags")) {
      const auto f = j.at("flags").get<std::vector<bool>>();
      if (f.size() != ds.size()) throw ValidationError("flag count does not match the residual set");
      flagged = f;
      std::vector<std::pair<bool, bool>> outcomes;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        outcomes.emplace_back(ds.entries[i].label != FaultVariant::Healthy, flagged[i]);
      }
      if (!outcomes.empty()) detection = evaluate_detection(outcomes);
    }
  }

  std::function<IsolationResult(const Signal&)> classify;
  TemplateMatrix templates;
  KnnClassifier knn;
  if (method == IsolationMethod::LR) {
    if (o.templates.empty()) throw ConfigError("--templates is required for lr");
    templates = load_config([&] {
      SampleGrid grid;
      const fs::path meta = sidecar_path(o.templates);
      if (fs::exists(meta)) grid = read_json_file(meta).at("grid").get<SampleGrid>();
      const std::string text = read_text_file(o.templates);
      if (!fs::exists(meta) && !ds.entries.empty()) {
        const Signal& s = ds.entries.front().signal;
        grid = {s.t_a, s.dt, static_cast<int>(s.size())};
      }
      return parse_templates_csv(text, grid);
    });
    classify = [&](const Signal& s) { return isolate_lr(templates, s); };
  } else {
    if (o.train.empty()) throw ConfigError("--train is required for knn");
    const LabeledDataset train = load_dataset(o.train);
    std::vector<LabeledSignal> faulty;
    for (const auto& e : train.entries) {
      if (e.label != FaultVariant::Healthy) faulty.push_back(e);
    }
    knn = KnnClassifier(faulty);
    classify = [&](const Signal& s) { return knn.isolate(s, o.k); };
  }

  json predictions = json::array();
  std::vector<std::pair<FaultVariant, FaultVariant>> outcomes;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!flagged[i]) {
      predictions.push_back(nullptr);
      continue;
    }
    const IsolationResult r = classify(ds.entries[i].signal);
    predictions.push_back({{"winner", to_string(r.winner)},
                           {"phi", std::vector<double>(r.phi.data(), r.phi.data() + r.phi.size())}});
    if (ds.entries[i].label != FaultVariant::Healthy) outcomes.emplace_back(ds.entries[i].label, r.winner);
  }
  json report{{"method", to_string(method)}, {"predictions", predictions}};
  if (method == IsolationMethod::KNN) report["k"] = o.k;
  if (!outcomes.empty()) {
    const std::vector<FaultVariant> classes(kFaultVariants.begin(), kFaultVariants.end());
    report["isolation"] = to_json(evaluate_isolation(outcomes, classes));
  }
  if (detection) {
    report["TDR"] = detection->tdr;
    report["FAR"] = detection->far;
  }
  write_json_file(o.report, report);
}

// experiment / plot ----------------------------------------------------------

struct ExperimentOptions {
  fs::path config;
  std::optional<fs::path> out;
  std::optional<std::uint64_t> train_seed, test_seed, isolation_seed;
  std::optional<int> order;
  std::optional<double> oscillations, mu, fraction;
  std::optional<std::string> method, input;
  std::optional<int> k;
};

void run_experiment_cmd(const ExperimentOptions& o) {
  const ExperimentConfig cfg = load_config([&] {
    json j = o.config.empty() ? json::object() : read_json_file(o.config);
    if (o.out) j["output_dir"] = o.out->string();
    if (o.train_seed) j["seeds"]["train"] = *o.train_seed;
    if (o.test_seed) j["seeds"]["test"] = *o.test_seed;
    if (o.isolation_seed) j["seeds"]["isolation"] = *o.isolation_seed;
    if (o.order) j["filter"]["order"] = *o.order;
    if (o.oscillations) j["filter"]["oscillations"] = *o.oscillations;
    if (o.mu) j["filter"]["mu"] = *o.mu;
    if (o.fraction) j["isolation"]["training_fraction"] = *o.fraction;
    if (o.method) j["isolation"]["method"] = *o.method;
    if (o.input) j["isolation"]["input"] = *o.input;
    if (o.k) j["isolation"]["k"] = *o.k;
    return j.get<ExperimentConfig>();
  });
  const ExperimentReport report = run_experiment(cfg);
  const auto& d = report.detection;
  std::cout << "TDR " << d.tdr << "  FAR " << d.far << "\n";
  if (report.primary) {
    std::cout << "HMA (" << to_string(report.primary->method) << ", " << to_string(report.primary->input)
              << ", " << report.primary->training_size << ") " << report.primary->metrics.hma << "\n";
  }
  std::cout << "report: " << (cfg.output_dir / "report.json").string() << "\n";
}

struct PlotCmdOptions {
  std::string kind;
  fs::path data;
  fs::path out;
  bool svg = false;
  std::size_t series = 3;
};

void run_plot(const PlotCmdOptions& o) {
  const PlotKind kind = load_config([&] { return parse_plot_kind(o.kind); });
  PlotOptions opts;
  opts.svg = o.svg;
  opts.series_per_class = o.series;
  emit_plot_data(kind, load_dataset(o.data), o.out, opts);
}

}  // namespace
}  // namespace inkwell

int main(int argc, char** argv) {
  using namespace inkwell;
  CLI::App app{"Ink channel fault detection and isolation"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a labeled dataset");
  gen_cmd->add_option("--config", gen.config, "Generation or experiment config JSON");
  gen_cmd->add_option("--out", gen.out, "Dataset CSV")->required();
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--healthy", gen.healthy, "Healthy signal count");
  gen_cmd->add_option("--faulty", gen.faulty, "Signal count per fault class");
  gen_cmd->add_option("--noise", gen.noise, "Noise sigma as a fraction of the healthy peak");

  IdentifyOptions idf;
  auto* id_cmd = app.add_subcommand("identify", "Identify the healthy model");
  id_cmd->add_option("--config", idf.config);
  id_cmd->add_option("--data", idf.data, "Dataset CSV (healthy rows are used)")->required();
  id_cmd->add_option("--out", idf.out, "Model JSON")->required();
  id_cmd->add_option("--loss", idf.loss, "l1 or squared");
  id_cmd->add_option("--max-signals", idf.max_signals);

  auto* fd_cmd = app.add_subcommand("fd", "Residual filter design and detection");
  fd_cmd->require_subcommand(1);
  FdDesignOptions fdd;
  auto* design_cmd = fd_cmd->add_subcommand("design", "Synthesize the residual filter");
  design_cmd->add_option("--config", fdd.config);
  design_cmd->add_option("--model", fdd.model)->required();
  design_cmd->add_option("--dn", fdd.order, "Filter order d_N");
  design_cmd->add_option("--osc", fdd.oscillations, "Residual oscillations per window");
  design_cmd->add_option("--window", fdd.window, "Window length T [s]");
  design_cmd->add_option("--convention", fdd.convention, "angular or literal");
  design_cmd->add_option("--out", fdd.out, "Filter JSON")->required();
  FdRunOptions fdr;
  auto* run_cmd = fd_cmd->add_subcommand("run", "Compute residuals and detect");
  run_cmd->add_option("--config", fdr.config);
  run_cmd->add_option("--filter", fdr.filter)->required();
  run_cmd->add_option("--data", fdr.data)->required();
  run_cmd->add_option("--calibration", fdr.calibration, "Dataset whose healthy rows set the threshold");
  run_cmd->add_option("--mu", fdr.mu);
  run_cmd->add_option("--threshold", fdr.threshold, "Fixed threshold instead of calibration");
  run_cmd->add_option("--statistic", fdr.statistic, "energy or peak");
  run_cmd->add_option("--out", fdr.out, "Residual CSV")->required();

  auto* fi_cmd = app.add_subcommand("fi", "Fault isolation");
  fi_cmd->require_subcommand(1);
  FiTrainOptions fit;
  auto* train_cmd = fi_cmd->add_subcommand("train", "Average residual templates per class");
  train_cmd->add_option("--residuals", fit.residuals)->required();
  train_cmd->add_option("--out", fit.out, "Template CSV")->required();
  FiRunOptions fir;
  auto* fi_run_cmd = fi_cmd->add_subcommand("run", "Isolate faults");
  fi_run_cmd->add_option("--templates", fir.templates);
  fi_run_cmd->add_option("--train", fir.train, "Labeled corpus for knn");
  fi_run_cmd->add_option("--method", fir.method)->check(CLI::IsMember({"lr", "knn"}));
  fi_run_cmd->add_option("--k", fir.k)->check(CLI::PositiveNumber);
  fi_run_cmd->add_option("--data", fir.data)->required();
  fi_run_cmd->add_option("--report", fir.report)->required();

  ExperimentOptions exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Run the full pipeline and write a report");
  exp_cmd->add_option("--config", exp.config);
  exp_cmd->add_option("--out", exp.out, "Output directory");
  exp_cmd->add_option("--train-seed", exp.train_seed);
  exp_cmd->add_option("--test-seed", exp.test_seed);
  exp_cmd->add_option("--isolation-seed", exp.isolation_seed);
  exp_cmd->add_option("--dn", exp.order);
  exp_cmd->add_option("--osc", exp.oscillations);
  exp_cmd->add_option("--mu", exp.mu);
  exp_cmd->add_option("--fraction", exp.fraction);
  exp_cmd->add_option("--method", exp.method);
  exp_cmd->add_option("--input", exp.input);
  exp_cmd->add_option("--k", exp.k);

  PlotCmdOptions plot;
  auto* plot_cmd = app.add_subcommand("plot", "Emit plot data");
  plot_cmd->add_option("--kind", plot.kind, "signals, residuals or spectra")->required();
  plot_cmd->add_option("--data", plot.data)->required();
  plot_cmd->add_option("--out", plot.out)->required();
  plot_cmd->add_option("--series", plot.series, "Series per class");
  plot_cmd->add_flag("--svg", plot.svg, "Also write one SVG per class");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("config", e.what(), kConfigError);
  }

  try {
    if (*gen_cmd) run_gen(gen);
    else if (*id_cmd) run_identify(idf);
    else if (*design_cmd) run_fd_design(fdd);
    else if (*run_cmd) run_fd_run(fdr);
    else if (*train_cmd) run_fi_train(fit);
    else if (*fi_run_cmd) run_fi_run(fir);
    else if (*exp_cmd) run_experiment_cmd(exp);
    else if (*plot_cmd) run_plot(plot);
  } catch (const ConfigError& e) {
    return fail(e.stage(), e.what(), kConfigError);
  } catch (const Error& e) {
    return fail(e.stage(), e.what(), kStageError);
  } catch (const std::exception& e) {
    return fail("unknown", e.what(), kStageError);
  }
  return EXIT_SUCCESS;
}
