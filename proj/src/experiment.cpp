#include "inkwell/experiment.hpp"

#include <cmath>
#include <functional>

#include "inkwell/dataset_io.hpp"
#include "inkwell/digest.hpp"

namespace inkwell {

std::string_view to_string(IsolationInput i) { return i == IsolationInput::Residual ? "r" : "y"; }
std::string_view to_string(IsolationMethod m) { return m == IsolationMethod::LR ? "lr" : "knn"; }

IsolationInput parse_isolation_input(std::string_view s) {
  if (s == "r") return IsolationInput::Residual;
  if (s == "y") return IsolationInput::Output;
  throw ValidationError("isolation input must be r or y");
}

IsolationMethod parse_isolation_method(std::string_view s) {
  if (s == "lr") return IsolationMethod::LR;
  if (s == "knn") return IsolationMethod::KNN;
  throw ValidationError("isolation method must be lr or knn");
}

void IsolationConfig::validate() const {
  auto fraction_ok = [](double f) { return f > 0.0 && f <= 1.0; };
  if (!fraction_ok(training_fraction)) throw ValidationError("training fraction must lie in (0, 1]");
  for (double f : grid_fractions) {
    if (!fraction_ok(f)) throw ValidationError("training fractions must lie in (0, 1]");
  }
  if (k < 1) throw ValidationError("k must be >= 1");
  if (training_size < 0) throw ValidationError("isolation training size must be >= 0");
}

void ExperimentConfig::validate() const {
  generation.validate();
  filter.validate();
  isolation.validate();
  if (output_dir.empty()) throw ValidationError("output_dir must be set");
}

std::string ExperimentConfig::digest() const {
  nlohmann::json j = *this;
  j.erase("output_dir");
  return sha256_hex(j.dump());
}

void to_json(nlohmann::json& j, const IsolationConfig& c) {
  std::vector<std::string> methods, inputs;
  for (auto m : c.grid_methods) methods.emplace_back(to_string(m));
  for (auto i : c.grid_inputs) inputs.emplace_back(to_string(i));
  j = nlohmann::json{{"method", to_string(c.method)},
                     {"k", c.k},
                     {"input", to_string(c.input)},
                     {"training_fraction", c.training_fraction},
                     {"training_size", c.training_size},
                     {"grid", {{"methods", methods}, {"inputs", inputs}, {"fractions", c.grid_fractions}}}};
}

void from_json(const nlohmann::json& j, IsolationConfig& c) {
  c = IsolationConfig{};
  c.method = parse_isolation_method(j.value("method", std::string(to_string(c.method))));
  c.k = j.value("k", c.k);
  c.input = parse_isolation_input(j.value("input", std::string(to_string(c.input))));
  c.training_fraction = j.value("training_fraction", c.training_fraction);
  c.training_size = j.value("training_size", c.training_size);
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (g.contains("methods")) {
      c.grid_methods.clear();
      for (const auto& m : g.at("methods")) c.grid_methods.push_back(parse_isolation_method(m.get<std::string>()));
    }
    if (g.contains("inputs")) {
      c.grid_inputs.clear();
      for (const auto& i : g.at("inputs")) c.grid_inputs.push_back(parse_isolation_input(i.get<std::string>()));
    }
    if (g.contains("fractions")) c.grid_fractions = g.at("fractions").get<std::vector<double>>();
  }
  c.validate();
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  nlohmann::json gen = c.generation;
  gen.erase("seed");
  j = nlohmann::json{{"generation", gen},
                     {"seeds", {{"train", c.train_seed}, {"test", c.test_seed}, {"isolation", c.isolation_seed}}},
                     {"sysid", c.sysid},
                     {"filter", c.filter},
                     {"isolation", c.isolation},
                     {"output_dir", c.output_dir.string()}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  if (j.contains("generation")) c.generation = j.at("generation").get<GenerationConfig>();
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    c.train_seed = s.value("train", c.train_seed);
    c.test_seed = s.value("test", c.test_seed);
    c.isolation_seed = s.value("isolation", c.isolation_seed);
  }
  if (j.contains("sysid")) c.sysid = j.at("sysid").get<SysIdConfig>();
  if (j.contains("filter")) c.filter = j.at("filter").get<FilterConfig>();
  if (j.contains("isolation")) c.isolation = j.at("isolation").get<IsolationConfig>();
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  c.validate();
}

int training_count(double fraction, int size) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("training fraction must be in (0, 1]");
  if (size < 0) throw ValidationError("training size must be non-negative");
  return static_cast<int>(std::ceil(fraction * size - 1e-9));
}

LabeledDataset generate_isolation_corpus(const GenerationConfig& base, std::uint64_t seed, int size) {
  GenerationConfig cfg = base;
  cfg.seed = seed;
  cfg.counts.clear();
  for (FaultVariant v : kFaultVariants) cfg.counts[v] = 0;
  cfg.validate();
  for (FaultVariant v : kFaultVariants) {
    if (!cfg.faults.count(v)) throw ValidationError("isolation corpus needs factors for every fault");
    cfg.faults.at(v).validate();
  }
  LabeledDataset ds;
  ds.seed = seed;
  nlohmann::json provenance = cfg;
  provenance["round_robin_size"] = size;
  ds.config = provenance;
  ds.config_digest = sha256_hex(provenance.dump());
  for (int i = 0; i < size; ++i) {
    const FaultVariant label = kFaultVariants[static_cast<std::size_t>(i) % kFaultVariants.size()];
    ds.entries.push_back(generate_entry(cfg, label, static_cast<std::size_t>(i)));
  }
  return ds;
}

LabeledDataset residual_dataset(const ResidualFilter& f, const LabeledDataset& ds) {
  LabeledDataset out;
  out.seed = ds.seed;
  out.config_digest = ds.config_digest;
  out.entries.reserve(ds.size());
  for (const auto& e : ds.entries) out.entries.push_back({compute_residual(f, e.signal), e.label});
  return out;
}

nlohmann::json ExperimentReport::to_json() const {
  auto cell_json = [](const IsolationCell& c) {
    nlohmann::json j = inkwell::to_json(c.metrics);
    j["training_fraction"] = c.training_fraction;
    j["training_size"] = c.training_size;
    j["input"] = to_string(c.input);
    j["method"] = to_string(c.method);
    return j;
  };
  nlohmann::json detection = inkwell::to_json(this->detection);
  detection["threshold"] = threshold;
  nlohmann::json isolation;
  if (!isolation_skipped.empty()) {
    isolation = {{"skipped", isolation_skipped}};
  } else {
    nlohmann::json cells_json = nlohmann::json::array();
    for (const auto& c : cells) cells_json.push_back(cell_json(c));
    isolation = {{"primary", primary ? cell_json(*primary) : nlohmann::json()}, {"cells", cells_json}};
  }
  return nlohmann::json{{"detection", detection}, {"isolation", isolation}, {"provenance", provenance}};
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.stage() == name) throw;
    throw Error(name, e.what());
  } catch (const std::exception& e) {
    throw Error(name, e.what());
  }
}

IsolationMetrics run_cell(const LabeledDataset& corpus_r, const LabeledDataset& corpus_y,
                          const std::vector<std::pair<Signal, Signal>>& queries,
                          const std::vector<FaultVariant>& truth, int count, IsolationInput input,
                          IsolationMethod method, int k) {
  const LabeledDataset& corpus = input == IsolationInput::Residual ? corpus_r : corpus_y;
  const std::vector<LabeledSignal> train(corpus.entries.begin(), corpus.entries.begin() + count);
  std::vector<std::pair<FaultVariant, FaultVariant>> outcomes;
  if (method == IsolationMethod::LR) {
    LabeledDataset subset;
    subset.entries = train;
    const TemplateMatrix t = train_templates(subset);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const Signal& q = input == IsolationInput::Residual ? queries[i].first : queries[i].second;
      outcomes.emplace_back(truth[i], isolate_lr(t, q).winner);
    }
  } else {
    const KnnClassifier knn(train);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const Signal& q = input == IsolationInput::Residual ? queries[i].first : queries[i].second;
      outcomes.emplace_back(truth[i], knn.isolate(q, std::min<int>(k, count)).winner);
    }
  }
  const std::vector<FaultVariant> classes(kFaultVariants.begin(), kFaultVariants.end());
  return evaluate_isolation(outcomes, classes);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  stage("config", [&] {
    cfg.validate();
    return 0;
  });
  const auto& dir = cfg.output_dir;
  ExperimentReport report;

  GenerationConfig train_cfg = cfg.generation;
  train_cfg.seed = cfg.train_seed;
  GenerationConfig test_cfg = cfg.generation;
  test_cfg.seed = cfg.test_seed;

  const LabeledDataset train = stage("generate", [&] {
    LabeledDataset ds = generate_dataset(train_cfg);
    save_dataset(ds, dir / "train.csv");
    return ds;
  });
  const LabeledDataset test = stage("generate", [&] {
    LabeledDataset ds = generate_dataset(test_cfg);
    save_dataset(ds, dir / "test.csv");
    return ds;
  });

  const std::vector<Signal> healthy_train = train.signals_of(FaultVariant::Healthy);
  const IdentifiedModel model = stage("identify", [&] {
    if (healthy_train.empty()) throw ValidationError("training set has no healthy signals");
    try {
      IdentifiedModel m = identify(healthy_train, cfg.sysid);
      write_json_file(dir / "model.json", m);
      return m;
    } catch (const IdentificationError& e) {
      write_json_file(dir / "model.json", e.best());
      throw;
    }
  });

  const ResidualFilter filter = stage("fd-design", [&] {
    ResidualFilter f = synthesize_filter(model, cfg.filter);
    write_json_file(dir / "filter.json", f);
    return f;
  });

  std::vector<Signal> healthy_residuals;
  report.threshold = stage("fd-run", [&] {
    for (const Signal& s : healthy_train) healthy_residuals.push_back(compute_residual(filter, s));
    return calibrate_threshold(healthy_residuals, cfg.filter.mu, cfg.filter.statistic);
  });

  const LabeledDataset test_residuals = stage("fd-run", [&] {
    LabeledDataset r = residual_dataset(filter, test);
    save_dataset(r, dir / "residuals.csv");
    return r;
  });

  std::vector<std::pair<Signal, Signal>> queries;  // (residual, output)
  std::vector<FaultVariant> truth;
  stage("fd-run", [&] {
    std::vector<std::pair<bool, bool>> outcomes;
    nlohmann::json flags = nlohmann::json::array();
    for (std::size_t i = 0; i < test.size(); ++i) {
      const Signal& r = test_residuals.entries[i].signal;
      const DetectionResult d = detect(residual_statistic(r, cfg.filter.statistic), report.threshold);
      const bool faulty = test.entries[i].label != FaultVariant::Healthy;
      outcomes.emplace_back(faulty, d.is_faulty);
      flags.push_back(d.is_faulty);
      if (faulty && d.is_faulty) {
        queries.emplace_back(r, test.entries[i].signal);
        truth.push_back(test.entries[i].label);
      }
    }
    if (!outcomes.empty()) report.detection = evaluate_detection(outcomes);
    write_json_file(dir / "detection.json", {{"threshold", report.threshold}, {"flags", flags}});
    return 0;
  });

  if (queries.empty()) {
    report.isolation_skipped = "no faulty signals were flagged";
  } else if (cfg.isolation.training_size == 0) {
    report.isolation_skipped = "isolation training size is 0";
  } else {
    stage("isolate", [&] {
      const LabeledDataset corpus_y =
          generate_isolation_corpus(cfg.generation, cfg.isolation_seed, cfg.isolation.training_size);
      save_dataset(corpus_y, dir / "isolation_train.csv");
      const LabeledDataset corpus_r = residual_dataset(filter, corpus_y);
      save_dataset(corpus_r, dir / "isolation_train_residuals.csv");

      const int size = cfg.isolation.training_size;
      for (double fraction : cfg.isolation.grid_fractions) {
        const int count = training_count(fraction, size);
        for (IsolationInput input : cfg.isolation.grid_inputs) {
          for (IsolationMethod method : cfg.isolation.grid_methods) {
            report.cells.push_back({fraction, count, input, method,
                                    run_cell(corpus_r, corpus_y, queries, truth, count, input,
                                             method, cfg.isolation.k)});
          }
        }
      }
      for (const auto& c : report.cells) {
        if (c.training_fraction == cfg.isolation.training_fraction && c.input == cfg.isolation.input &&
            c.method == cfg.isolation.method) {
          report.primary = c;
        }
      }
      if (!report.primary) {
        const int count = training_count(cfg.isolation.training_fraction, size);
        report.primary = IsolationCell{
            cfg.isolation.training_fraction, count, cfg.isolation.input, cfg.isolation.method,
            run_cell(corpus_r, corpus_y, queries, truth, count, cfg.isolation.input,
                     cfg.isolation.method, cfg.isolation.k)};
      }
      const TemplateMatrix t = train_templates(corpus_r);
      write_text_file(dir / "templates.csv", templates_csv(t));
      write_json_file(dir / "templates.csv.json", templates_metadata(t));
      return 0;
    });
  }

  std::vector<std::string> sensitive;
  for (std::size_t i = 0; i < filter.fault_order.size(); ++i) {
    if (i < filter.sensitive.size() && !filter.sensitive[i]) {
      sensitive.emplace_back(to_string(filter.fault_order[i]));
    }
  }
  report.provenance = {{"config_digest", cfg.digest()},
                       {"filter_digest", filter_digest(filter)},
                       {"seeds", {{"train", cfg.train_seed}, {"test", cfg.test_seed}, {"isolation", cfg.isolation_seed}}},
                       {"train_digest", train.config_digest},
                       {"test_digest", test.config_digest},
                       {"model", model},
                       {"null_dimension", filter.polys.null_dimension},
                       {"insensitive_faults", sensitive}};
  stage("report", [&] {
    write_json_file(dir / "report.json", report.to_json());
    return 0;
  });
  return report;
}

}  // namespace inkwell
