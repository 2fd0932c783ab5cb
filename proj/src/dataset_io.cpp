#include "inkwell/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "inkwell/errors.hpp"

namespace inkwell {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '+')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw IoError("cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

void write_dataset_csv(const LabeledDataset& ds, std::ostream& out) {
  const std::size_t n = ds.entries.empty() ? 0 : ds.entries.front().signal.size();
  out << "label,t_a,dt";
  for (std::size_t k = 0; k < n; ++k) out << ",y_" << k;
  out << '\n';
  for (const auto& e : ds.entries) {
    out << to_string(e.label) << ',' << format_double(e.signal.t_a) << ','
        << format_double(e.signal.dt);
    for (double v : e.signal.samples) out << ',' << format_double(v);
    out << '\n';
  }
}

std::string dataset_csv(const LabeledDataset& ds) {
  std::ostringstream os;
  write_dataset_csv(ds, os);
  return os.str();
}

LabeledDataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset CSV is empty");
  if (line.rfind("label,t_a,dt", 0) != 0) throw IoError("dataset CSV has an unexpected header");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  const std::size_t n_samples = columns - 3;

  LabeledDataset ds;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::string_view rest(line);
    auto next_field = [&rest]() {
      const std::size_t comma = rest.find(',');
      std::string_view field = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
      return field;
    };
    LabeledSignal e;
    try {
      e.label = parse_fault_variant(next_field());
      e.signal.t_a = parse_double(next_field());
      e.signal.dt = parse_double(next_field());
      while (!rest.empty()) e.signal.samples.push_back(parse_double(next_field()));
      if (e.signal.samples.size() != n_samples)
        throw IoError("expected " + std::to_string(n_samples) + " samples, got " +
                      std::to_string(e.signal.samples.size()));
      e.signal.validate();
    } catch (const Error& err) {
      throw IoError("dataset CSV row " + std::to_string(row) + ": " + err.what());
    }
    ds.entries.push_back(std::move(e));
  }
  ds.validate();
  return ds;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p += ".json";
  return p;
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& csv) {
  write_text_file(csv, dataset_csv(ds));
  if (!ds.config.is_null()) {
    write_json_file(sidecar_path(csv), nlohmann::json{{"seed", ds.seed},
                                                      {"config_digest", ds.config_digest},
                                                      {"config", ds.config}});
  }
}

LabeledDataset load_dataset(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open " + csv.string());
  LabeledDataset ds = read_dataset_csv(in);
  const auto side = sidecar_path(csv);
  if (std::filesystem::exists(side)) {
    const nlohmann::json j = read_json_file(side);
    ds.seed = j.value("seed", std::uint64_t{0});
    ds.config_digest = j.value("config_digest", std::string());
    if (j.contains("config")) ds.config = j.at("config");
  }
  return ds;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace inkwell
