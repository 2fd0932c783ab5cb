#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "inkwell/simulator.hpp"

namespace inkwell {

// Shortest round-trip decimal form.
std::string format_double(double v);
double parse_double(std::string_view text);

// CSV with header `label,t_a,dt,y_0,...,y_{n-1}` and one row per signal.
void write_dataset_csv(const LabeledDataset& ds, std::ostream& out);
std::string dataset_csv(const LabeledDataset& ds);
LabeledDataset read_dataset_csv(std::istream& in);

// `<csv>.json` next to the CSV.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

// Writes the CSV and, when the dataset carries provenance, the sidecar.
void save_dataset(const LabeledDataset& ds, const std::filesystem::path& csv);
// Reads the CSV and picks up seed and config from the sidecar if present.
LabeledDataset load_dataset(const std::filesystem::path& csv);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace inkwell
