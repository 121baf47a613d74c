#pragma once

// File formats:
//
//   predictions  JSON lines, one `{"sample_id": "...", "confidences": [...]}`
//                record per line; class identity is the array position.
//   manifest     JSON object with `class_count` and `models[]`, each model
//                carrying `model_id`, `validation_accuracy` and
//                `predictions_path` (relative to the manifest). Unknown keys
//                are kept and written back out untouched.
//   labels       `sample_id,class_index` per line.
//   class names  optional sidecar, one name per line, line i names class i.
//
// Floats are written with 17 significant digits.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "negens/combiner.hpp"
#include "negens/evaluation.hpp"

namespace negens {

using PredictionMap = std::map<std::string, PredictionVector>;

struct ManifestModel {
  std::string model_id;
  double validation_accuracy = 1.0;
  std::string predictions_path;  // as written in the manifest
  nlohmann::json extra = nlohmann::json::object();
};

struct EnsembleManifest {
  std::size_t class_count = 0;
  std::vector<ManifestModel> models;
  std::optional<std::string> class_names_path;
  nlohmann::json extra = nlohmann::json::object();
  // Directory relative paths are resolved against.
  std::filesystem::path base_dir;
  // Set when fewer than three models are listed.
  bool few_models = false;

  std::vector<ModelRecord> records() const;
  std::filesystem::path Resolve(const std::string& relative) const;
};

enum class ReportFormat { kText, kCsv };

std::string FormatDouble(double value);

EnsembleManifest ParseManifest(const std::string& text,
                               const std::filesystem::path& base_dir);
EnsembleManifest LoadManifest(const std::filesystem::path& path);
std::string WriteManifest(const EnsembleManifest& manifest);

PredictionMap ParsePredictions(std::istream& in, std::size_t class_count,
                               const std::string& source = "<stream>");
PredictionMap LoadPredictions(const std::filesystem::path& path,
                              std::size_t class_count);
std::string WriteConfidenceArray(const PredictionVector& vector);
std::string WritePredictionRecord(const std::string& sample_id,
                                  const PredictionVector& vector);
// Records in sample_id order.
std::string WritePredictions(const PredictionMap& predictions);

LabelMap ParseLabels(std::istream& in, const std::string& source = "<stream>");
LabelMap LoadLabels(const std::filesystem::path& path);
std::string WriteLabels(const LabelMap& labels);

std::vector<std::string> LoadClassNames(const std::filesystem::path& path);

// One frame per sample, ordered by sample_id. Samples missing from any map
// are an error listing them. `maps` is index-aligned with `records`.
std::vector<EnsembleFrame> AlignFrames(const std::vector<ModelRecord>& records,
                                       const std::vector<PredictionMap>& maps);

struct LoadedEnsemble {
  EnsembleManifest manifest;
  std::vector<EnsembleFrame> frames;

  const EnsembleFrame& Frame(const std::string& sample_id) const;
};

// Loads the manifest, every prediction file it lists, and aligns them.
LoadedEnsemble LoadEnsemble(const std::filesystem::path& manifest_path);

std::string WriteReport(const ComparisonTable& table, ReportFormat format);

void WriteFile(const std::filesystem::path& path, const std::string& bytes);
std::string ReadFile(const std::filesystem::path& path);

}  // namespace negens
