#include "negens/io_formats.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "negens/error.hpp"

namespace negens {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string Where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

const json& Require(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(ctx + "missing field '" + key + "'");
  }
  return *it;
}

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

const char* MethodLabel(Method m) {
  switch (m) {
    case Method::kTopModel: return "Top Performing Model";
    case Method::kAverage: return "Averaging Prediction";
    case Method::kProduct: return "Product Rule";
    case Method::kNegation: return "Negation Rule";
  }
  return "?";
}

std::string Percent(const AccuracyReport& r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f",
                100.0 * static_cast<double>(r.matches) /
                    static_cast<double>(r.total));
  return buf;
}

}  // namespace

std::string FormatDouble(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::vector<ModelRecord> EnsembleManifest::records() const {
  std::vector<ModelRecord> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back({m.model_id, m.validation_accuracy});
  return out;
}

fs::path EnsembleManifest::Resolve(const std::string& relative) const {
  fs::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

EnsembleManifest ParseManifest(const std::string& text,
                               const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("manifest: top level must be an object");

  EnsembleManifest m;
  m.base_dir = base_dir;
  const auto& k = Require(doc, "class_count", "manifest: ");
  if (!k.is_number_integer() || k.get<long long>() < 2) {
    throw ValidationError("manifest: class_count must be an integer >= 2");
  }
  m.class_count = k.get<std::size_t>();

  const auto& models = Require(doc, "models", "manifest: ");
  if (!models.is_array() || models.empty()) {
    throw ValidationError("manifest: models must be a nonempty array");
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& entry = models[i];
    const std::string ctx = "manifest: models[" + std::to_string(i) + "]: ";
    if (!entry.is_object()) throw ParseError(ctx + "must be an object");
    ManifestModel model;
    const auto& id = Require(entry, "model_id", ctx);
    const auto& acc = Require(entry, "validation_accuracy", ctx);
    const auto& path = Require(entry, "predictions_path", ctx);
    if (!id.is_string()) throw ParseError(ctx + "model_id must be a string");
    if (!acc.is_number()) {
      throw ParseError(ctx + "validation_accuracy must be a number");
    }
    if (!path.is_string()) {
      throw ParseError(ctx + "predictions_path must be a string");
    }
    model.model_id = id.get<std::string>();
    model.validation_accuracy = acc.get<double>();
    model.predictions_path = path.get<std::string>();
    if (!(model.validation_accuracy > 0.0 && model.validation_accuracy <= 1.0)) {
      throw ValidationError(ctx + "validation_accuracy of '" + model.model_id +
                            "' out of range (0, 1]: " +
                            FormatDouble(model.validation_accuracy));
    }
    if (!ids.insert(model.model_id).second) {
      throw ValidationError(ctx + "duplicate model_id '" + model.model_id + "'");
    }
    for (auto it = entry.begin(); it != entry.end(); ++it) {
      if (it.key() != "model_id" && it.key() != "validation_accuracy" &&
          it.key() != "predictions_path") {
        model.extra[it.key()] = it.value();
      }
    }
    m.models.push_back(std::move(model));
  }
  if (auto it = doc.find("class_names_path"); it != doc.end()) {
    if (!it->is_string()) {
      throw ParseError("manifest: class_names_path must be a string");
    }
    m.class_names_path = it->get<std::string>();
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "class_count" && it.key() != "models" &&
        it.key() != "class_names_path") {
      m.extra[it.key()] = it.value();
    }
  }
  m.few_models = m.models.size() < 3;
  return m;
}

EnsembleManifest LoadManifest(const fs::path& path) {
  auto m = ParseManifest(ReadFile(path), path.parent_path());
  for (const auto& model : m.models) {
    if (!fs::exists(m.Resolve(model.predictions_path))) {
      throw Error(ErrorKind::kIo, "manifest: predictions of '" +
                                      model.model_id + "' not found at " +
                                      m.Resolve(model.predictions_path).string());
    }
  }
  return m;
}

std::string WriteManifest(const EnsembleManifest& manifest) {
  std::ostringstream out;
  out << "{\n  \"class_count\": " << manifest.class_count << ",\n";
  if (manifest.class_names_path) {
    out << "  \"class_names_path\": " << json(*manifest.class_names_path).dump()
        << ",\n";
  }
  for (auto it = manifest.extra.begin(); it != manifest.extra.end(); ++it) {
    out << "  " << json(it.key()).dump() << ": " << it.value().dump() << ",\n";
  }
  out << "  \"models\": [";
  for (std::size_t i = 0; i < manifest.models.size(); ++i) {
    const auto& m = manifest.models[i];
    out << (i ? ",\n" : "\n") << "    {\"model_id\": " << json(m.model_id).dump()
        << ", \"validation_accuracy\": " << FormatDouble(m.validation_accuracy)
        << ", \"predictions_path\": " << json(m.predictions_path).dump();
    for (auto e = m.extra.begin(); e != m.extra.end(); ++e) {
      out << ", " << json(e.key()).dump() << ": " << e.value().dump();
    }
    out << "}";
  }
  out << "\n  ]\n}\n";
  return out.str();
}

PredictionMap ParsePredictions(std::istream& in, std::size_t class_count,
                               const std::string& source) {
  PredictionMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (Trim(line).empty()) continue;
    const std::string where = Where(source, lineno);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + e.what());
    }
    if (!rec.is_object()) throw ParseError(where + "record must be an object");
    const auto& id = Require(rec, "sample_id", where);
    const auto& conf = Require(rec, "confidences", where);
    if (!id.is_string()) throw ParseError(where + "sample_id must be a string");
    if (!conf.is_array()) {
      throw ParseError(where + "confidences must be an array");
    }
    if (conf.size() != class_count) {
      throw ParseError(where + "expected " + std::to_string(class_count) +
                       " confidences, got " + std::to_string(conf.size()));
    }
    PredictionVector v;
    v.confidences.reserve(class_count);
    for (std::size_t c = 0; c < conf.size(); ++c) {
      if (!conf[c].is_number()) {
        throw ParseError(where + "confidence " + std::to_string(c) +
                         " is not a number");
      }
      v.confidences.push_back(ClampConfidence(
          conf[c].get<double>(), where + "confidence " + std::to_string(c)));
    }
    auto sample_id = id.get<std::string>();
    if (!out.emplace(sample_id, std::move(v)).second) {
      throw ValidationError(where + "duplicate sample_id '" + sample_id + "'");
    }
  }
  return out;
}

PredictionMap LoadPredictions(const fs::path& path, std::size_t class_count) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return ParsePredictions(in, class_count, path.string());
}

std::string WriteConfidenceArray(const PredictionVector& vector) {
  std::string out = "[";
  for (std::size_t c = 0; c < vector.size(); ++c) {
    if (c) out += ", ";
    out += FormatDouble(vector[c]);
  }
  out += "]";
  return out;
}

std::string WritePredictionRecord(const std::string& sample_id,
                                  const PredictionVector& vector) {
  return "{\"sample_id\": " + json(sample_id).dump() +
         ", \"confidences\": " + WriteConfidenceArray(vector) + "}";
}

std::string WritePredictions(const PredictionMap& predictions) {
  std::string out;
  for (const auto& [id, vec] : predictions) {
    out += WritePredictionRecord(id, vec);
    out += '\n';
  }
  return out;
}

LabelMap ParseLabels(std::istream& in, const std::string& source) {
  LabelMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string trimmed = Trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const std::string where = Where(source, lineno);
    const auto comma = trimmed.rfind(',');
    if (comma == std::string::npos) {
      throw ParseError(where + "expected 'sample_id,class_index'");
    }
    const std::string id = Trim(std::string_view(trimmed).substr(0, comma));
    const std::string idx = Trim(std::string_view(trimmed).substr(comma + 1));
    ClassId truth = 0;
    auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), truth);
    if (id.empty() || idx.empty() || ec != std::errc() ||
        ptr != idx.data() + idx.size()) {
      throw ParseError(where + "invalid label line '" + trimmed + "'");
    }
    if (!out.emplace(id, truth).second) {
      throw ValidationError(where + "duplicate sample_id '" + id + "'");
    }
  }
  return out;
}

LabelMap LoadLabels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return ParseLabels(in, path.string());
}

std::string WriteLabels(const LabelMap& labels) {
  std::string out;
  for (const auto& [id, truth] : labels) {
    out += id + "," + std::to_string(truth) + "\n";
  }
  return out;
}

std::vector<std::string> LoadClassNames(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    names.push_back(line);
  }
  return names;
}

std::vector<EnsembleFrame> AlignFrames(const std::vector<ModelRecord>& records,
                                       const std::vector<PredictionMap>& maps) {
  if (records.empty()) throw ValidationError("no models to align");
  if (records.size() != maps.size()) {
    throw AlignmentError("model record count differs from prediction map count");
  }
  std::optional<std::size_t> k;
  for (std::size_t n = 0; n < maps.size(); ++n) {
    for (const auto& [id, v] : maps[n]) {
      if (!k) k = v.size();
      if (v.size() != *k) {
        throw AlignmentError("model '" + records[n].model_id + "' sample '" +
                             id + "' has " + std::to_string(v.size()) +
                             " classes, expected " + std::to_string(*k));
      }
    }
  }

  std::set<std::string> all;
  for (const auto& m : maps) {
    for (const auto& entry : m) all.insert(entry.first);
  }
  if (all.empty()) throw ValidationError("no samples present in any model");

  std::vector<std::string> missing;
  for (const auto& id : all) {
    for (std::size_t n = 0; n < maps.size(); ++n) {
      if (!maps[n].count(id)) {
        missing.push_back("'" + id + "' (model '" + records[n].model_id + "')");
      }
    }
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "samples missing from some models:";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) {
      msg << " " << missing[i];
    }
    if (missing.size() > 10) msg << " ... (" << missing.size() << " total)";
    throw AlignmentError(msg.str());
  }

  std::vector<EnsembleFrame> frames;
  frames.reserve(all.size());
  for (const auto& id : all) {
    EnsembleFrame f;
    f.sample_id = id;
    f.models = records;
    for (const auto& m : maps) f.predictions.push_back(m.at(id));
    frames.push_back(std::move(f));
  }
  return frames;
}

const EnsembleFrame& LoadedEnsemble::Frame(const std::string& sample_id) const {
  auto it = std::lower_bound(
      frames.begin(), frames.end(), sample_id,
      [](const EnsembleFrame& f, const std::string& id) { return f.sample_id < id; });
  if (it == frames.end() || it->sample_id != sample_id) {
    throw Error(ErrorKind::kNotFound, "unknown sample_id '" + sample_id + "'");
  }
  return *it;
}

LoadedEnsemble LoadEnsemble(const fs::path& manifest_path) {
  LoadedEnsemble out;
  out.manifest = LoadManifest(manifest_path);
  std::vector<PredictionMap> maps;
  for (const auto& m : out.manifest.models) {
    maps.push_back(LoadPredictions(out.manifest.Resolve(m.predictions_path),
                                   out.manifest.class_count));
  }
  out.frames = AlignFrames(out.manifest.records(), maps);
  return out;
}

std::string WriteReport(const ComparisonTable& table, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    out << "method,matches,total,accuracy_pct\n";
    for (const auto& r : table.rows) {
      out << MethodName(r.method) << ',' << r.matches << ',' << r.total << ','
          << Percent(r) << '\n';
    }
    return out.str();
  }
  out << std::left << std::setw(22) << "Methodology" << std::right
      << std::setw(9) << "Matches" << std::setw(8) << "Total"
      << std::setw(18) << "Performance (%)" << '\n';
  out << std::string(57, '-') << '\n';
  for (const auto& r : table.rows) {
    out << std::left << std::setw(22) << MethodLabel(r.method) << std::right
        << std::setw(9) << r.matches << std::setw(8) << r.total
        << std::setw(18) << Percent(r) << '\n';
  }
  return out.str();
}

void WriteFile(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace negens
