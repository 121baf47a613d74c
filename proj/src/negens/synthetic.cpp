#include "negens/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "negens/error.hpp"

namespace negens {
namespace {

constexpr std::uint64_t kSampleStream = ~std::uint64_t{0};

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string SampleId(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample-%06zu", i);
  return buf;
}

ClassId Argmax(const PredictionVector& v) {
  return static_cast<ClassId>(
      std::max_element(v.confidences.begin(), v.confidences.end()) -
      v.confidences.begin());
}

// One model's vector for one sample: a peak at `target`, the remainder spread
// over the other classes with exchangeable exponential weights. When the peak
// is on a wrong class, the truth takes the largest remainder share with
// probability `truth_runner_up`.
PredictionVector MakeVector(RandomStream& rng, std::size_t k, ClassId target,
                            ClassId truth, const ModelProfile& profile) {
  const double sharpness = profile.sharpness;
  const double floor = 1.0 / static_cast<double>(k);
  const double peak =
      floor + (1.0 - floor) * std::pow(1.0 - rng.Uniform(), 1.0 / sharpness);
  std::vector<double> weights(k, 0.0);
  double total = 0.0;
  for (ClassId c = 0; c < k; ++c) {
    if (c == target) continue;
    weights[c] = -std::log(1.0 - rng.Uniform());
    total += weights[c];
  }
  PredictionVector v;
  v.confidences.assign(k, 0.0);
  for (ClassId c = 0; c < k; ++c) {
    v.confidences[c] =
        c == target ? peak
                    : (total > 0.0 ? (1.0 - peak) * weights[c] / total : 0.0);
  }
  const ClassId top = Argmax(v);
  if (top != target && v[top] >= v[target]) {
    std::swap(v.confidences[top], v.confidences[target]);
  }
  const bool confused = rng.Uniform() < profile.truth_runner_up;
  if (target != truth && confused) {
    ClassId second = truth;
    for (ClassId c = 0; c < k; ++c) {
      if (c != target && v[c] > v[second]) second = c;
    }
    std::swap(v.confidences[second], v.confidences[truth]);
  }
  return v;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t index)
    : state_(SplitMix(SplitMix(SplitMix(seed) ^ stream) ^ index)) {}

std::uint64_t RandomStream::Next() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double RandomStream::Uniform() {
  return static_cast<double>(Next() >> 11) * 0x1.0p-53;
}

std::size_t RandomStream::Below(std::size_t n) {
  return static_cast<std::size_t>(
      (static_cast<unsigned __int128>(Next()) * n) >> 64);
}

void ValidateProfile(const ModelProfile& p) {
  if (!(p.target_accuracy > 0.0 && p.target_accuracy < 1.0)) {
    throw ValidationError("target_accuracy must lie in (0, 1), got " +
                          FormatDouble(p.target_accuracy));
  }
  if (!(p.sharpness > 0.0) || !std::isfinite(p.sharpness)) {
    throw ValidationError("sharpness must be positive, got " +
                          FormatDouble(p.sharpness));
  }
  if (!(p.noise_correlation >= 0.0 && p.noise_correlation <= 1.0)) {
    throw ValidationError("noise_correlation must lie in [0, 1], got " +
                          FormatDouble(p.noise_correlation));
  }
  if (!(p.truth_runner_up >= 0.0 && p.truth_runner_up <= 1.0)) {
    throw ValidationError("truth_runner_up must lie in [0, 1], got " +
                          FormatDouble(p.truth_runner_up));
  }
}

SyntheticDataset GenerateDataset(const std::vector<ModelProfile>& profiles,
                                 std::size_t class_count,
                                 std::size_t sample_count, std::uint64_t seed) {
  if (profiles.empty()) throw ValidationError("at least one model profile required");
  if (class_count < 2) throw ValidationError("class count must be >= 2");
  if (sample_count < 1) throw ValidationError("sample count must be >= 1");
  for (const auto& p : profiles) ValidateProfile(p);

  SyntheticDataset ds;
  ds.class_count = class_count;
  ds.sample_count = sample_count;
  ds.seed = seed;
  ds.profiles = profiles;
  for (std::size_t n = 0; n < profiles.size(); ++n) {
    ds.model_ids.push_back("model-" + std::to_string(n + 1));
  }

  std::vector<double> shared_coin(sample_count);
  for (std::size_t s = 0; s < sample_count; ++s) {
    RandomStream rng(seed, kSampleStream, s);
    ds.sample_ids.push_back(SampleId(s));
    ds.truth.push_back(rng.Below(class_count));
    shared_coin[s] = rng.Uniform();
  }

  ds.predictions.resize(profiles.size());
  for (std::size_t n = 0; n < profiles.size(); ++n) {
    const auto& p = profiles[n];
    auto& out = ds.predictions[n];
    out.reserve(sample_count);
    for (std::size_t s = 0; s < sample_count; ++s) {
      RandomStream rng(seed, n, s);
      const bool use_shared = rng.Uniform() < p.noise_correlation;
      const double private_coin = rng.Uniform();
      const double coin = use_shared ? shared_coin[s] : private_coin;
      ClassId target = ds.truth[s];
      if (coin >= p.target_accuracy) {
        ClassId wrong = rng.Below(class_count - 1);
        target = wrong >= ds.truth[s] ? wrong + 1 : wrong;
      }
      out.push_back(MakeVector(rng, class_count, target, ds.truth[s], p));
    }
  }
  for (std::size_t n = 0; n < profiles.size(); ++n) {
    ds.realized_accuracy.push_back(MeasureEmpiricalAccuracy(ds, n));
  }
  return ds;
}

double MeasureEmpiricalAccuracy(const SyntheticDataset& dataset,
                                std::size_t model_index) {
  if (model_index >= dataset.predictions.size()) {
    throw ValidationError("model index " + std::to_string(model_index) +
                          " out of range");
  }
  const auto& preds = dataset.predictions[model_index];
  if (preds.empty() || preds.size() != dataset.truth.size()) {
    throw ValidationError("dataset has no samples for model " +
                          std::to_string(model_index));
  }
  std::size_t hits = 0;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    if (Argmax(preds[s]) == dataset.truth[s]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

LabelMap SyntheticDataset::labels() const {
  LabelMap out;
  for (std::size_t s = 0; s < sample_ids.size(); ++s) out[sample_ids[s]] = truth[s];
  return out;
}

std::vector<ModelRecord> SyntheticDataset::records() const {
  std::vector<ModelRecord> out;
  for (std::size_t n = 0; n < model_ids.size(); ++n) {
    out.push_back({model_ids[n], realized_accuracy[n]});
  }
  return out;
}

std::vector<EnsembleFrame> SyntheticDataset::frames() const {
  const auto recs = records();
  std::vector<EnsembleFrame> out;
  out.reserve(sample_ids.size());
  for (std::size_t s = 0; s < sample_ids.size(); ++s) {
    EnsembleFrame f;
    f.sample_id = sample_ids[s];
    f.models = recs;
    for (const auto& model : predictions) f.predictions.push_back(model[s]);
    out.push_back(std::move(f));
  }
  return out;
}

std::filesystem::path WriteDataset(const SyntheticDataset& dataset,
                                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  EnsembleManifest manifest;
  manifest.class_count = dataset.class_count;
  manifest.extra["generator"] = "synthetic";
  manifest.extra["seed"] = dataset.seed;
  manifest.extra["sample_count"] = dataset.sample_count;
  for (std::size_t n = 0; n < dataset.model_ids.size(); ++n) {
    if (!(dataset.realized_accuracy[n] > 0.0)) {
      throw ValidationError("model '" + dataset.model_ids[n] +
                            "' realized accuracy 0; cannot weight it");
    }
    ManifestModel m;
    m.model_id = dataset.model_ids[n];
    m.validation_accuracy = dataset.realized_accuracy[n];
    m.predictions_path = m.model_id + ".jsonl";
    m.extra["target_accuracy"] = dataset.profiles[n].target_accuracy;
    m.extra["sharpness"] = dataset.profiles[n].sharpness;
    m.extra["noise_correlation"] = dataset.profiles[n].noise_correlation;
    m.extra["truth_runner_up"] = dataset.profiles[n].truth_runner_up;

    std::string body;
    for (std::size_t s = 0; s < dataset.sample_ids.size(); ++s) {
      body += WritePredictionRecord(dataset.sample_ids[s],
                                    dataset.predictions[n][s]);
      body += '\n';
    }
    WriteFile(out_dir / m.predictions_path, body);
    manifest.models.push_back(std::move(m));
  }
  WriteFile(out_dir / "labels.csv", WriteLabels(dataset.labels()));
  const auto manifest_path = out_dir / "manifest.json";
  WriteFile(manifest_path, WriteManifest(manifest));
  return manifest_path;
}

}  // namespace negens
