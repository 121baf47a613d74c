#pragma once

// Seeded Monte-Carlo stand-in for an ensemble of trained classifiers. Each
// simulated model hits a chosen accuracy, with confidence concentration and
// inter-model error correlation under direct control.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "negens/combiner.hpp"
#include "negens/io_formats.hpp"

namespace negens {

struct ModelProfile {
  double target_accuracy = 0.7;  // (0, 1)
  double sharpness = 2.0;        // > 0; larger concentrates the peak near 1
  double noise_correlation = 0;  // [0, 1]; weight of the shared error source
  // [0, 1]; chance that a wrong prediction keeps the truth as runner-up.
  double truth_runner_up = 1.0;
};

struct SyntheticDataset {
  std::size_t class_count = 0;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  std::vector<ModelProfile> profiles;
  std::vector<std::string> model_ids;
  std::vector<std::string> sample_ids;
  std::vector<ClassId> truth;
  // predictions[model][sample]
  std::vector<std::vector<PredictionVector>> predictions;
  std::vector<double> realized_accuracy;

  LabelMap labels() const;
  std::vector<ModelRecord> records() const;
  // Frames weighted by realized accuracy, in sample order.
  std::vector<EnsembleFrame> frames() const;
};

void ValidateProfile(const ModelProfile& profile);

SyntheticDataset GenerateDataset(const std::vector<ModelProfile>& profiles,
                                 std::size_t class_count,
                                 std::size_t sample_count, std::uint64_t seed);

// Fraction of samples where the model's argmax (lowest index on ties) equals
// the truth.
double MeasureEmpiricalAccuracy(const SyntheticDataset& dataset,
                                std::size_t model_index);

// Writes model-<n>.jsonl per model, labels.csv and manifest.json.
// Returns the manifest path.
std::filesystem::path WriteDataset(const SyntheticDataset& dataset,
                                   const std::filesystem::path& out_dir);

// Counter-based stream: every (seed, stream, index) triple gets its own
// independent sequence, so draws do not depend on generation order.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

  std::uint64_t Next();
  // Uniform on [0, 1).
  double Uniform();
  // Uniform on {0, ..., n - 1}.
  std::size_t Below(std::size_t n);

 private:
  std::uint64_t state_;
};

}  // namespace negens
