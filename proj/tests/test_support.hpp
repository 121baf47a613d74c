#pragma once

// Shared helpers for the test suites: seeded frame generators and
// brute-force oracles that do not go through the library's scoring code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "negens/combiner.hpp"

namespace negens::testing {

inline double Unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t Between(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

struct FrameShape {
  std::size_t min_models = 1, max_models = 6;
  std::size_t min_classes = 2, max_classes = 257;
  bool strictly_positive = false;
  // Fraction of frames drawn on a coarse 0.1 grid so that exact ties occur.
  double grid_fraction = 0.3;
};

inline EnsembleFrame RandomFrame(std::mt19937_64& rng, const FrameShape& shape = {}) {
  const std::size_t n = Between(rng, shape.min_models, shape.max_models);
  const std::size_t k = Between(rng, shape.min_classes, shape.max_classes);
  const bool grid = Unit(rng) < shape.grid_fraction;
  EnsembleFrame f;
  f.sample_id = "random";
  for (std::size_t i = 0; i < n; ++i) {
    // (0, 1]
    const double acc = grid ? static_cast<double>(Between(rng, 1, 10)) / 10.0
                            : 1.0 - Unit(rng);
    f.models.push_back({"m" + std::to_string(i), acc});
    PredictionVector v;
    for (std::size_t c = 0; c < k; ++c) {
      double p = grid ? static_cast<double>(Between(rng, 0, 10)) / 10.0 : Unit(rng);
      if (shape.strictly_positive && p <= 0.0) p = grid ? 0.1 : 0x1.0p-53;
      v.confidences.push_back(p);
    }
    f.predictions.push_back(std::move(v));
  }
  return f;
}

inline std::vector<EnsembleFrame> RandomCorpus(std::uint64_t seed, std::size_t count,
                                               const FrameShape& shape = {}) {
  std::mt19937_64 rng(seed);
  std::vector<EnsembleFrame> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(RandomFrame(rng, shape));
  return out;
}

// Tie resolution identical in meaning to the library's: classes whose key is
// within 1e-12 of the best form the tie set; the mean-confidence policy then
// keeps those whose mean is within 1e-12 of the best mean; lowest index wins.
inline std::size_t OracleResolve(const std::vector<double>& keys, bool maximize,
                                 const EnsembleFrame& frame, TiePolicy policy) {
  double best = keys[0];
  for (double k : keys) best = maximize ? std::max(best, k) : std::min(best, k);
  std::vector<std::size_t> tied;
  for (std::size_t c = 0; c < keys.size(); ++c) {
    if (std::fabs(keys[c] - best) <= 1e-12) tied.push_back(c);
  }
  if (tied.size() == 1 || policy == TiePolicy::kLowestIndex) return tied[0];
  std::vector<double> means;
  for (std::size_t c : tied) {
    double sum = 0.0;
    for (const auto& p : frame.predictions) sum += p.confidences[c];
    means.push_back(sum / static_cast<double>(frame.predictions.size()));
  }
  double best_mean = means[0];
  for (double m : means) best_mean = std::max(best_mean, m);
  for (std::size_t i = 0; i < tied.size(); ++i) {
    if (means[i] >= best_mean - 1e-12) return tied[i];
  }
  return tied[0];
}

// argmax over classes of min over models of accuracy * confidence.
inline std::size_t OracleNegation(const EnsembleFrame& frame,
                                  TiePolicy policy = TiePolicy::kMeanConfidence) {
  const std::size_t k = frame.predictions[0].confidences.size();
  std::vector<double> least(k);
  for (std::size_t c = 0; c < k; ++c) {
    double m = 1.0;
    for (std::size_t n = 0; n < frame.predictions.size(); ++n) {
      m = std::min(m, frame.models[n].validation_accuracy *
                          frame.predictions[n].confidences[c]);
    }
    least[c] = m;
  }
  return OracleResolve(least, /*maximize=*/true, frame, policy);
}

inline std::size_t PlainArgmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Unique scratch directory under the system temp dir.
inline std::filesystem::path ScratchDir(const std::string& name) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() /
             ("negens-" + name + "-" + std::to_string(rng() % 1000000007ULL));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline EnsembleFrame MakeFrame(std::vector<double> accuracies,
                               std::vector<std::vector<double>> vectors,
                               std::string sample_id = "s") {
  EnsembleFrame f;
  f.sample_id = std::move(sample_id);
  for (std::size_t i = 0; i < accuracies.size(); ++i) {
    f.models.push_back({"m" + std::to_string(i + 1), accuracies[i]});
    f.predictions.push_back({std::move(vectors[i])});
  }
  return f;
}

}  // namespace negens::testing
