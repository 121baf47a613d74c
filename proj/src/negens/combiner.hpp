#pragma once

// Decision rules for combining the per-class confidences of an ensemble of
// classifiers into a single predicted class.
//
// Every rule produces one score per class. For the negation and product rules
// a *lower* score is better (the score estimates how unlikely the sample is to
// belong to the class); for averaging and top-model a *higher* score is
// better. Scores are meant for ranking only and are not calibrated
// probabilities.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace negens {

// Two scores closer than this are considered tied.
inline constexpr double kTieEpsilon = 1e-12;
// Confidences may overshoot [0, 1] by this much before being rejected.
inline constexpr double kRangeTolerance = 1e-6;

using ClassId = std::size_t;

struct PredictionVector {
  std::vector<double> confidences;

  std::size_t size() const { return confidences.size(); }
  double operator[](std::size_t i) const { return confidences[i]; }
};

struct ModelRecord {
  std::string model_id;
  double validation_accuracy = 1.0;
};

// N prediction vectors for one sample, index-aligned with N model records.
struct EnsembleFrame {
  std::string sample_id;
  std::vector<ModelRecord> models;
  std::vector<PredictionVector> predictions;

  std::size_t model_count() const { return predictions.size(); }
  std::size_t class_count() const {
    return predictions.empty() ? 0 : predictions.front().size();
  }
};

enum class Method { kTopModel, kAverage, kProduct, kNegation };

enum class TiePolicy {
  // Prefer the tied class with the higher mean raw confidence across models,
  // then the lowest class index.
  kMeanConfidence,
  kLowestIndex,
};

struct Decision {
  Method method = Method::kNegation;
  std::vector<double> scores;
  ClassId predicted = 0;
  bool tie_broken = false;
};

// True when lower scores are better for `method`.
bool LowerIsBetter(Method method);

std::string_view MethodName(Method method);
std::optional<Method> ParseMethod(std::string_view name);
std::string_view TiePolicyName(TiePolicy policy);
std::optional<TiePolicy> ParseTiePolicy(std::string_view name);

// Returns `value` clamped into [0, 1] when it lies within kRangeTolerance of
// the interval, otherwise throws a validation error naming `what`.
double ClampConfidence(double value, std::string_view what);

// Probability that the model both is correct and predicts the class:
// confidence * accuracy.
double WeightedConfidence(double confidence, double accuracy);

// Checks frame shape (N >= 1, equal K >= 1, aligned records) and accuracy
// ranges. Throws on violation.
void ValidateFrame(const EnsembleFrame& frame);

// score(C) = max_n (1 - A_n * p_n(C)); predicted = argmin.
Decision CombineNegation(const EnsembleFrame& frame,
                         TiePolicy tie_policy = TiePolicy::kMeanConfidence);

// score(C) = 1 - prod_n (A_n * p_n(C)); predicted = argmin.
Decision CombineProduct(const EnsembleFrame& frame,
                        TiePolicy tie_policy = TiePolicy::kMeanConfidence);

// score(C) = mean_n p_n(C), accuracies ignored; predicted = argmax.
Decision CombineAverage(const EnsembleFrame& frame,
                        TiePolicy tie_policy = TiePolicy::kMeanConfidence);

// Index of the record with the highest validation accuracy, earliest wins ties.
std::size_t TopModelIndex(std::span<const ModelRecord> records);
const std::string& TopModelSelect(std::span<const ModelRecord> records);

// Scores are the top model's own confidences; predicted = argmax.
Decision CombineTopModel(const EnsembleFrame& frame,
                         TiePolicy tie_policy = TiePolicy::kMeanConfidence);

Decision Combine(const EnsembleFrame& frame, Method method,
                 TiePolicy tie_policy = TiePolicy::kMeanConfidence);

// Classes ordered best to worst under the decision's orientation. The first
// element is always decision.predicted.
// Remaining classes follow score order, lowest index first among equals.
std::vector<ClassId> RankClasses(const Decision& decision);

}  // namespace negens
