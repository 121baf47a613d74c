#include "negens/combiner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "negens/error.hpp"

namespace negens {
namespace {

double Clamped(double v) { return std::clamp(v, 0.0, 1.0); }

// Products and sums are taken over the terms in ascending order so that the
// result does not depend on model order.
double CanonicalProduct(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double out = 1.0;
  for (double t : terms) out *= t;
  return out;
}

double CanonicalSum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double out = 0.0;
  for (double t : terms) out += t;
  return out;
}

double MeanConfidence(const EnsembleFrame& frame, ClassId c,
                      std::vector<double>& scratch) {
  scratch.clear();
  for (const auto& p : frame.predictions) scratch.push_back(Clamped(p[c]));
  return CanonicalSum(scratch) / static_cast<double>(frame.model_count());
}

// Picks the best class under the orientation. Classes within kTieEpsilon of
// the extremum form the tie set, resolved by `policy`.
ClassId SelectClass(const std::vector<double>& scores, bool lower_is_better,
                    const EnsembleFrame& frame, TiePolicy policy,
                    bool& tie_broken) {
  const double best =
      lower_is_better ? *std::min_element(scores.begin(), scores.end())
                      : *std::max_element(scores.begin(), scores.end());
  std::vector<ClassId> tied;
  for (ClassId c = 0; c < scores.size(); ++c) {
    if (std::abs(scores[c] - best) <= kTieEpsilon) tied.push_back(c);
  }
  tie_broken = tied.size() > 1;
  if (!tie_broken || policy == TiePolicy::kLowestIndex) return tied.front();

  std::vector<double> scratch;
  std::vector<double> means;
  means.reserve(tied.size());
  for (ClassId c : tied) means.push_back(MeanConfidence(frame, c, scratch));
  const double best_mean = *std::max_element(means.begin(), means.end());
  for (std::size_t i = 0; i < tied.size(); ++i) {
    if (means[i] >= best_mean - kTieEpsilon) return tied[i];
  }
  return tied.front();
}

Decision Finish(Method method, std::vector<double> scores,
                const EnsembleFrame& frame, TiePolicy policy) {
  Decision d;
  d.method = method;
  d.predicted =
      SelectClass(scores, LowerIsBetter(method), frame, policy, d.tie_broken);
  d.scores = std::move(scores);
  return d;
}

}  // namespace

bool LowerIsBetter(Method method) {
  return method == Method::kNegation || method == Method::kProduct;
}

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kTopModel: return "top";
    case Method::kAverage: return "average";
    case Method::kProduct: return "product";
    case Method::kNegation: return "negation";
  }
  return "unknown";
}

std::optional<Method> ParseMethod(std::string_view name) {
  if (name == "top" || name == "top-model") return Method::kTopModel;
  if (name == "average") return Method::kAverage;
  if (name == "product") return Method::kProduct;
  if (name == "negation") return Method::kNegation;
  return std::nullopt;
}

std::string_view TiePolicyName(TiePolicy policy) {
  return policy == TiePolicy::kMeanConfidence ? "mean-conf" : "lowest-index";
}

std::optional<TiePolicy> ParseTiePolicy(std::string_view name) {
  if (name == "mean-conf") return TiePolicy::kMeanConfidence;
  if (name == "lowest-index") return TiePolicy::kLowestIndex;
  return std::nullopt;
}

double ClampConfidence(double value, std::string_view what) {
  if (!(value >= -kRangeTolerance && value <= 1.0 + kRangeTolerance)) {
    std::ostringstream msg;
    msg << what << " out of range [0, 1]: " << value;
    throw ValidationError(msg.str());
  }
  return Clamped(value);
}

double WeightedConfidence(double confidence, double accuracy) {
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    std::ostringstream msg;
    msg << "confidence out of range [0, 1]: " << confidence;
    throw ValidationError(msg.str());
  }
  if (!(accuracy > 0.0 && accuracy <= 1.0)) {
    std::ostringstream msg;
    msg << "accuracy out of range (0, 1]: " << accuracy;
    throw ValidationError(msg.str());
  }
  return confidence * accuracy;
}

void ValidateFrame(const EnsembleFrame& frame) {
  if (frame.predictions.empty()) {
    throw ValidationError("frame '" + frame.sample_id + "' has no models");
  }
  if (frame.models.size() != frame.predictions.size()) {
    std::ostringstream msg;
    msg << "frame '" << frame.sample_id << "' has " << frame.predictions.size()
        << " prediction vectors but " << frame.models.size()
        << " model records";
    throw AlignmentError(msg.str());
  }
  const std::size_t k = frame.class_count();
  if (k == 0) {
    throw ValidationError("frame '" + frame.sample_id + "' has no classes");
  }
  for (std::size_t n = 0; n < frame.model_count(); ++n) {
    const auto& model = frame.models[n];
    if (frame.predictions[n].size() != k) {
      std::ostringstream msg;
      msg << "frame '" << frame.sample_id << "': model '" << model.model_id
          << "' has " << frame.predictions[n].size() << " classes, expected "
          << k;
      throw AlignmentError(msg.str());
    }
    if (!(model.validation_accuracy > 0.0 &&
          model.validation_accuracy <= 1.0)) {
      std::ostringstream msg;
      msg << "model '" << model.model_id
          << "' validation_accuracy out of range (0, 1]: "
          << model.validation_accuracy;
      throw ValidationError(msg.str());
    }
    for (double v : frame.predictions[n].confidences) {
      ClampConfidence(v, "confidence of model '" + model.model_id + "'");
    }
  }
}

Decision CombineNegation(const EnsembleFrame& frame, TiePolicy tie_policy) {
  ValidateFrame(frame);
  std::vector<double> scores(frame.class_count());
  for (ClassId c = 0; c < scores.size(); ++c) {
    double worst = 0.0;
    for (std::size_t n = 0; n < frame.model_count(); ++n) {
      const double weighted = WeightedConfidence(
          Clamped(frame.predictions[n][c]), frame.models[n].validation_accuracy);
      worst = std::max(worst, 1.0 - weighted);
    }
    scores[c] = worst;
  }
  return Finish(Method::kNegation, std::move(scores), frame, tie_policy);
}

Decision CombineProduct(const EnsembleFrame& frame, TiePolicy tie_policy) {
  ValidateFrame(frame);
  std::vector<double> scores(frame.class_count());
  std::vector<double> terms;
  for (ClassId c = 0; c < scores.size(); ++c) {
    terms.clear();
    for (std::size_t n = 0; n < frame.model_count(); ++n) {
      terms.push_back(WeightedConfidence(Clamped(frame.predictions[n][c]),
                                         frame.models[n].validation_accuracy));
    }
    scores[c] = 1.0 - CanonicalProduct(terms);
  }
  return Finish(Method::kProduct, std::move(scores), frame, tie_policy);
}

Decision CombineAverage(const EnsembleFrame& frame, TiePolicy tie_policy) {
  ValidateFrame(frame);
  std::vector<double> scores(frame.class_count());
  std::vector<double> scratch;
  for (ClassId c = 0; c < scores.size(); ++c) {
    scores[c] = MeanConfidence(frame, c, scratch);
  }
  return Finish(Method::kAverage, std::move(scores), frame, tie_policy);
}

std::size_t TopModelIndex(std::span<const ModelRecord> records) {
  if (records.empty()) throw ValidationError("no model records to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].validation_accuracy > records[best].validation_accuracy) {
      best = i;
    }
  }
  return best;
}

const std::string& TopModelSelect(std::span<const ModelRecord> records) {
  return records[TopModelIndex(records)].model_id;
}

Decision CombineTopModel(const EnsembleFrame& frame, TiePolicy tie_policy) {
  ValidateFrame(frame);
  const auto& top = frame.predictions[TopModelIndex(frame.models)];
  std::vector<double> scores(top.size());
  std::transform(top.confidences.begin(), top.confidences.end(),
                 scores.begin(), Clamped);
  return Finish(Method::kTopModel, std::move(scores), frame, tie_policy);
}

Decision Combine(const EnsembleFrame& frame, Method method,
                 TiePolicy tie_policy) {
  switch (method) {
    case Method::kTopModel: return CombineTopModel(frame, tie_policy);
    case Method::kAverage: return CombineAverage(frame, tie_policy);
    case Method::kProduct: return CombineProduct(frame, tie_policy);
    case Method::kNegation: return CombineNegation(frame, tie_policy);
  }
  throw ValidationError("unknown combination method");
}

std::vector<ClassId> RankClasses(const Decision& decision) {
  if (decision.predicted >= decision.scores.size()) {
    throw ValidationError("decision predicted class outside its score vector");
  }
  std::vector<ClassId> order(decision.scores.size());
  std::iota(order.begin(), order.end(), ClassId{0});
  const auto& s = decision.scores;
  if (LowerIsBetter(decision.method)) {
    std::stable_sort(order.begin(), order.end(),
                     [&](ClassId a, ClassId b) { return s[a] < s[b]; });
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&](ClassId a, ClassId b) { return s[a] > s[b]; });
  }
  auto it = std::find(order.begin(), order.end(), decision.predicted);
  std::rotate(order.begin(), it, it + 1);
  return order;
}

}  // namespace negens
