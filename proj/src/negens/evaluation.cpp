#include "negens/evaluation.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "negens/error.hpp"

namespace negens {
namespace {

void CheckCoverage(std::span<const EnsembleFrame> frames,
                   const LabelMap& labels) {
  if (frames.empty()) throw ValidationError("no frames to evaluate");
  std::vector<std::string> missing;
  for (const auto& f : frames) {
    auto it = labels.find(f.sample_id);
    if (it == labels.end()) {
      missing.push_back(f.sample_id);
      continue;
    }
    if (it->second >= f.class_count()) {
      std::ostringstream msg;
      msg << "label " << it->second << " for sample '" << f.sample_id
          << "' is outside the class set of size " << f.class_count();
      throw ValidationError(msg.str());
    }
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "no label for " << missing.size() << " sample(s):";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) {
      msg << " '" << missing[i] << "'";
    }
    if (missing.size() > 10) msg << " ...";
    throw ValidationError(msg.str());
  }
  if (labels.size() != frames.size()) {
    // Every frame has a label, so the surplus must be labels without frames.
    std::map<std::string, bool> seen;
    for (const auto& f : frames) seen[f.sample_id] = true;
    std::ostringstream msg;
    msg << "labels without predictions:";
    int shown = 0;
    for (const auto& [id, truth] : labels) {
      if (!seen.count(id) && shown++ < 10) msg << " '" << id << "'";
    }
    throw ValidationError(msg.str());
  }
}

}  // namespace

AccuracyReport EvaluateMethod(std::span<const EnsembleFrame> frames,
                              const LabelMap& labels, Method method,
                              TiePolicy tie_policy) {
  CheckCoverage(frames, labels);
  AccuracyReport report;
  report.method = method;
  report.total = frames.size();
  for (const auto& f : frames) {
    if (Combine(f, method, tie_policy).predicted == labels.at(f.sample_id)) {
      ++report.matches;
    }
  }
  return report;
}

ComparisonTable CompareMethods(std::span<const EnsembleFrame> frames,
                               const LabelMap& labels,
                               std::span<const Method> methods,
                               TiePolicy tie_policy) {
  if (methods.empty()) throw ValidationError("no methods requested");
  constexpr std::array kRowOrder = {Method::kTopModel, Method::kAverage,
                                    Method::kProduct, Method::kNegation};
  ComparisonTable table;
  for (Method m : kRowOrder) {
    if (std::find(methods.begin(), methods.end(), m) != methods.end()) {
      table.rows.push_back(EvaluateMethod(frames, labels, m, tie_policy));
    }
  }
  return table;
}

}  // namespace negens
