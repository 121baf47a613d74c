#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "negens/combiner.hpp"

namespace negens {

using LabelMap = std::map<std::string, ClassId>;

struct AccuracyReport {
  Method method = Method::kNegation;
  std::size_t matches = 0;
  std::size_t total = 0;

  double accuracy() const {
    return static_cast<double>(matches) / static_cast<double>(total);
  }
};

// Rows are always in the fixed order top, average, product, negation.
struct ComparisonTable {
  std::vector<AccuracyReport> rows;
};

// Applies `method` to every frame and tallies predicted == truth. Every frame
// must have a label and every label must have a frame.
AccuracyReport EvaluateMethod(std::span<const EnsembleFrame> frames,
                              const LabelMap& labels, Method method,
                              TiePolicy tie_policy = TiePolicy::kMeanConfidence);

// One row per requested method, evaluated over the identical sample set.
// Duplicate methods are collapsed.
ComparisonTable CompareMethods(std::span<const EnsembleFrame> frames,
                               const LabelMap& labels,
                               std::span<const Method> methods,
                               TiePolicy tie_policy = TiePolicy::kMeanConfidence);

}  // namespace negens
