#pragma once

#include <span>
#include <utility>
#include <vector>

namespace eggs {

// Both metrics group equal scores into one threshold block and throw
// DataError unless the labels contain at least one positive and one negative.

/// Non-interpolated average precision over a descending-score sweep.
double aupr(std::span<const double> scores, std::span<const int> labels);

/// Mann-Whitney statistic; tied positive/negative pairs count 0.5.
double auroc(std::span<const double> scores, std::span<const int> labels);

struct PrPoint {
  double threshold;
  double recall;
  double precision;
};

/// One point per distinct score, highest threshold first.
std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const int> labels);

}  // namespace eggs
