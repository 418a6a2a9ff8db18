#include "eggs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eggs/error.hpp"

namespace eggs {
namespace {

struct Counts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

Counts check(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  for (double v : scores)
    if (std::isnan(v)) throw DataError("score is NaN");
  Counts c;
  for (int l : labels) (l != 0 ? c.pos : c.neg)++;
  if (c.pos == 0 || c.neg == 0) throw DataError("metric needs both positive and negative labels");
  return c;
}

std::vector<std::size_t> descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const int> labels) {
  const Counts c = check(scores, labels);
  const auto order = descending(scores);
  std::vector<PrPoint> out;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] != 0 ? tp : fp)++;
    out.push_back({s, static_cast<double>(tp) / static_cast<double>(c.pos),
                   static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  return out;
}

double aupr(std::span<const double> scores, std::span<const int> labels) {
  double ap = 0, prev_recall = 0;
  for (const auto& p : pr_curve(scores, labels)) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return ap;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  const Counts c = check(scores, labels);
  // Rank-sum with average ranks over tie blocks (ascending order).
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t pos_in_block = 0;
    for (; j < order.size() && scores[order[j]] == scores[order[i]]; ++j)
      if (labels[order[j]] != 0) ++pos_in_block;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    pos_rank_sum += avg_rank * static_cast<double>(pos_in_block);
    i = j;
  }
  const double np = static_cast<double>(c.pos), nn = static_cast<double>(c.neg);
  return (pos_rank_sum - np * (np + 1) / 2.0) / (np * nn);
}

}  // namespace eggs
