#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "eggs/message.hpp"

namespace eggs {

/// Half-open range of positions in the chronologically sorted dataset.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end == begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  bool operator==(const IndexRange&) const = default;
};

struct SplitSubset {
  IndexRange train;
  IndexRange validation;
  IndexRange test;

  bool operator==(const SplitSubset&) const = default;
};

struct SplitFractions {
  double train = 0.7;
  double validation = 0.06;
  double test = 0.24;
};

struct SplitPlan {
  std::vector<SplitSubset> subsets;

  std::size_t n_subsets() const { return subsets.size(); }
  bool operator==(const SplitPlan&) const = default;
};

/// Positions 0..n-1 of `messages` reordered by (timestamp, id).
std::vector<std::size_t> chronological_order(std::span<const Message> messages);

/// Cuts the dataset, taken in chronological order, into `n_subsets` equal
/// contiguous blocks, each divided train | validation | test.
/// Ranges index the chronologically sorted sequence.
SplitPlan chronological_split(std::span<const Message> messages, std::size_t n_subsets,
                              const SplitFractions& fractions);

void write_split_plan(std::ostream& out, const SplitPlan& plan);
SplitPlan read_split_plan(std::istream& in);

}  // namespace eggs
