#include "eggs/split.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "eggs/error.hpp"

namespace eggs {

std::vector<std::size_t> chronological_order(std::span<const Message> messages) {
  std::vector<std::size_t> order(messages.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return chronological_less(messages[a], messages[b]);
  });
  return order;
}

SplitPlan chronological_split(std::span<const Message> messages, std::size_t n_subsets,
                              const SplitFractions& f) {
  if (n_subsets < 1) throw ConfigError("n_subsets must be >= 1");
  if (f.train < 0 || f.validation < 0 || f.test < 0)
    throw ConfigError("split fractions must be non-negative");
  if (std::abs(f.train + f.validation + f.test - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");
  const std::size_t n = messages.size();
  if (n < n_subsets)
    throw DataError("dataset of " + std::to_string(n) + " messages is smaller than " +
                    std::to_string(n_subsets) + " subsets");

  SplitPlan plan;
  for (std::size_t s = 0; s < n_subsets; ++s) {
    const std::size_t begin = s * n / n_subsets;
    const std::size_t end = (s + 1) * n / n_subsets;
    const double size = static_cast<double>(end - begin);
    auto cut = [&](double frac) {
      return begin + std::min(end - begin, static_cast<std::size_t>(std::llround(size * frac)));
    };
    const std::size_t train_end = cut(f.train);
    const std::size_t val_end = std::max(train_end, cut(f.train + f.validation));
    plan.subsets.push_back(SplitSubset{{begin, train_end}, {train_end, val_end}, {val_end, end}});
  }
  return plan;
}

void write_split_plan(std::ostream& out, const SplitPlan& plan) {
  nlohmann::ordered_json j;
  j["format"] = "eggs-split";
  j["version"] = 1;
  j["n_subsets"] = plan.n_subsets();
  auto& arr = j["subsets"] = nlohmann::ordered_json::array();
  for (const auto& s : plan.subsets) {
    nlohmann::ordered_json e;
    e["train"] = {s.train.begin, s.train.end};
    e["validation"] = {s.validation.begin, s.validation.end};
    e["test"] = {s.test.begin, s.test.end};
    arr.push_back(e);
  }
  out << j.dump(2) << '\n';
}

SplitPlan read_split_plan(std::istream& in) {
  const auto j = nlohmann::json::parse(in);
  if (j.value("format", "") != "eggs-split") throw DataError("not a split plan document");
  SplitPlan plan;
  auto range = [](const nlohmann::json& a) {
    return IndexRange{a.at(0).get<std::size_t>(), a.at(1).get<std::size_t>()};
  };
  for (const auto& e : j.at("subsets"))
    plan.subsets.push_back(
        SplitSubset{range(e.at("train")), range(e.at("validation")), range(e.at("test"))});
  return plan;
}

}  // namespace eggs
