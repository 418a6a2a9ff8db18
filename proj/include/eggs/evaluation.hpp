#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eggs/groups.hpp"
#include "eggs/message.hpp"

namespace eggs {

struct InductivePartition {
  std::vector<std::string> inductive;
  std::vector<std::string> transductive;
};

/// A test message is transductive iff it shares a group with a training message.
InductivePartition inductive_partition(std::span<const Message> test,
                                       std::span<const Message> train, const GroupSet& groups);

/// Cumulative fraction of messages covered by the j+1 largest components of
/// the co-membership graph. Each label's curve ranks components by that
/// label's count; `overall` ranks by component size.
struct CoverageCurve {
  std::size_t components = 0;
  std::vector<double> overall;
  std::vector<double> spam;
  std::vector<double> ham;
};

CoverageCurve component_coverage(std::span<const Message> messages, const GroupSet& groups);

void write_coverage(std::ostream& out, const CoverageCurve& curve);

// ---- report ------------------------------------------------------------------------

struct MetricSummary {
  std::size_t n = 0;
  std::size_t positives = 0;
  std::optional<double> aupr;   // empty when the slice is single-class
  std::optional<double> auroc;
};

/// Metrics for one scored slice; undefined metrics are left empty.
MetricSummary summarize(std::span<const double> scores, std::span<const int> labels);

struct ModelReport {
  std::string name;
  MetricSummary all;           // inductive + transductive
  MetricSummary inductive;
  MetricSummary transductive;
  std::vector<MetricSummary> per_subset;
};

struct Diagnostics {
  std::size_t bp_runs = 0;
  std::size_t bp_not_converged = 0;
  std::size_t map_runs = 0;
  std::size_t map_not_converged = 0;
  std::size_t classifier_runs = 0;
  std::size_t classifier_not_converged = 0;

  Diagnostics& operator+=(const Diagnostics& o);
};

struct EvaluationReport {
  std::vector<ModelReport> models;
  Diagnostics diagnostics;
  CoverageCurve coverage;
  std::vector<std::string> notices;

  const ModelReport* find(const std::string& name) const;
};

/// Aligned table: rows = models, columns = Inductive / Inductive + Transductive.
void write_report_table(std::ostream& out, const EvaluationReport& report);
void write_report_json(std::ostream& out, const EvaluationReport& report);

}  // namespace eggs
