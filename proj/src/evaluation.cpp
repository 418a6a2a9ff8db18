#include "eggs/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "eggs/error.hpp"
#include "eggs/format.hpp"
#include "eggs/metrics.hpp"
#include "eggs/union_find.hpp"

namespace eggs {

InductivePartition inductive_partition(std::span<const Message> test,
                                       std::span<const Message> train, const GroupSet& groups) {
  std::unordered_set<std::string> train_ids;
  for (const auto& m : train) train_ids.insert(m.id);
  std::unordered_set<std::string> linked;
  for (const auto& g : groups.groups) {
    const bool touches_train = std::any_of(g.member_ids.begin(), g.member_ids.end(),
                                           [&](const auto& id) { return train_ids.count(id); });
    if (!touches_train) continue;
    for (const auto& id : g.member_ids) linked.insert(id);
  }
  InductivePartition p;
  for (const auto& m : test) (linked.count(m.id) ? p.transductive : p.inductive).push_back(m.id);
  return p;
}

CoverageCurve component_coverage(std::span<const Message> messages, const GroupSet& groups) {
  const GroupIndex index = index_groups(groups, messages);
  UnionFind uf(messages.size());
  for (const auto& members : index.members)
    for (std::size_t k = 1; k < members.size(); ++k) uf.unite(members[0], members[k]);

  struct Comp {
    std::size_t root, size = 0, spam = 0, ham = 0;
  };
  std::vector<std::size_t> slot(messages.size(), static_cast<std::size_t>(-1));
  std::vector<Comp> comps;
  std::size_t total_spam = 0, total_ham = 0;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    const std::size_t r = uf.find(i);
    if (slot[r] == static_cast<std::size_t>(-1)) {
      slot[r] = comps.size();
      comps.push_back(Comp{r});
    }
    Comp& c = comps[slot[r]];
    ++c.size;
    if (messages[i].label == Label::kSpam) {
      ++c.spam;
      ++total_spam;
    } else if (messages[i].label == Label::kHam) {
      ++c.ham;
      ++total_ham;
    }
  }

  CoverageCurve curve;
  curve.components = comps.size();
  auto cumulative = [&](auto count, std::size_t total) {
    std::vector<std::size_t> v;
    for (const auto& c : comps) v.push_back(count(c));
    std::stable_sort(v.begin(), v.end(), std::greater<>());
    std::vector<double> out;
    std::size_t acc = 0;
    for (std::size_t x : v) {
      acc += x;
      out.push_back(total == 0 ? 0.0 : static_cast<double>(acc) / static_cast<double>(total));
    }
    return out;
  };
  curve.overall = cumulative([](const Comp& c) { return c.size; }, messages.size());
  curve.spam = cumulative([](const Comp& c) { return c.spam; }, total_spam);
  curve.ham = cumulative([](const Comp& c) { return c.ham; }, total_ham);
  return curve;
}

void write_coverage(std::ostream& out, const CoverageCurve& c) {
  out << "#components\toverall\tspam\tham\n";
  for (std::size_t j = 0; j < c.overall.size(); ++j)
    out << j + 1 << '\t' << format_double(c.overall[j]) << '\t' << format_double(c.spam[j])
        << '\t' << format_double(c.ham[j]) << '\n';
}

MetricSummary summarize(std::span<const double> scores, std::span<const int> labels) {
  MetricSummary s;
  s.n = scores.size();
  for (int l : labels) s.positives += l != 0 ? 1 : 0;
  if (s.positives > 0 && s.positives < s.n) {
    s.aupr = aupr(scores, labels);
    s.auroc = auroc(scores, labels);
  }
  return s;
}

Diagnostics& Diagnostics::operator+=(const Diagnostics& o) {
  bp_runs += o.bp_runs;
  bp_not_converged += o.bp_not_converged;
  map_runs += o.map_runs;
  map_not_converged += o.map_not_converged;
  classifier_runs += o.classifier_runs;
  classifier_not_converged += o.classifier_not_converged;
  return *this;
}

const ModelReport* EvaluationReport::find(const std::string& name) const {
  for (const auto& m : models)
    if (m.name == name) return &m;
  return nullptr;
}

namespace {

std::string cell(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", *v);
  return buf;
}

nlohmann::ordered_json summary_json(const MetricSummary& s) {
  nlohmann::ordered_json j;
  j["n"] = s.n;
  j["positives"] = s.positives;
  j["aupr"] = s.aupr ? nlohmann::ordered_json(*s.aupr) : nlohmann::ordered_json(nullptr);
  j["auroc"] = s.auroc ? nlohmann::ordered_json(*s.auroc) : nlohmann::ordered_json(nullptr);
  return j;
}

}  // namespace

void write_report_table(std::ostream& out, const EvaluationReport& report) {
  std::size_t w = 5;
  for (const auto& m : report.models) w = std::max(w, m.name.size());
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s | %-15s | %-23s\n", static_cast<int>(w), "Model",
                "Inductive", "Inductive + Transductive");
  out << line;
  std::snprintf(line, sizeof(line), "%-*s | %-7s %-7s | %-7s %-7s\n", static_cast<int>(w), "",
                "AUPR", "AUROC", "AUPR", "AUROC");
  out << line << std::string(w, '-') << "-+-----------------+------------------\n";
  for (const auto& m : report.models) {
    std::snprintf(line, sizeof(line), "%-*s | %-7s %-7s | %-7s %-7s\n", static_cast<int>(w),
                  m.name.c_str(), cell(m.inductive.aupr).c_str(), cell(m.inductive.auroc).c_str(),
                  cell(m.all.aupr).c_str(), cell(m.all.auroc).c_str());
    out << line;
  }
  if (!report.models.empty()) {
    const auto& m = report.models.front();
    out << "\ntest messages: " << m.all.n << " (" << m.all.positives << " spam), inductive: "
        << m.inductive.n << ", transductive: " << m.transductive.n << '\n';
  }
  const auto& d = report.diagnostics;
  out << "loopy BP runs: " << d.bp_runs << " (not converged: " << d.bp_not_converged
      << "), MAP runs: " << d.map_runs << " (not converged: " << d.map_not_converged << ")\n";
  for (const auto& n : report.notices) out << "notice: " << n << '\n';
}

void write_report_json(std::ostream& out, const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["format"] = "eggs-report";
  j["version"] = 1;
  auto& models = j["models"] = nlohmann::ordered_json::array();
  for (const auto& m : report.models) {
    nlohmann::ordered_json e;
    e["name"] = m.name;
    e["inductive_transductive"] = summary_json(m.all);
    e["inductive"] = summary_json(m.inductive);
    e["transductive"] = summary_json(m.transductive);
    auto& ps = e["per_subset"] = nlohmann::ordered_json::array();
    for (const auto& s : m.per_subset) ps.push_back(summary_json(s));
    models.push_back(e);
  }
  const auto& d = report.diagnostics;
  j["diagnostics"] = {{"bp_runs", d.bp_runs},
                      {"bp_not_converged", d.bp_not_converged},
                      {"map_runs", d.map_runs},
                      {"map_not_converged", d.map_not_converged},
                      {"classifier_runs", d.classifier_runs},
                      {"classifier_not_converged", d.classifier_not_converged}};
  // Coverage summary: components needed to reach given fractions per label.
  auto needed = [](const std::vector<double>& curve, double frac) -> std::size_t {
    for (std::size_t i = 0; i < curve.size(); ++i)
      if (curve[i] >= frac - 1e-12) return i + 1;
    return curve.size();
  };
  nlohmann::ordered_json cov;
  cov["components"] = report.coverage.components;
  for (const auto& [name, curve] :
       {std::pair{"spam", &report.coverage.spam}, std::pair{"ham", &report.coverage.ham},
        std::pair{"overall", &report.coverage.overall}}) {
    nlohmann::ordered_json c;
    for (double f : {0.25, 0.5, 0.75, 0.9, 1.0}) c[format_double(f)] = needed(*curve, f);
    cov[name] = c;
  }
  j["coverage"] = cov;
  j["notices"] = report.notices;
  out << j.dump(2) << '\n';
}

}  // namespace eggs
