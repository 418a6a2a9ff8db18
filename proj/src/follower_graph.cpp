#include "eggs/follower_graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "eggs/error.hpp"
#include "eggs/format.hpp"

namespace eggs {

FollowerGraph build_follower_graph(std::span<const std::pair<std::string, std::string>> follows) {
  FollowerGraph g;
  for (const auto& [a, b] : follows) {
    if (a == b) continue;
    g.ids_.push_back(a);
    g.ids_.push_back(b);
  }
  std::sort(g.ids_.begin(), g.ids_.end());
  g.ids_.erase(std::unique(g.ids_.begin(), g.ids_.end()), g.ids_.end());
  auto index = [&](const std::string& id) {
    return static_cast<std::size_t>(std::lower_bound(g.ids_.begin(), g.ids_.end(), id) -
                                    g.ids_.begin());
  };
  g.out_.assign(g.ids_.size(), {});
  g.in_.assign(g.ids_.size(), {});
  for (const auto& [a, b] : follows) {
    if (a == b) continue;
    g.out_[index(a)].push_back(index(b));
  }
  for (std::size_t v = 0; v < g.out_.size(); ++v) {
    auto& o = g.out_[v];
    std::sort(o.begin(), o.end());
    o.erase(std::unique(o.begin(), o.end()), o.end());
    for (std::size_t w : o) g.in_[w].push_back(v);
  }
  return g;
}

std::size_t FollowerGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& o : out_) n += o.size();
  return n;
}

bool FollowerGraph::has_edge(std::size_t from, std::size_t to) const {
  return std::binary_search(out_[from].begin(), out_[from].end(), to);
}

std::vector<std::vector<std::size_t>> FollowerGraph::undirected() const {
  std::vector<std::vector<std::size_t>> adj(ids_.size());
  for (std::size_t v = 0; v < ids_.size(); ++v) {
    adj[v] = out_[v];
    adj[v].insert(adj[v].end(), in_[v].begin(), in_[v].end());
    std::sort(adj[v].begin(), adj[v].end());
    adj[v].erase(std::unique(adj[v].begin(), adj[v].end()), adj[v].end());
  }
  return adj;
}

PageRankResult pagerank(const FollowerGraph& g, const PageRankOptions& opts) {
  const std::size_t n = g.node_count();
  if (n == 0) throw DataError("pagerank on an empty graph");
  const double inv_n = 1.0 / static_cast<double>(n);
  PageRankResult res;
  std::vector<double> cur(n, inv_n), next(n);
  for (int it = 0; it < opts.max_iter; ++it) {
    double dangling = 0;
    for (std::size_t v = 0; v < n; ++v)
      if (g.out(v).empty()) dangling += cur[v];
    const double base = (1.0 - opts.damping) * inv_n + opts.damping * dangling * inv_n;
    for (std::size_t v = 0; v < n; ++v) {
      double s = 0;
      for (std::size_t u : g.in(v)) s += cur[u] / static_cast<double>(g.out(u).size());
      next[v] = base + opts.damping * s;
    }
    double diff = 0;
    for (std::size_t v = 0; v < n; ++v) diff += std::abs(next[v] - cur[v]);
    cur.swap(next);
    res.iterations = it + 1;
    if (diff < opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.scores = std::move(cur);
  return res;
}

std::vector<std::size_t> triangle_count(const FollowerGraph& g) {
  const auto adj = g.undirected();
  std::vector<std::size_t> count(adj.size(), 0);
  for (std::size_t u = 0; u < adj.size(); ++u) {
    for (std::size_t v : adj[u]) {
      if (v <= u) continue;
      // Common neighbours w > v close a triangle u < v < w exactly once.
      auto a = std::upper_bound(adj[u].begin(), adj[u].end(), v);
      auto b = std::upper_bound(adj[v].begin(), adj[v].end(), v);
      while (a != adj[u].end() && b != adj[v].end()) {
        if (*a < *b) {
          ++a;
        } else if (*b < *a) {
          ++b;
        } else {
          ++count[u];
          ++count[v];
          ++count[*a];
          ++a;
          ++b;
        }
      }
    }
  }
  return count;
}

std::vector<std::size_t> k_core(const FollowerGraph& g) {
  // Batagelj-Zaversnik bucket peeling.
  const auto adj = g.undirected();
  const std::size_t n = adj.size();
  std::vector<std::size_t> deg(n), pos(n), vert(n);
  std::size_t max_deg = 0;
  for (std::size_t v = 0; v < n; ++v) {
    deg[v] = adj[v].size();
    max_deg = std::max(max_deg, deg[v]);
  }
  std::vector<std::size_t> bin(max_deg + 1, 0);
  for (std::size_t v = 0; v < n; ++v) ++bin[deg[v]];
  std::size_t start = 0;
  for (std::size_t d = 0; d <= max_deg; ++d) {
    const std::size_t num = bin[d];
    bin[d] = start;
    start += num;
  }
  for (std::size_t v = 0; v < n; ++v) {
    pos[v] = bin[deg[v]];
    vert[pos[v]] = v;
    ++bin[deg[v]];
  }
  for (std::size_t d = max_deg; d >= 1; --d) bin[d] = bin[d - 1];
  if (max_deg + 1 > 0) bin[0] = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t v = vert[i];
    for (std::size_t u : adj[v]) {
      if (deg[u] > deg[v]) {
        const std::size_t du = deg[u];
        const std::size_t pu = pos[u];
        const std::size_t pw = bin[du];
        const std::size_t w = vert[pw];
        if (u != w) {
          pos[u] = pw;
          vert[pu] = w;
          pos[w] = pu;
          vert[pw] = u;
        }
        ++bin[du];
        --deg[u];
      }
    }
  }
  return deg;
}

std::vector<Degree> degrees(const FollowerGraph& g) {
  std::vector<Degree> out(g.node_count());
  for (std::size_t v = 0; v < g.node_count(); ++v) out[v] = {g.in(v).size(), g.out(v).size()};
  return out;
}

std::vector<std::pair<std::string, double>> GraphFeatures::named() const {
  return {{"Pagerank", pagerank},
          {"TriCnt", triangles},
          {"KCore", kcore},
          {"InDegree", in_degree},
          {"OutDegree", out_degree}};
}

GraphFeatureTable compute_graph_features(const FollowerGraph& g) {
  GraphFeatureTable table;
  if (g.node_count() == 0) return table;
  const auto pr = pagerank(g);
  const auto tri = triangle_count(g);
  const auto core = k_core(g);
  const auto deg = degrees(g);
  for (std::size_t v = 0; v < g.node_count(); ++v)
    table.emplace(g.ids()[v],
                  GraphFeatures{pr.scores[v], static_cast<double>(tri[v]),
                                static_cast<double>(core[v]), static_cast<double>(deg[v].in),
                                static_cast<double>(deg[v].out)});
  return table;
}

std::vector<std::pair<std::string, std::string>> read_follows(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("follows line without tab: " + line);
    out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_follows_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open follows file: " + path);
  return read_follows(in);
}

void write_follows(std::ostream& out,
                   std::span<const std::pair<std::string, std::string>> follows) {
  out << "#follower\tfollowee\n";
  for (const auto& [a, b] : follows) out << a << '\t' << b << '\n';
}

void write_graph_features(std::ostream& out, const GraphFeatureTable& table) {
  out << "#eggs-graph-features\t1\n#user\tPagerank\tTriCnt\tKCore\tInDegree\tOutDegree\n";
  for (const auto& [id, f] : table)
    out << id << '\t' << format_double(f.pagerank) << '\t' << format_double(f.triangles) << '\t'
        << format_double(f.kcore) << '\t' << format_double(f.in_degree) << '\t'
        << format_double(f.out_degree) << '\n';
}

GraphFeatureTable read_graph_features(std::istream& in) {
  GraphFeatureTable table;
  std::string line;
  if (!std::getline(in, line) || line.rfind("#eggs-graph-features", 0) != 0)
    throw DataError("not an eggs graph-feature file");
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string id;
    GraphFeatures f;
    std::getline(ss, id, '\t');
    std::string cell;
    double* dst[] = {&f.pagerank, &f.triangles, &f.kcore, &f.in_degree, &f.out_degree};
    for (double* d : dst) {
      if (!std::getline(ss, cell, '\t')) throw DataError("short graph-feature line: " + line);
      std::from_chars(cell.data(), cell.data() + cell.size(), *d);
    }
    table.emplace(std::move(id), f);
  }
  return table;
}

}  // namespace eggs
