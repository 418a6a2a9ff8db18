#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace eggs {

/// Directed "x follows y" graph over user ids. Nodes are stored in sorted id
/// order; self-loops are dropped and parallel edges collapsed.
class FollowerGraph {
 public:
  FollowerGraph() = default;

  std::size_t node_count() const { return ids_.size(); }
  std::size_t edge_count() const;
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<std::size_t>& out(std::size_t v) const { return out_[v]; }
  const std::vector<std::size_t>& in(std::size_t v) const { return in_[v]; }
  bool has_edge(std::size_t from, std::size_t to) const;
  /// Undirected projection: neighbours in either direction, sorted, unique.
  std::vector<std::vector<std::size_t>> undirected() const;

  friend FollowerGraph build_follower_graph(
      std::span<const std::pair<std::string, std::string>> follows);

 private:
  std::vector<std::string> ids_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

FollowerGraph build_follower_graph(std::span<const std::pair<std::string, std::string>> follows);

struct PageRankOptions {
  double damping = 0.85;
  double tol = 1e-8;
  int max_iter = 200;
};

struct PageRankResult {
  std::vector<double> scores;  // indexed like FollowerGraph::ids()
  int iterations = 0;
  bool converged = false;
};

/// Power iteration with uniform teleport; dangling mass spread uniformly.
/// Throws DataError on an empty graph.
PageRankResult pagerank(const FollowerGraph& g, const PageRankOptions& opts = {});

/// Triangles through each node in the undirected projection.
std::vector<std::size_t> triangle_count(const FollowerGraph& g);

/// Core number in the undirected projection.
std::vector<std::size_t> k_core(const FollowerGraph& g);

struct Degree {
  std::size_t in = 0;
  std::size_t out = 0;
};
std::vector<Degree> degrees(const FollowerGraph& g);

struct GraphFeatures {
  double pagerank = 0;
  double triangles = 0;
  double kcore = 0;
  double in_degree = 0;
  double out_degree = 0;

  std::vector<std::pair<std::string, double>> named() const;
  bool operator==(const GraphFeatures&) const = default;
};

/// user id -> graph features. Users absent from the table get all zeros.
using GraphFeatureTable = std::map<std::string, GraphFeatures>;

GraphFeatureTable compute_graph_features(const FollowerGraph& g);

std::vector<std::pair<std::string, std::string>> read_follows(std::istream& in);
std::vector<std::pair<std::string, std::string>> read_follows_file(const std::string& path);
void write_follows(std::ostream& out,
                   std::span<const std::pair<std::string, std::string>> follows);

void write_graph_features(std::ostream& out, const GraphFeatureTable& table);
GraphFeatureTable read_graph_features(std::istream& in);

}  // namespace eggs
