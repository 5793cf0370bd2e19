#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "lossnet/exact.hpp"
#include "lossnet/rfmap.hpp"

namespace lossnet {

/// Finite tree on nodes 0..n-1. The factories put the root (or center) at
/// node 0 and make edge 0 join node 0 to node 1.
class FiniteTree {
 public:
  /// Throws ValidationError unless the edges form a spanning tree.
  FiniteTree(int node_count, std::vector<std::pair<int, int>> edges);

  static FiniteTree single();
  static FiniteTree path(int nodes);
  /// Complete q-ary tree of the given height.
  static FiniteTree rooted(int q, int height);
  /// Center of degree q+1, every other internal node of degree q+1, radius L.
  static FiniteTree spherical(int q, int radius);

  int node_count() const { return node_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  /// Edge ids touching v.
  const std::vector<int>& incident(int v) const { return incident_[static_cast<std::size_t>(v)]; }
  int other_end(int edge, int v) const;
  /// Graph distance from node v.
  std::vector<int> distances_from(int v) const;

 private:
  int node_count_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> incident_;
};

struct Configuration {
  std::vector<int> node_occ;
  std::vector<int> edge_occ;
};

/// Caps and every edge constraint n_u + n_uv + n_v <= C.
bool is_feasible(const ModelParams& p, const FiniteTree& t, const Configuration& c);

/// Where an extra call would be added.
struct Target {
  enum class Kind { node, edge };
  Kind kind = Kind::node;
  int index = 0;
  static Target node(int v) { return {Kind::node, v}; }
  static Target edge(int e) { return {Kind::edge, e}; }
};

struct OracleOptions {
  // Hard stop on search-tree visits per pass; exceeding it throws SizeGuardError.
  long long visit_budget = 1'000'000'000;
  // Visit children in reverse and depth first instead of breadth first.
  bool alternate_order = false;
};

/// Z(i) summed over feasible configurations with occupancy i at `root`. Edge
/// occupancies are summed out per edge; node occupancies are enumerated.
std::vector<double> exact_partition(const ModelParams& p, const FiniteTree& t, int root,
                                    const OracleOptions& opts = {});
std::vector<Rational> exact_partition_rational(const ModelParams& p, const FiniteTree& t, int root,
                                               const OracleOptions& opts = {});

/// Stationary occupancy law of node v.
std::vector<double> exact_occupancy(const ModelParams& p, const FiniteTree& t, int v,
                                    const OracleOptions& opts = {});

/// Measure of the feasible configurations in which one more call at the
/// target would be infeasible or exceed its cap.
double exact_blocking(const ModelParams& p, const FiniteTree& t, Target target, const OracleOptions& opts = {});
Rational exact_blocking_rational(const ModelParams& p, const FiniteTree& t, Target target,
                                 const OracleOptions& opts = {});

struct ExactReport {
  std::vector<double> occupancy;  // law of the node
  double multicast_beta = 0.0;    // at the node
  double unicast_beta = 1.0;      // on the edge; 1 when there is no edge
};

/// Occupancy law and multicast blocking of node v with unicast blocking on
/// edge e (e < 0 for none), sharing the normalizing sum.
ExactReport exact_report(const ModelParams& p, const FiniteTree& t, int v, int e, const OracleOptions& opts = {});

/// Product-form weight Π ν_{n_v} Π λ_{n_e} of a configuration.
double configuration_weight(const ModelParams& p, const Configuration& c);

/// Bound on the full node-and-edge configuration space.
double full_space_size(const ModelParams& p, const FiniteTree& t);
inline constexpr double kFullEnumerationLimit = 1e8;

/// Visits every feasible configuration, node and edge occupancies explicit.
/// Refuses (SizeGuardError) when full_space_size exceeds kFullEnumerationLimit.
void for_each_feasible(const ModelParams& p, const FiniteTree& t,
                       const std::function<void(const Configuration&)>& visit);

/// Same quantities through for_each_feasible; slow, for cross-checking.
std::vector<double> brute_partition(const ModelParams& p, const FiniteTree& t, int root);
double brute_blocking(const ModelParams& p, const FiniteTree& t, Target target);

}  // namespace lossnet
