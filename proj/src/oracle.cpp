#include "lossnet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "lossnet/errors.hpp"

namespace lossnet {

FiniteTree::FiniteTree(int node_count, std::vector<std::pair<int, int>> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
  if (node_count_ < 1) throw ValidationError("a tree needs at least one node");
  if (static_cast<int>(edges_.size()) != node_count_ - 1) throw ValidationError("a tree on n nodes has n-1 edges");
  incident_.assign(static_cast<std::size_t>(node_count_), {});
  for (int e = 0; e < edge_count(); ++e) {
    const auto [u, v] = edges_[static_cast<std::size_t>(e)];
    if (u < 0 || v < 0 || u >= node_count_ || v >= node_count_ || u == v)
      throw ValidationError("edge " + std::to_string(e) + " has a bad endpoint");
    incident_[static_cast<std::size_t>(u)].push_back(e);
    incident_[static_cast<std::size_t>(v)].push_back(e);
  }
  const auto d = distances_from(0);
  if (std::any_of(d.begin(), d.end(), [](int x) { return x < 0; })) throw ValidationError("tree is not connected");
}

int FiniteTree::other_end(int edge, int v) const {
  const auto [a, b] = edges_.at(static_cast<std::size_t>(edge));
  if (a == v) return b;
  if (b == v) return a;
  throw ValidationError("node is not an endpoint of the edge");
}

std::vector<int> FiniteTree::distances_from(int v) const {
  std::vector<int> dist(static_cast<std::size_t>(node_count_), -1);
  std::deque<int> queue{v};
  dist.at(static_cast<std::size_t>(v)) = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int e : incident(u)) {
      const int w = other_end(e, u);
      if (dist[static_cast<std::size_t>(w)] < 0) {
        dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

FiniteTree FiniteTree::single() { return FiniteTree(1, {}); }

FiniteTree FiniteTree::path(int nodes) {
  if (nodes < 1) throw ValidationError("path needs at least one node");
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < nodes; ++v) edges.emplace_back(v - 1, v);
  return FiniteTree(nodes, std::move(edges));
}

namespace {

// Breadth-first growth: node 0 gets `first` children, later nodes `rest`,
// down to the given depth.
FiniteTree grow(int first, int rest, int depth) {
  if (first < 1 || rest < 1) throw ValidationError("branching must be positive");
  if (depth < 0) throw ValidationError("depth must be nonnegative");
  std::vector<std::pair<int, int>> edges;
  std::vector<int> level{0};
  int next = 1;
  for (int d = 0; d < depth; ++d) {
    std::vector<int> children;
    for (int u : level) {
      const int k = (u == 0) ? first : rest;
      for (int c = 0; c < k; ++c) {
        edges.emplace_back(u, next);
        children.push_back(next++);
      }
      if (next > 5'000'000) throw SizeGuardError("tree too large");
    }
    level = std::move(children);
  }
  return FiniteTree(next, std::move(edges));
}

}  // namespace

FiniteTree FiniteTree::rooted(int q, int height) { return grow(q, q, height); }
FiniteTree FiniteTree::spherical(int q, int radius) {
  if (radius < 1) throw ValidationError("radius must be at least 1");
  return grow(q + 1, q, radius);
}

bool is_feasible(const ModelParams& p, const FiniteTree& t, const Configuration& c) {
  if (static_cast<int>(c.node_occ.size()) != t.node_count() || static_cast<int>(c.edge_occ.size()) != t.edge_count())
    throw ValidationError("configuration does not cover the tree");
  for (int n : c.node_occ)
    if (n < 0 || n > p.cv) return false;
  for (int e = 0; e < t.edge_count(); ++e) {
    const int k = c.edge_occ[static_cast<std::size_t>(e)];
    if (k < 0 || k > p.ce) return false;
    const auto [u, v] = t.edges()[static_cast<std::size_t>(e)];
    if (c.node_occ[static_cast<std::size_t>(u)] + k + c.node_occ[static_cast<std::size_t>(v)] > p.cap) return false;
  }
  return true;
}

double configuration_weight(const ModelParams& p, const Configuration& c) {
  double w = 1.0;
  for (int n : c.node_occ) w *= p.nu(n);
  for (int k : c.edge_occ) w *= p.lambda(k);
  return w;
}

namespace {

template <class S>
S as_scalar(double x) {
  if constexpr (std::is_same_v<S, Rational>)
    return to_rational(x);
  else
    return x;
}

// Sum of λ_k over k <= min(edge_cap, room); zero when room < 0.
template <class S>
S lambda_prefix(const ModelParams& p, int edge_cap, int room) {
  S s = 0;
  for (int k = 0; k <= std::min(edge_cap, room); ++k) s += as_scalar<S>(p.lambda(k));
  return s;
}

// Edge factor tables, flat and indexed [a * (C_V + 1) + b] by the endpoint occupancies.
template <class S>
struct EdgeTables {
  std::vector<S> full;        // any admissible edge occupancy
  std::vector<S> node_room;   // leaves one unit for an extra multicast call
  std::vector<S> edge_room;   // leaves room for one more unicast call

  explicit EdgeTables(const ModelParams& p) {
    const auto n = static_cast<std::size_t>(p.cv) + 1;
    full.assign(n * n, S(0));
    node_room = edge_room = full;
    for (int a = 0; a <= p.cv; ++a)
      for (int b = 0; b <= p.cv; ++b) {
        const auto i = static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b);
        full[i] = lambda_prefix<S>(p, p.ce, p.cap - a - b);
        node_room[i] = lambda_prefix<S>(p, p.ce, p.cap - a - b - 1);
        edge_room[i] = lambda_prefix<S>(p, p.ce - 1, p.cap - a - b - 1);
      }
  }
};

// Traversal from `start`: every node after the first has exactly one earlier
// neighbour, its parent.
struct Traversal {
  std::vector<int> order;
  std::vector<int> parent;       // by position
  std::vector<int> parent_edge;  // by position
};

Traversal traverse(const FiniteTree& t, int start, bool alternate) {
  if (start < 0 || start >= t.node_count()) throw ValidationError("node index out of range");
  Traversal tr;
  std::vector<int> seen(static_cast<std::size_t>(t.node_count()), 0);
  std::deque<std::pair<int, std::pair<int, int>>> work{{start, {-1, -1}}};
  seen[static_cast<std::size_t>(start)] = 1;
  while (!work.empty()) {
    auto [u, pe] = alternate ? work.back() : work.front();
    if (alternate)
      work.pop_back();
    else
      work.pop_front();
    tr.order.push_back(u);
    tr.parent.push_back(pe.first);
    tr.parent_edge.push_back(pe.second);
    std::vector<int> inc = t.incident(u);
    if (alternate) std::reverse(inc.begin(), inc.end());
    for (int e : inc) {
      const int w = t.other_end(e, u);
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        work.push_back({w, {u, e}});
      }
    }
  }
  return tr;
}

// Σ over node assignments within [lo_v, hi_v] of Π ν Π (edge table)(n_u, n_v).
template <class S>
class NodeSum {
 public:
  NodeSum(const ModelParams& p, const FiniteTree& t, int start, const OracleOptions& opts)
      : tr_(traverse(t, start, opts.alternate_order)), budget_(opts.visit_budget), width_(p.cv + 1) {
    p.validate();
    if (std::pow(static_cast<double>(p.cv) + 1.0, t.node_count()) > 1e13)
      throw SizeGuardError("tree too large for exhaustive enumeration");
    for (int a = 0; a <= p.cv; ++a) nu_.push_back(as_scalar<S>(p.nu(a)));
    std::vector<int> pos_of(static_cast<std::size_t>(t.node_count()), -1);
    for (std::size_t i = 0; i < tr_.order.size(); ++i) pos_of[static_cast<std::size_t>(tr_.order[i])] = static_cast<int>(i);
    slots_.resize(tr_.order.size());
    for (std::size_t i = 0; i < slots_.size(); ++i)
      slots_[i].parent_pos = tr_.parent[i] < 0 ? -1 : pos_of[static_cast<std::size_t>(tr_.parent[i])];
    value_.assign(slots_.size(), 0);
  }

  // Each node's range is [lo_v, hi_v]; each edge gets its factor table.
  S run(const std::vector<int>& lo, const std::vector<int>& hi, const std::vector<const std::vector<S>*>& table) {
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      const auto v = static_cast<std::size_t>(tr_.order[i]);
      slots_[i].lo = lo[v];
      slots_[i].hi = hi[v];
      slots_[i].table = tr_.parent_edge[i] < 0 ? nullptr : table[static_cast<std::size_t>(tr_.parent_edge[i])]->data();
    }
    visits_ = 0;
    return descend(0);
  }

 private:
  struct Slot {
    int parent_pos = -1;
    int lo = 0;
    int hi = 0;
    const S* table = nullptr;  // [parent value * width + value]
  };

  // Sum over all completions of positions >= pos. Summing per level keeps the
  // rounding error proportional to the depth, not the number of terms.
  S descend(std::size_t pos) {
    if (++visits_ > budget_) throw SizeGuardError("enumeration visit budget exhausted");
    if (pos == slots_.size()) return S(1);
    const Slot& s = slots_[pos];
    const S* row = s.table ? s.table + static_cast<std::ptrdiff_t>(value_[static_cast<std::size_t>(s.parent_pos)] * width_) : nullptr;
    S sum = 0;
    if (pos + 1 == slots_.size()) {
      // Last node: its completions are single terms.
      visits_ += s.hi - s.lo + 1;
      for (int a = s.lo; a <= s.hi; ++a) sum += row ? nu_[static_cast<std::size_t>(a)] * row[a] : nu_[static_cast<std::size_t>(a)];
      return sum;
    }
    for (int a = s.lo; a <= s.hi; ++a) {
      S w = nu_[static_cast<std::size_t>(a)];
      if (row) {
        if (row[a] == 0) continue;
        w *= row[a];
      }
      if (w == 0) continue;
      value_[pos] = a;
      sum += w * descend(pos + 1);
    }
    return sum;
  }

  Traversal tr_;
  long long budget_;
  int width_;
  long long visits_ = 0;
  std::vector<S> nu_;
  std::vector<Slot> slots_;
  std::vector<int> value_;  // by position
};

template <class S>
std::vector<S> partition_impl(const ModelParams& p, const FiniteTree& t, int root, const OracleOptions& opts) {
  NodeSum<S> sum(p, t, root, opts);
  const EdgeTables<S> tables(p);
  std::vector<int> lo(static_cast<std::size_t>(t.node_count()), 0);
  std::vector<int> hi(lo.size(), p.cv);
  std::vector<const std::vector<S>*> tab(static_cast<std::size_t>(t.edge_count()), &tables.full);
  std::vector<S> z;
  for (int i = 0; i <= p.cv; ++i) {
    lo[static_cast<std::size_t>(root)] = hi[static_cast<std::size_t>(root)] = i;
    z.push_back(sum.run(lo, hi, tab));
  }
  return z;
}

template <class S>
S blocking_impl(const ModelParams& p, const FiniteTree& t, Target target, const OracleOptions& opts) {
  const EdgeTables<S> tables(p);
  std::vector<int> lo(static_cast<std::size_t>(t.node_count()), 0);
  std::vector<int> hi(lo.size(), p.cv);
  std::vector<const std::vector<S>*> tab(static_cast<std::size_t>(t.edge_count()), &tables.full);
  int start = 0;
  if (target.kind == Target::Kind::node) {
    if (target.index < 0 || target.index >= t.node_count()) throw ValidationError("target node out of range");
    start = target.index;
  } else {
    if (target.index < 0 || target.index >= t.edge_count()) throw ValidationError("target edge out of range");
    start = t.edges()[static_cast<std::size_t>(target.index)].first;
  }
  NodeSum<S> sum(p, t, start, opts);
  const S total = sum.run(lo, hi, tab);
  if (target.kind == Target::Kind::node) {
    if (p.cv == 0) return S(1);
    hi[static_cast<std::size_t>(target.index)] = p.cv - 1;
    for (int e : t.incident(target.index)) tab[static_cast<std::size_t>(e)] = &tables.node_room;
  } else {
    tab[static_cast<std::size_t>(target.index)] = &tables.edge_room;
  }
  const S admitted = sum.run(lo, hi, tab);
  return S(1) - admitted / total;
}

}  // namespace

std::vector<double> exact_partition(const ModelParams& p, const FiniteTree& t, int root, const OracleOptions& opts) {
  return partition_impl<double>(p, t, root, opts);
}

std::vector<Rational> exact_partition_rational(const ModelParams& p, const FiniteTree& t, int root,
                                               const OracleOptions& opts) {
  return partition_impl<Rational>(p, t, root, opts);
}

std::vector<double> exact_occupancy(const ModelParams& p, const FiniteTree& t, int v, const OracleOptions& opts) {
  auto z = exact_partition(p, t, v, opts);
  double total = 0.0;
  for (double x : z) total += x;
  for (double& x : z) x /= total;
  return z;
}

double exact_blocking(const ModelParams& p, const FiniteTree& t, Target target, const OracleOptions& opts) {
  return std::clamp(blocking_impl<double>(p, t, target, opts), 0.0, 1.0);
}

Rational exact_blocking_rational(const ModelParams& p, const FiniteTree& t, Target target, const OracleOptions& opts) {
  return blocking_impl<Rational>(p, t, target, opts);
}

ExactReport exact_report(const ModelParams& p, const FiniteTree& t, int v, int e, const OracleOptions& opts) {
  if (v < 0 || v >= t.node_count()) throw ValidationError("target node out of range");
  if (e >= t.edge_count()) throw ValidationError("target edge out of range");
  const EdgeTables<double> tables(p);
  NodeSum<double> sum(p, t, v, opts);
  std::vector<int> lo(static_cast<std::size_t>(t.node_count()), 0);
  std::vector<int> hi(lo.size(), p.cv);
  std::vector<const std::vector<double>*> tab(static_cast<std::size_t>(t.edge_count()), &tables.full);
  const auto iv = static_cast<std::size_t>(v);

  ExactReport r;
  double total = 0.0;
  for (int i = 0; i <= p.cv; ++i) {
    lo[iv] = hi[iv] = i;
    r.occupancy.push_back(sum.run(lo, hi, tab));
    total += r.occupancy.back();
  }
  for (double& x : r.occupancy) x /= total;
  lo[iv] = 0;

  if (e >= 0) {
    hi[iv] = p.cv;
    tab[static_cast<std::size_t>(e)] = &tables.edge_room;
    r.unicast_beta = std::clamp(1.0 - sum.run(lo, hi, tab) / total, 0.0, 1.0);
    tab[static_cast<std::size_t>(e)] = &tables.full;
  }
  if (p.cv == 0) {
    r.multicast_beta = 1.0;
  } else {
    hi[iv] = p.cv - 1;
    for (int f : t.incident(v)) tab[static_cast<std::size_t>(f)] = &tables.node_room;
    r.multicast_beta = std::clamp(1.0 - sum.run(lo, hi, tab) / total, 0.0, 1.0);
  }
  return r;
}

double full_space_size(const ModelParams& p, const FiniteTree& t) {
  return std::pow(p.cv + 1.0, t.node_count()) * std::pow(p.ce + 1.0, t.edge_count());
}

void for_each_feasible(const ModelParams& p, const FiniteTree& t,
                       const std::function<void(const Configuration&)>& visit) {
  p.validate();
  if (full_space_size(p, t) > kFullEnumerationLimit)
    throw SizeGuardError("configuration space exceeds the full enumeration limit");
  Configuration c{std::vector<int>(static_cast<std::size_t>(t.node_count()), 0),
                  std::vector<int>(static_cast<std::size_t>(t.edge_count()), 0)};
  // Odometer over node digits then edge digits.
  const std::size_t nodes = c.node_occ.size();
  const std::size_t digits = nodes + c.edge_occ.size();
  auto digit = [&](std::size_t d) -> int& { return d < nodes ? c.node_occ[d] : c.edge_occ[d - nodes]; };
  auto top = [&](std::size_t d) { return d < nodes ? p.cv : p.ce; };
  while (true) {
    if (is_feasible(p, t, c)) visit(c);
    std::size_t d = 0;
    while (d < digits && digit(d) == top(d)) digit(d++) = 0;
    if (d == digits) break;
    ++digit(d);
  }
}

std::vector<double> brute_partition(const ModelParams& p, const FiniteTree& t, int root) {
  std::vector<double> z(static_cast<std::size_t>(p.cv) + 1, 0.0);
  for_each_feasible(p, t, [&](const Configuration& c) {
    z[static_cast<std::size_t>(c.node_occ.at(static_cast<std::size_t>(root)))] += configuration_weight(p, c);
  });
  return z;
}

double brute_blocking(const ModelParams& p, const FiniteTree& t, Target target) {
  double total = 0.0, blocked = 0.0;
  for_each_feasible(p, t, [&](const Configuration& c) {
    const double w = configuration_weight(p, c);
    total += w;
    Configuration next = c;
    if (target.kind == Target::Kind::node)
      ++next.node_occ.at(static_cast<std::size_t>(target.index));
    else
      ++next.edge_occ.at(static_cast<std::size_t>(target.index));
    if (!is_feasible(p, t, next)) blocked += w;
  });
  return blocked / total;
}

}  // namespace lossnet
