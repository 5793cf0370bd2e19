#include "lossnet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>

#include "lossnet/errors.hpp"
#include "lossnet/treecalc.hpp"

namespace lossnet {

FiniteTree TreeSpec::build(int q) const {
  switch (kind) {
    case TreeKind::single:
      return FiniteTree::single();
    case TreeKind::path:
      return FiniteTree::path(size);
    case TreeKind::rooted:
      return FiniteTree::rooted(q, size);
    case TreeKind::spherical:
      return FiniteTree::spherical(q, size);
  }
  throw ValidationError("unknown tree kind");
}

std::string to_string(ServiceMode m) { return m == ServiceMode::per_call ? "per-call" : "shared-server"; }
std::string to_string(DurationMode m) { return m == DurationMode::exponential ? "exponential" : "deterministic"; }
std::string to_string(TreeKind k) {
  switch (k) {
    case TreeKind::single:
      return "single";
    case TreeKind::path:
      return "path";
    case TreeKind::rooted:
      return "rooted";
    case TreeKind::spherical:
      return "spherical";
  }
  return "?";
}

void SimConfig::validate() const {
  if (!(nu_rate >= 0.0) || !std::isfinite(nu_rate)) throw ValidationError("multicast rate must be finite and >= 0");
  if (!(lam_rate >= 0.0) || !std::isfinite(lam_rate)) throw ValidationError("unicast rate must be finite and >= 0");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon must be positive");
  if (warmup && (!(*warmup >= 0.0) || !std::isfinite(*warmup))) throw ValidationError("warmup must be >= 0");
  if (replications < 1) throw ValidationError("replications must be at least 1");
  if (jobs < 1) throw ValidationError("jobs must be at least 1");
  model();
  tree.build(q);
}

double SimConfig::warmup_time() const { return warmup ? *warmup : 10.0 * (1.0 + nu_rate + lam_rate); }

namespace {

// rate^i / i! or rate^i, allowing a zero rate.
WeightVector rate_weights(ServiceMode mode, double rate, int top) {
  std::vector<double> w(static_cast<std::size_t>(top) + 1, 1.0);
  for (int i = 1; i <= top; ++i)
    w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i) - 1] * rate / (mode == ServiceMode::per_call ? i : 1);
  return WeightVector(std::move(w));
}

}  // namespace

ModelParams SimConfig::model() const {
  return ModelParams::make(q, cap, cv, ce, rate_weights(service, nu_rate, cv), rate_weights(service, lam_rate, ce));
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

struct Departure {
  double time;
  int element;
  std::uint64_t version;
  bool operator>(const Departure& o) const { return time > o.time; }
};

class Network {
 public:
  Network(const SimConfig& cfg, const FiniteTree& tree, int index)
      : cfg_(cfg),
        tree_(tree),
        nodes_(tree.node_count()),
        occ_(static_cast<std::size_t>(tree.node_count() + tree.edge_count()), 0),
        rng_(stream_seed(cfg.seed, static_cast<std::uint64_t>(index))) {
    if (cfg.service == ServiceMode::shared_server) {
      work_.resize(occ_.size());
      last_.assign(occ_.size(), 0.0);
      version_.assign(occ_.size(), 0);
    }
  }

  ReplicationStats run() {
    const double start = cfg_.warmup_time();
    const double end = start + cfg_.horizon;
    ReplicationStats total;
    total.center_time.assign(static_cast<std::size_t>(cfg_.cv) + 1, 0.0);
    total.batches.assign(kBatchCount, ReplicationStats{});
    for (auto& b : total.batches) b.center_time.assign(total.center_time.size(), 0.0);

    const double node_rate = cfg_.nu_rate * nodes_;
    const double arrival_rate = node_rate + cfg_.lam_rate * tree_.edge_count();
    std::exponential_distribution<double> gap(arrival_rate > 0.0 ? arrival_rate : 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double inf = std::numeric_limits<double>::infinity();

    double now = 0.0;
    double next_arrival = arrival_rate > 0.0 ? gap(rng_) : inf;
    auto batch_of = [&](double t) {
      return std::min(kBatchCount - 1, static_cast<int>((t - start) / cfg_.horizon * kBatchCount));
    };

    while (true) {
      drop_stale();
      const double next_departure = departures_.empty() ? inf : departures_.top().time;
      const double t = std::min(next_arrival, next_departure);
      accumulate_time(total, now, std::min(t, end), start, end);
      if (t > end) break;
      now = t;
      const bool measured = now >= start;
      if (measured) {
        ++total.events;
        ++total.batches[static_cast<std::size_t>(batch_of(now))].events;
      }

      if (next_arrival <= next_departure) {
        const double pick = unit(rng_) * arrival_rate;
        int element;
        if (pick < node_rate)
          element = std::min(nodes_ - 1, static_cast<int>(pick / cfg_.nu_rate));
        else
          element = nodes_ + std::min(tree_.edge_count() - 1, static_cast<int>((pick - node_rate) / cfg_.lam_rate));
        const bool ok = admissible(element);
        if (measured) record(total, batch_of(now), element, ok);
        if (ok) admit(element, now);
        next_arrival = now + gap(rng_);
      } else {
        complete(now);
      }
      if (cfg_.check_invariants) assert_feasible();
    }
    return total;
  }

 private:
  double duration() {
    if (cfg_.durations == DurationMode::deterministic) return 1.0;
    return std::exponential_distribution<double>(1.0)(rng_);
  }

  int& occ(int element) { return occ_[static_cast<std::size_t>(element)]; }

  bool admissible(int element) {
    if (element < nodes_) {
      if (occ(element) >= cfg_.cv) return false;
      for (int e : tree_.incident(element)) {
        const int u = tree_.other_end(e, element);
        if (occ(element) + 1 + occ(nodes_ + e) + occ(u) > cfg_.cap) return false;
      }
      return true;
    }
    const int e = element - nodes_;
    const auto [u, v] = tree_.edges()[static_cast<std::size_t>(e)];
    return occ(element) < cfg_.ce && occ(u) + occ(element) + 1 + occ(v) <= cfg_.cap;
  }

  void record(ReplicationStats& s, int batch, int element, bool ok) {
    auto bump = [&](ReplicationStats& r) {
      if (element == 0) {
        ++r.multicast_offered;
        if (ok) ++r.multicast_accepted;
      } else if (element == nodes_) {
        ++r.unicast_offered;
        if (ok) ++r.unicast_accepted;
      }
    };
    bump(s);
    bump(s.batches[static_cast<std::size_t>(batch)]);
  }

  void accumulate_time(ReplicationStats& s, double from, double to, double start, double end) {
    from = std::max(from, start);
    if (to <= from) return;
    const auto state = static_cast<std::size_t>(occ(0));
    s.center_time[state] += to - from;
    // Split across batch boundaries.
    const double width = (end - start) / kBatchCount;
    while (from < to) {
      const int b = std::min(kBatchCount - 1, static_cast<int>((from - start) / width));
      const double edge = (b == kBatchCount - 1) ? to : std::min(to, start + (b + 1) * width);
      s.batches[static_cast<std::size_t>(b)].center_time[state] += edge - from;
      if (edge <= from) break;
      from = edge;
    }
  }

  void admit(int element, double now) {
    if (cfg_.service == ServiceMode::per_call) {
      ++occ(element);
      departures_.push({now + duration(), element, 0});
      return;
    }
    serve_until(element, now);
    work_[static_cast<std::size_t>(element)].push_back(duration());
    ++occ(element);
    reschedule(element, now);
  }

  void complete(double now) {
    const Departure d = departures_.top();
    departures_.pop();
    if (cfg_.service == ServiceMode::per_call) {
      --occ(d.element);
      return;
    }
    serve_until(d.element, now);
    auto& w = work_[static_cast<std::size_t>(d.element)];
    w.erase(std::min_element(w.begin(), w.end()));
    --occ(d.element);
    reschedule(d.element, now);
  }

  // Processor sharing: each of the n calls receives service at rate 1/n.
  void serve_until(int element, double now) {
    const auto i = static_cast<std::size_t>(element);
    const int n = occ(element);
    if (n > 0) {
      const double served = (now - last_[i]) / n;
      for (double& r : work_[i]) r = std::max(0.0, r - served);
    }
    last_[i] = now;
  }

  void reschedule(int element, double now) {
    const auto i = static_cast<std::size_t>(element);
    ++version_[i];
    if (occ(element) == 0) return;
    const double least = *std::min_element(work_[i].begin(), work_[i].end());
    departures_.push({now + least * occ(element), element, version_[i]});
  }

  void drop_stale() {
    if (cfg_.service != ServiceMode::shared_server) return;
    while (!departures_.empty() &&
           departures_.top().version != version_[static_cast<std::size_t>(departures_.top().element)])
      departures_.pop();
  }

  void assert_feasible() {
    Configuration c{std::vector<int>(occ_.begin(), occ_.begin() + nodes_), std::vector<int>(occ_.begin() + nodes_, occ_.end())};
    if (!is_feasible(model_(), tree_, c)) throw InternalError("simulation reached an infeasible state");
  }

  const ModelParams& model_() {
    if (!model_cache_) model_cache_ = cfg_.model();
    return *model_cache_;
  }

  const SimConfig& cfg_;
  const FiniteTree& tree_;
  int nodes_;
  std::vector<int> occ_;
  std::mt19937_64 rng_;
  std::priority_queue<Departure, std::vector<Departure>, std::greater<>> departures_;
  std::vector<std::vector<double>> work_;
  std::vector<double> last_;
  std::vector<std::uint64_t> version_;
  std::optional<ModelParams> model_cache_;
};

double blocked_fraction(long long offered, long long accepted) {
  return offered > 0 ? 1.0 - static_cast<double>(accepted) / static_cast<double>(offered) : 0.0;
}

Estimate mean_and_error(const std::vector<double>& xs) {
  Estimate e;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) e.mean += x;
  e.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return e;
}

// Per-sample values for blocking and center occupancy.
void summarize(const std::vector<const ReplicationStats*>& samples, SimStats& out) {
  std::vector<double> mb, ub;
  std::vector<std::vector<double>> occ(out.center_occupancy.size());
  for (const auto* s : samples) {
    // Samples with no offered calls carry no blocking information.
    if (s->multicast_offered > 0) mb.push_back(blocked_fraction(s->multicast_offered, s->multicast_accepted));
    if (s->unicast_offered > 0) ub.push_back(blocked_fraction(s->unicast_offered, s->unicast_accepted));
    double span = 0.0;
    for (double t : s->center_time) span += t;
    for (std::size_t i = 0; i < occ.size(); ++i) occ[i].push_back(span > 0.0 ? s->center_time[i] / span : 0.0);
  }
  if (!mb.empty()) out.multicast_beta = mean_and_error(mb);
  if (!ub.empty()) out.unicast_beta = mean_and_error(ub);
  for (std::size_t i = 0; i < occ.size(); ++i) out.center_occupancy[i] = mean_and_error(occ[i]);
}

}  // namespace

ReplicationStats run_replication(const SimConfig& cfg, int index) {
  cfg.validate();
  const FiniteTree tree = cfg.tree.build(cfg.q);
  return Network(cfg, tree, index).run();
}

SimStats run_simulation(const SimConfig& cfg) {
  cfg.validate();
  SimStats out;
  out.replications.resize(static_cast<std::size_t>(cfg.replications));
  parallel_for(out.replications.size(), cfg.jobs,
               [&](std::size_t r) { out.replications[r] = run_replication(cfg, static_cast<int>(r)); });
  for (const auto& r : out.replications) {
    out.multicast_offered += r.multicast_offered;
    out.multicast_accepted += r.multicast_accepted;
    out.unicast_offered += r.unicast_offered;
    out.unicast_accepted += r.unicast_accepted;
    out.events += r.events;
  }
  out.center_occupancy.resize(static_cast<std::size_t>(cfg.cv) + 1);
  std::vector<const ReplicationStats*> samples;
  if (cfg.replications > 1) {
    out.error_method = "replications";
    for (const auto& r : out.replications) samples.push_back(&r);
  } else {
    out.error_method = "batch-means";
    for (const auto& b : out.replications.front().batches) samples.push_back(&b);
  }
  summarize(samples, out);
  return out;
}

namespace {

nlohmann::json estimate_json(const Estimate& e) { return {{"mean", e.mean}, {"stderr", e.std_error}}; }

}  // namespace

nlohmann::json SimStats::to_json() const {
  nlohmann::json occ = nlohmann::json::array();
  for (const auto& e : center_occupancy) occ.push_back(estimate_json(e));
  return {{"multicast", {{"offered", multicast_offered}, {"accepted", multicast_accepted}, {"beta", estimate_json(multicast_beta)}}},
          {"unicast", {{"offered", unicast_offered}, {"accepted", unicast_accepted}, {"beta", estimate_json(unicast_beta)}}},
          {"center_occupancy", occ},
          {"events", events},
          {"replications", replications.size()},
          {"error_method", error_method}};
}

ExactValues exact_values(const SimConfig& cfg) {
  cfg.validate();
  const ModelParams p = cfg.model();
  const FiniteTree t = cfg.tree.build(cfg.q);
  const ExactReport r = exact_report(p, t, 0, t.edge_count() > 0 ? 0 : -1);
  return {r.multicast_beta, r.unicast_beta, r.occupancy};
}

namespace {

double z_score(double estimate, double reference, double se) {
  const double diff = estimate - reference;
  if (se > 0.0) return diff / se;
  if (std::abs(diff) <= 1e-12) return 0.0;
  return diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

void finish(ComparisonReport& r) {
  if (r.quantities.empty()) throw ValidationError("nothing to compare");
  std::size_t good = 0;
  for (const auto& q : r.quantities)
    if (std::abs(q.z) <= kZLimit) ++good;
  r.pass_fraction = static_cast<double>(good) / static_cast<double>(r.quantities.size());
  r.passed = r.pass_fraction >= kPassFraction;
}

}  // namespace

ComparisonReport compare(const SimStats& stats, const ExactValues& exact) {
  if (stats.center_occupancy.size() != exact.center_occupancy.size())
    throw ValidationError("center occupancy dimensions differ");
  ComparisonReport r;
  auto add = [&](std::string name, const Estimate& e, double ref) {
    r.quantities.push_back({std::move(name), e.mean, e.std_error, ref, z_score(e.mean, ref, e.std_error)});
  };
  // A stream with no offered calls has no blocking estimate.
  if (stats.multicast_offered > 0) add("multicast_beta", stats.multicast_beta, exact.multicast_beta);
  if (stats.unicast_offered > 0) add("unicast_beta", stats.unicast_beta, exact.unicast_beta);
  for (std::size_t i = 0; i < exact.center_occupancy.size(); ++i)
    add("center_occupancy[" + std::to_string(i) + "]", stats.center_occupancy[i], exact.center_occupancy[i]);
  finish(r);
  return r;
}

ComparisonReport compare_runs(const SimStats& a, const SimStats& b) {
  if (a.center_occupancy.size() != b.center_occupancy.size())
    throw ValidationError("center occupancy dimensions differ");
  ComparisonReport r;
  auto add = [&](std::string name, const Estimate& x, const Estimate& y) {
    const double se = std::hypot(x.std_error, y.std_error);
    r.quantities.push_back({std::move(name), x.mean, se, y.mean, z_score(x.mean, y.mean, se)});
  };
  if (a.multicast_offered > 0 && b.multicast_offered > 0) add("multicast_beta", a.multicast_beta, b.multicast_beta);
  if (a.unicast_offered > 0 && b.unicast_offered > 0) add("unicast_beta", a.unicast_beta, b.unicast_beta);
  for (std::size_t i = 0; i < a.center_occupancy.size(); ++i)
    add("center_occupancy[" + std::to_string(i) + "]", a.center_occupancy[i], b.center_occupancy[i]);
  finish(r);
  return r;
}

ComparisonReport pool(const std::vector<ComparisonReport>& reports) {
  ComparisonReport r;
  for (const auto& x : reports) r.quantities.insert(r.quantities.end(), x.quantities.begin(), x.quantities.end());
  finish(r);
  return r;
}

nlohmann::json ComparisonReport::to_json() const {
  nlohmann::json qs = nlohmann::json::array();
  for (const auto& q : quantities) {
    nlohmann::json z = std::isfinite(q.z) ? nlohmann::json(q.z) : nlohmann::json(nullptr);
    qs.push_back({{"name", q.name}, {"estimate", q.estimate}, {"stderr", q.std_error}, {"reference", q.reference}, {"z", z}});
  }
  return {{"quantities", qs}, {"pass_fraction", pass_fraction}, {"passed", passed}};
}

}  // namespace lossnet
