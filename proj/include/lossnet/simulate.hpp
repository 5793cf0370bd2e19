#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lossnet/oracle.hpp"
#include "lossnet/rfmap.hpp"

namespace lossnet {

enum class TreeKind { single, path, rooted, spherical };

/// Small tree shape. `size` is the height (rooted), radius (spherical) or
/// node count (path); ignored for a single node.
struct TreeSpec {
  TreeKind kind = TreeKind::spherical;
  int size = 1;
  FiniteTree build(int q) const;
};

enum class ServiceMode { per_call, shared_server };
enum class DurationMode { exponential, deterministic };

struct SimConfig {
  int q = 2;
  int cap = 2;
  int cv = 1;
  int ce = 2;
  double nu_rate = 1.0;   // multicast arrivals per node
  double lam_rate = 1.0;  // unicast arrivals per edge
  TreeSpec tree;
  ServiceMode service = ServiceMode::per_call;
  DurationMode durations = DurationMode::exponential;
  std::optional<double> warmup;  // default 10 (1 + ν + λ)
  double horizon = 1e4;          // measured time after warmup
  int replications = 10;
  std::uint64_t seed = 1;
  int jobs = 1;
  // Assert feasibility after every event (slow).
  bool check_invariants = false;

  void validate() const;
  double warmup_time() const;
  /// Product-form weights the dynamics should have: Poisson for per-call
  /// service, geometric for the shared server.
  ModelParams model() const;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct ReplicationStats {
  long long multicast_offered = 0;
  long long multicast_accepted = 0;
  long long unicast_offered = 0;
  long long unicast_accepted = 0;
  long long events = 0;
  std::vector<double> center_time;  // time in each center occupancy
  // Same quantities per batch (20 equal time slices), used when R = 1.
  std::vector<ReplicationStats> batches;
};

struct SimStats {
  // Multicast calls at node 0 and unicast calls on edge 0.
  long long multicast_offered = 0;
  long long multicast_accepted = 0;
  long long unicast_offered = 0;
  long long unicast_accepted = 0;
  long long events = 0;
  Estimate multicast_beta;
  Estimate unicast_beta;
  std::vector<Estimate> center_occupancy;
  std::string error_method;  // "replications" or "batch-means"
  std::vector<ReplicationStats> replications;

  nlohmann::json to_json() const;
};

inline constexpr int kBatchCount = 20;

SimStats run_simulation(const SimConfig& cfg);
/// One replication with its own random stream.
ReplicationStats run_replication(const SimConfig& cfg, int index);

/// splitmix64 of (seed, index): the per-replication stream seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

struct ExactValues {
  double multicast_beta = 0.0;
  double unicast_beta = 0.0;
  std::vector<double> center_occupancy;
};

/// Oracle values for the simulated tree under cfg.model().
ExactValues exact_values(const SimConfig& cfg);

struct Quantity {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double reference = 0.0;
  double z = 0.0;
};

struct ComparisonReport {
  std::vector<Quantity> quantities;
  double pass_fraction = 0.0;
  bool passed = false;

  nlohmann::json to_json() const;
};

inline constexpr double kZLimit = 3.0;
inline constexpr double kPassFraction = 0.95;

/// z = (estimate - reference) / stderr per quantity; passes when at least 95%
/// of |z| are within 3.
ComparisonReport compare(const SimStats& stats, const ExactValues& exact);
/// Two runs against each other, z = difference / combined stderr.
ComparisonReport compare_runs(const SimStats& a, const SimStats& b);
/// Pools quantities from several comparisons for the suite-wide 95% rule.
ComparisonReport pool(const std::vector<ComparisonReport>& reports);

std::string to_string(ServiceMode m);
std::string to_string(DurationMode m);
std::string to_string(TreeKind k);

}  // namespace lossnet
