#pragma once

#include <functional>
#include <vector>

#include "lossnet/rfmap.hpp"
#include "lossnet/weights.hpp"

namespace lossnet {

/// ξ_m together with log Z_m(0) for the complete q-ary tree of height m.
struct NormalizedState {
  RatioVector xi;
  double log_z0 = 0.0;

  /// exp(log_z0) * (1, ξ(1), ..., ξ(C_V)). Overflows for deep trees.
  std::vector<double> partition() const;
};

/// One step of the height recursion: state for m -> state for m+1.
NormalizedState advance(const RandomFieldMap& phi, const NormalizedState& s);

NormalizedState base_state(const ModelParams& p);
NormalizedState rooted_recursion(const ModelParams& p, int height);

struct BlockingReport {
  double multicast_beta = 0.0;
  double unicast_beta = 0.0;
  std::vector<double> center_occupancy;
};

/// Occupancy law of the center of the spherical tree whose q+1 branches are
/// rooted trees with ratio vector xi.
std::vector<double> spherical_center_at(const ModelParams& p, const RatioVector& xi);
/// Probability that a multicast arrival at the center is refused.
double multicast_blocking_at(const ModelParams& p, const RatioVector& xi);
/// Probability that a unicast arrival on an edge at the center is refused.
double unicast_blocking_at(const ModelParams& p, const RatioVector& xi);
BlockingReport blocking_at(const ModelParams& p, const RatioVector& xi);

/// Spherical tree of radius L >= 1: the branches are rooted trees of height L-1.
std::vector<double> spherical_center(const ModelParams& p, int radius);
double multicast_blocking(const ModelParams& p, int radius);
double unicast_blocking(const ModelParams& p, int radius);
BlockingReport spherical_blocking(const ModelParams& p, int radius);

/// Everything of a model except the multicast rate ν, for sweeps over ν.
struct ModelTemplate {
  int q = 1;
  int cap = 2;
  int cv = 1;
  int ce = 2;
  WeightFamily node_family = WeightFamily::poisson;
  WeightVector edge_weights{std::vector<double>{1.0}};

  ModelParams with_nu(double nu) const;
};

struct CurvePoint {
  double nu = 0.0;
  Verdict kind = Verdict::inconclusive;
  long iterations = 0;
  // Even and odd branch; identical when the verdict is unique. For an
  // inconclusive run they hold the last iterates.
  RatioVector xi_even;
  RatioVector xi_odd;
  BlockingReport even;
  BlockingReport odd;
};

/// Classifies each ν and evaluates blocking at the limit(s). Results are in
/// grid order; `jobs` worker threads share the grid.
std::vector<CurvePoint> blocking_curve(const ModelTemplate& tmpl, const std::vector<double>& nu_grid,
                                       const ClassifyOptions& opts = {}, int jobs = 1);

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Exceptions are
/// rethrown on the calling thread (the first one by index wins).
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace lossnet
