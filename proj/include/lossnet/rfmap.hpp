#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lossnet/weights.hpp"

namespace lossnet {

/// Full model instance on the (q+1)-regular tree.
///
/// q is the branching factor, cap the edge capacity C, cv the multicast cap
/// C_V and ce the unicast cap C_E. node_weights has exactly cv+1 entries with
/// entry 0 equal to 1; edge_weights has exactly ce+1 entries.
struct ModelParams {
  int q = 1;
  int cap = 1;
  int cv = 1;
  int ce = 0;
  WeightVector node_weights{std::vector<double>{1.0}};
  WeightVector edge_weights{std::vector<double>{1.0}};

  /// Throws ValidationError on any broken invariant.
  void validate() const;

  static ModelParams make(int q, int cap, int cv, int ce, WeightVector node_weights,
                          WeightVector edge_weights);
  /// Node weights from `node_family` at rate nu, edge weights from
  /// `edge_family` at rate lam, both cut to the right length.
  static ModelParams from_rates(int q, int cap, int cv, int ce, WeightFamily node_family, double nu,
                                WeightFamily edge_family, double lam);

  double nu(int k) const { return node_weights[k]; }
  double lambda(int k) const { return edge_weights[k]; }
};

/// ξ(1..C_V), occupancy ratios relative to an empty root. ξ(0) = 1 is implied.
class RatioVector {
 public:
  RatioVector() = default;
  explicit RatioVector(std::vector<double> values);
  static RatioVector zeros(int dim) { return RatioVector(std::vector<double>(static_cast<std::size_t>(dim), 0.0)); }

  int dim() const { return static_cast<int>(values_.size()); }
  /// 1-based component, k in 1..dim.
  double operator()(int k) const { return values_[static_cast<std::size_t>(k - 1)]; }
  /// Component with the ξ(0) = 1 convention, k in 0..dim.
  double with_unit(int k) const { return k == 0 ? 1.0 : values_[static_cast<std::size_t>(k - 1)]; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }

  double sup_norm() const;
  friend double sup_distance(const RatioVector& a, const RatioVector& b);
  friend bool operator==(const RatioVector&, const RatioVector&) = default;

 private:
  std::vector<double> values_;
};

double sup_distance(const RatioVector& a, const RatioVector& b);

/// The random field map Φ on ratio vectors.
RatioVector apply_phi(const ModelParams& p, const RatioVector& xi);

/// Allocation-free evaluator of Φ for hot loops.
class RandomFieldMap {
 public:
  explicit RandomFieldMap(const ModelParams& p);
  void apply(std::span<const double> xi, std::span<double> out) const;
  const ModelParams& params() const { return params_; }

  /// Φ is nonincreasing for C_V = 1 exactly when this holds; the even/odd
  /// sandwich ordering of the iterates is only meaningful then.
  bool scalar_nonincreasing() const;

 private:
  ModelParams params_;
  // Scratch, sized C_V+1; mutable so apply() stays const and cheap.
  mutable std::vector<double> prefix_;
};

enum class Verdict { unique, multiple, inconclusive };
std::string to_string(Verdict v);

struct ClassifyOptions {
  double tol = 1e-12;
  double sep = 1e-8;
  long max_iter = 1'000'000;
  void validate() const;
};

struct UniquenessVerdict {
  Verdict kind = Verdict::inconclusive;
  std::optional<RatioVector> fixed_point;
  std::optional<RatioVector> even_limit;
  std::optional<RatioVector> odd_limit;
  long iterations_used = 0;
  // Set for C_V = 1 runs with a nonincreasing map: whether
  // ξ0 <= ξ2 <= ξ4 <= ... <= ξ5 <= ξ3 <= ξ1 held along the whole run.
  std::optional<bool> sandwich_ok;
  // Last even- and odd-indexed iterates at termination, whatever the verdict.
  RatioVector last_even;
  RatioVector last_odd;
};

/// Iterates Φ from 0. Unique once successive iterates agree to tol
/// (relative to 1 + |ξ|); Multiple once the even and odd subsequences have
/// each settled to tol and stay more than sep apart even after allowing for
/// their projected geometric tails; Inconclusive when max_iter runs out.
UniquenessVerdict classify_by_iteration(const ModelParams& p, const ClassifyOptions& opts = {});

/// Pair interaction φ(i, j) of the node-only reformulation.
double interaction_phi(const ModelParams& p, int i, int j);

/// F^φ on ψ = (1, ψ_1, ..., ψ_{C_V}).
std::vector<double> apply_F_phi(const ModelParams& p, std::span<const double> psi);

/// The diagonal change of variables A(ψ)_k = ν_k^{1/(q+1)} ψ_k and its inverse,
/// which conjugate F^φ to Φ.
class ConjugateMaps {
 public:
  /// Throws ValidationError if some ν_k (k >= 1) is zero.
  explicit ConjugateMaps(const ModelParams& p);
  RatioVector apply(std::span<const double> psi) const;
  std::vector<double> invert(const RatioVector& xi) const;

 private:
  std::vector<double> scale_;  // ν_k^{1/(q+1)}, k = 1..C_V
};

ConjugateMaps conjugate_maps(const ModelParams& p);

/// base^exponent with base >= 0, via exp(log) for positive bases.
double pow_nonneg(double base, double exponent);

}  // namespace lossnet
