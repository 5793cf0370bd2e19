#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lossnet/exact.hpp"

namespace lossnet {

/// Nonnegative occupancy weights w_0..w_n with their running sums
/// Λ_k = w_0 + ... + w_k. Immutable once built.
///
/// Construction enforces w_0 > 0 and w_i >= 0 for every i; interior zeros are
/// allowed.
class WeightVector {
 public:
  explicit WeightVector(std::vector<double> entries);

  int top_index() const { return static_cast<int>(entries_.size()) - 1; }
  std::size_t size() const { return entries_.size(); }

  double operator[](int i) const { return entries_[static_cast<std::size_t>(i)]; }
  double entry(int i) const;
  double partial_sum(int k) const;

  std::span<const double> entries() const { return entries_; }
  std::span<const double> partial_sums() const { return partial_sums_; }

  // Exact Λ_k of the stored doubles.
  Rational exact_partial_sum(int k) const;

  // First top+1 entries.
  WeightVector truncated(int top) const;

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> entries_;
  std::vector<double> partial_sums_;
};

enum class WeightFamily { poisson, geometric };

/// w_i = rate^i / i!  (loss-system weights).
WeightVector make_poisson(double rate, int top_index);
/// w_i = rate^i  (processor-sharing weights).
WeightVector make_geometric(double rate, int top_index);
WeightVector make_family(WeightFamily family, double rate, int top_index);

WeightFamily parse_family(const std::string& name);
std::string to_string(WeightFamily family);

double partial_sum(const WeightVector& w, int k);

/// Λ_{C-1}^2 - Λ_C Λ_{C-2}, evaluated exactly.
Rational assumption_gap(const WeightVector& w, int cap);

/// True iff Λ_{C-1}^2 - Λ_C Λ_{C-2} > 0. Throws ValidationError when cap < 2
/// or w has fewer than cap+1 entries.
bool check_assumption(const WeightVector& w, int cap);

/// One real per line; blank lines and '#' comments are skipped.
WeightVector parse_weights(std::istream& in);
WeightVector load_weights(const std::filesystem::path& path);

}  // namespace lossnet
