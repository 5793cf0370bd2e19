#include "lossnet/treecalc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "lossnet/errors.hpp"

namespace lossnet {

namespace {

void require_dim(const ModelParams& p, const RatioVector& xi) {
  if (xi.dim() != p.cv) throw ValidationError("ratio vector has the wrong dimension");
}

// Σ_{j<=min(budget, C_E)} λ_j Σ_{k<=min(budget-j, C_V)} ξ(k), with ξ(0) = 1.
// `budget` is the capacity left on an edge once its endpoint is fixed.
double branch_sum(const ModelParams& p, const RatioVector& xi, int budget) {
  double total = 0.0;
  for (int j = 0; j <= std::min(budget, p.ce); ++j) {
    double inner = 0.0;
    for (int k = 0; k <= std::min(budget - j, p.cv); ++k) inner += xi.with_unit(k);
    total += p.lambda(j) * inner;
  }
  return total;
}

double log_or_ninf(double x) { return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity(); }

// Normalizes log-weights in place into probabilities.
std::vector<double> normalize_logs(std::vector<double> logs) {
  const double top = *std::max_element(logs.begin(), logs.end());
  if (!std::isfinite(top)) throw InternalError("all configurations have zero weight");
  double total = 0.0;
  for (double& v : logs) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : logs) v /= total;
  return logs;
}

void check_radius(int radius) {
  if (radius < 1) throw ValidationError("radius must be at least 1");
}

}  // namespace

std::vector<double> NormalizedState::partition() const {
  std::vector<double> z(static_cast<std::size_t>(xi.dim()) + 1);
  const double z0 = std::exp(log_z0);
  for (int k = 0; k <= xi.dim(); ++k) z[static_cast<std::size_t>(k)] = z0 * xi.with_unit(k);
  return z;
}

NormalizedState base_state(const ModelParams& p) {
  p.validate();
  return {RatioVector(std::vector<double>(p.node_weights.entries().begin() + 1, p.node_weights.entries().end())),
          0.0};
}

NormalizedState advance(const RandomFieldMap& phi, const NormalizedState& s) {
  const ModelParams& p = phi.params();
  require_dim(p, s.xi);
  NormalizedState next;
  next.xi = RatioVector::zeros(p.cv);
  phi.apply(s.xi.values(), next.xi.mutable_values());
  next.log_z0 = p.q * (s.log_z0 + std::log(branch_sum(p, s.xi, p.cap)));
  return next;
}

NormalizedState rooted_recursion(const ModelParams& p, int height) {
  if (height < 0) throw ValidationError("height must be nonnegative");
  const RandomFieldMap phi(p);
  NormalizedState s = base_state(p);
  for (int m = 0; m < height; ++m) s = advance(phi, s);
  return s;
}

std::vector<double> spherical_center_at(const ModelParams& p, const RatioVector& xi) {
  p.validate();
  require_dim(p, xi);
  std::vector<double> logs(static_cast<std::size_t>(p.cv) + 1);
  for (int i = 0; i <= p.cv; ++i)
    logs[static_cast<std::size_t>(i)] = log_or_ninf(p.nu(i)) + (p.q + 1) * log_or_ninf(branch_sum(p, xi, p.cap - i));
  return normalize_logs(std::move(logs));
}

double multicast_blocking_at(const ModelParams& p, const RatioVector& xi) {
  p.validate();
  require_dim(p, xi);
  // Admissible: center below C_V and one spare unit on every incident edge.
  std::vector<double> all(static_cast<std::size_t>(p.cv) + 1);
  std::vector<double> ok(all.size(), -std::numeric_limits<double>::infinity());
  for (int i = 0; i <= p.cv; ++i) {
    const double ln = log_or_ninf(p.nu(i));
    all[static_cast<std::size_t>(i)] = ln + (p.q + 1) * log_or_ninf(branch_sum(p, xi, p.cap - i));
    if (i < p.cv && p.cap - i - 1 >= 0)
      ok[static_cast<std::size_t>(i)] = ln + (p.q + 1) * log_or_ninf(branch_sum(p, xi, p.cap - i - 1));
  }
  const double top = *std::max_element(all.begin(), all.end());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    den += std::exp(all[i] - top);
    num += std::exp(ok[i] - top);
  }
  return std::clamp(1.0 - num / den, 0.0, 1.0);
}

double unicast_blocking_at(const ModelParams& p, const RatioVector& xi) {
  p.validate();
  require_dim(p, xi);
  // Edge between the center (occupancy i, q further branches) and one
  // neighbor (occupancy k, a rooted branch): W(i,j,k) ∝ ν_i B(i)^q λ_j ξ(k).
  std::vector<double> log_center(static_cast<std::size_t>(p.cv) + 1);
  for (int i = 0; i <= p.cv; ++i)
    log_center[static_cast<std::size_t>(i)] = log_or_ninf(p.nu(i)) + p.q * log_or_ninf(branch_sum(p, xi, p.cap - i));
  const double top = *std::max_element(log_center.begin(), log_center.end());
  double total = 0.0, blocked = 0.0;
  for (int i = 0; i <= p.cv; ++i) {
    const double wi = std::exp(log_center[static_cast<std::size_t>(i)] - top);
    if (wi == 0.0) continue;
    for (int j = 0; j <= std::min(p.ce, p.cap - i); ++j) {
      for (int k = 0; k <= std::min(p.cv, p.cap - i - j); ++k) {
        const double w = wi * p.lambda(j) * xi.with_unit(k);
        total += w;
        if (j + 1 > p.ce || i + j + 1 + k > p.cap) blocked += w;
      }
    }
  }
  return std::clamp(blocked / total, 0.0, 1.0);
}

BlockingReport blocking_at(const ModelParams& p, const RatioVector& xi) {
  return {multicast_blocking_at(p, xi), unicast_blocking_at(p, xi), spherical_center_at(p, xi)};
}

std::vector<double> spherical_center(const ModelParams& p, int radius) {
  check_radius(radius);
  return spherical_center_at(p, rooted_recursion(p, radius - 1).xi);
}

double multicast_blocking(const ModelParams& p, int radius) {
  check_radius(radius);
  return multicast_blocking_at(p, rooted_recursion(p, radius - 1).xi);
}

double unicast_blocking(const ModelParams& p, int radius) {
  check_radius(radius);
  return unicast_blocking_at(p, rooted_recursion(p, radius - 1).xi);
}

BlockingReport spherical_blocking(const ModelParams& p, int radius) {
  check_radius(radius);
  return blocking_at(p, rooted_recursion(p, radius - 1).xi);
}

ModelParams ModelTemplate::with_nu(double nu) const {
  return ModelParams::make(q, cap, cv, ce, make_family(node_family, nu, cv), edge_weights.truncated(ce));
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  if (jobs < 1) throw ValidationError("jobs must be at least 1");
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<CurvePoint> blocking_curve(const ModelTemplate& tmpl, const std::vector<double>& nu_grid,
                                       const ClassifyOptions& opts, int jobs) {
  if (nu_grid.empty()) throw ValidationError("nu grid is empty");
  opts.validate();
  std::vector<CurvePoint> out(nu_grid.size());
  parallel_for(nu_grid.size(), jobs, [&](std::size_t idx) {
    const ModelParams p = tmpl.with_nu(nu_grid[idx]);
    const UniquenessVerdict v = classify_by_iteration(p, opts);
    CurvePoint& pt = out[idx];
    pt.nu = nu_grid[idx];
    pt.kind = v.kind;
    pt.iterations = v.iterations_used;
    switch (v.kind) {
      case Verdict::unique:
        pt.xi_even = pt.xi_odd = *v.fixed_point;
        break;
      case Verdict::multiple:
        pt.xi_even = *v.even_limit;
        pt.xi_odd = *v.odd_limit;
        break;
      case Verdict::inconclusive:
        pt.xi_even = v.last_even;
        pt.xi_odd = v.last_odd;
        break;
    }
    pt.even = blocking_at(p, pt.xi_even);
    pt.odd = v.kind == Verdict::unique ? pt.even : blocking_at(p, pt.xi_odd);
  });
  return out;
}

}  // namespace lossnet
