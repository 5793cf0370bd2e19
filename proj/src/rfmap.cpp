#include "lossnet/rfmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "lossnet/errors.hpp"

namespace lossnet {

void ModelParams::validate() const {
  if (q < 1) throw ValidationError("q must be at least 1");
  if (cap < 1) throw ValidationError("capacity must be at least 1");
  if (cv < 1 || cv > cap) throw ValidationError("C_V must lie in [1, C]");
  if (ce < 0 || ce > cap) throw ValidationError("C_E must lie in [0, C]");
  if (node_weights.top_index() != cv) throw ValidationError("node weights must have C_V + 1 entries");
  if (edge_weights.top_index() != ce) throw ValidationError("edge weights must have C_E + 1 entries");
  if (node_weights[0] != 1.0) throw ValidationError("node weight 0 must equal 1");
}

ModelParams ModelParams::make(int q, int cap, int cv, int ce, WeightVector node_weights,
                              WeightVector edge_weights) {
  ModelParams p{q, cap, cv, ce, std::move(node_weights), std::move(edge_weights)};
  p.validate();
  return p;
}

ModelParams ModelParams::from_rates(int q, int cap, int cv, int ce, WeightFamily node_family,
                                    double nu, WeightFamily edge_family, double lam) {
  if (cv < 0 || ce < 0) throw ValidationError("controls must be nonnegative");
  return make(q, cap, cv, ce, make_family(node_family, nu, cv), make_family(edge_family, lam, ce));
}

RatioVector::RatioVector(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("ratio vector entries must be finite and nonnegative");
}

double RatioVector::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double sup_distance(const RatioVector& a, const RatioVector& b) {
  if (a.dim() != b.dim()) throw ValidationError("ratio vector dimension mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.values_.size(); ++i) m = std::max(m, std::abs(a.values_[i] - b.values_[i]));
  return m;
}

double pow_nonneg(double base, double exponent) {
  if (base == 0.0) return 0.0;
  return std::exp(exponent * std::log(base));
}

RandomFieldMap::RandomFieldMap(const ModelParams& p) : params_(p), prefix_(static_cast<std::size_t>(p.cv) + 1) {
  params_.validate();
}

void RandomFieldMap::apply(std::span<const double> xi, std::span<double> out) const {
  const auto& p = params_;
  if (static_cast<int>(xi.size()) != p.cv || static_cast<int>(out.size()) != p.cv)
    throw ValidationError("ratio vector must have C_V components");

  // prefix_[m] = 1 + ξ(1) + ... + ξ(m)
  prefix_[0] = 1.0;
  for (int j = 1; j <= p.cv; ++j) prefix_[j] = prefix_[j - 1] + xi[j - 1];

  auto weighted = [&](int k) {
    double s = 0.0;
    const int top = std::min(p.cap - k, p.ce);
    for (int i = 0; i <= top; ++i) s += p.lambda(i) * prefix_[std::min(p.cap - k - i, p.cv)];
    return s;
  };

  const double den = weighted(0);
  for (int k = 1; k <= p.cv; ++k) out[k - 1] = p.nu(k) * pow_nonneg(weighted(k) / den, p.q);
}

bool RandomFieldMap::scalar_nonincreasing() const {
  const auto& p = params_;
  if (p.cv != 1) return false;
  // Φ(ξ) = ν ((a + ξ b) / (c + ξ a))^q, nonincreasing iff b c <= a^2.
  Rational a = 0, b = 0, c = 0;
  for (int i = 0; i <= p.ce; ++i) {
    const Rational l = to_rational(p.lambda(i));
    c += l;
    if (i <= p.cap - 1) a += l;
    if (i <= p.cap - 2) b += l;
  }
  return b * c <= a * a;
}

RatioVector apply_phi(const ModelParams& p, const RatioVector& xi) {
  RandomFieldMap map(p);
  std::vector<double> out(static_cast<std::size_t>(p.cv));
  map.apply(xi.values(), out);
  return RatioVector(std::move(out));
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::unique: return "unique";
    case Verdict::multiple: return "multiple";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

void ClassifyOptions::validate() const {
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");
  if (!(sep > 0.0)) throw ValidationError("sep must be positive");
  if (!(tol < sep)) throw ValidationError("tol must be smaller than sep");
  if (max_iter < 4) throw ValidationError("max_iter must be at least 4");
}

namespace {

double dist(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// Remaining movement of a subsequence that just moved `gap` and contracts by
// `kappa` per step.
double geometric_tail(double gap, double kappa) {
  if (gap == 0.0) return 0.0;
  if (!(kappa < 1.0)) return std::numeric_limits<double>::infinity();
  return gap * kappa / (1.0 - kappa);
}

// Contraction factor of Φ∘Φ at `x` along the direction from x to y, by a
// forward difference. work needs four vectors of the right size.
double twice_contraction(const RandomFieldMap& map, std::span<const double> x, std::span<const double> y,
                         double scale, std::array<std::vector<double>, 4>& work) {
  const double span = dist(x, y);
  if (span == 0.0) return std::numeric_limits<double>::infinity();
  const double h = 1e-7 * scale;
  auto& shifted = work[0];
  auto& once = work[1];
  auto& base2 = work[2];
  auto& moved2 = work[3];
  for (std::size_t i = 0; i < x.size(); ++i) shifted[i] = std::max(0.0, x[i] + h * (y[i] - x[i]) / span);
  map.apply(x, once);
  map.apply(once, base2);
  map.apply(shifted, once);
  map.apply(once, moved2);
  const double moved = dist(shifted, x);
  return moved > 0.0 ? dist(moved2, base2) / moved : std::numeric_limits<double>::infinity();
}

}  // namespace

UniquenessVerdict classify_by_iteration(const ModelParams& p, const ClassifyOptions& opts) {
  opts.validate();
  RandomFieldMap map(p);
  const auto dim = static_cast<std::size_t>(p.cv);

  // Iterates n-5..n live in a ring indexed by n mod 6.
  constexpr int kRing = 6;
  std::array<std::vector<double>, kRing> ring;
  for (auto& v : ring) v.assign(dim, 0.0);
  auto at = [&](long n) -> std::vector<double>& { return ring[static_cast<std::size_t>(n % kRing)]; };

  std::array<std::vector<double>, 4> work;
  for (auto& v : work) v.assign(dim, 0.0);

  const bool track_sandwich = map.scalar_nonincreasing();
  bool sandwich = true;
  auto slack = [](double x) { return 1e-14 * (1.0 + std::abs(x)); };

  UniquenessVerdict result;
  auto finish = [&](Verdict kind, long n) {
    result.kind = kind;
    result.iterations_used = n;
    const long even = (n % 2 == 0) ? n : n - 1;
    const long odd = (n % 2 == 1) ? n : n - 1;
    result.last_even = RatioVector(at(even));
    result.last_odd = RatioVector(odd >= 0 ? at(odd) : at(even));
    if (kind == Verdict::unique && !result.fixed_point) result.fixed_point = RatioVector(at(n));
    if (kind == Verdict::multiple) {
      result.even_limit = result.last_even;
      result.odd_limit = result.last_odd;
    }
    if (track_sandwich) result.sandwich_ok = sandwich;
    return result;
  };

  for (long n = 1; n <= opts.max_iter; ++n) {
    map.apply(at(n - 1), at(n));
    const auto& cur = at(n);
    const auto& prev = at(n - 1);

    if (track_sandwich) {
      const double x = cur[0];
      if (n >= 2 && (n % 2 == 0 ? x < at(n - 2)[0] - slack(x) : x > at(n - 2)[0] + slack(x))) sandwich = false;
      // the latest even iterate must not exceed the latest odd one
      if (n % 2 == 0 ? x > prev[0] + slack(x) : x < prev[0] - slack(x)) sandwich = false;
    }

    const double scale = 1.0 + norm(cur);
    if (dist(cur, prev) <= opts.tol * scale) return finish(Verdict::unique, n);

    if (n >= 3) {
      const double gap_a = dist(cur, at(n - 2));
      const double gap_b = dist(prev, at(n - 3));
      if (gap_a <= opts.tol * scale && gap_b <= opts.tol * scale) {
        // Both subsequences have nearly stopped. Slow collapse onto a fixed
        // point looks the same locally, so estimate how far each still has to
        // go from the contraction of the twice-applied map along the
        // oscillation. Gap ratios are useless here: they sit at rounding level.
        const double sepn = dist(cur, prev);
        const double kappa = twice_contraction(map, cur, prev, scale, work);
        const double tails = geometric_tail(gap_a, kappa) + geometric_tail(gap_b, kappa);
        if (sepn - tails > opts.sep * scale) return finish(Verdict::multiple, n);
        // Rounding can trap the iterates in a tiny two-cycle around the fixed
        // point; its midpoint is then a fixed point to tolerance.
        auto& mid = work[0];
        auto& img = work[1];
        for (std::size_t i = 0; i < dim; ++i) mid[i] = 0.5 * (cur[i] + prev[i]);
        map.apply(mid, img);
        if (dist(img, mid) <= opts.tol * (1.0 + norm(mid))) {
          result.fixed_point = RatioVector(mid);
          return finish(Verdict::unique, n);
        }
      }
    }
  }
  return finish(Verdict::inconclusive, opts.max_iter);
}

double interaction_phi(const ModelParams& p, int i, int j) {
  if (i < 0 || i > p.cv || j < 0 || j > p.cv) throw ValidationError("interaction index out of range");
  if (i + j > p.cap) return 0.0;
  const double node = pow_nonneg(p.nu(i) * p.nu(j), 1.0 / (p.q + 1));
  return node * p.edge_weights.partial_sum(std::min(p.ce, p.cap - (i + j)));
}

std::vector<double> apply_F_phi(const ModelParams& p, std::span<const double> psi) {
  p.validate();
  if (static_cast<int>(psi.size()) != p.cv + 1) throw ValidationError("psi must have C_V + 1 components");
  if (psi[0] != 1.0) throw ValidationError("psi[0] must equal 1");
  for (double v : psi)
    if (!(v >= 0.0)) throw ValidationError("psi entries must be nonnegative");

  auto row = [&](int i) {
    double s = 0.0;
    for (int j = 0; j <= std::min(p.cap - i, p.cv); ++j) s += interaction_phi(p, i, j) * psi[j];
    return s;
  };
  const double den = row(0);
  std::vector<double> out(psi.size());
  for (int i = 0; i <= p.cv; ++i) out[i] = pow_nonneg(row(i) / den, p.q);
  return out;
}

ConjugateMaps::ConjugateMaps(const ModelParams& p) {
  p.validate();
  scale_.resize(static_cast<std::size_t>(p.cv));
  for (int k = 1; k <= p.cv; ++k) {
    if (!(p.nu(k) > 0.0)) throw ValidationError("conjugacy needs every node weight nu_k > 0");
    scale_[k - 1] = pow_nonneg(p.nu(k), 1.0 / (p.q + 1));
  }
}

RatioVector ConjugateMaps::apply(std::span<const double> psi) const {
  if (psi.size() != scale_.size() + 1) throw ValidationError("psi must have C_V + 1 components");
  std::vector<double> xi(scale_.size());
  for (std::size_t k = 0; k < scale_.size(); ++k) xi[k] = scale_[k] * psi[k + 1];
  return RatioVector(std::move(xi));
}

std::vector<double> ConjugateMaps::invert(const RatioVector& xi) const {
  if (static_cast<std::size_t>(xi.dim()) != scale_.size()) throw ValidationError("ratio vector must have C_V components");
  std::vector<double> psi(scale_.size() + 1);
  psi[0] = 1.0;
  for (std::size_t k = 0; k < scale_.size(); ++k) psi[k + 1] = xi.values()[k] / scale_[k];
  return psi;
}

ConjugateMaps conjugate_maps(const ModelParams& p) { return ConjugateMaps(p); }

}  // namespace lossnet
