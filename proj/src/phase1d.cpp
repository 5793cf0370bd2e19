#include "lossnet/phase1d.hpp"

#include <cmath>
#include <limits>

#include "lossnet/errors.hpp"

namespace lossnet::phase1d {

void EdgeParams::validate() const {
  if (q < 1) throw ValidationError("q must be at least 1");
  if (cap < 2) throw ValidationError("capacity must be at least 2");
  if (edge_weights.top_index() < cap) throw ValidationError("edge weights need C + 1 entries");
}

void PhaseParams::validate() const {
  edge.validate();
  if (edge.q < 2) throw ValidationError("q must be at least 2");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw ValidationError("nu must be positive");
  if (!check_assumption(edge.edge_weights, edge.cap))
    throw AssumptionError("edge weights violate Lambda_{C-1}^2 > Lambda_C Lambda_{C-2}");
}

PhaseParams PhaseParams::make(int q, int cap, WeightVector edge_weights, double nu) {
  PhaseParams p{EdgeParams{q, cap, std::move(edge_weights)}, nu};
  p.validate();
  return p;
}

ModelParams PhaseParams::model() const {
  return ModelParams::make(edge.q, edge.cap, 1, edge.cap, WeightVector({1.0, nu}),
                           edge.edge_weights.truncated(edge.cap));
}

namespace {

struct Sums {
  double c, c1, c2;
  explicit Sums(const EdgeParams& e) : c(e.lam_c()), c1(e.lam_c1()), c2(e.lam_c2()) {}
  double num(double xi) const { return c1 + xi * c2; }
  double den(double xi) const { return c + xi * c1; }
  double prod(double xi) const { return num(xi) * den(xi); }
};

// Λ_C Λ_{C-2} - Λ_{C-1}^2, negative under the assumption; computed exactly.
double exact_d(const EdgeParams& e) {
  const Rational c2 = e.edge_weights.exact_partial_sum(e.cap - 2);
  const Rational c1 = c2 + to_rational(e.edge_weights[e.cap - 1]);
  const Rational c = c1 + to_rational(e.edge_weights[e.cap]);
  return static_cast<double>(c * c2 - c1 * c1);
}

void require_xi(double xi) {
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw ValidationError("xi must be finite and nonnegative");
}

// Φ''/Φ' numerator over P(ξ).
double second_ratio_numerator(const EdgeParams& e, const Sums& s, double xi) {
  const double q = e.q;
  return (q - 1) * s.c * s.c2 - (q + 1) * s.c1 * s.c1 - 2 * xi * s.c1 * s.c2;
}

}  // namespace

double phi_1d(const PhaseParams& p, double xi) {
  require_xi(xi);
  const Sums s(p.edge);
  return p.nu * pow_nonneg(s.num(xi) / s.den(xi), p.edge.q);
}

double phi_1d_derivative(const PhaseParams& p, double xi) {
  const Sums s(p.edge);
  return phi_1d(p, xi) * p.edge.q * exact_d(p.edge) / s.prod(xi);
}

double phi_1d_second_derivative(const PhaseParams& p, double xi) {
  const Sums s(p.edge);
  return phi_1d_derivative(p, xi) * second_ratio_numerator(p.edge, s, xi) / s.prod(xi);
}

double phi_1d_third_derivative(const PhaseParams& p, double xi) {
  const Sums s(p.edge);
  const double q = p.edge.q;
  const double n = second_ratio_numerator(p.edge, s, xi);
  const double g = n * ((q - 2) * s.c * s.c2 - (q + 2) * s.c1 * s.c1 - 4 * xi * s.c1 * s.c2) -
                   2 * s.c1 * s.c2 * s.prod(xi);
  const double pr = s.prod(xi);
  return phi_1d_derivative(p, xi) * g / (pr * pr);
}

double schwarzian(const PhaseParams& p, double xi) {
  require_xi(xi);
  // Φ''/Φ' = (q-1)Λ_{C-2}/num - (q+1)Λ_{C-1}/den, which collapses to
  // SΦ = -(q^2 - 1)/2 * (Λ_C Λ_{C-2} - Λ_{C-1}^2)^2 / (num den)^2.
  const Sums s(p.edge);
  const double q = p.edge.q;
  const double d = exact_d(p.edge) / s.prod(xi);
  return -0.5 * (q * q - 1) * d * d;
}

double fixed_point(const PhaseParams& p, double tol) {
  p.validate();
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");
  auto g = [&](double x) { return phi_1d(p, x) - x; };
  double lo = 0.0, hi = p.nu;
  if (!(g(lo) > 0.0) || !(g(hi) < 0.0))
    throw InternalError("fixed point bracket [0, nu] failed; parameters violate the preconditions");
  // Bisect down to adjacent doubles, then keep the better end.
  while (true) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    (gm > 0.0 ? lo : hi) = mid;
  }
  return std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
}

double J_map(const EdgeParams& e, double xi) {
  e.validate();
  require_xi(xi);
  const Sums s(e);
  return xi * pow_nonneg(s.den(xi) / s.num(xi), e.q);
}

double Q_poly(const EdgeParams& e, double alpha) {
  e.validate();
  const Sums s(e);
  const double q = e.q;
  return alpha * alpha * s.c1 * s.c2 + alpha * ((1 - q) * s.c1 * s.c1 + (1 + q) * s.c * s.c2) + s.c * s.c1;
}

Rational condition_A_margin(const EdgeParams& e) {
  e.validate();
  const Rational c2 = e.edge_weights.exact_partial_sum(e.cap - 2);
  const Rational c1 = c2 + to_rational(e.edge_weights[e.cap - 1]);
  const Rational c = c1 + to_rational(e.edge_weights[e.cap]);
  const Rational qm = e.q - 1, qp = e.q + 1;
  return qm * qm * c1 * c1 - qp * qp * c * c2;
}

bool condition_A(const EdgeParams& e) { return condition_A_margin(e) > 0; }

PhaseWindow phase_window(const EdgeParams& e) {
  e.validate();
  const Rational gap = assumption_gap(e.edge_weights, e.cap);
  if (gap <= 0) throw AssumptionError("edge weights violate Lambda_{C-1}^2 > Lambda_C Lambda_{C-2}");

  PhaseWindow w;
  const Rational margin = condition_A_margin(e);
  if (margin <= 0) {
    w.boundary = (margin == 0);
    return w;
  }

  // Q(α) = a α^2 + b α + c. Its discriminant factors as margin * gap, both
  // computed exactly, so no cancellation near the double-root boundary.
  const Sums s(e);
  const double q = e.q;
  const double a = s.c1 * s.c2;
  const double b = (1 - q) * s.c1 * s.c1 + (1 + q) * s.c * s.c2;
  const double c = s.c * s.c1;
  const double disc = static_cast<double>(margin * gap);
  if (!(disc > 0.0) || !(b < 0.0))
    throw InternalError("condition A holds but Q lacks two distinct positive roots");

  w.present = true;
  w.alpha_plus = (-b + std::sqrt(disc)) / (2 * a);
  w.alpha_minus = c / (a * w.alpha_plus);
  w.nu_minus = J_map(e, w.alpha_minus);
  w.nu_plus = J_map(e, w.alpha_plus);
  if (!(w.alpha_minus < w.alpha_plus) || !(w.nu_minus < w.nu_plus))
    throw InternalError("phase window endpoints out of order");
  return w;
}

ClosedFormVerdict classify_closed_form(const PhaseParams& p) {
  p.validate();
  const PhaseWindow w = phase_window(p.edge);
  ClosedFormVerdict v;
  if (!w.present) {
    if (w.boundary) {
      const double nu0 = J_map(p.edge, std::sqrt(p.edge.lam_c() / p.edge.lam_c2()));
      v.near_boundary = std::abs(p.nu - nu0) <= kNearBoundaryRel * p.nu;
    }
    return v;
  }
  v.kind = (p.nu > w.nu_minus && p.nu < w.nu_plus) ? Verdict::multiple : Verdict::unique;
  v.near_boundary = std::abs(p.nu - w.nu_minus) <= kNearBoundaryRel * p.nu ||
                    std::abs(p.nu - w.nu_plus) <= kNearBoundaryRel * p.nu;
  return v;
}

bool stable_fixed_point(const PhaseParams& p, double tol) {
  return std::abs(phi_1d_derivative(p, fixed_point(p, tol))) <= 1.0;
}

double F_statistic(int q, int cap, double poisson_rate) {
  if (cap < 2) throw ValidationError("capacity must be at least 2");
  if (q < 1) throw ValidationError("q must be at least 1");
  const WeightVector w = make_poisson(poisson_rate, cap);
  const double qq = q;
  return (1 + qq) * (1 + qq) * (w[cap - 1] * w.partial_sum(cap - 1) - w[cap] * w.partial_sum(cap - 2)) -
         4 * qq * w.partial_sum(cap - 1) * w.partial_sum(cap - 1);
}

}  // namespace lossnet::phase1d
