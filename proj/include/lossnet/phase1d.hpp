#pragma once

#include <optional>

#include "lossnet/exact.hpp"
#include "lossnet/rfmap.hpp"
#include "lossnet/weights.hpp"

namespace lossnet::phase1d {

/// (q, C, λ) without ν. Only the partial sums Λ_{C-2}, Λ_{C-1}, Λ_C are used.
struct EdgeParams {
  int q = 2;
  int cap = 2;
  WeightVector edge_weights{std::vector<double>{1.0, 1.0, 1.0}};

  /// q >= 1, C >= 2, at least C+1 weights. Does not check the assumption.
  void validate() const;

  double lam_c() const { return edge_weights.partial_sum(cap); }
  double lam_c1() const { return edge_weights.partial_sum(cap - 1); }
  double lam_c2() const { return edge_weights.partial_sum(cap - 2); }
};

/// The scalar reduction for C_V = 1, C_E = C: ν⃗ = (1, ν).
struct PhaseParams {
  EdgeParams edge;
  double nu = 1.0;

  /// Throws ValidationError (q < 2, C < 2, short weights, ν <= 0) or
  /// AssumptionError (Λ_{C-1}^2 <= Λ_C Λ_{C-2}).
  static PhaseParams make(int q, int cap, WeightVector edge_weights, double nu);
  void validate() const;

  /// The equivalent general model (C_V = 1, C_E = C, ν⃗ = (1, ν)).
  ModelParams model() const;
};

double phi_1d(const PhaseParams& p, double xi);
double phi_1d_derivative(const PhaseParams& p, double xi);
double phi_1d_second_derivative(const PhaseParams& p, double xi);
double phi_1d_third_derivative(const PhaseParams& p, double xi);

/// SΦ = Φ'''/Φ' - (3/2)(Φ''/Φ')^2.
double schwarzian(const PhaseParams& p, double xi);

/// Unique root of Φ(ξ) = ξ on [0, ν], by bisection, with
/// |Φ(ξ*) - ξ*| <= tol (1 + ξ*) unless the bracket shrinks to adjacent doubles.
double fixed_point(const PhaseParams& p, double tol = 1e-13);

/// ν as a function of the fixed point: J(ξ*(ν)) = ν.
double J_map(const EdgeParams& e, double xi);

double Q_poly(const EdgeParams& e, double alpha);

/// (q-1)^2 Λ_{C-1}^2 - (q+1)^2 Λ_C Λ_{C-2}, exactly. Condition A holds iff > 0.
Rational condition_A_margin(const EdgeParams& e);
bool condition_A(const EdgeParams& e);

struct PhaseWindow {
  bool present = false;
  // Condition A holds with equality: Q has a double root and the window is empty.
  bool boundary = false;
  double alpha_minus = 0.0;
  double alpha_plus = 0.0;
  double nu_minus = 0.0;
  double nu_plus = 0.0;
};

/// Requires the assumption (throws AssumptionError otherwise).
PhaseWindow phase_window(const EdgeParams& e);

struct ClosedFormVerdict {
  Verdict kind = Verdict::unique;
  // ν within kNearBoundaryRel of a window endpoint.
  bool near_boundary = false;
};

inline constexpr double kNearBoundaryRel = 1e-9;

/// Multiple iff Condition A holds and ν lies strictly inside (ν₋, ν₊).
ClosedFormVerdict classify_closed_form(const PhaseParams& p);

/// Stability of the fixed point: |Φ'(ξ*)| <= 1.
bool stable_fixed_point(const PhaseParams& p, double tol = 1e-13);

/// (1+q)^2 [λ_{C-1} Λ_{C-1} - λ_C Λ_{C-2}] - 4 q Λ_{C-1}^2 for λ_i = rate^i / i!.
double F_statistic(int q, int cap, double poisson_rate);

}  // namespace lossnet::phase1d
