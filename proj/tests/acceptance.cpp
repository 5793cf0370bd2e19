// Acceptance criteria 1-10. One PASS/FAIL line per criterion; exit 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lossnet/errors.hpp"
#include "lossnet/oracle.hpp"
#include "lossnet/phase1d.hpp"
#include "lossnet/rfmap.hpp"
#include "lossnet/simulate.hpp"
#include "lossnet/treecalc.hpp"

using namespace lossnet;
using namespace lossnet::phase1d;

namespace {

// Tolerances.
constexpr double kScanRel = 2e-3;          // closed-form endpoint vs iteration scan
constexpr double kPinRel = 5e-3;           // regression pins
constexpr double kPinNuMinus = 26.8;
constexpr double kPinNuPlus = 90.7;
constexpr double kEndpointExclusion = 1e-4;
constexpr double kOracleRel = 1e-9;
constexpr double kConjugacyRel = 1e-10;
constexpr long kMinEvents = 100'000;
constexpr double kSeparation = 1e-8;
constexpr long kDeepIter = 20'000'000;

struct Outcome {
  bool passed = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  std::function<Outcome()> run;
};

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(10);
  s << x;
  return s.str();
}

void fail(Outcome& o, const std::string& why) {
  if (o.passed) o.detail = why;
  o.passed = false;
}

bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + 1e-300;
}

EdgeParams ref_edge() { return {10, 2, make_poisson(0.75, 2)}; }

// Every C_V = 1 iteration run goes through here so the sandwich check can see it.
struct RunLog {
  long runs = 0;
  long sandwich_failures = 0;
  std::string first_failure;
};
RunLog g_log;

UniquenessVerdict classify_logged(const ModelParams& p, const ClassifyOptions& opts = {}) {
  auto v = classify_by_iteration(p, opts);
  if (p.cv == 1 && RandomFieldMap(p).scalar_nonincreasing()) {
    ++g_log.runs;
    if (!v.sandwich_ok || !*v.sandwich_ok) {
      if (g_log.sandwich_failures++ == 0)
        g_log.first_failure = "q=" + std::to_string(p.q) + " C=" + std::to_string(p.cap) + " nu=" + fmt(p.nu(1));
    }
  }
  return v;
}

// ---------------------------------------------------------------- 1
Outcome condition_a_threshold() {
  Outcome o;
  for (double lam : {1.0, 3.0, 5.0, 5.99})
    if (condition_A({6, 2, make_poisson(lam, 2)})) fail(o, "condition A true at lambda=" + fmt(lam));
  for (double lam : {6.01, 7.0, 10.0})
    if (!condition_A({6, 2, make_poisson(lam, 2)})) fail(o, "condition A false at lambda=" + fmt(lam));
  if (condition_A_margin({6, 2, make_poisson(6.0, 2)}) != 0) fail(o, "margin at lambda=6 is not exactly zero");
  if (o.passed) o.detail = "threshold at 6, exact zero margin";
  return o;
}

// ---------------------------------------------------------------- 2
Outcome geometric_window() {
  Outcome o;
  // (1+q)^2 λ - 4q(1+λ)^2 > 0 with q = 14, in exact arithmetic.
  auto poly = [](double lam) {
    const Rational l = to_rational(lam);
    return Rational(225) * l - Rational(56) * (1 + l) * (1 + l);
  };
  for (double lam : {0.87, 0.88, 1.0, 1.14, 1.15}) {
    const bool expect = lam > 0.875 && lam < 64.0 / 56.0;
    const EdgeParams e{14, 2, make_geometric(lam, 2)};
    if (phase_window(e).present != expect) fail(o, "window presence wrong at lambda=" + fmt(lam));
    if ((poly(lam) > 0) != expect) fail(o, "exact polynomial sign wrong at lambda=" + fmt(lam));
  }
  if (phase_window({14, 2, make_geometric(0.875, 2)}).present) fail(o, "window present at 49/56");
  if (o.passed) o.detail = "window exactly on (49/56, 64/56)";
  return o;
}

// ---------------------------------------------------------------- 3
// Verdict boundary of the iteration between a unique and a multiple ν.
double scan_boundary(double unique_nu, double multiple_nu) {
  const auto e = ref_edge();
  while (std::abs(unique_nu - multiple_nu) > 1e-5 * multiple_nu) {
    const double mid = 0.5 * (unique_nu + multiple_nu);
    const auto v = classify_logged(PhaseParams{e, mid}.model(), {1e-12, kSeparation, kDeepIter});
    if (v.kind == Verdict::inconclusive) break;
    (v.kind == Verdict::multiple ? multiple_nu : unique_nu) = mid;
  }
  return 0.5 * (unique_nu + multiple_nu);
}

Outcome nonmonotone_in_nu() {
  Outcome o;
  const auto w = phase_window(ref_edge());
  if (!w.present) {
    fail(o, "no window");
    return o;
  }
  const double mid = 0.5 * (w.nu_minus + w.nu_plus);
  const double lo = scan_boundary(w.nu_minus / 2, mid);
  const double hi = scan_boundary(2 * w.nu_plus, mid);
  if (!close_rel(lo, w.nu_minus, kScanRel)) fail(o, "lower endpoint " + fmt(w.nu_minus) + " vs scan " + fmt(lo));
  if (!close_rel(hi, w.nu_plus, kScanRel)) fail(o, "upper endpoint " + fmt(w.nu_plus) + " vs scan " + fmt(hi));
  if (!close_rel(w.nu_minus, kPinNuMinus, kPinRel)) fail(o, "lower pin " + fmt(w.nu_minus));
  if (!close_rel(w.nu_plus, kPinNuPlus, kPinRel)) fail(o, "upper pin " + fmt(w.nu_plus));
  const auto at = [&](double nu) { return classify_logged(PhaseParams{ref_edge(), nu}.model()).kind; };
  if (at(w.nu_minus / 2) != Verdict::unique) fail(o, "not unique at nu-/2");
  if (at(2 * w.nu_plus) != Verdict::unique) fail(o, "not unique at 2nu+");
  if (at(mid) != Verdict::multiple) fail(o, "not multiple at the midpoint");
  if (o.passed) o.detail = "window (" + fmt(w.nu_minus) + ", " + fmt(w.nu_plus) + "), scan (" + fmt(lo) + ", " + fmt(hi) + ")";
  return o;
}

// ---------------------------------------------------------------- 4

// 500 points with C_V = 1, C_E = C, q <= 12, C <= 4, away from window endpoints.
// About half of the points with a window are drawn inside it.
std::vector<PhaseParams> three_way_grid() {
  std::mt19937_64 rng(4040);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<PhaseParams> out;
  while (out.size() < 500) {
    const int q = 2 + static_cast<int>(rng() % 11);
    const int cap = 2 + static_cast<int>(rng() % 3);
    const auto fam = (rng() % 2) ? WeightFamily::poisson : WeightFamily::geometric;
    const double lam = std::exp(std::log(0.05) + u(rng) * std::log(15.0 / 0.05));
    const EdgeParams e{q, cap, make_family(fam, lam, cap)};
    if (!check_assumption(e.edge_weights, cap)) continue;
    const auto w = phase_window(e);
    double nu;
    if (w.present && u(rng) < 0.5)
      nu = w.nu_minus * std::pow(w.nu_plus / w.nu_minus, u(rng));
    else if (w.present)
      nu = w.nu_minus * std::exp(4 * u(rng) - 2);
    else
      nu = std::exp(std::log(1e-2) + u(rng) * std::log(1e6 / 1e-2));
    if (w.present &&
        (std::abs(nu - w.nu_minus) < kEndpointExclusion * nu || std::abs(nu - w.nu_plus) < kEndpointExclusion * nu))
      continue;
    out.push_back({e, nu});
  }
  return out;
}

Outcome three_way_agreement() {
  Outcome o;
  int disagreements = 0, multiple = 0;
  for (const auto& p : three_way_grid()) {
    const Verdict closed = classify_closed_form(p).kind;
    const Verdict slope = stable_fixed_point(p) ? Verdict::unique : Verdict::multiple;
    const Verdict iter = classify_logged(p.model(), {1e-12, kSeparation, kDeepIter}).kind;
    if (closed == Verdict::multiple) ++multiple;
    if (closed != slope || closed != iter) {
      if (disagreements == 0)
        fail(o, "q=" + std::to_string(p.edge.q) + " C=" + std::to_string(p.edge.cap) + " nu=" + fmt(p.nu) + ": closed " +
                    to_string(closed) + ", slope " + to_string(slope) + ", iteration " + to_string(iter));
      ++disagreements;
    }
  }
  if (!o.passed) o.detail += " (" + std::to_string(disagreements) + " disagreements)";
  else o.detail = "500 points, " + std::to_string(multiple) + " multiple, 0 disagreements";
  return o;
}

// ---------------------------------------------------------------- 5
Outcome oracle_equivalence() {
  Outcome o;
  long cases = 0;
  auto where = [](int q, int cap, int cv, int ce, double nu, double lam) {
    return "q=" + std::to_string(q) + " C=" + std::to_string(cap) + " CV=" + std::to_string(cv) + " CE=" + std::to_string(ce) +
           " nu=" + fmt(nu) + " lam=" + fmt(lam);
  };
  for (int q : {2, 3})
    for (int cap = 1; cap <= 3; ++cap)
      for (int cv = 1; cv <= cap; ++cv)
        for (int ce = 0; ce <= cap; ++ce)
          for (double nu : {0.5, 1.0, 2.0})
            for (double lam : {0.5, 1.0}) {
              const auto p = ModelParams::from_rates(q, cap, cv, ce, WeightFamily::poisson, nu, WeightFamily::poisson, lam);
              for (int m = 0; m <= 2; ++m) {
                const auto z = rooted_recursion(p, m).partition();
                const auto oz = exact_partition(p, FiniteTree::rooted(q, m), 0);
                for (std::size_t i = 0; i < z.size(); ++i)
                  if (!close_rel(z[i], oz[i], kOracleRel)) fail(o, "Z, m=" + std::to_string(m) + ", " + where(q, cap, cv, ce, nu, lam));
                ++cases;
              }
              for (int radius = 1; radius <= 2; ++radius) {
                const auto t = FiniteTree::spherical(q, radius);
                const auto rep = spherical_blocking(p, radius);
                const auto ex = exact_report(p, t, 0, 0);
                for (std::size_t i = 0; i < ex.occupancy.size(); ++i)
                  if (!close_rel(rep.center_occupancy[i], ex.occupancy[i], kOracleRel))
                    fail(o, "center law, L=" + std::to_string(radius) + ", " + where(q, cap, cv, ce, nu, lam));
                if (!close_rel(rep.multicast_beta, ex.multicast_beta, kOracleRel))
                  fail(o, "multicast blocking, L=" + std::to_string(radius) + ", " + where(q, cap, cv, ce, nu, lam));
                if (!close_rel(rep.unicast_beta, ex.unicast_beta, kOracleRel))
                  fail(o, "unicast blocking, L=" + std::to_string(radius) + ", " + where(q, cap, cv, ce, nu, lam));
                ++cases;
              }
            }
  if (o.passed) o.detail = std::to_string(cases) + " cases";
  return o;
}

// ---------------------------------------------------------------- 6
Outcome conjugacy() {
  Outcome o;
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const int cv = 1 + n % 3;
    const int cap = cv + static_cast<int>(rng() % 3);
    const int ce = static_cast<int>(rng() % static_cast<unsigned>(cap + 1));
    const int q = 1 + static_cast<int>(rng() % 8);
    const auto fam = (rng() % 2) ? WeightFamily::poisson : WeightFamily::geometric;
    const auto p = ModelParams::from_rates(q, cap, cv, ce, fam, u(rng), fam, u(rng));
    std::vector<double> psi{1.0};
    for (int k = 0; k < cv; ++k) psi.push_back(u(rng));
    const auto lhs = apply_F_phi(p, psi);
    const ConjugateMaps a(p);
    const auto rhs = a.invert(apply_phi(p, a.apply(psi)));
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i) {
      scale = std::max(scale, std::abs(lhs[i]));
      diff = std::max(diff, std::abs(lhs[i] - rhs[i]));
    }
    worst = std::max(worst, diff / (1 + scale));
    if (diff > kConjugacyRel * (1 + scale)) fail(o, "instance " + std::to_string(n) + " off by " + fmt(diff));
  }
  if (o.passed) o.detail = "100 instances, worst relative gap " + fmt(worst);
  return o;
}

// ---------------------------------------------------------------- 7
Outcome simulation_validation() {
  Outcome o;
  SimConfig c;
  c.q = 2;
  c.cap = 2;
  c.cv = 1;
  c.ce = 2;
  c.nu_rate = 1.0;
  c.lam_rate = 1.0;
  c.tree = {TreeKind::spherical, 1};
  c.horizon = 2000;
  c.replications = 10;
  c.seed = 7;
  const auto expo = run_simulation(c);
  if (expo.events < kMinEvents) fail(o, "only " + std::to_string(expo.events) + " events");
  const auto vs_exact = compare(expo, exact_values(c));
  for (const auto& q : vs_exact.quantities)
    if (std::abs(q.z) > kZLimit) fail(o, q.name + " z=" + fmt(q.z) + " against the exact value");
  SimConfig d = c;
  d.durations = DurationMode::deterministic;
  d.seed = 8;
  const auto det = run_simulation(d);
  const auto vs_expo = compare_runs(det, expo);
  for (const auto& q : vs_expo.quantities)
    if (std::abs(q.z) > kZLimit) fail(o, q.name + " z=" + fmt(q.z) + " deterministic vs exponential");
  if (o.passed) {
    double worst = 0.0;
    for (const auto& q : vs_exact.quantities) worst = std::max(worst, std::abs(q.z));
    for (const auto& q : vs_expo.quantities) worst = std::max(worst, std::abs(q.z));
    o.detail = std::to_string(expo.events) + " events, max |z| " + fmt(worst);
  }
  return o;
}

// ---------------------------------------------------------------- 8
Outcome monotonicity() {
  Outcome o;
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int hits = 0;
  while (hits < 200) {
    const int q = 2 + static_cast<int>(rng() % 15);
    const int cap = 2 + static_cast<int>(rng() % 4);
    const auto fam = (rng() % 2) ? WeightFamily::poisson : WeightFamily::geometric;
    const auto w = make_family(fam, 0.05 + 15 * u(rng), cap);
    if (!condition_A({q, cap, w})) continue;
    if (!condition_A({q + 1, cap, w})) fail(o, "condition A lost going to q+1 at q=" + std::to_string(q));
    ++hits;
  }
  int pairs = 0;
  while (pairs < 200) {
    const int q = 2 + static_cast<int>(rng() % 15);
    const int cap = 2 + static_cast<int>(rng() % 4);
    const double a = 0.05 + 15 * u(rng), b = a + 10 * u(rng);
    if (F_statistic(q, cap, a) <= 0) continue;
    if (F_statistic(q, cap, b) <= 0) fail(o, "F turned nonpositive from lambda=" + fmt(a) + " to " + fmt(b));
    ++pairs;
  }
  // ν₋ over λ ∈ [6.005, 6.10] for q = 6, C = 2, Poisson, step 1e-3.
  double prev = INFINITY, prev_lam = 0.0;
  double low = INFINITY, low_lam = 0.0;
  for (int k = 0; k <= 95; ++k) {
    const double lam = 6.005 + 1e-3 * k;
    const auto w = phase_window({6, 2, make_poisson(lam, 2)});
    if (!w.present) {
      fail(o, "no window at lambda=" + fmt(lam));
      break;
    }
    if (w.nu_minus < low) low = w.nu_minus, low_lam = lam;
    if (!(w.nu_minus < prev) && o.passed)
      fail(o, "nu- not decreasing: " + fmt(prev) + " at lambda=" + fmt(prev_lam) + ", " + fmt(w.nu_minus) + " at " + fmt(lam));
    prev = w.nu_minus;
    prev_lam = lam;
  }
  if (!o.passed) o.detail += "; minimum " + fmt(low) + " near lambda=" + fmt(low_lam) + ", then rising";
  else o.detail = "200 q-steps, 200 rate pairs, nu- decreasing";
  return o;
}

// ---------------------------------------------------------------- 9
Outcome two_slot_probe() {
  Outcome o;
  int split = 0;
  double best = 0.0, best_nu = 0.0;
  for (double nu = 11.0; nu < 60.0; nu += 1.0) {
    const auto p = ModelParams::from_rates(10, 2, 2, 2, WeightFamily::poisson, nu, WeightFamily::poisson, 0.72);
    const auto v = classify_by_iteration(p);
    if (v.kind != Verdict::multiple) continue;
    const double sep = sup_distance(*v.even_limit, *v.odd_limit);
    if (sep > kSeparation) ++split;
    if (sep > best) best = sep, best_nu = nu;
  }
  if (split == 0) fail(o, "no nu in (10, 60) with two branches");
  else o.detail = std::to_string(split) + " of 49 grid points split, widest " + fmt(best) + " at nu=" + fmt(best_nu);
  return o;
}

// ---------------------------------------------------------------- 10
Outcome schwarzian_and_sandwich() {
  Outcome o;
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = -INFINITY;
  for (int n = 0; n < 1000; ++n) {
    const int q = 2 + static_cast<int>(rng() % 19);
    const int cap = 2 + static_cast<int>(rng() % 5);
    const auto fam = (rng() % 2) ? WeightFamily::poisson : WeightFamily::geometric;
    const auto w = make_family(fam, std::exp(std::log(0.05) + u(rng) * std::log(400.0)), cap);
    if (!check_assumption(w, cap)) {
      --n;
      continue;
    }
    const double nu = std::exp(std::log(1e-2) + u(rng) * std::log(1e7));
    const PhaseParams p{{q, cap, w}, nu};
    const double xi = nu * u(rng);
    const double s = schwarzian(p, xi);
    worst = std::max(worst, s);
    if (!(s < 0)) fail(o, "S = " + fmt(s) + " at q=" + std::to_string(q) + " nu=" + fmt(nu) + " xi=" + fmt(xi));
  }
  // Sandwich over the scalar runs of the criteria above.
  if (g_log.runs == 0) {
    nonmonotone_in_nu();
    three_way_agreement();
  }
  if (g_log.sandwich_failures > 0)
    fail(o, std::to_string(g_log.sandwich_failures) + " sandwich violations, first at " + g_log.first_failure);
  if (o.passed) o.detail = "1000 points, max S " + fmt(worst) + "; sandwich held on " + std::to_string(g_log.runs) + " runs";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "condition-A threshold", condition_a_threshold},
      {2, "geometric window", geometric_window},
      {3, "nonmonotonicity in nu", nonmonotone_in_nu},
      {4, "three-way classifier agreement", three_way_agreement},
      {5, "oracle equivalence", oracle_equivalence},
      {6, "conjugacy", conjugacy},
      {7, "simulation validation", simulation_validation},
      {8, "monotonicity properties", monotonicity},
      {9, "two-slot multicast probe", two_slot_probe},
      {10, "Schwarzian and sandwich", schwarzian_and_sandwich},
  };

  bool all = true;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream t;
    t.precision(2);
    t << std::fixed << secs;
    std::cout << (r.passed ? "PASS" : "FAIL") << " [" << c.id << "] " << c.title << ": " << r.detail << " (" << t.str()
              << " s)\n";
    all = all && r.passed;
  }
  return all ? 0 : 1;
}
