#include "lossnet/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lossnet/errors.hpp"
#include "lossnet/oracle.hpp"
#include "lossnet/phase1d.hpp"
#include "lossnet/rfmap.hpp"
#include "lossnet/selftest.hpp"
#include "lossnet/simulate.hpp"
#include "lossnet/treecalc.hpp"

namespace lossnet {

using nlohmann::json;

std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(step)) throw ValidationError("grid bounds must be finite");
  if (!(step > 0.0)) throw ValidationError("grid step must be positive");
  if (hi < lo) throw ValidationError("grid maximum is below its minimum");
  const double span = (hi - lo) / step;
  if (span > 1e7) throw ValidationError("grid has too many points");
  const auto n = static_cast<long>(std::floor(span + 1e-9)) + 1;
  std::vector<double> g;
  for (long i = 0; i < n; ++i) g.push_back(lo + static_cast<double>(i) * step);
  return g;
}

namespace {

struct ModelFlags {
  int q = 2;
  int cap = 2;
  int cv = 1;
  std::optional<int> ce;
  std::string weights = "poisson";
  std::optional<double> lam;
  std::string node_weights = "poisson";
  std::optional<double> nu;
  std::optional<double> nu_min, nu_max, nu_step;
};

struct OutputFlags {
  std::string format;
  std::string path;
};

void add_shape(CLI::App* sub, ModelFlags& f) {
  sub->add_option("--q", f.q, "branching factor (node degree q+1)");
  sub->add_option("--cap", f.cap, "edge capacity C");
  sub->add_option("--cv", f.cv, "multicast cap per node");
  sub->add_option("--ce", f.ce, "unicast cap per edge (default C)");
}

void add_edge_weights(CLI::App* sub, ModelFlags& f) {
  sub->add_option("--weights", f.weights, "edge weights: poisson, geometric or file:PATH");
  sub->add_option("--lam", f.lam, "edge weight rate");
}

void add_node_weights(CLI::App* sub, ModelFlags& f) {
  sub->add_option("--node-weights", f.node_weights, "node weights: poisson, geometric or file:PATH");
  sub->add_option("--nu", f.nu, "multicast weight rate");
}

void add_output(CLI::App* sub, OutputFlags& o, const std::string& fallback, std::vector<std::string> formats) {
  o.format = fallback;
  sub->add_option("--format", o.format, "output format")->check(CLI::IsMember(std::move(formats)));
  sub->add_option("--out", o.path, "write to PATH instead of stdout");
}

void add_classify_opts(CLI::App* sub, ClassifyOptions& c) {
  sub->add_option("--tol", c.tol, "convergence tolerance (relative to 1+|xi|)");
  sub->add_option("--sep", c.sep, "even/odd separation threshold");
  sub->add_option("--max-iter", c.max_iter, "iteration budget");
}

WeightVector weights_from(const std::string& spec, std::optional<double> rate, int top, const char* rate_flag) {
  if (top < 0) throw ValidationError("controls must be nonnegative");
  if (spec.rfind("file:", 0) == 0) {
    const WeightVector w = load_weights(spec.substr(5));
    if (w.top_index() < top) throw ValidationError("weight file has fewer than " + std::to_string(top + 1) + " entries");
    return w.truncated(top);
  }
  const WeightFamily fam = parse_family(spec);
  if (!rate) throw ValidationError(std::string(rate_flag) + " is required with family weights");
  return make_family(fam, *rate, top);
}

int edge_top(const ModelFlags& f) { return f.ce.value_or(f.cap); }

ModelParams model_from(const ModelFlags& f) {
  return ModelParams::make(f.q, f.cap, f.cv, edge_top(f), weights_from(f.node_weights, f.nu, f.cv, "--nu"),
                           weights_from(f.weights, f.lam, edge_top(f), "--lam"));
}

phase1d::EdgeParams edge_from(const ModelFlags& f) {
  phase1d::EdgeParams e{f.q, f.cap, weights_from(f.weights, f.lam, std::max(f.cap, 0), "--lam")};
  e.validate();
  return e;
}

std::vector<double> nu_grid(const ModelFlags& f) {
  if (f.nu) {
    if (f.nu_min || f.nu_max || f.nu_step) throw ValidationError("give either --nu or a --nu-min/--nu-max/--nu-step range");
    return {*f.nu};
  }
  if (!f.nu_min || !f.nu_max || !f.nu_step) throw ValidationError("--nu or all of --nu-min, --nu-max, --nu-step required");
  return make_grid(*f.nu_min, *f.nu_max, *f.nu_step);
}

json vec_json(std::span<const double> v) { return json(std::vector<double>(v.begin(), v.end())); }

std::string join_xi(const RatioVector& xi) {
  std::string s;
  for (int k = 1; k <= xi.dim(); ++k) {
    if (k > 1) s += ';';
    s += format_real(xi(k));
  }
  return s;
}

std::string verdict_cell(Verdict v) {
  switch (v) {
    case Verdict::unique:
      return "true";
    case Verdict::multiple:
      return "false";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "?";
}

// ---- commands; each returns the full output text ----

std::string cmd_classify(const ModelFlags& f, const ClassifyOptions& opts) {
  if (!f.nu) throw ValidationError("--nu is required");
  opts.validate();
  const ModelParams p = model_from(f);
  const UniquenessVerdict v = classify_by_iteration(p, opts);
  auto opt_vec = [](const std::optional<RatioVector>& x) { return x ? vec_json(x->values()) : json(nullptr); };
  json j = {{"verdict", to_string(v.kind)},
            {"iterations", v.iterations_used},
            {"fixed_point", opt_vec(v.fixed_point)},
            {"even_limit", opt_vec(v.even_limit)},
            {"odd_limit", opt_vec(v.odd_limit)},
            {"sandwich_ok", v.sandwich_ok ? json(*v.sandwich_ok) : json(nullptr)},
            {"closed_form", nullptr}};
  if (p.cv == 1 && p.ce == p.cap && p.q >= 2 && p.cap >= 2 && check_assumption(p.edge_weights, p.cap)) {
    const phase1d::PhaseParams pp{{p.q, p.cap, p.edge_weights}, p.nu(1)};
    const auto cf = phase1d::classify_closed_form(pp);
    j["closed_form"] = {{"verdict", to_string(cf.kind)}, {"near_boundary", cf.near_boundary}};
  }
  return j.dump(2) + "\n";
}

json window_json(const phase1d::EdgeParams& e) {
  const auto w = phase1d::phase_window(e);
  json j = {{"condition_a", w.present}, {"boundary_flag", w.boundary}, {"window", nullptr}, {"alphas", nullptr}};
  if (w.present) {
    j["window"] = {{"nu_minus", w.nu_minus}, {"nu_plus", w.nu_plus}};
    j["alphas"] = {{"alpha_minus", w.alpha_minus}, {"alpha_plus", w.alpha_plus}};
  }
  return j;
}

std::string cmd_window(const ModelFlags& f) { return window_json(edge_from(f)).dump(2) + "\n"; }

std::string cmd_blocking_curve(const ModelFlags& f, const ClassifyOptions& opts, int jobs, const OutputFlags& o) {
  if (f.node_weights.rfind("file:", 0) == 0) throw ValidationError("blocking-curve sweeps nu, so node weights must be a family");
  opts.validate();
  const ModelTemplate tmpl{f.q, f.cap, f.cv, edge_top(f), parse_family(f.node_weights),
                           weights_from(f.weights, f.lam, edge_top(f), "--lam")};
  const auto grid = nu_grid(f);
  tmpl.with_nu(grid.front());  // validates the shape before the sweep
  const auto pts = blocking_curve(tmpl, grid, opts, jobs);
  if (o.format == "json") {
    json rows = json::array();
    for (const auto& pt : pts)
      rows.push_back({{"nu", pt.nu},
                      {"verdict", to_string(pt.kind)},
                      {"beta_even", pt.even.multicast_beta},
                      {"beta_odd", pt.odd.multicast_beta},
                      {"unicast_beta_even", pt.even.unicast_beta},
                      {"unicast_beta_odd", pt.odd.unicast_beta},
                      {"xi_even", vec_json(pt.xi_even.values())},
                      {"xi_odd", vec_json(pt.xi_odd.values())}});
    return rows.dump(2) + "\n";
  }
  std::string s = "nu,unique,beta_even,beta_odd,xi_even,xi_odd\n";
  for (const auto& pt : pts)
    s += format_real(pt.nu) + ',' + verdict_cell(pt.kind) + ',' + format_real(pt.even.multicast_beta) + ',' +
         format_real(pt.odd.multicast_beta) + ',' + join_xi(pt.xi_even) + ',' + join_xi(pt.xi_odd) + '\n';
  return s;
}

struct SweepRange {
  std::optional<double> lo, hi, step;
};

std::string cmd_sweep_region(const ModelFlags& f, const SweepRange& r, int jobs, const OutputFlags& o) {
  if (f.weights.rfind("file:", 0) == 0) throw ValidationError("sweep-region needs a weight family");
  if (f.cv != 1 || (f.ce && *f.ce != f.cap)) throw ValidationError("sweep-region covers C_V = 1, C_E = C only");
  if (!r.lo || !r.hi || !r.step) throw ValidationError("--lam-min, --lam-max and --lam-step are required");
  const WeightFamily fam = parse_family(f.weights);
  const auto grid = make_grid(*r.lo, *r.hi, *r.step);
  std::vector<phase1d::PhaseWindow> wins(grid.size());
  // Validate every point before the sweep starts writing anything.
  for (double lam : grid) phase1d::EdgeParams{f.q, f.cap, make_family(fam, lam, f.cap)}.validate();
  parallel_for(grid.size(), jobs,
               [&](std::size_t i) { wins[i] = phase1d::phase_window({f.q, f.cap, make_family(fam, grid[i], f.cap)}); });
  if (o.format == "json") {
    json rows = json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      json row = {{"lambda", grid[i]}, {"condition_a", wins[i].present}, {"nu_minus", nullptr}, {"nu_plus", nullptr}};
      if (wins[i].present) {
        row["nu_minus"] = wins[i].nu_minus;
        row["nu_plus"] = wins[i].nu_plus;
      }
      rows.push_back(row);
    }
    return rows.dump(2) + "\n";
  }
  std::string s = "lambda,condition_a,nu_minus,nu_plus\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    s += format_real(grid[i]) + ',' + (wins[i].present ? "true" : "false") + ',';
    if (wins[i].present) s += format_real(wins[i].nu_minus) + ',' + format_real(wins[i].nu_plus);
    else s += ',';
    s += '\n';
  }
  return s;
}

struct TreeFlags {
  std::string kind;
  std::optional<int> height, radius, nodes;
};

TreeSpec tree_from(const TreeFlags& t) {
  if (t.kind == "single") return {TreeKind::single, 0};
  if (t.kind == "path") return {TreeKind::path, t.nodes.value_or(2)};
  if (t.kind == "rooted") return {TreeKind::rooted, t.height.value_or(1)};
  if (t.kind == "spherical") return {TreeKind::spherical, t.radius.value_or(1)};
  throw ValidationError("unknown tree kind " + t.kind);
}

void add_tree(CLI::App* sub, TreeFlags& t, const std::string& fallback) {
  t.kind = fallback;
  sub->add_option("--tree", t.kind, "tree shape")->check(CLI::IsMember({"single", "path", "rooted", "spherical"}));
  sub->add_option("--height", t.height, "height of a rooted tree");
  sub->add_option("--radius", t.radius, "radius of a spherical tree");
  sub->add_option("--nodes", t.nodes, "node count of a path");
}

struct SimFlags {
  std::string service = "per-call";
  std::string durations = "exponential";
  std::optional<double> warmup;
  double horizon = 1e4;
  int replications = 10;
  std::uint64_t seed = 1;
  bool check_invariants = false;
  bool compare = false;
};

std::string cmd_simulate(const ModelFlags& f, const TreeFlags& tf, const SimFlags& s, int jobs) {
  if (!f.nu || !f.lam) throw ValidationError("--nu and --lam (arrival rates) are required");
  SimConfig cfg;
  cfg.q = f.q;
  cfg.cap = f.cap;
  cfg.cv = f.cv;
  cfg.ce = edge_top(f);
  cfg.nu_rate = *f.nu;
  cfg.lam_rate = *f.lam;
  cfg.tree = tree_from(tf);
  cfg.service = s.service == "per-call" ? ServiceMode::per_call : ServiceMode::shared_server;
  cfg.durations = s.durations == "exponential" ? DurationMode::exponential : DurationMode::deterministic;
  cfg.warmup = s.warmup;
  cfg.horizon = s.horizon;
  cfg.replications = s.replications;
  cfg.seed = s.seed;
  cfg.jobs = jobs;
  cfg.check_invariants = s.check_invariants;
  cfg.validate();
  const SimStats stats = run_simulation(cfg);
  json j = stats.to_json();
  j["config"] = {{"service", to_string(cfg.service)},
                 {"durations", to_string(cfg.durations)},
                 {"tree", to_string(cfg.tree.kind)},
                 {"tree_size", cfg.tree.size},
                 {"warmup", cfg.warmup_time()},
                 {"horizon", cfg.horizon},
                 {"seed", cfg.seed}};
  if (s.compare) {
    const ExactValues ex = exact_values(cfg);
    j["exact"] = {{"multicast_beta", ex.multicast_beta},
                  {"unicast_beta", ex.unicast_beta},
                  {"center_occupancy", ex.center_occupancy}};
    j["comparison"] = compare(stats, ex).to_json();
  }
  return j.dump(2) + "\n";
}

std::string cmd_enumerate(const ModelFlags& f, const TreeFlags& tf) {
  const ModelParams p = model_from(f);
  const TreeSpec spec = tree_from(tf);
  const FiniteTree t = spec.build(p.q);
  json j = {{"tree", {{"kind", to_string(spec.kind)}, {"nodes", t.node_count()}, {"edges", t.edge_count()}}},
            {"partition", exact_partition(p, t, 0)},
            {"occupancy", exact_occupancy(p, t, 0)},
            {"multicast_beta", exact_blocking(p, t, Target::node(0))},
            {"unicast_beta", t.edge_count() > 0 ? json(exact_blocking(p, t, Target::edge(0))) : json(nullptr)}};
  if (spec.kind == TreeKind::rooted) {
    j["recursion"] = {{"partition", rooted_recursion(p, spec.size).partition()}};
  } else if (spec.kind == TreeKind::spherical) {
    const auto rep = spherical_blocking(p, spec.size);
    j["recursion"] = {{"occupancy", rep.center_occupancy},
                      {"multicast_beta", rep.multicast_beta},
                      {"unicast_beta", rep.unicast_beta}};
  }
  return j.dump(2) + "\n";
}

int cmd_selftest(double perturb, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto results = run_selftest(perturb);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  bool ok = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS  " : "FAIL  ") << r.name << std::string(width - r.name.size() + 2, ' ') << r.detail << '\n';
    ok = ok && r.passed;
  }
  std::ostringstream took;
  took << std::fixed << std::setprecision(2) << secs;
  out << (ok ? "selftest passed" : "selftest FAILED") << " in " << took.str() << " s\n";
  if (secs > 300) out << "warning: selftest exceeded its 5 minute budget\n";
  return ok ? kExitOk : kExitCheckFailed;
}

void emit(const std::string& text, const OutputFlags& o, std::ostream& out) {
  if (o.path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(o.path, std::ios::binary);
  if (!file) throw ValidationError("cannot open " + o.path + " for writing");
  file << text;
  if (!file) throw ValidationError("failed writing " + o.path);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Phase transitions of the unicast-multicast loss network on regular trees"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  ModelFlags f;
  // One per subcommand: registration sets each default.
  OutputFlags o_classify, o_window, o_curve, o_sweep, o_sim, o_enum;
  OutputFlags* o = nullptr;
  ClassifyOptions copts;
  int jobs = 1;
  SweepRange range;
  TreeFlags sim_tree, enum_tree;
  SimFlags sim;
  double perturb = 0.0;
  std::function<std::string()> action;

  auto* classify = app.add_subcommand("classify", "classify one model by iterating the random field map");
  add_shape(classify, f);
  add_edge_weights(classify, f);
  add_node_weights(classify, f);
  add_classify_opts(classify, copts);
  add_output(classify, o_classify, "json", {"json"});
  classify->callback([&] { o = &o_classify; action = [&] { return cmd_classify(f, copts); }; });

  auto* window = app.add_subcommand("window", "closed-form multiplicity window in nu (C_V = 1, C_E = C)");
  window->add_option("--q", f.q, "branching factor");
  window->add_option("--cap", f.cap, "edge capacity C");
  add_edge_weights(window, f);
  add_output(window, o_window, "json", {"json"});
  window->callback([&] { o = &o_window; action = [&] { return cmd_window(f); }; });

  auto* curve = app.add_subcommand("blocking-curve", "multicast blocking at the limit(s) over a nu grid");
  add_shape(curve, f);
  add_edge_weights(curve, f);
  add_node_weights(curve, f);
  curve->add_option("--nu-min", f.nu_min, "grid start");
  curve->add_option("--nu-max", f.nu_max, "grid end");
  curve->add_option("--nu-step", f.nu_step, "grid step");
  add_classify_opts(curve, copts);
  curve->add_option("--jobs", jobs, "worker threads");
  add_output(curve, o_curve, "csv", {"csv", "json"});
  curve->callback([&] { o = &o_curve; action = [&] { return cmd_blocking_curve(f, copts, jobs, *o); }; });

  auto* sweep = app.add_subcommand("sweep-region", "window endpoints over an edge-rate grid");
  sweep->add_option("--q", f.q, "branching factor");
  sweep->add_option("--cap", f.cap, "edge capacity C");
  sweep->add_option("--cv", f.cv, "multicast cap (must be 1)");
  sweep->add_option("--ce", f.ce, "unicast cap (must equal C)");
  sweep->add_option("--weights", f.weights, "poisson or geometric");
  sweep->add_option("--lam-min", range.lo, "grid start");
  sweep->add_option("--lam-max", range.hi, "grid end");
  sweep->add_option("--lam-step", range.step, "grid step");
  sweep->add_option("--jobs", jobs, "worker threads");
  add_output(sweep, o_sweep, "csv", {"csv", "json"});
  sweep->callback([&] { o = &o_sweep; action = [&] { return cmd_sweep_region(f, range, jobs, *o); }; });

  auto* simulate = app.add_subcommand("simulate", "event-driven simulation on a small tree");
  add_shape(simulate, f);
  simulate->add_option("--nu", f.nu, "multicast arrival rate per node");
  simulate->add_option("--lam", f.lam, "unicast arrival rate per edge");
  add_tree(simulate, sim_tree, "spherical");
  simulate->add_option("--service", sim.service, "per-call or shared-server")
      ->check(CLI::IsMember({"per-call", "shared-server"}));
  simulate->add_option("--durations", sim.durations, "exponential or deterministic")
      ->check(CLI::IsMember({"exponential", "deterministic"}));
  simulate->add_option("--warmup", sim.warmup, "discarded initial time (default 10(1+nu+lam))");
  simulate->add_option("--horizon", sim.horizon, "measured time per replication");
  simulate->add_option("--replications", sim.replications, "independent replications");
  simulate->add_option("--seed", sim.seed, "base seed");
  simulate->add_option("--jobs", jobs, "worker threads");
  simulate->add_flag("--check-invariants", sim.check_invariants, "check feasibility after every event");
  simulate->add_flag("--compare", sim.compare, "attach exact oracle values and z-scores");
  add_output(simulate, o_sim, "json", {"json"});
  simulate->callback([&] { o = &o_sim; action = [&] { return cmd_simulate(f, sim_tree, sim, jobs); }; });

  auto* enumerate = app.add_subcommand("enumerate", "exhaustive enumeration on a small tree");
  add_shape(enumerate, f);
  add_edge_weights(enumerate, f);
  add_node_weights(enumerate, f);
  add_tree(enumerate, enum_tree, "rooted");
  add_output(enumerate, o_enum, "json", {"json"});
  enumerate->callback([&] { o = &o_enum; action = [&] { return cmd_enumerate(f, enum_tree); }; });

  auto* selftest = app.add_subcommand("selftest", "consistency checks and reference values");
  selftest->add_option("--debug-perturb", perturb, "scale edge weights in the reference checks")->group("");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (selftest->parsed()) return cmd_selftest(perturb, out);
    emit(action(), *o, out);
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SizeGuardError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const AssumptionError& e) {
    err << "assumption failed: " << e.what() << '\n';
    return kExitAssumption;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

}  // namespace lossnet
