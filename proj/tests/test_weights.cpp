#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "lossnet/errors.hpp"
#include "lossnet/weights.hpp"

using namespace lossnet;

namespace {

// Exact rate^i / i! for a rational rate.
Rational poisson_exact(const Rational& rate, int i) {
  Rational v = 1;
  for (int k = 1; k <= i; ++k) v = v * rate / k;
  return v;
}

double ulp(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()) - x; }

}  // namespace

TEST_CASE("poisson weights") {
  const auto w = make_poisson(0.75, 2);
  CHECK(w.size() == 3);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 0.75);
  CHECK(w[2] == 0.28125);

  CHECK(make_poisson(1.0, 0).size() == 1);
  CHECK(make_poisson(1.0, 0)[0] == 1.0);

  const auto w2 = make_poisson(2.0, 3);
  for (int i = 0; i <= 3; ++i) CHECK(w2[i] == static_cast<double>(poisson_exact(2, i)));
  CHECK(w2[3] == doctest::Approx(4.0 / 3.0).epsilon(1e-15));

  CHECK_THROWS_AS(make_poisson(0.0, 2), ValidationError);
  CHECK_THROWS_AS(make_poisson(-1.0, 2), ValidationError);
  CHECK_THROWS_AS(make_poisson(std::nan(""), 2), ValidationError);
  CHECK_THROWS_AS(make_poisson(1.0, -1), ValidationError);
}

TEST_CASE("geometric weights") {
  const auto w = make_geometric(1.0, 2);
  CHECK(w.entries()[0] == 1.0);
  CHECK(w.entries()[1] == 1.0);
  CHECK(w.entries()[2] == 1.0);
  const auto h = make_geometric(0.5, 2);
  CHECK(to_rational(h[1]) == Rational(1, 2));
  CHECK(to_rational(h[2]) == Rational(1, 4));
  CHECK(make_geometric(1.0, 0).size() == 1);
  CHECK_THROWS_AS(make_geometric(0.0, 1), ValidationError);
  CHECK_THROWS_AS(make_geometric(-0.5, 1), ValidationError);
}

TEST_CASE("family parsing") {
  CHECK(parse_family("poisson") == WeightFamily::poisson);
  CHECK(parse_family("geometric") == WeightFamily::geometric);
  CHECK(to_string(WeightFamily::geometric) == "geometric");
  CHECK_THROWS_AS(parse_family("erlang"), ValidationError);
  CHECK(make_family(WeightFamily::geometric, 2.0, 3) == make_geometric(2.0, 3));
}

TEST_CASE("weight vector invariants") {
  CHECK_THROWS_AS(WeightVector({}), ValidationError);
  CHECK_THROWS_AS(WeightVector({0.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(WeightVector({1.0, -0.1}), ValidationError);
  CHECK_THROWS_AS(WeightVector({1.0, std::numeric_limits<double>::infinity()}), ValidationError);
  CHECK_NOTHROW(WeightVector({1.0, 0.0, 2.0}));

  const WeightVector w({0.5, 0.0, 2.0, 0.25});
  CHECK(w.top_index() == 3);
  for (int k = 1; k <= 3; ++k) {
    CHECK(w.partial_sum(k) >= w.partial_sum(k - 1));
    CHECK(w.partial_sum(k) == w.partial_sum(k - 1) + w[k]);
  }
  CHECK(w.truncated(1).size() == 2);
  CHECK_THROWS_AS(w.truncated(4), ValidationError);
  CHECK_THROWS_AS(w.entry(4), ValidationError);
}

TEST_CASE("partial sums") {
  CHECK(partial_sum(make_geometric(1.0, 2), 2) == 3.0);
  CHECK(partial_sum(make_poisson(0.75, 2), 1) == 1.75);
  CHECK(partial_sum(make_poisson(6.0, 2), 2) == 25.0);
  CHECK_THROWS_AS(partial_sum(make_poisson(6.0, 2), 3), ValidationError);
  CHECK_THROWS_AS(partial_sum(make_poisson(6.0, 2), -1), ValidationError);
}

TEST_CASE("partial sums agree with independent summation") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> e{0.1 + u(rng)};
    for (int i = 0; i < 12; ++i) e.push_back(u(rng));
    const WeightVector w(e);
    Rational exact = 0;
    for (int k = 0; k < static_cast<int>(e.size()); ++k) {
      exact += to_rational(e[static_cast<std::size_t>(k)]);
      CHECK(w.exact_partial_sum(k) == exact);
      const double x = static_cast<double>(exact);
      CHECK(std::abs(w.partial_sum(k) - x) <= 4 * ulp(x));
    }
  }
}

TEST_CASE("assumption check") {
  CHECK(check_assumption(make_geometric(1.0, 2), 2));
  CHECK(assumption_gap(make_geometric(1.0, 2), 2) == 1);
  CHECK(check_assumption(make_poisson(0.75, 2), 2));
  CHECK(assumption_gap(make_poisson(0.75, 2), 2) == Rational(33, 32));
  CHECK_FALSE(check_assumption(WeightVector({1.0, 0.0, 0.0}), 2));
  CHECK(assumption_gap(WeightVector({1.0, 0.0, 0.0}), 2) == 0);
  CHECK_THROWS_AS(check_assumption(make_poisson(1.0, 3), 1), ValidationError);
  CHECK_THROWS_AS(check_assumption(make_poisson(1.0, 2), 3), ValidationError);
}

TEST_CASE("geometric assumption gap equals rate^(C-1)") {
  // Dyadic rates keep every stored weight exact, so the identity is exact.
  for (double lam : {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0})
    for (int cap = 2; cap <= 8; ++cap) {
      Rational expect = 1;
      for (int i = 0; i < cap - 1; ++i) expect *= to_rational(lam);
      CHECK(assumption_gap(make_geometric(lam, cap), cap) == expect);
    }
  // Other rates: the identity holds up to rounding of the stored weights.
  for (double lam : {0.1, 0.3, 0.7, 1.1, 2.9})
    for (int cap = 2; cap <= 8; ++cap) {
      const double gap = static_cast<double>(assumption_gap(make_geometric(lam, cap), cap));
      CHECK(gap == doctest::Approx(std::pow(lam, cap - 1)).epsilon(1e-9));
    }
}

TEST_CASE("poisson weights satisfy the assumption") {
  for (double lam = 0.01; lam < 60.0; lam *= 1.37)
    for (int cap = 2; cap <= 12; ++cap) CHECK(check_assumption(make_poisson(lam, cap), cap));
}

TEST_CASE("weight file parsing") {
  std::istringstream ok("# header\n1\n\n0.5   # inline\n  0.25\n");
  const auto w = parse_weights(ok);
  CHECK(w.size() == 3);
  CHECK(w[2] == 0.25);

  std::istringstream bad("1\nabc\n");
  CHECK_THROWS_AS(parse_weights(bad), ValidationError);
  std::istringstream trailing("1\n2 3\n");
  CHECK_THROWS_AS(parse_weights(trailing), ValidationError);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(parse_weights(empty), ValidationError);
  std::istringstream zero_first("0\n1\n");
  CHECK_THROWS_AS(parse_weights(zero_first), ValidationError);

  const auto path = std::filesystem::temp_directory_path() / "lossnet_weights_test.txt";
  {
    std::ofstream f(path);
    f << "1\n0\n3\n";
  }
  CHECK(load_weights(path) == WeightVector({1.0, 0.0, 3.0}));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_weights(path), ValidationError);
}
