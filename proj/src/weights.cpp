#include "lossnet/weights.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "lossnet/errors.hpp"

namespace lossnet {

WeightVector::WeightVector(std::vector<double> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw ValidationError("weight vector must have at least one entry");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const double w = entries_[i];
    if (!std::isfinite(w) || w < 0.0)
      throw ValidationError("weight entry " + std::to_string(i) + " must be finite and nonnegative");
  }
  if (!(entries_[0] > 0.0)) throw ValidationError("weight entry 0 must be positive");

  partial_sums_.resize(entries_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    acc += entries_[i];
    partial_sums_[i] = acc;
  }
}

double WeightVector::entry(int i) const {
  if (i < 0 || i > top_index()) throw ValidationError("weight index out of range");
  return entries_[static_cast<std::size_t>(i)];
}

double WeightVector::partial_sum(int k) const {
  if (k < 0 || k > top_index()) throw ValidationError("partial sum index out of range");
  return partial_sums_[static_cast<std::size_t>(k)];
}

Rational WeightVector::exact_partial_sum(int k) const {
  if (k < 0 || k > top_index()) throw ValidationError("partial sum index out of range");
  Rational acc = 0;
  for (int i = 0; i <= k; ++i) acc += to_rational(entries_[static_cast<std::size_t>(i)]);
  return acc;
}

WeightVector WeightVector::truncated(int top) const {
  if (top < 0 || top > top_index()) throw ValidationError("cannot truncate weight vector beyond its length");
  return WeightVector(std::vector<double>(entries_.begin(), entries_.begin() + top + 1));
}

namespace {

void require_rate(double rate, int top_index) {
  if (!std::isfinite(rate) || !(rate > 0.0)) throw ValidationError("rate must be positive");
  if (top_index < 0) throw ValidationError("top index must be nonnegative");
}

}  // namespace

WeightVector make_poisson(double rate, int top_index) {
  require_rate(rate, top_index);
  std::vector<double> w(static_cast<std::size_t>(top_index) + 1);
  w[0] = 1.0;
  for (int i = 1; i <= top_index; ++i) w[i] = w[i - 1] * rate / i;
  return WeightVector(std::move(w));
}

WeightVector make_geometric(double rate, int top_index) {
  require_rate(rate, top_index);
  std::vector<double> w(static_cast<std::size_t>(top_index) + 1);
  w[0] = 1.0;
  for (int i = 1; i <= top_index; ++i) w[i] = w[i - 1] * rate;
  return WeightVector(std::move(w));
}

WeightVector make_family(WeightFamily family, double rate, int top_index) {
  return family == WeightFamily::poisson ? make_poisson(rate, top_index)
                                         : make_geometric(rate, top_index);
}

WeightFamily parse_family(const std::string& name) {
  if (name == "poisson") return WeightFamily::poisson;
  if (name == "geometric") return WeightFamily::geometric;
  throw ValidationError("unknown weight family '" + name + "'");
}

std::string to_string(WeightFamily family) {
  return family == WeightFamily::poisson ? "poisson" : "geometric";
}

double partial_sum(const WeightVector& w, int k) { return w.partial_sum(k); }

Rational assumption_gap(const WeightVector& w, int cap) {
  if (cap < 2) throw ValidationError("capacity must be at least 2");
  if (w.top_index() < cap) throw ValidationError("weight vector shorter than capacity + 1");
  const Rational l2 = w.exact_partial_sum(cap - 2);
  const Rational l1 = l2 + to_rational(w[cap - 1]);
  const Rational l0 = l1 + to_rational(w[cap]);
  return l1 * l1 - l0 * l2;
}

bool check_assumption(const WeightVector& w, int cap) { return assumption_gap(w, cap) > 0; }

WeightVector parse_weights(std::istream& in) {
  std::vector<double> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double value = 0.0;
    if (!(ls >> value)) {
      std::string rest;
      if (std::istringstream(line) >> rest)
        throw ValidationError("weight file line " + std::to_string(line_no) + ": not a number");
      continue;
    }
    std::string trailing;
    if (ls >> trailing)
      throw ValidationError("weight file line " + std::to_string(line_no) + ": trailing text");
    entries.push_back(value);
  }
  return WeightVector(std::move(entries));
}

WeightVector load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open weight file " + path.string());
  return parse_weights(in);
}

}  // namespace lossnet
