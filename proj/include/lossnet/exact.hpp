#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace lossnet {

using Rational = boost::multiprecision::cpp_rational;

// Every finite double is a dyadic rational, so this conversion is exact.
inline Rational to_rational(double x) { return Rational(x); }

inline int sign(const Rational& r) { return r.sign(); }

}  // namespace lossnet
