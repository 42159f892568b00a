#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace isoflow {

// Exact rational scalar.  Every IEEE double is a binary rational, so initial
// values convert exactly and the triangular coordinate recursions can be
// integrated with no rounding at all; rounding happens only on final
// evaluation.
using Rat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline Rat rat_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
  if (x == 0.0) return Rat(0);
  int exp = 0;
  double m = std::frexp(x, &exp);  // x = m * 2^exp with 0.5 <= |m| < 1
  auto mi = static_cast<long long>(std::ldexp(m, 53));
  exp -= 53;
  BigInt num = mi, den = 1;
  if (exp > 0)
    num <<= exp;
  else
    den <<= -exp;
  return Rat(num, den);
}

inline double rat_to_double(const Rat& r) { return r.convert_to<double>(); }

inline std::string rat_to_string(const Rat& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

// Dense polynomial in t with rational coefficients, ascending powers.
using Poly = std::vector<Rat>;

inline Poly poly_add(const Poly& a, const Poly& b) {
  Poly out(std::max(a.size(), b.size()), Rat(0));
  for (size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

inline Poly poly_scale(const Poly& a, const Rat& c) {
  Poly out(a);
  for (auto& v : out) v *= c;
  return out;
}

// Antiderivative with zero constant term.
inline Poly poly_integrate(const Poly& a) {
  Poly out(a.size() + 1, Rat(0));
  for (size_t i = 0; i < a.size(); ++i) out[i + 1] = a[i] / Rat(i + 1);
  return out;
}

inline double poly_eval(const Poly& a, double t) {
  double v = 0.0;
  for (size_t i = a.size(); i-- > 0;) v = v * t + rat_to_double(a[i]);
  return v;
}

inline Rat poly_eval_exact(const Poly& a, const Rat& t) {
  Rat v = 0;
  for (size_t i = a.size(); i-- > 0;) v = v * t + a[i];
  return v;
}

// Finite sum of e^{q n t} * poly_q(t) with integer q >= 0; the factor n (the
// multiplicity sum of the root system) is supplied at evaluation time so the
// stored data stays exact.
struct ExpPoly {
  std::map<int, Poly> parts;

  static ExpPoly constant(const Rat& c) {
    ExpPoly p;
    if (c != 0) p.parts[0] = Poly{c};
    return p;
  }

  bool is_polynomial() const {
    return parts.empty() || (parts.size() == 1 && parts.begin()->first == 0);
  }

  void add_term(int q, const Poly& poly) {
    auto& dst = parts[q];
    dst = poly_add(dst, poly);
  }

  double eval(double t, double n) const {
    double v = 0.0;
    for (const auto& [q, poly] : parts)
      v += (q == 0 ? 1.0 : std::exp(q * n * t)) * poly_eval(poly, t);
    return v;
  }
};

}  // namespace isoflow
