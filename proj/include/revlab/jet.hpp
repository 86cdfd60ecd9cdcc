#pragma once

#include <cmath>

namespace revlab {

// Second-order forward-mode jet: value plus first and second derivative with
// respect to a single variable. Profiles are written once as templates and
// evaluated on Jet to get (a, a', a'') without hand-derived formulas.
struct Jet {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  constexpr Jet() = default;
  constexpr Jet(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  constexpr Jet(double value, double first, double second) : v(value), d1(first), d2(second) {}

  static constexpr Jet variable(double x) { return {x, 1.0, 0.0}; }
};

inline Jet operator+(Jet a, Jet b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
inline Jet operator-(Jet a, Jet b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
inline Jet operator-(Jet a) { return {-a.v, -a.d1, -a.d2}; }
inline Jet operator*(Jet a, Jet b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}
inline Jet operator/(Jet a, Jet b) {
  const double q = a.v / b.v;
  const double q1 = (a.d1 - q * b.d1) / b.v;
  const double q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) / b.v;
  return {q, q1, q2};
}

// Chain rule for f(g): (f∘g)' = f'g', (f∘g)'' = f''g'^2 + f'g''.
inline Jet compose(Jet g, double f0, double f1, double f2) {
  return {f0, f1 * g.d1, f2 * g.d1 * g.d1 + f1 * g.d2};
}

inline Jet sin(Jet g) { return compose(g, std::sin(g.v), std::cos(g.v), -std::sin(g.v)); }
inline Jet cos(Jet g) { return compose(g, std::cos(g.v), -std::sin(g.v), -std::cos(g.v)); }
inline Jet exp(Jet g) {
  const double e = std::exp(g.v);
  return compose(g, e, e, e);
}
inline Jet sqrt(Jet g) {
  const double s = std::sqrt(g.v);
  return compose(g, s, 0.5 / s, -0.25 / (s * g.v));
}

}  // namespace revlab
