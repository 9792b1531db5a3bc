#pragma once

#include <cmath>

#include <Eigen/Core>

namespace tdo {

/// Forward-mode dual number carrying a value and a fixed-size gradient.
///
/// The seed dimension `N` is the number of differentiation directions; it is
/// fixed at compile time so a Jet never allocates.
template <int N>
struct Jet {
  using Gradient = Eigen::Matrix<double, N, 1>;

  double val = 0.0;
  Gradient grad = Gradient::Zero();

  Jet() = default;
  Jet(double v) : val(v), grad(Gradient::Zero()) {}  // NOLINT: implicit on purpose
  Jet(double v, const Gradient& g) : val(v), grad(g) {}

  /// Independent variable seeded along direction `k`.
  static Jet variable(double v, int k) {
    Jet j(v);
    j.grad[k] = 1.0;
    return j;
  }

  Jet& operator+=(const Jet& o) {
    val += o.val;
    grad += o.grad;
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    val -= o.val;
    grad -= o.grad;
    return *this;
  }
  Jet& operator*=(const Jet& o) {
    grad = o.val * grad + val * o.grad;
    val *= o.val;
    return *this;
  }
  Jet& operator/=(const Jet& o) {
    const double inv = 1.0 / o.val;
    grad = (grad - (val * inv) * o.grad) * inv;
    val *= inv;
    return *this;
  }
};

template <int N>
Jet<N> operator-(const Jet<N>& a) {
  return {-a.val, -a.grad};
}

template <int N>
Jet<N> operator+(Jet<N> a, const Jet<N>& b) {
  return a += b;
}
template <int N>
Jet<N> operator-(Jet<N> a, const Jet<N>& b) {
  return a -= b;
}
template <int N>
Jet<N> operator*(Jet<N> a, const Jet<N>& b) {
  return a *= b;
}
template <int N>
Jet<N> operator/(Jet<N> a, const Jet<N>& b) {
  return a /= b;
}

template <int N>
Jet<N> operator+(Jet<N> a, double b) {
  a.val += b;
  return a;
}
template <int N>
Jet<N> operator+(double a, Jet<N> b) {
  b.val += a;
  return b;
}
template <int N>
Jet<N> operator-(Jet<N> a, double b) {
  a.val -= b;
  return a;
}
template <int N>
Jet<N> operator-(double a, const Jet<N>& b) {
  return {a - b.val, -b.grad};
}
template <int N>
Jet<N> operator*(Jet<N> a, double b) {
  a.val *= b;
  a.grad *= b;
  return a;
}
template <int N>
Jet<N> operator*(double a, Jet<N> b) {
  return b * a;
}
template <int N>
Jet<N> operator/(Jet<N> a, double b) {
  return a * (1.0 / b);
}
template <int N>
Jet<N> operator/(double a, const Jet<N>& b) {
  const double inv = 1.0 / b.val;
  return {a * inv, (-a * inv * inv) * b.grad};
}

// Elementary functions. Each applies the chain rule with the scalar
// derivative evaluated at the value.

template <int N>
Jet<N> sin(const Jet<N>& a) {
  return {std::sin(a.val), std::cos(a.val) * a.grad};
}
template <int N>
Jet<N> cos(const Jet<N>& a) {
  return {std::cos(a.val), -std::sin(a.val) * a.grad};
}
template <int N>
Jet<N> atan(const Jet<N>& a) {
  return {std::atan(a.val), a.grad / (1.0 + a.val * a.val)};
}
template <int N>
Jet<N> sqrt(const Jet<N>& a) {
  const double r = std::sqrt(a.val);
  return {r, a.grad / (2.0 * r)};
}
template <int N>
Jet<N> exp(const Jet<N>& a) {
  const double e = std::exp(a.val);
  return {e, e * a.grad};
}
// |a| has no derivative at 0; the subgradient 0 is used there.
template <int N>
Jet<N> abs(const Jet<N>& a) {
  if (a.val > 0.0) return a;
  if (a.val < 0.0) return -a;
  return {0.0, Jet<N>::Gradient::Zero()};
}

/// Value of a plain double or a Jet, for code templated on the scalar type.
inline double value_of(double v) { return v; }
template <int N>
double value_of(const Jet<N>& j) {
  return j.val;
}

}  // namespace tdo

namespace Eigen {

// Lets Jets live in fixed-size Eigen containers.
template <int N>
struct NumTraits<tdo::Jet<N>> : NumTraits<double> {
  using Real = tdo::Jet<N>;
  using NonInteger = tdo::Jet<N>;
  using Nested = tdo::Jet<N>;
  using Literal = tdo::Jet<N>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 1 + N,
    MulCost = 1 + 2 * N
  };
};

}  // namespace Eigen
