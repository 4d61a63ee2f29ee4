#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace ps {

template <int Dim>
using Point = std::array<double, Dim>;

template <std::size_t N>
std::array<double, N> operator+(const std::array<double, N>& a, const std::array<double, N>& b) {
  std::array<double, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + b[i];
  return r;
}

template <std::size_t N>
std::array<double, N> operator-(const std::array<double, N>& a, const std::array<double, N>& b) {
  std::array<double, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] - b[i];
  return r;
}

template <std::size_t N>
std::array<double, N> operator*(double s, const std::array<double, N>& a) {
  std::array<double, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = s * a[i];
  return r;
}

template <int Dim>
double dot(const Point<Dim>& a, const Point<Dim>& b) {
  double s = 0.0;
  for (int i = 0; i < Dim; ++i) s += a[i] * b[i];
  return s;
}

template <int Dim>
double norm_sq(const Point<Dim>& a) {
  return dot<Dim>(a, a);
}

template <int Dim>
double norm(const Point<Dim>& a) {
  return std::sqrt(norm_sq<Dim>(a));
}

/// The transport cost c₂(x, y) = ½|x − y|².
template <int Dim>
double c2(const Point<Dim>& x, const Point<Dim>& y) {
  return 0.5 * norm_sq<Dim>(x - y);
}

template <int Dim>
bool lex_less(const Point<Dim>& a, const Point<Dim>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

/// Axis-aligned box Ω = [lower, upper].
template <int Dim>
struct Domain {
  Point<Dim> lower{};
  Point<Dim> upper{};

  Domain() {
    lower.fill(0.0);
    upper.fill(1.0);
  }
  Domain(const Point<Dim>& lo, const Point<Dim>& hi) : lower(lo), upper(hi) {
    for (int i = 0; i < Dim; ++i)
      if (!(lower[i] < upper[i])) throw std::invalid_argument("domain: lower must be below upper");
  }

  static Domain unit() { return Domain(); }

  bool contains(const Point<Dim>& x) const {
    for (int i = 0; i < Dim; ++i)
      if (x[i] < lower[i] || x[i] > upper[i]) return false;
    return true;
  }

  Point<Dim> clamp(const Point<Dim>& x) const {
    Point<Dim> r;
    for (int i = 0; i < Dim; ++i) r[i] = std::clamp(x[i], lower[i], upper[i]);
    return r;
  }

  double diameter() const { return norm<Dim>(upper - lower); }
};

}  // namespace ps
