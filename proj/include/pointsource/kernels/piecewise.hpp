#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ps {

/// Dense univariate polynomial, coefficients in increasing degree.
class Polynomial {
public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

  static Polynomial constant(double v) { return Polynomial({v}); }
  /// x - a
  static Polynomial shifted_identity(double a) { return Polynomial({-a, 1.0}); }

  const std::vector<double>& coeffs() const { return c_; }
  int degree() const { return c_.empty() ? -1 : static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }

  double operator()(double x) const {
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  Polynomial derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<double> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * static_cast<double>(k);
    return Polynomial(std::move(d));
  }

  /// Antiderivative vanishing at 0.
  Polynomial antiderivative() const {
    std::vector<double> d(c_.size() + 1, 0.0);
    for (std::size_t k = 0; k < c_.size(); ++k) d[k + 1] = c_[k] / static_cast<double>(k + 1);
    return Polynomial(std::move(d));
  }

  /// q(x) = p(x + s)
  Polynomial shift(double s) const {
    std::vector<double> out(c_.size(), 0.0);
    // Horner in polynomial arithmetic: p(x+s) = (...(c_n (x+s) + c_{n-1})(x+s) ...)
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) {
      for (std::size_t k = out.size() - 1; k > 0; --k) out[k] = out[k] * s + out[k - 1];
      out[0] = out[0] * s + *it;
    }
    return Polynomial(std::move(out));
  }

  /// q(x) = p(a x)
  Polynomial scale_argument(double a) const {
    std::vector<double> out(c_);
    double f = 1.0;
    for (auto& v : out) {
      v *= f;
      f *= a;
    }
    return Polynomial(std::move(out));
  }

  Polynomial& operator+=(const Polynomial& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
    for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
    trim();
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) { return *this += o * -1.0; }
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(const Polynomial& a, double s) {
    std::vector<double> out(a.c_);
    for (auto& v : out) v *= s;
    return Polynomial(std::move(out));
  }
  friend Polynomial operator*(double s, const Polynomial& a) { return a * s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.c_.empty() || b.c_.empty()) return {};
    std::vector<double> out(a.c_.size() + b.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(out));
  }

  /// r(x) = p(q(x))
  Polynomial compose(const Polynomial& q) const {
    Polynomial acc;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * q + constant(*it);
    return acc;
  }

private:
  void trim() {
    while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
  }
  std::vector<double> c_;
};

/// Compactly supported piecewise polynomial on ℝ, zero outside [breaks.front(), breaks.back()].
/// Each piece is stored in the local coordinate t = x - breaks[k].
class PiecewisePolynomial {
public:
  PiecewisePolynomial() = default;
  PiecewisePolynomial(std::vector<double> breaks, std::vector<Polynomial> local_pieces)
      : breaks_(std::move(breaks)), pieces_(std::move(local_pieces)) {
    if (breaks_.size() != pieces_.size() + 1) throw std::invalid_argument("piecewise: size mismatch");
    for (std::size_t k = 0; k + 1 < breaks_.size(); ++k)
      if (!(breaks_[k] < breaks_[k + 1])) throw std::invalid_argument("piecewise: breaks not increasing");
  }

  /// Build from pieces written in the global coordinate x.
  static PiecewisePolynomial from_global(std::vector<double> breaks, const std::vector<Polynomial>& global) {
    std::vector<Polynomial> local;
    local.reserve(global.size());
    for (std::size_t k = 0; k < global.size(); ++k) local.push_back(global[k].shift(breaks[k]));
    return PiecewisePolynomial(std::move(breaks), std::move(local));
  }

  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<Polynomial>& pieces() const { return pieces_; }
  bool empty() const { return pieces_.empty(); }
  double support_lower() const { return breaks_.empty() ? 0.0 : breaks_.front(); }
  double support_upper() const { return breaks_.empty() ? 0.0 : breaks_.back(); }

  /// Piece index for x using right limits at joints, or -1 outside the support.
  int locate(double x) const {
    if (breaks_.empty() || x < breaks_.front() || x >= breaks_.back()) return -1;
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    return static_cast<int>(it - breaks_.begin()) - 1;
  }

  double operator()(double x) const {
    int k = locate(x);
    return k < 0 ? 0.0 : pieces_[k](x - breaks_[k]);
  }

  PiecewisePolynomial derivative() const {
    std::vector<Polynomial> d;
    d.reserve(pieces_.size());
    for (const auto& p : pieces_) d.push_back(p.derivative());
    return PiecewisePolynomial(breaks_, std::move(d));
  }

  /// Cumulative integral from the left end of the support, restricted to the support.
  PiecewisePolynomial integral() const {
    std::vector<Polynomial> out;
    double acc = 0.0;
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
      Polynomial a = pieces_[k].antiderivative() + Polynomial::constant(acc);
      acc = a(breaks_[k + 1] - breaks_[k]);
      out.push_back(std::move(a));
    }
    return PiecewisePolynomial(breaks_, std::move(out));
  }

  double total_integral() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < pieces_.size(); ++k)
      acc += pieces_[k].antiderivative()(breaks_[k + 1] - breaks_[k]);
    return acc;
  }

  /// q(x) = s * p(x / a) for a > 0.
  PiecewisePolynomial rescaled(double a, double s = 1.0) const {
    if (!(a > 0)) throw std::invalid_argument("piecewise: scale must be positive");
    std::vector<double> b(breaks_);
    for (auto& v : b) v *= a;
    std::vector<Polynomial> p;
    p.reserve(pieces_.size());
    for (const auto& q : pieces_) p.push_back(q.scale_argument(1.0 / a) * s);
    return PiecewisePolynomial(std::move(b), std::move(p));
  }

  /// Exact maximum of |p| over the support, up to root isolation on a fine sampling.
  double max_abs() const {
    double m = 0.0;
    for (std::size_t k = 0; k < pieces_.size(); ++k)
      m = std::max(m, max_abs_on(pieces_[k], 0.0, breaks_[k + 1] - breaks_[k]));
    return m;
  }

  /// Largest jump of the function at a joint (including the support ends).
  double max_jump() const {
    double j = 0.0;
    for (std::size_t k = 0; k <= pieces_.size(); ++k) {
      double left = k == 0 ? 0.0 : pieces_[k - 1](breaks_[k] - breaks_[k - 1]);
      double right = k == pieces_.size() ? 0.0 : pieces_[k](0.0);
      j = std::max(j, std::abs(left - right));
    }
    return j;
  }

  /// Lipschitz constant: max|p'| if continuous, infinity otherwise.
  double lipschitz() const {
    if (max_jump() > 1e-12 * std::max(1.0, max_abs())) return std::numeric_limits<double>::infinity();
    return derivative().max_abs();
  }

  /// Exact convolution (f*g)(x) = ∫ f(y) g(x - y) dy.
  friend PiecewisePolynomial convolve(const PiecewisePolynomial& f, const PiecewisePolynomial& g) {
    if (f.empty() || g.empty()) return {};
    std::vector<double> cuts;
    for (double a : f.breaks_)
      for (double b : g.breaks_) cuts.push_back(a + b);
    std::sort(cuts.begin(), cuts.end());
    const double scale = (f.support_upper() - f.support_lower()) + (g.support_upper() - g.support_lower());
    std::vector<double> breaks;
    for (double c : cuts)
      if (breaks.empty() || c - breaks.back() > 1e-13 * scale) breaks.push_back(c);

    std::vector<Polynomial> out;
    for (std::size_t m = 0; m + 1 < breaks.size(); ++m) {
      const double c0 = breaks[m], c1 = breaks[m + 1], xm = 0.5 * (c0 + c1);
      Polynomial acc;  // global coordinate x
      for (std::size_t i = 0; i < f.pieces_.size(); ++i) {
        const double a0 = f.breaks_[i], a1 = f.breaks_[i + 1];
        const Polynomial P = f.pieces_[i].shift(-a0);  // global y
        for (std::size_t j = 0; j < g.pieces_.size(); ++j) {
          const double b0 = g.breaks_[j], b1 = g.breaks_[j + 1];
          // y ranges over [max(a0, x - b1), min(a1, x - b0)], decided at the midpoint.
          const bool lo_is_const = a0 >= xm - b1;
          const bool up_is_const = a1 <= xm - b0;
          const double lo_m = lo_is_const ? a0 : xm - b1;
          const double up_m = up_is_const ? a1 : xm - b0;
          if (!(up_m > lo_m)) continue;
          const Polynomial Q = g.pieces_[j].shift(-b0);  // global u = x - y
          const Polynomial lo = lo_is_const ? Polynomial::constant(a0) : Polynomial::shifted_identity(b1);
          const Polynomial up = up_is_const ? Polynomial::constant(a1) : Polynomial::shifted_identity(b0);
          // Q(x - y) = Σ_k q_k Σ_l C(k,l) x^{k-l} (-y)^l
          const auto& q = Q.coeffs();
          std::vector<Polynomial> R;  // R[l] = antiderivative of y^l P(y)
          for (std::size_t k = 0; k < q.size(); ++k) {
            std::vector<double> mono(k + 1, 0.0);
            mono[k] = 1.0;
            R.push_back((Polynomial(std::move(mono)) * P).antiderivative());
          }
          for (std::size_t k = 0; k < q.size(); ++k) {
            if (q[k] == 0.0) continue;
            double binom = 1.0;
            for (std::size_t l = 0; l <= k; ++l) {
              const double sgn = (l % 2 == 0) ? 1.0 : -1.0;
              std::vector<double> xpow(k - l + 1, 0.0);
              xpow[k - l] = 1.0;
              const Polynomial span = R[l].compose(up) - R[l].compose(lo);
              acc += Polynomial(std::move(xpow)) * span * (q[k] * binom * sgn);
              binom = binom * static_cast<double>(k - l) / static_cast<double>(l + 1);
            }
          }
        }
      }
      (void)c1;
      out.push_back(acc.shift(c0));
    }
    return PiecewisePolynomial(std::move(breaks), std::move(out));
  }

  static double max_abs_on(const Polynomial& p, double lo, double hi) {
    // Extrema are at the ends or at roots of p'; isolate roots by sign changes on a fine grid.
    double m = std::max(std::abs(p(lo)), std::abs(p(hi)));
    const Polynomial dp = p.derivative();
    if (dp.is_zero()) return m;
    constexpr int n = 512;
    double prev_x = lo, prev_v = dp(lo);
    for (int s = 1; s <= n; ++s) {
      const double x = lo + (hi - lo) * s / n;
      const double v = dp(x);
      m = std::max(m, std::abs(p(x)));
      if ((prev_v < 0) != (v < 0)) {
        double a = prev_x, b = x, fa = prev_v;
        for (int it = 0; it < 80; ++it) {
          const double c = 0.5 * (a + b);
          const double fc = dp(c);
          if ((fc < 0) == (fa < 0)) {
            a = c;
            fa = fc;
          } else {
            b = c;
          }
        }
        m = std::max(m, std::abs(p(0.5 * (a + b))));
      }
      prev_x = x;
      prev_v = v;
    }
    return m;
  }

private:
  std::vector<double> breaks_;
  std::vector<Polynomial> pieces_;
};

}  // namespace ps
