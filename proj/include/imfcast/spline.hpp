#pragma once

// Natural cubic spline interpolation. Second derivatives at the knots come
// from the standard tridiagonal system with zero curvature at both ends,
// solved with the Thomas algorithm.

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace imfcast {

template <typename T>
class CubicSpline {
 public:
  // Knot abscissae must be strictly increasing; at least two knots.
  static CubicSpline fit(std::vector<T> x, std::vector<T> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) {
      throw std::invalid_argument("CubicSpline: need >= 2 knots with matching values");
    }
    for (std::size_t i = 1; i < n; ++i) {
      if (!(x[i] > x[i - 1])) {
        throw std::invalid_argument("CubicSpline: knot positions must be strictly increasing");
      }
    }
    CubicSpline s;
    s.x_ = std::move(x);
    s.y_ = std::move(y);
    s.m_.assign(n, T(0));
    if (n > 2) {
      // Interior equations, i = 1..n-2:
      //   (h_{i-1}/6) m_{i-1} + ((h_{i-1}+h_i)/3) m_i + (h_i/6) m_{i+1}
      //     = (y_{i+1}-y_i)/h_i - (y_i-y_{i-1})/h_{i-1}
      const std::size_t k = n - 2;
      std::vector<T> sub(k), diag(k), sup(k), rhs(k);
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const T h0 = s.x_[i] - s.x_[i - 1];
        const T h1 = s.x_[i + 1] - s.x_[i];
        sub[i - 1] = h0 / T(6);
        diag[i - 1] = (h0 + h1) / T(3);
        sup[i - 1] = h1 / T(6);
        rhs[i - 1] = (s.y_[i + 1] - s.y_[i]) / h1 - (s.y_[i] - s.y_[i - 1]) / h0;
      }
      // Thomas forward sweep / back substitution.
      for (std::size_t i = 1; i < k; ++i) {
        const T w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
      }
      s.m_[k] = rhs[k - 1] / diag[k - 1];
      for (std::size_t i = k - 1; i > 0; --i) {
        s.m_[i] = (rhs[i - 1] - sup[i - 1] * s.m_[i + 1]) / diag[i - 1];
      }
    }
    return s;
  }

  T operator()(T q) const {
    const std::size_t n = x_.size();
    // Extend the end cubics for queries outside the knot span.
    std::size_t i;
    if (q <= x_[1]) {
      i = 0;
    } else if (q >= x_[n - 2]) {
      i = n - 2;
    } else {
      i = static_cast<std::size_t>(
              std::upper_bound(x_.begin(), x_.end(), q) - x_.begin()) -
          1;
    }
    const T h = x_[i + 1] - x_[i];
    const T a = (x_[i + 1] - q) / h;
    const T b = (q - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / T(6);
  }

  const std::vector<T>& knot_x() const { return x_; }
  const std::vector<T>& second_derivatives() const { return m_; }

 private:
  std::vector<T> x_, y_, m_;
};

}  // namespace imfcast
