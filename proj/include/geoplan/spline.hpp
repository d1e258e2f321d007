#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "geoplan/types.hpp"

namespace geoplan {

/// Clamped uniform cubic B-spline curve on [0, 1] in chart coordinates.
/// The first and last control points are interpolated; rows of `ctrl` are
/// control points. On any knot interval only four basis functions are
/// active, which keeps energy evaluations local to a control point.
template <typename S>
struct CubicBSpline {
  Matrix<S> ctrl;       // n_ctrl x dim
  std::vector<S> knots; // n_ctrl + 4, clamped

  int num_ctrl() const { return static_cast<int>(ctrl.rows()); }
  int dim() const { return static_cast<int>(ctrl.cols()); }
  int intervals() const { return num_ctrl() - 3; }

  static CubicBSpline make(int n_ctrl, int dim) {
    CubicBSpline sp;
    sp.ctrl = Matrix<S>::Zero(n_ctrl, dim);
    const int m = n_ctrl - 3;
    sp.knots.assign(static_cast<std::size_t>(n_ctrl) + 4, S(0));
    for (int i = 0; i < n_ctrl + 4; ++i) {
      if (i < 4)
        sp.knots[static_cast<std::size_t>(i)] = S(0);
      else if (i >= n_ctrl)
        sp.knots[static_cast<std::size_t>(i)] = S(1);
      else
        sp.knots[static_cast<std::size_t>(i)] =
            static_cast<S>(i - 3) / static_cast<S>(m);
    }
    return sp;
  }

  /// Straight segment from a to b; control points at Greville abscissae so
  /// the spline reproduces the line exactly.
  static CubicBSpline line(const Vector<S>& a, const Vector<S>& b,
                           int n_ctrl) {
    CubicBSpline sp = make(n_ctrl, static_cast<int>(a.size()));
    for (int i = 0; i < n_ctrl; ++i) {
      const S xi = (sp.knots[static_cast<std::size_t>(i) + 1] +
                    sp.knots[static_cast<std::size_t>(i) + 2] +
                    sp.knots[static_cast<std::size_t>(i) + 3]) /
                   S(3);
      sp.ctrl.row(i) = ((S(1) - xi) * a + xi * b).transpose();
    }
    return sp;
  }

  int interval_of(S t) const {
    const int m = intervals();
    int j = static_cast<int>(std::floor(t * static_cast<S>(m)));
    if (j < 0) j = 0;
    if (j >= m) j = m - 1;
    return j;
  }

  /// Values and t-derivatives of the four active basis functions on
  /// interval j (controls j .. j+3) at parameter t.
  void basis(int j, S t, std::array<S, 4>& n, std::array<S, 4>& dn) const {
    const int span = j + 3;  // knots[span] <= t <= knots[span+1]
    std::array<S, 4> left{}, right{};
    std::array<S, 4> vals{};
    vals[0] = S(1);
    std::array<S, 3> deg2{};  // degree-2 basis N_{span-2..span,2}
    for (int r = 1; r <= 3; ++r) {
      left[static_cast<std::size_t>(r)] =
          t - knots[static_cast<std::size_t>(span + 1 - r)];
      right[static_cast<std::size_t>(r)] =
          knots[static_cast<std::size_t>(span + r)] - t;
      S saved = S(0);
      for (int k = 0; k < r; ++k) {
        const S den = right[static_cast<std::size_t>(k + 1)] +
                      left[static_cast<std::size_t>(r - k)];
        const S temp = den != S(0) ? vals[static_cast<std::size_t>(k)] / den
                                   : S(0);
        vals[static_cast<std::size_t>(k)] =
            saved + right[static_cast<std::size_t>(k + 1)] * temp;
        saved = left[static_cast<std::size_t>(r - k)] * temp;
      }
      vals[static_cast<std::size_t>(r)] = saved;
      if (r == 2)
        for (int k = 0; k <= 2; ++k)
          deg2[static_cast<std::size_t>(k)] = vals[static_cast<std::size_t>(k)];
    }
    n = vals;
    // N'_{i,3} = 3 (N_{i,2}/(u_{i+3}-u_i) - N_{i+1,2}/(u_{i+4}-u_{i+1}))
    for (int local = 0; local < 4; ++local) {
      const int gi = span - 3 + local;
      auto deg2_at = [&](int g) -> S {
        const int idx = g - (span - 2);
        return (idx >= 0 && idx <= 2) ? deg2[static_cast<std::size_t>(idx)]
                                      : S(0);
      };
      const S d1 = knots[static_cast<std::size_t>(gi + 3)] -
                   knots[static_cast<std::size_t>(gi)];
      const S d2 = knots[static_cast<std::size_t>(gi + 4)] -
                   knots[static_cast<std::size_t>(gi + 1)];
      S val = S(0);
      if (d1 != S(0)) val += deg2_at(gi) / d1;
      if (d2 != S(0)) val -= deg2_at(gi + 1) / d2;
      dn[static_cast<std::size_t>(local)] = S(3) * val;
    }
  }

  Vector<S> eval(S t) const {
    const int j = interval_of(t);
    std::array<S, 4> n{}, dn{};
    basis(j, t, n, dn);
    Vector<S> out = Vector<S>::Zero(dim());
    for (int r = 0; r < 4; ++r)
      out += n[static_cast<std::size_t>(r)] * ctrl.row(j + r).transpose();
    return out;
  }

  Vector<S> deriv(S t) const {
    const int j = interval_of(t);
    std::array<S, 4> n{}, dn{};
    basis(j, t, n, dn);
    Vector<S> out = Vector<S>::Zero(dim());
    for (int r = 0; r < 4; ++r)
      out += dn[static_cast<std::size_t>(r)] * ctrl.row(j + r).transpose();
    return out;
  }
};

}  // namespace geoplan
