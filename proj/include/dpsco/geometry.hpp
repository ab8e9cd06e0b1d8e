// Copyright 2026 The dpsco Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPSCO_GEOMETRY_HPP_
#define DPSCO_GEOMETRY_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpsco {

using Vec = std::vector<double>;

// Raised when an inner solver (projection bisection, Dykstra alternation)
// fails to reach its tolerance within its iteration cap.
struct SolverError : std::runtime_error {
  SolverError(const std::string& what, double residual_in)
      : std::runtime_error(what + " (residual " + std::to_string(residual_in) + ")"),
        residual(residual_in) {}
  double residual;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// q with 1/p + 1/q = 1. Requires p > 1; p = infinity maps to 1.
inline double dual_exponent(double p) {
  if (!(p > 1.0)) throw std::domain_error("dual_exponent: requires p > 1");
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

// (sum |x_j|^p)^{1/p}; p = infinity gives max |x_j|.
inline double lp_norm(std::span<const double> x, double p) {
  if (!(p >= 1.0)) throw std::domain_error("lp_norm: requires p >= 1");
  if (std::isinf(p)) {
    double m = 0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
  }
  if (p == 1.0) {
    double s = 0;
    for (double v : x) s += std::abs(v);
    return s;
  }
  if (p == 2.0) {
    double s = 0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
  }
  // Scale by the max to avoid overflow/underflow of pow at extreme exponents.
  double m = 0;
  for (double v : x) m = std::max(m, std::abs(v));
  if (m == 0) return 0;
  double s = 0;
  for (double v : x) s += std::pow(std::abs(v) / m, p);
  return m * std::pow(s, 1.0 / p);
}

inline double l1_norm(std::span<const double> x) { return lp_norm(x, 1.0); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

inline bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

// Mirror map h(x) = (1/(p-1)) ||x - center||_p^2 for p in (1, 2]. An empty
// center means the origin. h is 2-strongly convex with respect to ||.||_p, so
// in particular 1-strongly convex as the algorithms require.
struct LpGeometry {
  double p;
  double q;            // dual exponent, kept consistent with p
  Vec center;          // empty = origin

  LpGeometry(double p_in, Vec center_in = {}) : p(p_in), q(dual_exponent(p_in)), center(std::move(center_in)) {
    if (!(p > 1.0) || p > 2.0 + 1e-12)
      throw std::domain_error("LpGeometry: requires 1 < p <= 2");
  }

  double center_coord(std::size_t j) const { return center.empty() ? 0.0 : center[j]; }

  double potential(std::span<const double> x) const {
    const double n = shifted_norm(x);
    return n * n / (p - 1.0);
  }

  // grad h(x) = (2/(p-1)) ||u||_p^{2-p} sign(u)|u|^{p-1},  u = x - center.
  void grad_potential(std::span<const double> x, std::span<double> out) const {
    const double m = shifted_norm(x);
    if (m == 0) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    const double scale = 2.0 / (p - 1.0) * std::pow(m, 2.0 - p);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double u = x[j] - center_coord(j);
      out[j] = scale * signed_pow(u, p - 1.0);
    }
  }

  // Inverse of grad_potential: the x with grad h(x) = theta.
  // ||x - center||_p = ((p-1)/2) ||theta||_q, then coordinates follow from
  // inverting the signed power map.
  void inverse_link(std::span<const double> theta, std::span<double> out) const {
    const double tq = lp_norm(theta, q);
    if (tq == 0) {
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = center_coord(j);
      return;
    }
    const double m = 0.5 * (p - 1.0) * tq;
    const double scale = 0.5 * (p - 1.0) * std::pow(m, p - 2.0);
    const double e = q - 1.0;  // 1/(p-1)
    for (std::size_t j = 0; j < theta.size(); ++j) {
      out[j] = center_coord(j) + signed_pow(scale * theta[j], e);
    }
  }

  static double signed_pow(double v, double e) {
    if (v == 0) return 0;
    const double m = std::pow(std::abs(v), e);
    return v < 0 ? -m : m;
  }

 private:
  double shifted_norm(std::span<const double> x) const {
    if (center.empty()) return lp_norm(x, p);
    Vec u(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) u[j] = x[j] - center[j];
    return lp_norm(u, p);
  }
};

// D_h(x, y) = h(x) - h(y) - <grad h(y), x - y>.
inline double bregman_divergence(const LpGeometry& geom, std::span<const double> x,
                                 std::span<const double> y) {
  if (!all_finite(x) || !all_finite(y))
    throw std::domain_error("bregman_divergence: non-finite input");
  Vec gy(y.size());
  geom.grad_potential(y, gy);
  double inner = 0;
  for (std::size_t j = 0; j < x.size(); ++j) inner += gy[j] * (x[j] - y[j]);
  return geom.potential(x) - geom.potential(y) - inner;
}

// Feasible regions. L1Ball is centered at the origin per its role as the
// optimization domain; LpBall carries a center so it can express the shifted
// phase balls of the localization schedule.
struct ConstraintSet {
  enum class Kind { kL1Ball, kLpBall, kIntersection, kSimplex };

  Kind kind = Kind::kL1Ball;
  int dim = 0;
  double radius = 0;
  double p = 2;       // LpBall only
  Vec center;         // LpBall only; empty = origin
  std::vector<ConstraintSet> members;  // Intersection only

  static ConstraintSet l1_ball(int d, double radius) {
    if (radius <= 0) throw std::domain_error("l1_ball: radius must be positive");
    ConstraintSet c;
    c.kind = Kind::kL1Ball;
    c.dim = d;
    c.radius = radius;
    return c;
  }

  static ConstraintSet lp_ball(int d, double p, double radius, Vec center = {}) {
    if (radius <= 0) throw std::domain_error("lp_ball: radius must be positive");
    if (!(p >= 1.0)) throw std::domain_error("lp_ball: requires p >= 1");
    ConstraintSet c;
    c.kind = Kind::kLpBall;
    c.dim = d;
    c.radius = radius;
    c.p = p;
    c.center = std::move(center);
    return c;
  }

  static ConstraintSet intersection(std::vector<ConstraintSet> members_in) {
    if (members_in.empty()) throw std::domain_error("intersection: needs members");
    ConstraintSet c;
    c.kind = Kind::kIntersection;
    c.dim = members_in.front().dim;
    c.members = std::move(members_in);
    return c;
  }

  static ConstraintSet simplex(int d) {
    ConstraintSet c;
    c.kind = Kind::kSimplex;
    c.dim = d;
    c.radius = 1.0;
    return c;
  }

  bool contains(std::span<const double> x, double tol = 1e-9) const {
    switch (kind) {
      case Kind::kL1Ball:
        return l1_norm(x) <= radius + tol;
      case Kind::kLpBall: {
        if (center.empty()) return lp_norm(x, p) <= radius + tol;
        Vec u(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) u[j] = x[j] - center[j];
        return lp_norm(u, p) <= radius + tol;
      }
      case Kind::kIntersection:
        for (const auto& m : members)
          if (!m.contains(x, tol)) return false;
        return true;
      case Kind::kSimplex: {
        double s = 0;
        for (double v : x) {
          if (v < -tol) return false;
          s += v;
        }
        return std::abs(s - 1.0) <= tol;
      }
    }
    return false;
  }

  // Vertex enumeration for the polytope kinds. L1Ball has the 2d signed scaled
  // basis vectors, indexed +radius*e_0..e_{d-1} then -radius*e_0..e_{d-1}.
  int vertex_count() const {
    switch (kind) {
      case Kind::kL1Ball:
        return 2 * dim;
      case Kind::kSimplex:
        return dim;
      default:
        throw std::domain_error("vertex_count: not a vertex-enumerable set");
    }
  }

  void vertex(int i, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    switch (kind) {
      case Kind::kL1Ball:
        out[i % dim] = i < dim ? radius : -radius;
        return;
      case Kind::kSimplex:
        out[i] = 1.0;
        return;
      default:
        throw std::domain_error("vertex: not a vertex-enumerable set");
    }
  }

  // <c_i, v> without materializing c_i; O(1) for the structured vertex sets.
  double vertex_dot(int i, std::span<const double> v) const {
    switch (kind) {
      case Kind::kL1Ball:
        return (i < dim ? radius : -radius) * v[i % dim];
      case Kind::kSimplex:
        return v[i];
      default:
        throw std::domain_error("vertex_dot: not a vertex-enumerable set");
    }
  }
};

namespace detail {

// Per-coordinate stationarity for the l1-penalized Bregman projection. Given
// the dual point theta0, penalty nu and norm scalar rho, returns u_j = x_j - c_j
// solving rho*psi(u_j) + nu*sign(c_j + u_j) = theta0_j (with the subgradient
// convention at x_j = 0).
inline double l1_coordinate_solve(double theta0, double cj, double rho, double nu,
                                  double inv_pm1) {
  // Candidate x_j = 0, i.e. u = -cj: requires |theta0 - rho*psi(-cj)| <= nu.
  const double psi_at = LpGeometry::signed_pow(-cj, 1.0 / inv_pm1);  // |.|^{p-1} with sign
  if (std::abs(theta0 - rho * psi_at) <= nu) return -cj;
  // Candidate x_j > 0.
  {
    const double w = theta0 - nu;
    const double u = LpGeometry::signed_pow(w / rho, inv_pm1);
    if (cj + u > 0) return u;
  }
  // Candidate x_j < 0.
  {
    const double w = theta0 + nu;
    const double u = LpGeometry::signed_pow(w / rho, inv_pm1);
    if (cj + u < 0) return u;
  }
  // Boundary ties fall back to x_j = 0.
  return -cj;
}

// For a fixed multiplier nu, solves the coupled system for the projection onto
// {||x||_1 <= anything}: finds the norm scalar m = ||x - c||_p consistent with
// the coordinate solves, and writes x. Returns ||x||_1.
inline double l1_penalized_point(const LpGeometry& geom, std::span<const double> theta0,
                                 double nu, double m_hint, std::span<double> x_out) {
  const double p = geom.p;
  const double inv_pm1 = 1.0 / (p - 1.0);
  const std::size_t d = theta0.size();
  Vec u(d);

  auto eval = [&](double m) {
    const double rho = 2.0 / (p - 1.0) * std::pow(m, 2.0 - p);
    for (std::size_t j = 0; j < d; ++j)
      u[j] = l1_coordinate_solve(theta0[j], geom.center_coord(j), rho, nu, inv_pm1);
    return lp_norm(u, p) - m;
  };

  double m_sol;
  if (p == 2.0) {
    // rho is constant; no self-consistency needed.
    const double rho = 2.0;
    for (std::size_t j = 0; j < d; ++j)
      u[j] = l1_coordinate_solve(theta0[j], geom.center_coord(j), rho, nu, inv_pm1);
    m_sol = lp_norm(u, p);
  } else {
    // ||u(m)||_p - m is strictly decreasing in m; bracket and bisect.
    double lo = std::max(m_hint * 1e-6, 1e-300);
    double hi = std::max(m_hint, 1e-12);
    while (eval(hi) > 0) {
      lo = hi;
      hi *= 2;
      if (hi > 1e300) throw SolverError("l1 projection: norm bracket diverged", hi);
    }
    while (eval(lo) < 0) {
      hi = lo;
      lo *= 0.5;
      if (lo < 1e-300) {
        // Degenerate all-zero solution.
        hi = lo;
        break;
      }
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (eval(mid) > 0 ? lo : hi) = mid;
    }
    m_sol = 0.5 * (lo + hi);
    eval(m_sol);
  }
  double n1 = 0;
  for (std::size_t j = 0; j < d; ++j) {
    x_out[j] = geom.center_coord(j) + u[j];
    n1 += std::abs(x_out[j]);
  }
  return n1;
}

// Bregman projection (w.r.t. geom) of the point with dual coordinates theta0
// onto a single constraint set. Intersections are handled by the caller.
inline Vec bregman_project_single(const LpGeometry& geom, const ConstraintSet& cons,
                                  std::span<const double> theta0) {
  const std::size_t d = theta0.size();
  Vec y(d);
  geom.inverse_link(theta0, y);
  if (cons.contains(y, 1e-12)) return y;

  switch (cons.kind) {
    case ConstraintSet::Kind::kLpBall: {
      const bool same_center =
          (cons.center.empty() && geom.center.empty()) ||
          (!cons.center.empty() && !geom.center.empty() &&
           std::equal(cons.center.begin(), cons.center.end(), geom.center.begin(),
                      [](double a, double b) { return a == b; }));
      if (!same_center || std::abs(cons.p - geom.p) > 1e-12)
        throw std::domain_error(
            "mirror_step: LpBall projection requires the ball to share the mirror "
            "map's center and exponent");
      // The constraint normal is parallel to grad h, so the projection is the
      // radial scaling of the unconstrained point in the shifted coordinates.
      Vec u(d);
      for (std::size_t j = 0; j < d; ++j) u[j] = y[j] - geom.center_coord(j);
      const double m = lp_norm(u, geom.p);
      const double s = cons.radius / m;
      for (std::size_t j = 0; j < d; ++j) y[j] = geom.center_coord(j) + u[j] * s;
      return y;
    }
    case ConstraintSet::Kind::kL1Ball: {
      const double D = cons.radius;
      Vec x(d);
      const double m_hint = [&] {
        Vec u(d);
        for (std::size_t j = 0; j < d; ++j) u[j] = y[j] - geom.center_coord(j);
        return std::max(lp_norm(u, geom.p), 1e-12);
      }();
      // ||x(nu)||_1 is non-increasing in nu; nu_hi forces x = 0 exactly.
      double nu_lo = 0;
      double nu_hi = 0;
      {
        const double mc = [&] {
          if (geom.center.empty()) return 0.0;
          return lp_norm(geom.center, geom.p);
        }();
        const double rho_c = mc == 0 ? 0.0 : 2.0 / (geom.p - 1.0) * std::pow(mc, 2.0 - geom.p);
        for (std::size_t j = 0; j < d; ++j) {
          const double psi_at = LpGeometry::signed_pow(-geom.center_coord(j), geom.p - 1.0);
          nu_hi = std::max(nu_hi, std::abs(theta0[j] - rho_c * psi_at));
        }
        nu_hi = nu_hi * (1 + 1e-12) + 1e-300;
      }
      Vec best(d);
      double n1_hi = l1_penalized_point(geom, theta0, nu_hi, m_hint, best);
      if (n1_hi > D + 1e-9)
        throw SolverError("l1 projection: penalty bracket failed", n1_hi - D);
      for (int it = 0; it < 200 && (nu_hi - nu_lo) > 1e-10 * std::max(1.0, nu_hi); ++it) {
        const double nu = 0.5 * (nu_lo + nu_hi);
        const double n1 = l1_penalized_point(geom, theta0, nu, m_hint, x);
        if (n1 > D) {
          nu_lo = nu;
        } else {
          nu_hi = nu;
          best = x;
        }
      }
      return best;  // feasible side of the bracket
    }
    default:
      throw std::domain_error("mirror_step: unsupported constraint kind for Bregman projection");
  }
}

}  // namespace detail

// Constrained Bregman-prox point:
//   argmin_{x in X} { <g, x - x_k> + D_h(x, x_k) / eta }.
// The unconstrained stationary point grad h(x+) = grad h(x_k) - eta*g is taken
// in closed form through the inverse link; if infeasible it is Bregman-projected
// onto the constraint (single multiplier bisection for balls, Dykstra-style
// alternation for intersections).
inline Vec mirror_step(const LpGeometry& geom, const ConstraintSet& cons,
                       std::span<const double> x_k, std::span<const double> g, double eta) {
  if (!(eta > 0)) throw std::domain_error("mirror_step: eta must be positive");
  if (!all_finite(x_k) || !all_finite(g)) throw std::domain_error("mirror_step: non-finite input");
  if (!cons.contains(x_k, 1e-8))
    throw std::invalid_argument("mirror_step: x_k violates the constraint");
  if (cons.kind == ConstraintSet::Kind::kSimplex)
    throw std::domain_error("mirror_step: simplex requires the entropic update, not an lp map");

  const std::size_t d = x_k.size();
  Vec theta(d);
  geom.grad_potential(x_k, theta);
  for (std::size_t j = 0; j < d; ++j) theta[j] -= eta * g[j];

  if (cons.kind != ConstraintSet::Kind::kIntersection)
    return detail::bregman_project_single(geom, cons, theta);

  // Dykstra-style alternation in dual coordinates across the members.
  Vec x(d);
  geom.inverse_link(theta, x);
  if (cons.contains(x, 1e-12)) return x;
  std::vector<Vec> corrections(cons.members.size(), Vec(d, 0.0));
  Vec prev(d, kInfinity);
  Vec th(d);
  for (int round = 0; round < 500; ++round) {
    for (std::size_t s = 0; s < cons.members.size(); ++s) {
      geom.grad_potential(x, th);
      for (std::size_t j = 0; j < d; ++j) th[j] += corrections[s][j];
      Vec proj = detail::bregman_project_single(geom, cons.members[s], th);
      Vec gp(d);
      geom.grad_potential(proj, gp);
      for (std::size_t j = 0; j < d; ++j) corrections[s][j] = th[j] - gp[j];
      x = std::move(proj);
    }
    double delta = 0;
    for (std::size_t j = 0; j < d; ++j) delta = std::max(delta, std::abs(x[j] - prev[j]));
    if (delta <= 1e-8 && cons.contains(x, 1e-8)) return x;
    prev = x;
  }
  double residual = 0;
  for (std::size_t j = 0; j < d; ++j) residual = std::max(residual, std::abs(x[j] - prev[j]));
  throw SolverError("mirror_step: Dykstra alternation did not converge", residual);
}

// Multiplicative-weights update on the simplex (the entropic mirror map):
//   x+ proportional to x * exp(-eta * g), renormalized.
// Coordinates at exactly zero stay zero.
inline Vec entropic_md_step(std::span<const double> x, std::span<const double> g, double eta) {
  const std::size_t d = x.size();
  double hi = -kInfinity;
  for (std::size_t j = 0; j < d; ++j)
    if (x[j] > 0) hi = std::max(hi, -eta * g[j]);
  Vec out(d, 0.0);
  double z = 0;
  for (std::size_t j = 0; j < d; ++j) {
    if (x[j] > 0) {
      out[j] = x[j] * std::exp(-eta * g[j] - hi);
      z += out[j];
    }
  }
  if (z <= 0) throw std::domain_error("entropic_md_step: input not on the simplex");
  for (std::size_t j = 0; j < d; ++j) out[j] /= z;
  return out;
}

}  // namespace dpsco

#endif  // DPSCO_GEOMETRY_HPP_
