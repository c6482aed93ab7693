#pragma once

// Poincare-ball kernels on raw vectors plus a curvature scalar.
//
// Every map is anchored at the origin. The ball of curvature c is
// {x : c * |x|^2 < 1}. Each forward kernel has a matching *_vjp that
// accumulates vector-Jacobian products into caller-owned buffers; the model
// uses them for reverse-mode gradients.

#include <atomic>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hkge/error.hpp"

namespace hkge::geometry {

struct Tolerances {
  double eps_ball = 1e-5;     // boundary margin: points are kept at sqrt(c)|x| <= 1 - eps_ball
  double tau_small = 1e-12;   // below this norm exp0/log0 return their input
  double tau_den = 1e-15;     // smallest admissible Mobius denominator
};

namespace detail {
inline std::atomic<std::uint64_t> clamp_counter{0};
}  // namespace detail

/// Number of boundary clamps (ball projection or arctanh argument) since the last reset.
inline std::uint64_t clamp_events() { return detail::clamp_counter.load(std::memory_order_relaxed); }
inline void reset_clamp_events() { detail::clamp_counter.store(0, std::memory_order_relaxed); }

template <std::floating_point T>
T dot(std::span<const T> a, std::span<const T> b) {
  T s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <std::floating_point T>
T squared_norm(std::span<const T> a) {
  return dot(a, a);
}

template <std::floating_point T>
T norm(std::span<const T> a) {
  return std::sqrt(squared_norm(a));
}

namespace detail {

template <std::floating_point T>
void check_curvature(T c, const char* where) {
  if (!(c > 0) || !std::isfinite(c)) {
    throw DomainError(std::string(where) + ": curvature must be finite and > 0, got " + std::to_string(c));
  }
}

template <std::floating_point T>
void check_finite(T value, const char* where) {
  if (!std::isfinite(value)) throw NumericError(std::string(where) + ": non-finite input");
}

inline void check_sizes(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    throw DomainError(std::string(where) + ": size mismatch (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

// tanh(z)/z and its derivative divided by z.
template <std::floating_point T>
T tanh_ratio(T z) {
  if (z < T(1e-3)) {
    const T z2 = z * z;
    return T(1) - z2 / T(3) + T(2) * z2 * z2 / T(15);
  }
  return std::tanh(z) / z;
}

template <std::floating_point T>
T tanh_ratio_slope_over_z(T z) {
  if (z < T(1e-3)) return T(-2) / T(3) + T(8) * z * z / T(15);
  const T t = std::tanh(z);
  const T sech2 = T(1) - t * t;
  return (sech2 * z - t) / (z * z * z);
}

// z/(1-z^2) - artanh(z), accurate near zero.
template <std::floating_point T>
T artanh_defect(T z) {
  if (z < T(1e-3)) {
    const T z3 = z * z * z;
    return T(2) * z3 / T(3) + T(4) * z3 * z * z / T(5);
  }
  return z / (T(1) - z * z) - std::atanh(z);
}

template <std::floating_point T>
std::span<T> scratch(std::vector<T>& buf, std::size_t n) {
  buf.resize(n);
  return std::span<T>(buf);
}

}  // namespace detail

/// Rescales x in place so that sqrt(c)|x| <= 1 - eps_ball. Returns true when a clamp happened.
template <std::floating_point T>
bool project_to_ball(std::span<T> x, T c, const Tolerances& tol = {}, bool count = true) {
  detail::check_curvature(c, "project_to_ball");
  const T sc = std::sqrt(c);
  const T n = norm(std::span<const T>(x));
  const T limit = T(1) - T(tol.eps_ball);
  if (sc * n > limit) {
    const T factor = limit / (sc * n);
    for (auto& v : x) v *= factor;
    if (count) detail::clamp_counter.fetch_add(1, std::memory_order_relaxed);
    return true;
  }
  return false;
}

template <std::floating_point T>
std::vector<T> project_to_ball(std::span<const T> x, T c, const Tolerances& tol = {}) {
  std::vector<T> out(x.begin(), x.end());
  project_to_ball(std::span<T>(out), c, tol);
  return out;
}

/// Backward of project_to_ball: g_pre = J^T g, and the curvature term is accumulated into g_c.
template <std::floating_point T>
void project_to_ball_vjp(std::span<const T> pre, T c, std::span<const T> g, std::span<T> g_pre, T& g_c,
                         const Tolerances& tol = {}) {
  const T sc = std::sqrt(c);
  const T n = norm(pre);
  const T limit = T(1) - T(tol.eps_ball);
  if (sc * n > limit) {
    // out = pre * R / |pre| with R = limit / sqrt(c); radial sensitivity is zero.
    const T radius = limit / sc;
    T g_dir = 0;
    for (std::size_t i = 0; i < pre.size(); ++i) g_dir += g[i] * pre[i] / n;
    for (std::size_t i = 0; i < pre.size(); ++i) g_pre[i] = radius / n * (g[i] - g_dir * pre[i] / n);
    g_c += g_dir * (-limit / (T(2) * c * sc));
  } else {
    for (std::size_t i = 0; i < pre.size(); ++i) g_pre[i] = g[i];
  }
}

/// Exponential map at the origin: tanh(sqrt(c)|v|) / (sqrt(c)|v|) * v, projected into the ball.
template <std::floating_point T>
void exp0(std::span<const T> v, T c, std::span<T> out, const Tolerances& tol = {}) {
  detail::check_curvature(c, "exp0");
  detail::check_sizes(v.size(), out.size(), "exp0");
  const T n = norm(v);
  detail::check_finite(n, "exp0");
  if (n < T(tol.tau_small)) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
    return;
  }
  const T f = detail::tanh_ratio(std::sqrt(c) * n);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = f * v[i];
  project_to_ball(out, c, tol);
}

template <std::floating_point T>
std::vector<T> exp0(std::span<const T> v, T c, const Tolerances& tol = {}) {
  std::vector<T> out(v.size());
  exp0(v, c, std::span<T>(out), tol);
  return out;
}

/// Accumulates d<g, exp0(v,c)>/dv into g_v and d/dc into g_c.
template <std::floating_point T>
void exp0_vjp(std::span<const T> v, T c, std::span<const T> g, std::span<T> g_v, T& g_c,
              const Tolerances& tol = {}) {
  const std::size_t d = v.size();
  const T n = norm(v);
  if (n < T(tol.tau_small)) {
    for (std::size_t i = 0; i < d; ++i) g_v[i] += g[i];
    return;
  }
  const T sc = std::sqrt(c);
  const T z = sc * n;
  const T f = detail::tanh_ratio(z);
  const T slope_over_z = detail::tanh_ratio_slope_over_z(z);

  thread_local std::vector<T> pre_buf, gpre_buf;
  auto pre = detail::scratch(pre_buf, d);
  auto g_pre = detail::scratch(gpre_buf, d);
  for (std::size_t i = 0; i < d; ++i) pre[i] = f * v[i];
  project_to_ball_vjp(std::span<const T>(pre), c, g, g_pre, g_c, tol);

  const T gv = dot(std::span<const T>(g_pre), v);
  // d f / d v_i = f'(z) * sqrt(c) * v_i / n = c * (f'(z)/z) * v_i
  const T kappa = c * slope_over_z;
  for (std::size_t i = 0; i < d; ++i) g_v[i] += f * g_pre[i] + kappa * gv * v[i];
  // d f / d c = f'(z) * n / (2 sqrt(c)) = (f'(z)/z) * z^2 / (2c)
  g_c += gv * slope_over_z * z * z / (T(2) * c);
}

/// Logarithmic map at the origin. The arctanh argument is clamped to 1 - eps_ball.
template <std::floating_point T>
void log0(std::span<const T> x, T c, std::span<T> out, const Tolerances& tol = {}) {
  detail::check_curvature(c, "log0");
  detail::check_sizes(x.size(), out.size(), "log0");
  const T n = norm(x);
  detail::check_finite(n, "log0");
  if (n < T(tol.tau_small)) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
    return;
  }
  const T sc = std::sqrt(c);
  T z = sc * n;
  const T limit = T(1) - T(tol.eps_ball);
  if (z > limit) {
    z = limit;
    detail::clamp_counter.fetch_add(1, std::memory_order_relaxed);
  }
  const T f = std::atanh(z) / (sc * n);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f * x[i];
}

template <std::floating_point T>
std::vector<T> log0(std::span<const T> x, T c, const Tolerances& tol = {}) {
  std::vector<T> out(x.size());
  log0(x, c, std::span<T>(out), tol);
  return out;
}

/// Mobius addition x (+)_c y, projected into the ball. `out` must not alias the inputs.
template <std::floating_point T>
void mobius_add(std::span<const T> x, std::span<const T> y, T c, std::span<T> out, const Tolerances& tol = {},
                bool count_clamps = true) {
  detail::check_curvature(c, "mobius_add");
  detail::check_sizes(x.size(), y.size(), "mobius_add");
  detail::check_sizes(x.size(), out.size(), "mobius_add");
  const T xy = dot(x, y);
  const T x2 = squared_norm(x);
  const T y2 = squared_norm(y);
  const T a = T(1) + T(2) * c * xy + c * y2;
  const T b = T(1) - c * x2;
  const T den = T(1) + T(2) * c * xy + c * c * x2 * y2;
  if (!(std::abs(den) >= T(tol.tau_den))) {
    throw NumericError("mobius_add: vanishing denominator (near-antipodal points at the ball edge)");
  }
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (a * x[i] + b * y[i]) / den;
  project_to_ball(out, c, tol, count_clamps);
}

template <std::floating_point T>
std::vector<T> mobius_add(std::span<const T> x, std::span<const T> y, T c, const Tolerances& tol = {}) {
  std::vector<T> out(x.size());
  mobius_add(x, y, c, std::span<T>(out), tol);
  return out;
}

template <std::floating_point T>
void mobius_add_vjp(std::span<const T> x, std::span<const T> y, T c, std::span<const T> g, std::span<T> g_x,
                    std::span<T> g_y, T& g_c, const Tolerances& tol = {}) {
  const std::size_t d = x.size();
  const T xy = dot(x, y);
  const T x2 = squared_norm(x);
  const T y2 = squared_norm(y);
  const T a = T(1) + T(2) * c * xy + c * y2;
  const T b = T(1) - c * x2;
  const T den = T(1) + T(2) * c * xy + c * c * x2 * y2;

  thread_local std::vector<T> pre_buf, gpre_buf;
  auto pre = detail::scratch(pre_buf, d);
  auto g_pre = detail::scratch(gpre_buf, d);
  for (std::size_t i = 0; i < d; ++i) pre[i] = (a * x[i] + b * y[i]) / den;
  project_to_ball_vjp(std::span<const T>(pre), c, g, g_pre, g_c, tol);

  // pre = num / den
  T g_den = 0;
  for (std::size_t i = 0; i < d; ++i) g_den -= g_pre[i] * pre[i];
  g_den /= den;
  T g_a = 0, g_b = 0;
  for (std::size_t i = 0; i < d; ++i) {
    const T gn = g_pre[i] / den;
    g_x[i] += a * gn;
    g_y[i] += b * gn;
    g_a += gn * x[i];
    g_b += gn * y[i];
  }
  T g_xy = T(2) * c * g_a + T(2) * c * g_den;
  T g_y2 = c * g_a + c * c * x2 * g_den;
  T g_x2 = -c * g_b + c * c * y2 * g_den;
  g_c += (T(2) * xy + y2) * g_a - x2 * g_b + (T(2) * xy + T(2) * c * x2 * y2) * g_den;
  for (std::size_t i = 0; i < d; ++i) {
    g_x[i] += g_xy * y[i] + T(2) * g_x2 * x[i];
    g_y[i] += g_xy * x[i] + T(2) * g_y2 * y[i];
  }
}

/// Geodesic distance (2/sqrt(c)) artanh(sqrt(c) |(-x) (+)_c y|).
template <std::floating_point T>
T hyp_distance(std::span<const T> x, std::span<const T> y, T c, const Tolerances& tol = {}) {
  detail::check_curvature(c, "hyp_distance");
  detail::check_sizes(x.size(), y.size(), "hyp_distance");
  thread_local std::vector<T> neg_buf, w_buf;
  auto neg = detail::scratch(neg_buf, x.size());
  auto w = detail::scratch(w_buf, x.size());
  for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
  mobius_add(std::span<const T>(neg), y, c, w, tol);
  const T sc = std::sqrt(c);
  T z = sc * norm(std::span<const T>(w));
  const T limit = T(1) - T(tol.eps_ball);
  if (z > limit) {
    z = limit;
    detail::clamp_counter.fetch_add(1, std::memory_order_relaxed);
  }
  return T(2) / sc * std::atanh(z);
}

template <std::floating_point T>
void hyp_distance_vjp(std::span<const T> x, std::span<const T> y, T c, T g, std::span<T> g_x, std::span<T> g_y,
                      T& g_c, const Tolerances& tol = {}) {
  const std::size_t d = x.size();
  thread_local std::vector<T> neg_buf, w_buf, gw_buf, gneg_buf;
  auto neg = detail::scratch(neg_buf, d);
  auto w = detail::scratch(w_buf, d);
  auto g_w = detail::scratch(gw_buf, d);
  auto g_neg = detail::scratch(gneg_buf, d);
  for (std::size_t i = 0; i < d; ++i) {
    neg[i] = -x[i];
    g_neg[i] = 0;
  }
  mobius_add(std::span<const T>(neg), y, c, w, tol, false);

  const T sc = std::sqrt(c);
  const T nw = norm(std::span<const T>(w));
  const T z = sc * nw;
  const T limit = T(1) - T(tol.eps_ball);
  if (z > limit) {
    // clamped: constant in w, only the 2/sqrt(c) prefactor depends on c
    g_c += g * (-std::atanh(limit) / (sc * sc * sc));
    return;
  }
  g_c += g * detail::artanh_defect(z) / (sc * sc * sc);
  if (nw == T(0)) return;
  const T radial = g * T(2) / (T(1) - z * z) / nw;
  for (std::size_t i = 0; i < d; ++i) g_w[i] = radial * w[i];
  mobius_add_vjp(std::span<const T>(neg), y, c, std::span<const T>(g_w), g_neg, g_y, g_c, tol);
  for (std::size_t i = 0; i < d; ++i) g_x[i] -= g_neg[i];
}

/// Scales each 2-block (v[2i], v[2i+1]) by factors[i].
template <std::floating_point T>
void block_scale(std::span<const T> v, std::span<const T> factors, std::span<T> out) {
  detail::check_sizes(v.size(), 2 * factors.size(), "block_scale");
  detail::check_sizes(v.size(), out.size(), "block_scale");
  for (std::size_t i = 0; i < factors.size(); ++i) {
    out[2 * i] = factors[i] * v[2 * i];
    out[2 * i + 1] = factors[i] * v[2 * i + 1];
  }
}

template <std::floating_point T>
std::vector<T> block_scale(std::span<const T> v, std::span<const T> factors) {
  std::vector<T> out(v.size());
  block_scale(v, factors, std::span<T>(out));
  return out;
}

template <std::floating_point T>
void block_scale_vjp(std::span<const T> v, std::span<const T> factors, std::span<const T> g, std::span<T> g_v,
                     std::span<T> g_factors) {
  for (std::size_t i = 0; i < factors.size(); ++i) {
    g_v[2 * i] += factors[i] * g[2 * i];
    g_v[2 * i + 1] += factors[i] * g[2 * i + 1];
    g_factors[i] += g[2 * i] * v[2 * i] + g[2 * i + 1] * v[2 * i + 1];
  }
}

/// Givens rotation of each 2-block by angles[i].
template <std::floating_point T>
void block_rotate(std::span<const T> v, std::span<const T> angles, std::span<T> out) {
  detail::check_sizes(v.size(), 2 * angles.size(), "block_rotate");
  detail::check_sizes(v.size(), out.size(), "block_rotate");
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const T cs = std::cos(angles[i]);
    const T sn = std::sin(angles[i]);
    const T a = v[2 * i];
    const T b = v[2 * i + 1];
    out[2 * i] = cs * a - sn * b;
    out[2 * i + 1] = sn * a + cs * b;
  }
}

template <std::floating_point T>
std::vector<T> block_rotate(std::span<const T> v, std::span<const T> angles) {
  std::vector<T> out(v.size());
  block_rotate(v, angles, std::span<T>(out));
  return out;
}

template <std::floating_point T>
void block_rotate_vjp(std::span<const T> v, std::span<const T> angles, std::span<const T> g, std::span<T> g_v,
                      std::span<T> g_angles) {
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const T cs = std::cos(angles[i]);
    const T sn = std::sin(angles[i]);
    const T a = v[2 * i];
    const T b = v[2 * i + 1];
    const T g0 = g[2 * i];
    const T g1 = g[2 * i + 1];
    g_v[2 * i] += cs * g0 + sn * g1;
    g_v[2 * i + 1] += -sn * g0 + cs * g1;
    g_angles[i] += g0 * (-sn * a - cs * b) + g1 * (cs * a - sn * b);
  }
}

}  // namespace hkge::geometry
