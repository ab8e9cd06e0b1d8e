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

#ifndef DPSCO_MIRROR_DESCENT_HPP_
#define DPSCO_MIRROR_DESCENT_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dpsco/geometry.hpp"
#include "dpsco/losses.hpp"
#include "dpsco/privacy.hpp"
#include "dpsco/rng.hpp"

namespace dpsco {

// Default constant step of the convex mode:
//   eta = (D / sqrt(T)) / sqrt(L^2 + 2 sigma^2 log d)                (l1 route)
//   eta = (D / sqrt(T)) / sqrt(L^2 + 4 d^{2/q} sigma^2 log d)        (general)
// q = infinity selects the l1 form.
inline double default_step_convex(double D, double L, double sigma, double d, double T,
                                  double q = kInfinity) {
  if (!(D > 0) || !(T > 0)) throw std::domain_error("default_step_convex: D, T > 0");
  const double logd = std::log(d);
  const double noise_term = std::isinf(q) ? 2.0 * sigma * sigma * logd
                                          : 4.0 * std::pow(d, 2.0 / q) * sigma * sigma * logd;
  return D / std::sqrt(T) / std::sqrt(L * L + noise_term);
}

// Strongly convex step schedule eta_k = 2 / (mu (k+1)).
inline double default_step_sc(double mu, std::int64_t k) {
  if (!(mu > 0) || k < 1) throw std::domain_error("default_step_sc: mu > 0, k >= 1");
  return 2.0 / (mu * static_cast<double>(k + 1));
}

enum class Averaging { kUniform, kWeightedByK };
enum class SigmaForm { kL1, kLp, kNonPrivate };

struct StepSchedule {
  enum class Kind { kConstant, kStronglyConvex };
  Kind kind;
  double eta = 0;  // constant mode
  double mu = 0;   // strongly convex mode

  static StepSchedule constant(double eta) {
    if (!(eta >= 0)) throw std::domain_error("StepSchedule: eta must be nonnegative");
    return {Kind::kConstant, eta, 0};
  }
  static StepSchedule strongly_convex(double mu) {
    if (!(mu > 0)) throw std::domain_error("StepSchedule: mu must be positive");
    return {Kind::kStronglyConvex, 0, mu};
  }

  double at(std::int64_t k) const {
    return kind == Kind::kConstant ? eta : default_step_sc(mu, k);
  }
};

struct MdConfig {
  MdConfig(LpGeometry g, ConstraintSet c)
      : geometry(std::move(g)), constraint(std::move(c)) {}

  LpGeometry geometry;
  ConstraintSet constraint;
  std::int64_t batch = 1;
  std::int64_t iterations = 1;
  StepSchedule steps = StepSchedule::constant(0.1);
  Averaging averaging = Averaging::kUniform;
  double sigma = 0;
  SigmaForm sigma_form = SigmaForm::kNonPrivate;
  double epsilon = 1;   // declared budget (nominal in non-private mode)
  double delta = 0;
  double lipschitz = 1;       // L used for noise calibration
  double sigma_constant = 100;
  std::uint64_t seed = 0;
  std::int64_t trace_stride = 0;  // 0 = ceil(T/1000)
};

struct TraceEntry {
  std::int64_t k;
  std::int64_t grad_count;
  double elapsed_ms;
  double objective;  // NaN unless an objective hook was provided
};

struct MdResult {
  Vec x;
  std::vector<TraceEntry> trace;
  std::int64_t grad_count = 0;
  std::uint64_t rng_draws = 0;          // uniforms consumed by the run's stream
  std::int64_t noise_vectors = 0;       // Gaussian d-vectors drawn
  double sigma = 0;                     // per-sample scale actually used
  double effective_sigma = 0;           // scale on the batch mean, sigma/sqrt(b)
};

namespace detail {

inline void validate_sigma(const MdConfig& cfg, int d) {
  if (cfg.sigma_form == SigmaForm::kNonPrivate) {
    if (cfg.sigma != 0)
      throw ParameterizationError("noisy_md: non-private mode requires sigma = 0");
    return;
  }
  const double q = cfg.sigma_form == SigmaForm::kL1 ? kInfinity : cfg.geometry.q;
  const double want = sigma_noisy_md(cfg.lipschitz, d, cfg.delta, static_cast<double>(cfg.batch),
                                     cfg.epsilon, cfg.sigma_constant, q);
  if (std::abs(cfg.sigma - want) > 1e-9 * std::max(1.0, want))
    throw ParameterizationError("noisy_md: sigma inconsistent with the declared budget");
}

}  // namespace detail

// Noisy mirror descent. Each iteration samples `batch` points uniformly with
// replacement, forms the batch-mean gradient with per-sample Gaussian noise
// folded into the mean, and takes a constrained mirror step. Returns the
// uniform average of x_1..x_T (convex mode) or the k-weighted average
// (strongly convex mode), with x_1 = x0.
template <typename Loss>
MdResult noisy_md(const Loss& loss, const Dataset& data, const MdConfig& cfg, Vec x0,
                  const std::function<double(std::span<const double>)>& objective = nullptr) {
  const int d = data.d;
  const std::int64_t T = cfg.iterations;
  const std::int64_t b = cfg.batch;
  if (T < 1 || b < 1) throw std::invalid_argument("noisy_md: T >= 1 and b >= 1 required");
  if (data.n < 1) throw std::invalid_argument("noisy_md: empty dataset");
  if (static_cast<int>(x0.size()) != d) throw std::invalid_argument("noisy_md: x0 dimension");
  if (!cfg.constraint.contains(x0, 1e-8))
    throw std::invalid_argument("noisy_md: infeasible initial point");
  detail::validate_sigma(cfg, d);
  if (cfg.steps.kind == StepSchedule::Kind::kConstant && !(cfg.steps.eta > 0) && T > 1)
    throw std::invalid_argument("noisy_md: constant step must be positive");

  CounterRng rng(cfg.seed, /*stream=*/0x3d1);
  const auto t_start = std::chrono::steady_clock::now();
  const std::int64_t stride =
      cfg.trace_stride > 0 ? cfg.trace_stride : std::max<std::int64_t>(1, (T + 999) / 1000);

  MdResult res;
  res.sigma = cfg.sigma;
  res.effective_sigma = cfg.sigma / std::sqrt(static_cast<double>(b));

  Vec x = std::move(x0);
  Vec avg(d, 0.0);
  Vec ghat(d), gi(d), noise(d);
  const double weight_total =
      cfg.averaging == Averaging::kUniform ? static_cast<double>(T)
                                           : 0.5 * static_cast<double>(T) * (T + 1);

  auto log_trace = [&](std::int64_t k) {
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t_start)
                          .count();
    const double obj = objective ? objective(x) : std::nan("");
    res.trace.push_back({k, res.grad_count, ms, obj});
  };

  for (std::int64_t k = 1; k <= T; ++k) {
    // x_k enters the average before the step to x_{k+1}.
    const double w = cfg.averaging == Averaging::kUniform ? 1.0 : static_cast<double>(k);
    for (int j = 0; j < d; ++j) avg[j] += w * x[j];
    if (k == 1 || k == T || k % stride == 0) log_trace(k);

    std::fill(ghat.begin(), ghat.end(), 0.0);
    for (std::int64_t i = 0; i < b; ++i) {
      const std::int64_t idx = static_cast<std::int64_t>(rng.uniform_index(data.n));
      loss.point_grad(x, data, idx, gi);
      if (cfg.sigma > 0) {
        rng.gaussian(noise, cfg.sigma);
        ++res.noise_vectors;
        for (int j = 0; j < d; ++j) ghat[j] += gi[j] + noise[j];
      } else {
        for (int j = 0; j < d; ++j) ghat[j] += gi[j];
      }
    }
    res.grad_count += b;
    const double inv_b = 1.0 / static_cast<double>(b);
    for (int j = 0; j < d; ++j) ghat[j] *= inv_b;

    const double eta = cfg.steps.at(k);
    if (eta > 0) x = mirror_step(cfg.geometry, cfg.constraint, x, ghat, eta);
  }

  for (int j = 0; j < d; ++j) avg[j] /= weight_total;
  res.x = std::move(avg);
  res.rng_draws = rng.draws();
  return res;
}

}  // namespace dpsco

#endif  // DPSCO_MIRROR_DESCENT_HPP_
