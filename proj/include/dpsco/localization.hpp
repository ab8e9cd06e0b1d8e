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

#ifndef DPSCO_LOCALIZATION_HPP_
#define DPSCO_LOCALIZATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dpsco/mirror_descent.hpp"

#include "json.hpp"

namespace dpsco {

// log d clamped away from zero: p = 1 + 1/log d must stay finite at d = 1.
inline double clamped_log_dim(double d) { return std::max(std::log(d), 1.0); }

// Base step of the l1 schedule:
//   eta = (D/L) min{ sqrt(log(d)/n), epsilon / sqrt(d log d log(1/delta)) }.
inline double default_eta_l1(double D, double L, double n, double d, double epsilon,
                             double delta) {
  if (!(D > 0) || !(L > 0) || !(n > 0) || !(d > 0) || !(epsilon > 0))
    throw std::domain_error("default_eta_l1: positive inputs required");
  if (!(delta > 0) || delta >= 1) throw std::domain_error("default_eta_l1: delta in (0, 1)");
  const double logd = clamped_log_dim(static_cast<int>(d));
  const double statistical = std::sqrt(logd / n);
  const double private_branch = epsilon / std::sqrt(d * logd * std::log(1.0 / delta));
  return D / L * std::min(statistical, private_branch);
}

// General-geometry base step (the indicator drops the log d factor at p = 2):
//   eta = (D/L) min{ 1/sqrt((p-1) n),
//                    epsilon / sqrt(d log(1/delta) (1 + log d * [p < 2])) }.
inline double default_eta_lp(double D, double L, double n, double d, double p, double epsilon,
                             double delta) {
  if (!(p > 1.0) || p > 2.0 + 1e-12) throw std::domain_error("default_eta_lp: 1 < p <= 2");
  if (!(D > 0) || !(L > 0) || !(n > 0) || !(d > 0) || !(epsilon > 0))
    throw std::domain_error("default_eta_lp: positive inputs required");
  if (!(delta > 0) || delta >= 1) throw std::domain_error("default_eta_lp: delta in (0, 1)");
  const double logd = clamped_log_dim(static_cast<int>(d));
  const double ind = p < 2.0 ? 1.0 : 0.0;
  const double statistical = 1.0 / std::sqrt((p - 1.0) * n);
  const double private_branch = epsilon / std::sqrt(d * std::log(1.0 / delta) * (1.0 + logd * ind));
  return D / L * std::min(statistical, private_branch);
}

enum class LocalizationMode { kL1, kLp };

struct LocalizationConfig {
  ConstraintSet domain;         // X, typically the l1 ball of radius D
  double D;                     // domain radius in the run's norm
  PrivacyBudget budget{1.0, 1e-6};
  double lipschitz = 1;         // L with respect to the run's norm
  LocalizationMode mode = LocalizationMode::kL1;
  double p = 2;                 // kLp only; kL1 uses p = 1 + 1/log d
  double eta = 0;               // 0 = theorem default
  bool non_private = false;
  double sigma_constant = 100;
  std::uint64_t seed = 0;
};

struct PhaseRecord {
  int i;
  double epsilon_i;
  std::int64_t n_i;
  double eta_i;
  std::int64_t b_i;
  std::int64_t T_i;
  double radius_i;
  double sigma_i;
  std::int64_t grad_count_i;
  std::int64_t slice_begin;  // offsets into the shuffled index order
  std::int64_t slice_end;
  Vec x_i;
};

struct LocalizationReport {
  double p;
  double eta;
  std::vector<PhaseRecord> phases;
  std::int64_t grad_count = 0;
  double ledger_epsilon = 0;  // sum of phase epsilons
  double ledger_delta = 0;    // k * delta
  bool non_private = false;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["p"] = p;
    j["eta"] = eta;
    j["grad_count"] = grad_count;
    j["ledger_epsilon"] = ledger_epsilon;
    j["ledger_delta"] = ledger_delta;
    j["non_private"] = non_private;
    j["phases"] = nlohmann::json::array();
    for (const auto& ph : phases) {
      j["phases"].push_back({{"i", ph.i},
                             {"epsilon_i", ph.epsilon_i},
                             {"n_i", ph.n_i},
                             {"eta_i", ph.eta_i},
                             {"b_i", ph.b_i},
                             {"T_i", ph.T_i},
                             {"radius_i", ph.radius_i},
                             {"sigma_i", ph.sigma_i},
                             {"grad_count_i", ph.grad_count_i}});
    }
    return j;
  }
};

struct LocalizationResult {
  Vec x;
  LocalizationReport report;
};

// Iterative localization: k = ceil(log2 n) phases, each solving the
// regularized ERM
//   F_i(x) = mean f(x; z_j) + ||x - x_{i-1}||_p^2 / (eta_i n_i (p-1))
// over X_i = {x in X : ||x - x_{i-1}||_p <= 2 L eta_i n_i (p-1)} with noisy
// mirror descent in its strongly convex mode. Phases consume disjoint slices
// of a single up-front shuffle.
inline LocalizationResult localized_md(const LossFamily& loss, const Dataset& data,
                                        const LocalizationConfig& cfg, Vec x0) {
  const int d = data.d;
  const std::int64_t n = data.n;
  const int phases_count = static_cast<int>(std::ceil(std::log2(static_cast<double>(n))));
  if (n < 2 || phases_count < 1)
    throw ParameterizationError("localized_md: need n >= 2 for a nonempty phase schedule");
  const double L = cfg.lipschitz;
  const double logd = clamped_log_dim(d);
  const double p = cfg.mode == LocalizationMode::kL1 ? 1.0 + 1.0 / logd : cfg.p;
  if (!(p > 1.0) || p > 2.0 + 1e-12) throw std::domain_error("localized_md: 1 < p <= 2");
  const double q = dual_exponent(p);

  const double eta =
      cfg.eta > 0 ? cfg.eta
                  : (cfg.mode == LocalizationMode::kL1
                         ? default_eta_l1(cfg.D, L, static_cast<double>(n), d,
                                          cfg.budget.epsilon, cfg.budget.delta)
                         : default_eta_lp(cfg.D, L, static_cast<double>(n), d, p,
                                          cfg.budget.epsilon, cfg.budget.delta));

  // One seeded shuffle, then contiguous disjoint slices per phase.
  std::vector<std::int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  CounterRng shuffle_rng(cfg.seed, /*stream=*/0x10c);
  shuffle_rng.shuffle(order);

  LocalizationResult out;
  out.report.p = p;
  out.report.eta = eta;
  out.report.non_private = cfg.non_private;

  Vec x_prev = std::move(x0);
  if (!cfg.domain.contains(x_prev, 1e-8))
    throw std::invalid_argument("localized_md: infeasible initial point");

  std::int64_t cursor = 0;
  for (int i = 1; i <= phases_count; ++i) {
    const double eps_i = std::ldexp(cfg.budget.epsilon, -i);
    const std::int64_t n_i =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(std::ldexp(
                                      static_cast<double>(n), -i))));
    if (cursor + n_i > n)
      throw ParameterizationError("localized_md: phase slices exhaust the dataset");
    const double eta_i = std::ldexp(eta, -4 * i);
    const std::int64_t b_i = static_cast<std::int64_t>(std::ceil(
        std::max(std::sqrt(static_cast<double>(n_i) / logd), std::sqrt(d / eps_i))));
    const std::int64_t T_i = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::floor(static_cast<double>(n_i * n_i) /
                                                static_cast<double>(b_i * b_i))));
    const double radius_i = 2.0 * L * eta_i * static_cast<double>(n_i) * (p - 1.0);
    const double mu_i = 1.0 / (eta_i * static_cast<double>(n_i));

    // Phase slice as its own dataset view (copy; slices are small).
    Dataset slice;
    slice.n = n_i;
    slice.d = d;
    slice.features.resize(static_cast<std::size_t>(n_i) * d);
    if (data.has_scalars()) slice.scalars.resize(n_i);
    for (std::int64_t r = 0; r < n_i; ++r) {
      const std::int64_t src = order[cursor + r];
      auto zp = data.point(src);
      std::copy(zp.begin(), zp.end(), slice.features.begin() + r * d);
      if (data.has_scalars()) slice.scalars[r] = data.scalars[src];
    }

    LpGeometry geom(p, x_prev);
    ConstraintSet phase_ball = ConstraintSet::lp_ball(d, p, radius_i, x_prev);
    // If the phase ball provably sits inside X, drop the intersection; the
    // l1 blow-up of the p-norm is at most d^{1-1/p}.
    ConstraintSet constraint = phase_ball;
    if (cfg.domain.kind == ConstraintSet::Kind::kL1Ball) {
      const double blow_up = std::pow(static_cast<double>(d), 1.0 - 1.0 / p);
      if (l1_norm(x_prev) + blow_up * radius_i > cfg.domain.radius)
        constraint = ConstraintSet::intersection({phase_ball, cfg.domain});
    } else {
      constraint = ConstraintSet::intersection({phase_ball, cfg.domain});
    }

    RegularizedLoss reg{&loss, 1.0 / (eta_i * static_cast<double>(n_i) * (p - 1.0)), x_prev, p};

    MdConfig md(geom, constraint);
    md.batch = b_i;
    md.iterations = T_i;
    md.steps = StepSchedule::strongly_convex(mu_i);
    md.averaging = Averaging::kWeightedByK;
    md.epsilon = eps_i;
    md.delta = cfg.budget.delta;
    md.lipschitz = L;
    md.sigma_constant = cfg.sigma_constant;
    if (cfg.non_private) {
      md.sigma = 0;
      md.sigma_form = SigmaForm::kNonPrivate;
    } else {
      md.sigma_form = cfg.mode == LocalizationMode::kL1 ? SigmaForm::kL1 : SigmaForm::kLp;
      md.sigma = sigma_noisy_md(L, d, cfg.budget.delta, static_cast<double>(b_i), eps_i,
                                cfg.sigma_constant,
                                cfg.mode == LocalizationMode::kL1 ? kInfinity : q);
    }
    md.seed = detail::mix64((cfg.seed + 0x70c) ^ detail::mix64(static_cast<std::uint64_t>(i)));

    MdResult phase = noisy_md(reg, slice, md, x_prev);

    PhaseRecord rec;
    rec.i = i;
    rec.epsilon_i = eps_i;
    rec.n_i = n_i;
    rec.eta_i = eta_i;
    rec.b_i = b_i;
    rec.T_i = T_i;
    rec.radius_i = radius_i;
    rec.sigma_i = md.sigma;
    rec.grad_count_i = phase.grad_count;
    rec.slice_begin = cursor;
    rec.slice_end = cursor + n_i;
    rec.x_i = phase.x;
    out.report.phases.push_back(std::move(rec));

    out.report.grad_count += phase.grad_count;
    out.report.ledger_epsilon += eps_i;
    out.report.ledger_delta += cfg.budget.delta;

    x_prev = out.report.phases.back().x_i;
    cursor += n_i;
  }

  out.x = x_prev;
  return out;
}

}  // namespace dpsco

#endif  // DPSCO_LOCALIZATION_HPP_
