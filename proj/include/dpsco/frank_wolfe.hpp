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

#ifndef DPSCO_FRANK_WOLFE_HPP_
#define DPSCO_FRANK_WOLFE_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "dpsco/losses.hpp"
#include "dpsco/privacy.hpp"

#include "json.hpp"

namespace dpsco {

// Pre-order DFS of the non-root vertices of the depth-t binary tree, as bit
// strings ("0" is a left edge). Length 2^{t+1} - 2.
inline std::vector<std::string> dfs_order(int t) {
  if (t < 1) throw std::invalid_argument("dfs_order: t >= 1");
  std::vector<std::string> out;
  out.reserve((std::size_t{2} << t) - 2);
  std::string s;
  auto visit = [&](auto&& self) -> void {
    if (static_cast<int>(s.size()) == t) return;
    for (char c : {'0', '1'}) {
      s.push_back(c);
      out.push_back(s);
      self(self);
      s.pop_back();
    }
  };
  visit(visit);
  return out;
}

// Integer with binary representation s.
inline std::int64_t leaf_index(std::string_view s) {
  if (s.empty()) throw std::invalid_argument("leaf_index: empty address");
  std::int64_t v = 0;
  for (char c : s) {
    if (c != '0' && c != '1') throw std::invalid_argument("leaf_index: not a bit string");
    v = 2 * v + (c - '0');
  }
  return v;
}

// Address of a tree vertex: phase t and path s from the root.
struct TreeAddress {
  int t;
  std::string s;

  int depth() const { return static_cast<int>(s.size()); }
  std::int64_t leaf() const { return leaf_index(s); }
  // Global step index of a leaf, k = 2^{t-1} + l(s).
  std::int64_t step_index() const { return (std::int64_t{1} << (t - 1)) + leaf(); }
};

// Leaf step size 2 / (2^{t-1} + l(s) + 1).
inline double fw_step_size(int t, std::string_view s) {
  if (static_cast<int>(s.size()) != t)
    throw std::invalid_argument("fw_step_size: not a leaf address");
  const double k = static_cast<double>((std::int64_t{1} << (t - 1)) + leaf_index(s));
  return 2.0 / (k + 1.0);
}

enum class FwPrivacyMode { kPure, kApprox };

struct PhaseCount {
  int T;
  bool fallback_single_phase;  // below the smoothness range: use T = 1, b = n
};

// Phase count for pure DP: T = floor(0.5 * log2(b eps beta D / (L log m))),
// clamped to >= 1. Signals the single-phase fallback when beta is below the
// theorem's range. Base-2 logs, consistent with the 2^T <= b precondition.
inline PhaseCount default_T_pure(double b, double epsilon, double beta, double D, double L,
                                 double m, double n) {
  if (!(b > 0) || !(epsilon > 0) || !(beta > 0) || !(D > 0) || !(L > 0) || m < 2)
    throw std::domain_error("default_T_pure: positive inputs required");
  const double logn = std::log(std::max(n, 2.0));
  if (beta <= L * std::log(m) * logn * logn / (n * epsilon * D)) return {1, true};
  const double arg = b * epsilon * beta * D / (L * std::log(m));
  if (arg < 1) return {1, true};
  const int T = static_cast<int>(std::floor(0.5 * std::log2(arg)));
  return {std::max(T, 1), false};
}

// Phase count for approximate DP: T = floor((2/3) log2(b eps beta D /
// (L log(n/delta) log m))), clamped to >= 1, with the analogous fallback.
inline PhaseCount default_T_approx(double b, double epsilon, double beta, double D, double L,
                                   double n, double m, double delta) {
  if (!(b > 0) || !(epsilon > 0) || !(beta > 0) || !(D > 0) || !(L > 0) || m < 2 || !(n > 0) ||
      !(delta > 0))
    throw std::domain_error("default_T_approx: positive inputs required");
  const double logn = std::log(std::max(n, 2.0));
  const double lognd = std::log(n / delta);
  if (beta <= L * lognd * std::log(m) * logn * logn / (n * epsilon * D)) return {1, true};
  const double arg = b * epsilon * beta * D / (L * lognd * std::log(m));
  if (arg < 1) return {1, true};
  const int T = static_cast<int>(std::floor(2.0 / 3.0 * std::log2(arg)));
  return {std::max(T, 1), false};
}

struct FwConfig {
  ConstraintSet vertices;  // vertex-enumerable set (l1 ball or simplex)
  int phases = 1;
  std::int64_t batch = 1;
  FwPrivacyMode mode = FwPrivacyMode::kPure;
  double epsilon = 1;
  double delta = 0;           // approx mode
  bool non_private = false;   // zero selection noise; budget echoed as nominal
  double lipschitz = 1;
  double diameter = 1;        // D in the lambda formulas
  std::uint64_t seed = 0;
  bool full_batch_test_mode = false;  // every vertex sees the whole dataset

  // Test hook, called after each vertex's gradient estimate is formed.
  std::function<void(const TreeAddress&, std::span<const double> x, std::span<const double> v)>
      vertex_hook;
};

struct FwSliceRecord {
  int t;
  std::string s;
  std::int64_t begin;
  std::int64_t length;
};

struct FwPhaseSummary {
  int t;
  std::int64_t fresh_samples;
  std::int64_t leaves;
  double lambda_t;
  double mean_step;
};

struct FwReport {
  std::vector<FwPhaseSummary> phases;
  std::vector<FwSliceRecord> slices;
  std::vector<double> lambda_schedule;
  std::int64_t grad_count = 0;
  std::int64_t fresh_samples = 0;
  std::int64_t final_step_index = 0;
  int t_formula_log_base = 2;
  double max_drift_ratio = 0;  // max over right children of ||x-x'||_1 / (4 D 2^{-j})
  bool non_private = false;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["grad_count"] = grad_count;
    j["fresh_samples"] = fresh_samples;
    j["final_step_index"] = final_step_index;
    j["max_drift_ratio"] = max_drift_ratio;
    j["non_private"] = non_private;
    j["lambda_schedule"] = lambda_schedule;
    j["phases"] = nlohmann::json::array();
    for (const auto& ph : phases)
      j["phases"].push_back({{"t", ph.t},
                             {"fresh_samples", ph.fresh_samples},
                             {"leaves", ph.leaves},
                             {"lambda", ph.lambda_t},
                             {"mean_step", ph.mean_step}});
    return j;
  }
};

struct FwResult {
  Vec x;
  FwReport report;
};

// Private variance-reduced Frank-Wolfe over a vertex-enumerated polytope.
// Each phase t runs a depth-t binary tree: the root takes b fresh samples and
// a full batch gradient; left children copy (v, x) from the parent; right
// children draw floor(2^{-j} b) fresh samples and apply the gradient-difference
// correction; each leaf selects a vertex by report-noisy-max over <c_i, v> and
// takes the convex-combination step that seeds the next DFS vertex.
inline FwResult private_vr_fw(const LossFamily& loss, const Dataset& data, const FwConfig& cfg,
                              Vec x0) {
  const int d = data.d;
  const int T = cfg.phases;
  const std::int64_t b = cfg.batch;
  if (T < 1 || b < 1) throw std::invalid_argument("private_vr_fw: T >= 1, b >= 1");
  if (!cfg.vertices.contains(x0, 1e-8))
    throw std::invalid_argument("private_vr_fw: x0 outside the polytope");
  if ((std::int64_t{1} << T) > b)
    throw ParameterizationError("private_vr_fw: requires 2^T <= b");

  const int m = cfg.vertices.vertex_count();
  const double L = cfg.lipschitz;
  const double D = cfg.diameter;

  // Selection noise scales; validated against the mode's preconditions even in
  // non-private mode so nominal budgets stay honest.
  std::vector<double> lambda(T + 1, 0.0);
  for (int t = 1; t <= T; ++t) {
    if (cfg.mode == FwPrivacyMode::kPure) {
      lambda[t] = lambda_pure_fw(L, D, t, static_cast<double>(b), cfg.epsilon);
    } else {
      lambda[t] = lambda_approx_fw(L, D, T, static_cast<double>(data.n), cfg.delta,
                                   static_cast<double>(b), cfg.epsilon);
    }
  }

  // One seeded shuffle; fresh slices are consumed sequentially in DFS order.
  std::vector<std::int64_t> order(data.n);
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(cfg.seed, /*stream=*/0xf7);
  rng.shuffle(order);
  std::int64_t cursor = 0;

  FwResult out;
  out.report.non_private = cfg.non_private;
  out.report.lambda_schedule.assign(lambda.begin() + 1, lambda.end());

  auto draw_slice = [&](int t, const std::string& s,
                        std::int64_t want) -> std::span<const std::int64_t> {
    if (cfg.full_batch_test_mode)
      return std::span<const std::int64_t>(order.data(), static_cast<std::size_t>(data.n));
    if (cursor + want > data.n)
      throw ParameterizationError("private_vr_fw: dataset exhausted at phase " +
                                  std::to_string(t) + " vertex '" + s + "'");
    auto view = std::span<const std::int64_t>(order.data() + cursor, static_cast<std::size_t>(want));
    out.report.slices.push_back({t, s, cursor, want});
    out.report.fresh_samples += want;
    cursor += want;
    return view;
  };

  // Path state: (x, v) for each depth along the current DFS path.
  std::vector<Vec> path_x(T + 1, Vec(d));
  std::vector<Vec> path_v(T + 1, Vec(d));
  Vec running_x = std::move(x0);
  Vec grad_here(d), grad_parent(d), scores(m), cvert(d);

  for (int t = 1; t <= T; ++t) {
    FwPhaseSummary summary{t, 0, 0, lambda[t], 0};
    const std::int64_t fresh_before = out.report.fresh_samples;

    path_x[0] = running_x;
    auto root_slice = draw_slice(t, "", b);
    batch_grad(loss, path_x[0], data, root_slice, path_v[0]);
    out.report.grad_count += static_cast<std::int64_t>(root_slice.size());
    if (cfg.vertex_hook) cfg.vertex_hook(TreeAddress{t, ""}, path_x[0], path_v[0]);

    for (const std::string& s : dfs_order(t)) {
      const int j = static_cast<int>(s.size());
      const bool right = s.back() == '1';
      if (!right) {
        path_x[j] = path_x[j - 1];
        path_v[j] = path_v[j - 1];
      } else {
        path_x[j] = running_x;
        const std::int64_t want =
            std::max<std::int64_t>(1, b >> j);  // floor(2^{-j} b), floored at 1
        auto slice = draw_slice(t, s, want);
        batch_grad(loss, path_x[j], data, slice, grad_here);
        batch_grad(loss, path_x[j - 1], data, slice, grad_parent);
        out.report.grad_count += 2 * static_cast<std::int64_t>(slice.size());
        for (int c = 0; c < d; ++c)
          path_v[j][c] = path_v[j - 1][c] + grad_here[c] - grad_parent[c];
        // Drift of the iterate across the correction, against the 4 D 2^{-j}
        // envelope the variance recursion relies on.
        double drift = 0;
        for (int c = 0; c < d; ++c) drift += std::abs(path_x[j][c] - path_x[j - 1][c]);
        const double envelope = 4.0 * D * std::ldexp(1.0, -j);
        out.report.max_drift_ratio = std::max(out.report.max_drift_ratio, drift / envelope);
      }
      if (cfg.vertex_hook) cfg.vertex_hook(TreeAddress{t, s}, path_x[j], path_v[j]);

      if (j == t) {
        for (int i = 0; i < m; ++i) scores[i] = cfg.vertices.vertex_dot(i, path_v[t]);
        const double scale = cfg.non_private ? 0.0 : lambda[t];
        const int pick = report_noisy_max(scores, scale, rng);
        const double eta = fw_step_size(t, s);
        cfg.vertices.vertex(pick, cvert);
        for (int c = 0; c < d; ++c)
          running_x[c] = (1.0 - eta) * path_x[t][c] + eta * cvert[c];
        summary.leaves += 1;
        summary.mean_step += eta;
        out.report.final_step_index = TreeAddress{t, s}.step_index();
      }
    }

    summary.fresh_samples = out.report.fresh_samples - fresh_before;
    if (summary.leaves > 0) summary.mean_step /= static_cast<double>(summary.leaves);
    out.report.phases.push_back(summary);
  }

  out.x = std::move(running_x);
  return out;
}

}  // namespace dpsco

#endif  // DPSCO_FRANK_WOLFE_HPP_
