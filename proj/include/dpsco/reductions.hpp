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

#ifndef DPSCO_REDUCTIONS_HPP_
#define DPSCO_REDUCTIONS_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "dpsco/losses.hpp"
#include "dpsco/rng.hpp"

#include "json.hpp"

namespace dpsco {

struct StageRecord {
  int i;
  std::int64_t n_i;
  std::int64_t grad_count_i;
  Vec x_i;
  nlohmann::json inner_report;
};

struct ScheduledRunReport {
  int stages = 0;
  std::int64_t grad_count = 0;
  double composed_epsilon = 0;  // basic composition across stages
  double composed_delta = 0;
  std::string composition = "basic";
  std::vector<StageRecord> records;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["stages"] = stages;
    j["grad_count"] = grad_count;
    j["composed_epsilon"] = composed_epsilon;
    j["composed_delta"] = composed_delta;
    j["composition"] = composition;
    j["stage_reports"] = nlohmann::json::array();
    for (const auto& r : records)
      j["stage_reports"].push_back(
          {{"i", r.i}, {"n_i", r.n_i}, {"grad_count_i", r.grad_count_i}, {"inner", r.inner_report}});
    return j;
  }
};

struct ScWrapperResult {
  Vec x;
  ScheduledRunReport report;
};

// One stage of the strongly convex reduction: solve on a fresh slice starting
// from the previous stage's output. Returns the stage iterate, its gradient
// count and a serializable inner report.
struct StageOutcome {
  Vec x;
  std::int64_t grad_count;
  double epsilon_spent;
  double delta_spent;
  nlohmann::json report;
};
using InnerAlgorithm = std::function<StageOutcome(const Dataset& slice, Vec x0)>;

// Strongly convex wrapper: k = ceil(log2 log2 n) stages on disjoint slices of
// sizes n_i = 2^{i-2} n / log2 n, each initialized at the previous output.
// Every stage receives the caller's budget; the report carries the
// basic-composition total.
inline ScWrapperResult sc_wrapper(const InnerAlgorithm& inner, const Dataset& data, double mu,
                                  Vec x0, std::uint64_t seed) {
  if (!(mu > 0)) throw std::domain_error("sc_wrapper: mu must be positive");
  const std::int64_t n = data.n;
  if (n < 4) throw ParameterizationError("sc_wrapper: need n >= 4 for a nonempty schedule");
  const double log2n = std::log2(static_cast<double>(n));
  const int k = static_cast<int>(std::ceil(std::log2(log2n)));
  if (k < 1) throw ParameterizationError("sc_wrapper: schedule infeasible");

  std::vector<std::int64_t> sizes(k);
  std::int64_t total = 0;
  for (int i = 1; i <= k; ++i) {
    const double raw = std::ldexp(static_cast<double>(n) / log2n, i - 2);
    sizes[i - 1] = static_cast<std::int64_t>(std::floor(raw));
    if (sizes[i - 1] < 1)
      throw ParameterizationError("sc_wrapper: stage " + std::to_string(i) + " rounds to zero");
    total += sizes[i - 1];
  }
  if (total > n) throw ParameterizationError("sc_wrapper: stage sizes exceed n");

  std::vector<std::int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(seed, /*stream=*/0x5c);
  rng.shuffle(order);

  ScWrapperResult out;
  out.report.stages = k;
  Vec x = std::move(x0);
  std::int64_t cursor = 0;
  for (int i = 1; i <= k; ++i) {
    const std::int64_t n_i = sizes[i - 1];
    Dataset slice;
    slice.n = n_i;
    slice.d = data.d;
    slice.features.resize(static_cast<std::size_t>(n_i) * data.d);
    if (data.has_scalars()) slice.scalars.resize(n_i);
    for (std::int64_t r = 0; r < n_i; ++r) {
      const std::int64_t src = order[cursor + r];
      auto zp = data.point(src);
      std::copy(zp.begin(), zp.end(), slice.features.begin() + r * data.d);
      if (data.has_scalars()) slice.scalars[r] = data.scalars[src];
    }
    cursor += n_i;

    StageOutcome stage = inner(slice, x);
    out.report.grad_count += stage.grad_count;
    out.report.composed_epsilon += stage.epsilon_spent;
    out.report.composed_delta += stage.delta_spent;
    out.report.records.push_back({i, n_i, stage.grad_count, stage.x, std::move(stage.report)});
    x = out.report.records.back().x_i;
  }
  out.x = std::move(x);
  return out;
}

}  // namespace dpsco

#endif  // DPSCO_REDUCTIONS_HPP_
