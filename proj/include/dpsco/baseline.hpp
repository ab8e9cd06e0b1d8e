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

#ifndef DPSCO_BASELINE_HPP_
#define DPSCO_BASELINE_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dpsco/geometry.hpp"
#include "dpsco/losses.hpp"

namespace dpsco {

struct BaselineCertificate {
  double value;          // high-accuracy min of the empirical loss
  Vec minimizer;
  std::int64_t iterations;
  double final_stall;    // last observed objective improvement
  bool converged;
};

// High-accuracy non-private reference solver for excess-loss baselines:
// full-batch mirror descent with a decreasing step ladder, stopping when the
// best objective stalls below tol. Deterministic.
template <typename Loss>
BaselineCertificate solve_baseline(const Loss& loss, const Dataset& data,
                                   const ConstraintSet& constraint, const LpGeometry& geom,
                                   Vec x0, double eta0, std::int64_t max_iters = 200000,
                                   double tol = 1e-7) {
  Vec x = std::move(x0);
  Vec g(data.d), gsum(data.d);
  auto full_grad = [&](const Vec& at) {
    std::fill(gsum.begin(), gsum.end(), 0.0);
    for (std::int64_t i = 0; i < data.n; ++i) {
      loss.point_grad(at, data, i, g);
      for (int j = 0; j < data.d; ++j) gsum[j] += g[j];
    }
    for (int j = 0; j < data.d; ++j) gsum[j] /= static_cast<double>(data.n);
  };

  BaselineCertificate cert;
  cert.value = empirical_loss(loss, x, data);
  cert.minimizer = x;
  cert.iterations = 0;
  cert.final_stall = kInfinity;
  cert.converged = false;

  double eta = eta0;
  std::int64_t stalled = 0;
  for (std::int64_t k = 1; k <= max_iters; ++k) {
    full_grad(x);
    Vec next = mirror_step(geom, constraint, x, gsum, eta);
    const double v = empirical_loss(loss, next, data);
    cert.iterations = k;
    if (v < cert.value - tol) {
      cert.final_stall = cert.value - v;
      cert.value = v;
      cert.minimizer = next;
      stalled = 0;
    } else {
      if (v < cert.value) {
        cert.final_stall = cert.value - v;
        cert.value = v;
        cert.minimizer = next;
      }
      ++stalled;
      // Anneal the step; declare convergence after stalls on the finest step.
      if (stalled % 25 == 0) eta *= 0.5;
      if (eta < eta0 * 1e-6 && stalled >= 100) {
        cert.converged = true;
        break;
      }
    }
    x = next;
  }
  if (cert.final_stall <= tol) cert.converged = true;
  return cert;
}

}  // namespace dpsco

#endif  // DPSCO_BASELINE_HPP_
