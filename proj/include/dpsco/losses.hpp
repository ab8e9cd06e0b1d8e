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

#ifndef DPSCO_LOSSES_HPP_
#define DPSCO_LOSSES_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpsco/geometry.hpp"
#include "dpsco/rng.hpp"

#include "json.hpp"

namespace dpsco {

// Immutable after construction. Points are stored as the columns of a d x n
// block (point i occupies features[i*d .. (i+1)*d)); per-family scalars (the
// quadratic targets b_i) ride in a sidecar of length n.
struct Dataset {
  std::int64_t n = 0;
  int d = 0;
  std::vector<double> features;
  std::vector<double> scalars;
  nlohmann::json meta;  // family, constants, seed

  std::span<const double> point(std::int64_t i) const {
    return std::span<const double>(features.data() + i * d, static_cast<std::size_t>(d));
  }
  double scalar(std::int64_t i) const { return scalars.empty() ? 0.0 : scalars[i]; }
  bool has_scalars() const { return !scalars.empty(); }
};

// File format: one JSON header line, then one CSV row per point (features,
// then the sidecar scalar if the family has one). Values are printed with 17
// significant digits so load(save(ds)) reproduces every double exactly.
inline void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  nlohmann::json header = ds.meta;
  header["n"] = ds.n;
  header["d"] = ds.d;
  header["has_scalars"] = ds.has_scalars();
  out << header.dump() << "\n";
  char buf[64];
  for (std::int64_t i = 0; i < ds.n; ++i) {
    auto z = ds.point(i);
    for (int j = 0; j < ds.d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", z[j]);
      out << (j ? "," : "") << buf;
    }
    if (ds.has_scalars()) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.scalars[i]);
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_dataset: missing header");
  Dataset ds;
  ds.meta = nlohmann::json::parse(line);
  ds.n = ds.meta.at("n").get<std::int64_t>();
  ds.d = ds.meta.at("d").get<int>();
  const bool has_scalars = ds.meta.value("has_scalars", false);
  ds.features.reserve(static_cast<std::size_t>(ds.n) * ds.d);
  if (has_scalars) ds.scalars.reserve(ds.n);
  for (std::int64_t i = 0; i < ds.n; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("load_dataset: truncated file");
    std::stringstream row(line);
    std::string cell;
    for (int j = 0; j < ds.d + (has_scalars ? 1 : 0); ++j) {
      if (!std::getline(row, cell, ','))
        throw std::runtime_error("load_dataset: short row " + std::to_string(i));
      const double v = std::strtod(cell.c_str(), nullptr);
      if (j < ds.d)
        ds.features.push_back(v);
      else
        ds.scalars.push_back(v);
    }
  }
  return ds;
}

// Loss families f(x; z). Gradients are honest subgradients with dual norm
// bounded by lipschitz(); AbsL1 resolves kinks to 0.
class LossFamily {
 public:
  enum class Kind { kAbsL1, kQuadratic, kLinear, kEntropicDemo };

  // f(x; z) = scale * ||x - z||_1.
  static LossFamily abs_l1(double scale) {
    LossFamily f;
    f.kind_ = Kind::kAbsL1;
    f.scale_ = scale;
    return f;
  }

  // f(x; (a, b)) = (a^T x - b)^2 with ||a||_inf <= C, |b| <= C * domain_radius.
  // Over the l1 ball of radius domain_radius this is 4C^2 D-Lipschitz and
  // 2C^2-smooth in the l1/l-inf pairing.
  static LossFamily quadratic(double C, double domain_radius) {
    LossFamily f;
    f.kind_ = Kind::kQuadratic;
    f.C_ = C;
    f.domain_radius_ = domain_radius;
    return f;
  }

  // f(x; z) = <z, x> with ||z||_inf <= scale.
  static LossFamily linear(double scale) {
    LossFamily f;
    f.kind_ = Kind::kLinear;
    f.scale_ = scale;
    return f;
  }

  // Fixed linear pull toward the later coordinates; the simplex demo loss.
  static LossFamily entropic_demo() {
    LossFamily f;
    f.kind_ = Kind::kEntropicDemo;
    f.scale_ = 1.0;
    return f;
  }

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  double quad_bound() const { return C_; }
  double domain_radius() const { return domain_radius_; }

  double point_loss(std::span<const double> x, const Dataset& ds, std::int64_t i) const {
    auto z = ds.point(i);
    switch (kind_) {
      case Kind::kAbsL1: {
        double s = 0;
        for (std::size_t j = 0; j < x.size(); ++j) s += std::abs(x[j] - z[j]);
        return scale_ * s;
      }
      case Kind::kQuadratic: {
        const double r = dot(z, x) - ds.scalar(i);
        return r * r;
      }
      case Kind::kLinear:
        return dot(z, x);
      case Kind::kEntropicDemo: {
        double s = 0;
        for (std::size_t j = 1; j < x.size(); ++j) s -= x[j];
        return s;
      }
    }
    return 0;
  }

  void point_grad(std::span<const double> x, const Dataset& ds, std::int64_t i,
                  std::span<double> out) const {
    auto z = ds.point(i);
    switch (kind_) {
      case Kind::kAbsL1:
        for (std::size_t j = 0; j < x.size(); ++j) {
          const double dsign = x[j] > z[j] ? 1.0 : (x[j] < z[j] ? -1.0 : 0.0);
          out[j] = scale_ * dsign;
        }
        return;
      case Kind::kQuadratic: {
        const double r = 2.0 * (dot(z, x) - ds.scalar(i));
        for (std::size_t j = 0; j < x.size(); ++j) out[j] = r * z[j];
        return;
      }
      case Kind::kLinear:
        for (std::size_t j = 0; j < x.size(); ++j) out[j] = z[j];
        return;
      case Kind::kEntropicDemo:
        out[0] = 0;
        for (std::size_t j = 1; j < x.size(); ++j) out[j] = -1.0;
        return;
    }
  }

  // Bound on the dual norm ||grad||_q of any subgradient over the family's
  // domain. q = infinity is the l1-geometry pairing.
  double lipschitz(double q = kInfinity, int d = 1) const {
    const double dim_factor = std::isinf(q) ? 1.0 : std::pow(static_cast<double>(d), 1.0 / q);
    switch (kind_) {
      case Kind::kAbsL1:
        return scale_ * dim_factor;
      case Kind::kQuadratic:
        return 4.0 * C_ * C_ * domain_radius_ * dim_factor;
      case Kind::kLinear:
        return scale_ * dim_factor;
      case Kind::kEntropicDemo:
        return dim_factor;
    }
    return 0;
  }

  // Smoothness in the l1/l-inf pairing; infinity where the gradient jumps.
  double smoothness() const {
    switch (kind_) {
      case Kind::kQuadratic:
        return 2.0 * C_ * C_;
      case Kind::kLinear:
      case Kind::kEntropicDemo:
        return 0.0;
      default:
        return kInfinity;
    }
  }

  double rel_strong_convexity() const { return 0.0; }

  std::string name() const {
    switch (kind_) {
      case Kind::kAbsL1:
        return "abs-l1";
      case Kind::kQuadratic:
        return "quadratic";
      case Kind::kLinear:
        return "linear";
      case Kind::kEntropicDemo:
        return "entropic-demo";
    }
    return "?";
  }

 private:
  Kind kind_ = Kind::kLinear;
  double scale_ = 1.0;
  double C_ = 1.0;
  double domain_radius_ = 1.0;
};

// f(x; z) + weight * ||x - center||_p^2. With weight = 1/(eta*n*(p-1)) this is
// the phase objective of the localization schedule; it is weight*(p-1)-strongly
// convex relative to h(x) = (1/(p-1))||x - center||_p^2.
struct RegularizedLoss {
  const LossFamily* base;
  double weight;
  Vec center;
  double p;

  double rel_strong_convexity() const { return weight * (p - 1.0); }

  double regularizer(std::span<const double> x) const {
    Vec u(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) u[j] = x[j] - center[j];
    const double m = lp_norm(u, p);
    return weight * m * m;
  }

  double point_loss(std::span<const double> x, const Dataset& ds, std::int64_t i) const {
    return base->point_loss(x, ds, i) + regularizer(x);
  }

  void point_grad(std::span<const double> x, const Dataset& ds, std::int64_t i,
                  std::span<double> out) const {
    base->point_grad(x, ds, i, out);
    Vec u(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) u[j] = x[j] - center[j];
    const double m = lp_norm(u, p);
    if (m == 0) return;
    const double s = 2.0 * weight * std::pow(m, 2.0 - p);
    for (std::size_t j = 0; j < x.size(); ++j)
      out[j] += s * LpGeometry::signed_pow(u[j], p - 1.0);
  }
};

// Exact mean loss over the dataset.
template <typename Loss>
double empirical_loss(const Loss& loss, std::span<const double> x, const Dataset& ds) {
  if (ds.n == 0) throw std::invalid_argument("empirical_loss: empty dataset");
  double s = 0;
  for (std::int64_t i = 0; i < ds.n; ++i) s += loss.point_loss(x, ds, i);
  return s / static_cast<double>(ds.n);
}

// Mean gradient over an index subset, accumulated into out.
template <typename Loss>
void batch_grad(const Loss& loss, std::span<const double> x, const Dataset& ds,
                std::span<const std::int64_t> idx, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  Vec g(x.size());
  for (std::int64_t i : idx) {
    loss.point_grad(x, ds, i, g);
    for (std::size_t j = 0; j < x.size(); ++j) out[j] += g[j];
  }
  const double inv = 1.0 / static_cast<double>(idx.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] *= inv;
}

// Seeded sample generators. These define the population distributions, so
// population estimates never resample the training set.
struct QuadraticGen {
  int d;
  double C;
  double domain_radius;
  Vec planted;        // empty: b ~ U[-C*D, C*D] independent of a
  double b_noise = 0;  // with planting: b = a^T planted + U[-b_noise, b_noise]

  void sample(CounterRng& rng, std::span<double> a_out, double* b_out) const {
    for (int j = 0; j < d; ++j) a_out[j] = C * (2.0 * rng.uniform01() - 1.0);
    if (planted.empty()) {
      *b_out = C * domain_radius * (2.0 * rng.uniform01() - 1.0);
    } else {
      *b_out = dot(a_out, planted) + b_noise * (2.0 * rng.uniform01() - 1.0);
    }
  }

  // E[(a^T x - b)^2] in closed form: coordinates of a are iid U[-C, C].
  double population_loss(std::span<const double> x) const {
    const double va = C * C / 3.0;
    if (planted.empty()) {
      double s = 0;
      for (double v : x) s += v * v;
      const double vb = C * C * domain_radius * domain_radius / 3.0;
      return va * s + vb;
    }
    double s = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double u = x[j] - planted[j];
      s += u * u;
    }
    return va * s + b_noise * b_noise / 3.0;
  }

  double population_min() const {
    if (planted.empty()) return C * C * domain_radius * domain_radius / 3.0;
    return b_noise * b_noise / 3.0;
  }
};

struct SignGen {
  int d;
  double D;
  Vec bias;  // per-coordinate P(z_j = +D/d); scalar profile = all equal

  void sample(CounterRng& rng, std::span<double> z_out) const {
    for (int j = 0; j < d; ++j)
      z_out[j] = rng.uniform01() < bias[j] ? D / d : -D / d;
  }

  // E[L * ||x - z||_1] for the abs-l1 family, per coordinate closed form.
  double population_loss(std::span<const double> x, double L) const {
    double s = 0;
    const double c = D / d;
    for (int j = 0; j < d; ++j)
      s += bias[j] * std::abs(x[j] - c) + (1.0 - bias[j]) * std::abs(x[j] + c);
    return L * s;
  }
};

struct LinearGen {
  int d;
  double scale;  // z_j = +-scale, symmetric

  void sample(CounterRng& rng, std::span<double> z_out) const {
    for (int j = 0; j < d; ++j) z_out[j] = rng.uniform01() < 0.5 ? scale : -scale;
  }
};

struct PopulationEstimate {
  double mean;
  double stderr_;  // 0 when n_eval = 1
  std::int64_t n_eval;
};

// Monte-Carlo population loss over n_eval fresh generator samples.
template <typename Gen>
PopulationEstimate population_loss_estimate(const LossFamily& family, std::span<const double> x,
                                            const Gen& gen, std::int64_t n_eval,
                                            std::uint64_t seed) {
  if (n_eval < 1) throw std::invalid_argument("population_loss_estimate: n_eval >= 1");
  CounterRng rng(seed, /*stream=*/0x9e11);
  Dataset one;
  one.n = 1;
  one.d = gen.d;
  one.features.resize(gen.d);
  double sum = 0, sumsq = 0;
  for (std::int64_t i = 0; i < n_eval; ++i) {
    if constexpr (requires { gen.sample(rng, std::span<double>(one.features), &one.scalars[0]); }) {
      if (one.scalars.empty()) one.scalars.resize(1);
      gen.sample(rng, std::span<double>(one.features), &one.scalars[0]);
    } else {
      gen.sample(rng, std::span<double>(one.features));
    }
    const double v = family.point_loss(x, one, 0);
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / static_cast<double>(n_eval);
  double se = 0;
  if (n_eval > 1) {
    const double var = (sumsq - mean * sum) / static_cast<double>(n_eval - 1);
    se = std::sqrt(std::max(var, 0.0) / static_cast<double>(n_eval));
  }
  return {mean, se, n_eval};
}

// n points with ||a_i||_inf <= C, |b_i| <= C*D, uniform over the box.
inline Dataset gen_quadratic_instance(std::int64_t n, int d, double C, double D,
                                      std::uint64_t seed) {
  if (C <= 0 || D <= 0) throw std::invalid_argument("gen_quadratic_instance: C, D > 0");
  QuadraticGen gen{d, C, D, {}, 0};
  CounterRng rng(seed, /*stream=*/0x9a01);
  Dataset ds;
  ds.n = n;
  ds.d = d;
  ds.features.resize(static_cast<std::size_t>(n) * d);
  ds.scalars.resize(n);
  for (std::int64_t i = 0; i < n; ++i)
    gen.sample(rng, std::span<double>(ds.features.data() + i * d, d), &ds.scalars[i]);
  ds.meta = {{"family", "quadratic"}, {"C", C}, {"D", D}, {"seed", seed}};
  return ds;
}

// Planted variant: b_i = a_i^T x* + U[-b_noise, b_noise]. Bounds still hold
// when ||x*||_1 + b_noise / C <= D.
inline Dataset gen_quadratic_planted(std::int64_t n, int d, double C, double D, Vec planted,
                                     double b_noise, std::uint64_t seed) {
  if (l1_norm(planted) + b_noise / C > D + 1e-12)
    throw std::invalid_argument("gen_quadratic_planted: planted point breaks the |b| bound");
  QuadraticGen gen{d, C, D, std::move(planted), b_noise};
  CounterRng rng(seed, /*stream=*/0x9a02);
  Dataset ds;
  ds.n = n;
  ds.d = d;
  ds.features.resize(static_cast<std::size_t>(n) * d);
  ds.scalars.resize(n);
  for (std::int64_t i = 0; i < n; ++i)
    gen.sample(rng, std::span<double>(ds.features.data() + i * d, d), &ds.scalars[i]);
  ds.meta = {{"family", "quadratic"}, {"C", C}, {"D", D}, {"seed", seed}, {"planted", true}};
  return ds;
}

inline Dataset gen_linear_instance(std::int64_t n, int d, double scale, std::uint64_t seed) {
  LinearGen gen{d, scale};
  CounterRng rng(seed, /*stream=*/0x9a03);
  Dataset ds;
  ds.n = n;
  ds.d = d;
  ds.features.resize(static_cast<std::size_t>(n) * d);
  for (std::int64_t i = 0; i < n; ++i)
    gen.sample(rng, std::span<double>(ds.features.data() + i * d, d));
  ds.meta = {{"family", "linear"}, {"scale", scale}, {"seed", seed}};
  return ds;
}

}  // namespace dpsco

#endif  // DPSCO_LOSSES_HPP_
