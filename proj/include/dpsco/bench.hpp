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

#ifndef DPSCO_BENCH_HPP_
#define DPSCO_BENCH_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dpsco/baseline.hpp"
#include "dpsco/frank_wolfe.hpp"
#include "dpsco/hard_instances.hpp"
#include "dpsco/localization.hpp"
#include "dpsco/mirror_descent.hpp"
#include "dpsco/reductions.hpp"

#include "json.hpp"

namespace dpsco::bench {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fully resolved parameters of one run: everything needed to reproduce its
// excess_empirical bit-for-bit. Serialized as the record's param_dump.
struct PointConfig {
  std::string algorithm;  // noisy-md | localized-md | tree-fw | sc-wrapper
  std::string inner;      // sc-wrapper only
  std::string family;     // quadratic | abs-l1 | linear | sign

  // Instance parameters.
  std::int64_t n = 0;
  int d = 0;
  double C = 1.0;             // quadratic
  double scale = 1.0;         // abs-l1 / linear
  double planted_scale = 0;   // quadratic: ||x*||_1 = planted_scale * D
  double b_noise = 0;
  double bias = 0.5;          // sign
  double bias_spread = 0;     // sign: per-coordinate bias in [bias-s, bias+s]
  std::uint64_t gen_seed = 0;

  // Geometry and budget.
  bool p_auto = true;  // p = 1 + 1/log d (l1 route)
  double p = 2.0;
  double D = 1.0;
  std::string constraint = "l1";  // l1 | lp
  double epsilon = 1.0;
  double delta = 1e-6;
  bool non_private = false;
  double sigma_constant = 100.0;
  std::uint64_t seed = 0;

  // Algorithm knobs; 0 means the theorem default.
  std::int64_t md_T = 0;
  std::int64_t md_b = 0;
  double md_eta = 0;
  double md_mu = 0;  // > 0 switches noisy-md to the strongly convex mode
  double reg_weight = 0;  // > 0 wraps the loss with ||x||_p^2 regularization
  std::string averaging = "uniform";
  std::string fw_mode = "approx";  // pure | approx
  int fw_T = 0;
  std::int64_t fw_b = 0;
  double sc_mu = 1.0;

  std::int64_t pop_samples = 100000;

  json to_json() const {
    return json{{"algorithm", algorithm}, {"inner", inner},
                {"family", family},       {"n", n},
                {"d", d},                 {"C", C},
                {"scale", scale},         {"planted_scale", planted_scale},
                {"b_noise", b_noise},     {"bias", bias},
                {"bias_spread", bias_spread},
                {"gen_seed", gen_seed},   {"p_auto", p_auto},
                {"p", p},                 {"D", D},
                {"constraint", constraint},
                {"epsilon", epsilon},     {"delta", delta},
                {"non_private", non_private},
                {"sigma_constant", sigma_constant},
                {"seed", seed},           {"md_T", md_T},
                {"md_b", md_b},           {"md_eta", md_eta},
                {"md_mu", md_mu},         {"reg_weight", reg_weight},
                {"averaging", averaging}, {"fw_mode", fw_mode},
                {"fw_T", fw_T},           {"fw_b", fw_b},
                {"sc_mu", sc_mu},         {"pop_samples", pop_samples}};
  }

  static PointConfig from_json(const json& j) {
    PointConfig pt;
    pt.algorithm = j.at("algorithm").get<std::string>();
    pt.inner = j.value("inner", std::string{});
    pt.family = j.at("family").get<std::string>();
    pt.n = j.at("n").get<std::int64_t>();
    pt.d = j.at("d").get<int>();
    pt.C = j.value("C", 1.0);
    pt.scale = j.value("scale", 1.0);
    pt.planted_scale = j.value("planted_scale", 0.0);
    pt.b_noise = j.value("b_noise", 0.0);
    pt.bias = j.value("bias", 0.5);
    pt.bias_spread = j.value("bias_spread", 0.0);
    pt.gen_seed = j.at("gen_seed").get<std::uint64_t>();
    pt.p_auto = j.value("p_auto", true);
    pt.p = j.value("p", 2.0);
    pt.D = j.value("D", 1.0);
    pt.constraint = j.value("constraint", std::string{"l1"});
    pt.epsilon = j.at("epsilon").get<double>();
    pt.delta = j.at("delta").get<double>();
    pt.non_private = j.value("non_private", false);
    pt.sigma_constant = j.value("sigma_constant", 100.0);
    pt.seed = j.at("seed").get<std::uint64_t>();
    pt.md_T = j.value("md_T", std::int64_t{0});
    pt.md_b = j.value("md_b", std::int64_t{0});
    pt.md_eta = j.value("md_eta", 0.0);
    pt.md_mu = j.value("md_mu", 0.0);
    pt.reg_weight = j.value("reg_weight", 0.0);
    pt.averaging = j.value("averaging", std::string{"uniform"});
    pt.fw_mode = j.value("fw_mode", std::string{"approx"});
    pt.fw_T = j.value("fw_T", 0);
    pt.fw_b = j.value("fw_b", std::int64_t{0});
    pt.sc_mu = j.value("sc_mu", 1.0);
    pt.pop_samples = j.value("pop_samples", std::int64_t{100000});
    return pt;
  }

  double resolved_p() const { return p_auto ? 1.0 + 1.0 / clamped_log_dim(d) : p; }
};

struct ResultRecord {
  std::string algorithm;
  std::int64_t n;
  int d;
  double p;
  double epsilon;
  double delta;
  std::uint64_t seed;
  double excess_empirical = 0;
  double excess_population_est = 0;
  double population_stderr = 0;
  std::int64_t grad_count = 0;
  double wall_ms = 0;
  bool non_private = false;
  json param_dump;
  json report;

  json to_json() const {
    return json{{"algorithm", algorithm},
                {"n", n},
                {"d", d},
                {"p", p},
                {"epsilon", epsilon},
                {"delta", delta},
                {"seed", seed},
                {"excess_empirical", excess_empirical},
                {"excess_population_est", excess_population_est},
                {"population_stderr", population_stderr},
                {"grad_count", grad_count},
                {"wall_ms", wall_ms},
                {"non_private", non_private},
                {"param_dump", param_dump},
                {"report", report}};
  }
};

namespace detail_bench {

// The deterministic planted point shared by the instance generator and the
// population oracle.
inline Vec planted_point(const PointConfig& pt) {
  CounterRng prng(pt.gen_seed, 0x9a10);
  Vec planted(pt.d, 0.0);
  double rem = pt.planted_scale * pt.D;
  for (int j = 0; j < pt.d && rem > 0; ++j) {
    const double m = std::min(rem, pt.planted_scale * pt.D * 2.0 / pt.d);
    planted[j] = (prng.uniform01() < 0.5 ? -1 : 1) * m;
    rem -= m;
  }
  return planted;
}

inline Dataset build_instance(const PointConfig& pt, Vec* sign_zbar) {
  if (pt.family == "quadratic") {
    if (pt.planted_scale > 0)
      return gen_quadratic_planted(pt.n, pt.d, pt.C, pt.D, planted_point(pt), pt.b_noise,
                                   pt.gen_seed);
    return gen_quadratic_instance(pt.n, pt.d, pt.C, pt.D, pt.gen_seed);
  }
  if (pt.family == "linear") return gen_linear_instance(pt.n, pt.d, pt.scale, pt.gen_seed);
  if (pt.family == "sign" || pt.family == "abs-l1") {
    BiasProfile prof = BiasProfile::uniform(pt.d, pt.bias);
    if (pt.bias_spread > 0) {
      CounterRng brng(pt.gen_seed, 0x51b);
      for (auto& b : prof.probs)
        b = pt.bias + pt.bias_spread * (2.0 * brng.uniform01() - 1.0);
    }
    SignInstance inst = gen_sign_instance(pt.n, pt.d, pt.D, prof, pt.gen_seed);
    if (sign_zbar) *sign_zbar = inst.z_bar;
    return std::move(inst.data);
  }
  throw ConfigError("unknown family '" + pt.family + "'");
}

inline LossFamily build_loss(const PointConfig& pt) {
  if (pt.family == "quadratic") return LossFamily::quadratic(pt.C, pt.D);
  if (pt.family == "linear") return LossFamily::linear(pt.scale);
  if (pt.family == "sign" || pt.family == "abs-l1") return LossFamily::abs_l1(pt.scale);
  throw ConfigError("unknown family '" + pt.family + "'");
}

inline ConstraintSet build_constraint(const PointConfig& pt) {
  if (pt.constraint == "l1") return ConstraintSet::l1_ball(pt.d, pt.D);
  if (pt.constraint == "lp") return ConstraintSet::lp_ball(pt.d, pt.resolved_p(), pt.D);
  throw ConfigError("unknown constraint '" + pt.constraint + "'");
}

// Exact empirical minimum where a closed form exists; otherwise the
// high-accuracy solver. Returns (min value, certificate json).
template <typename Loss>
std::pair<double, json> empirical_min(const Loss& loss, const PointConfig& pt,
                                      const Dataset& data, const ConstraintSet& cons,
                                      const Vec& sign_zbar) {
  if (pt.family == "sign" || pt.family == "abs-l1") {
    Vec x_star(pt.d);
    for (int j = 0; j < pt.d; ++j) x_star[j] = sign_plus(sign_zbar[j]) * pt.D / pt.d;
    return {empirical_loss(loss, x_star, data), json{{"baseline", "closed-form-median"}}};
  }
  if (pt.family == "linear") {
    Vec gbar(pt.d, 0.0);
    for (std::int64_t i = 0; i < data.n; ++i) {
      auto z = data.point(i);
      for (int j = 0; j < pt.d; ++j) gbar[j] += z[j];
    }
    for (int j = 0; j < pt.d; ++j) gbar[j] /= static_cast<double>(data.n);
    const double dual =
        pt.constraint == "l1" ? lp_norm(gbar, kInfinity) : lp_norm(gbar, dual_exponent(pt.resolved_p()));
    return {-pt.D * dual, json{{"baseline", "closed-form-linear"}}};
  }
  // Quadratic: deterministic solver from the ball center.
  LpGeometry geom(2.0);
  const double L = loss.lipschitz();
  auto cert = solve_baseline(loss, data, cons, geom, Vec(pt.d, 0.0), 0.25 * pt.D / L,
                             /*max_iters=*/20000, /*tol=*/1e-7);
  return {cert.value,
          json{{"baseline", "solver"},
               {"iterations", cert.iterations},
               {"final_stall", cert.final_stall},
               {"converged", cert.converged}}};
}

// Paired Monte-Carlo excess population estimate against the generator's known
// population minimizer.
inline std::pair<double, double> population_excess(const PointConfig& pt,
                                                   const LossFamily& loss, const Vec& x_hat) {
  Vec x_star(pt.d, 0.0);
  Dataset one;
  one.n = 1;
  one.d = pt.d;
  one.features.resize(pt.d);
  CounterRng rng(pt.gen_seed, 0x9e22);

  QuadraticGen qgen{pt.d, pt.C, pt.D, {}, pt.b_noise};
  LinearGen lgen{pt.d, pt.scale};
  SignGen sgen{pt.d, pt.D, {}};
  std::function<void()> draw;
  if (pt.family == "quadratic") {
    if (pt.planted_scale > 0) {
      qgen.planted = planted_point(pt);
      x_star = qgen.planted;
    }
    one.scalars.resize(1);
    draw = [&] { qgen.sample(rng, std::span<double>(one.features), &one.scalars[0]); };
  } else if (pt.family == "linear") {
    draw = [&] { lgen.sample(rng, std::span<double>(one.features)); };
  } else {
    BiasProfile prof = BiasProfile::uniform(pt.d, pt.bias);
    if (pt.bias_spread > 0) {
      CounterRng brng(pt.gen_seed, 0x51b);
      for (auto& b : prof.probs) b = pt.bias + pt.bias_spread * (2.0 * brng.uniform01() - 1.0);
    }
    for (int j = 0; j < pt.d; ++j)
      x_star[j] = (prof.probs[j] >= 0.5 ? 1.0 : -1.0) * pt.D / pt.d;
    sgen.bias = prof.probs;
    draw = [&] { sgen.sample(rng, std::span<double>(one.features)); };
  }

  double sum = 0, sumsq = 0;
  const std::int64_t n_eval = std::max<std::int64_t>(1, pt.pop_samples);
  for (std::int64_t i = 0; i < n_eval; ++i) {
    draw();
    const double diff = loss.point_loss(x_hat, one, 0) - loss.point_loss(x_star, one, 0);
    sum += diff;
    sumsq += diff * diff;
  }
  const double mean = sum / static_cast<double>(n_eval);
  double se = 0;
  if (n_eval > 1) {
    const double var = (sumsq - mean * sum) / static_cast<double>(n_eval - 1);
    se = std::sqrt(std::max(var, 0.0) / static_cast<double>(n_eval));
  }
  return {mean, se};
}

}  // namespace detail_bench

// Executes one fully resolved run. Deterministic in the PointConfig contents.
inline ResultRecord run_single(PointConfig pt) {
  if (pt.gen_seed == 0) pt.gen_seed = detail::mix64(pt.seed ^ 0xda7a5eedULL);
  const auto t0 = std::chrono::steady_clock::now();

  Vec sign_zbar;
  Dataset data = detail_bench::build_instance(pt, &sign_zbar);
  LossFamily loss = detail_bench::build_loss(pt);
  ConstraintSet cons = detail_bench::build_constraint(pt);
  const double p_run = pt.resolved_p();
  const double q_run = dual_exponent(p_run);
  const double L = pt.constraint == "l1" ? loss.lipschitz() : loss.lipschitz(q_run, pt.d);

  ResultRecord rec;
  rec.algorithm = pt.algorithm;
  rec.n = pt.n;
  rec.d = pt.d;
  rec.p = p_run;
  rec.epsilon = pt.epsilon;
  rec.delta = pt.delta;
  rec.seed = pt.seed;
  rec.non_private = pt.non_private;

  Vec x_hat;
  if (pt.algorithm == "noisy-md") {
    if (pt.md_T <= 0 || pt.md_b <= 0)
      throw ConfigError("noisy-md requires positive md_T and md_b");
    MdConfig md{LpGeometry(p_run), cons};
    md.batch = pt.md_b;
    md.iterations = pt.md_T;
    md.epsilon = pt.epsilon;
    md.delta = pt.delta;
    md.lipschitz = L;
    md.sigma_constant = pt.sigma_constant;
    md.seed = pt.seed;
    if (pt.non_private) {
      md.sigma = 0;
      md.sigma_form = SigmaForm::kNonPrivate;
    } else {
      md.sigma_form = pt.constraint == "l1" ? SigmaForm::kL1 : SigmaForm::kLp;
      md.sigma = sigma_noisy_md(L, pt.d, pt.delta, static_cast<double>(pt.md_b), pt.epsilon,
                                pt.sigma_constant,
                                pt.constraint == "l1" ? kInfinity : q_run);
    }
    if (pt.md_mu > 0) {
      md.steps = StepSchedule::strongly_convex(pt.md_mu);
      md.averaging = Averaging::kWeightedByK;
    } else {
      const double eta = pt.md_eta > 0
                             ? pt.md_eta
                             : default_step_convex(pt.D, L, md.sigma, pt.d,
                                                   static_cast<double>(pt.md_T),
                                                   pt.constraint == "l1" ? kInfinity : q_run);
      md.steps = StepSchedule::constant(eta);
      md.averaging =
          pt.averaging == "weighted" ? Averaging::kWeightedByK : Averaging::kUniform;
    }
    if (pt.reg_weight > 0) {
      RegularizedLoss reg{&loss, pt.reg_weight, Vec(pt.d, 0.0), p_run};
      MdResult r = noisy_md(reg, data, md, Vec(pt.d, 0.0));
      x_hat = std::move(r.x);
      rec.grad_count = r.grad_count;
      rec.report = json{{"sigma", r.sigma}, {"noise_vectors", r.noise_vectors}};
    } else {
      MdResult r = noisy_md(loss, data, md, Vec(pt.d, 0.0));
      x_hat = std::move(r.x);
      rec.grad_count = r.grad_count;
      rec.report = json{{"sigma", r.sigma}, {"noise_vectors", r.noise_vectors}};
    }
  } else if (pt.algorithm == "localized-md") {
    LocalizationConfig loc{cons, pt.D, PrivacyBudget(pt.epsilon, pt.delta), L,
                           pt.p_auto ? LocalizationMode::kL1 : LocalizationMode::kLp,
                           p_run, pt.md_eta, pt.non_private, pt.sigma_constant, pt.seed};
    LocalizationResult r = localized_md(loss, data, loc, Vec(pt.d, 0.0));
    x_hat = std::move(r.x);
    rec.grad_count = r.report.grad_count;
    rec.report = r.report.to_json();
  } else if (pt.algorithm == "tree-fw") {
    const double beta = loss.smoothness();
    if (!std::isfinite(beta)) throw ConfigError("tree-fw requires a smooth family");
    const double logn = std::log(static_cast<double>(std::max<std::int64_t>(pt.n, 3)));
    const std::int64_t b =
        pt.fw_b > 0 ? pt.fw_b
                    : std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(
                                                    static_cast<double>(pt.n) / (logn * logn))));
    const double m = static_cast<double>(cons.vertex_count());
    PhaseCount pc{1, false};
    if (pt.fw_T > 0) {
      pc.T = pt.fw_T;
    } else if (pt.fw_mode == "pure") {
      pc = default_T_pure(static_cast<double>(b), pt.epsilon, beta, pt.D, L, m,
                          static_cast<double>(pt.n));
    } else {
      pc = default_T_approx(static_cast<double>(b), pt.epsilon, beta, pt.D, L,
                            static_cast<double>(pt.n), m, pt.delta);
    }
    FwConfig fw;
    fw.vertices = cons;
    fw.phases = pc.T;
    fw.batch = pc.fallback_single_phase && pt.fw_T == 0 && pt.fw_b == 0 ? pt.n : b;
    fw.mode = pt.fw_mode == "pure" ? FwPrivacyMode::kPure : FwPrivacyMode::kApprox;
    fw.epsilon = pt.epsilon;
    fw.delta = pt.delta;
    fw.non_private = pt.non_private;
    fw.lipschitz = L;
    fw.diameter = pt.D;
    fw.seed = pt.seed;
    Vec x0(pt.d, 0.0);
    cons.vertex(0, x0);
    FwResult r = private_vr_fw(loss, data, fw, x0);
    x_hat = std::move(r.x);
    rec.grad_count = r.report.grad_count;
    rec.report = r.report.to_json();
    rec.report["T"] = pc.T;
    rec.report["b"] = fw.batch;
    rec.report["fallback_single_phase"] = pc.fallback_single_phase;
  } else if (pt.algorithm == "sc-wrapper") {
    if (pt.inner != "localized-md" && pt.inner != "tree-fw")
      throw ConfigError("sc-wrapper needs inner = localized-md | tree-fw");
    InnerAlgorithm inner = [&](const Dataset& slice, Vec x0) -> StageOutcome {
      PointConfig stage = pt;
      stage.algorithm = pt.inner;
      stage.inner.clear();
      if (pt.inner == "localized-md") {
        LocalizationConfig loc{cons, pt.D, PrivacyBudget(pt.epsilon, pt.delta), L,
                               pt.p_auto ? LocalizationMode::kL1 : LocalizationMode::kLp,
                               p_run, pt.md_eta, pt.non_private, pt.sigma_constant, pt.seed};
        LocalizationResult r = localized_md(loss, slice, loc, std::move(x0));
        return {r.x, r.report.grad_count, r.report.ledger_epsilon, r.report.ledger_delta,
                r.report.to_json()};
      }
      const double beta = loss.smoothness();
      if (!std::isfinite(beta)) throw ConfigError("tree-fw inner requires a smooth family");
      const double logn = std::log(static_cast<double>(std::max<std::int64_t>(slice.n, 3)));
      const std::int64_t b = std::max<std::int64_t>(
          2, static_cast<std::int64_t>(std::floor(static_cast<double>(slice.n) / (logn * logn))));
      const double m = static_cast<double>(cons.vertex_count());
      PhaseCount pc = pt.fw_mode == "pure"
                          ? default_T_pure(static_cast<double>(b), pt.epsilon, beta, pt.D, L, m,
                                           static_cast<double>(slice.n))
                          : default_T_approx(static_cast<double>(b), pt.epsilon, beta, pt.D, L,
                                             static_cast<double>(slice.n), m, pt.delta);
      FwConfig fw;
      fw.vertices = cons;
      fw.phases = pc.T;
      fw.batch = pc.fallback_single_phase ? slice.n : b;
      fw.mode = pt.fw_mode == "pure" ? FwPrivacyMode::kPure : FwPrivacyMode::kApprox;
      fw.epsilon = pt.epsilon;
      fw.delta = pt.delta;
      fw.non_private = pt.non_private;
      fw.lipschitz = L;
      fw.diameter = pt.D;
      fw.seed = pt.seed;
      if (!cons.contains(x0, 1e-8)) cons.vertex(0, x0);
      FwResult r = private_vr_fw(loss, slice, fw, std::move(x0));
      return {r.x, r.report.grad_count, pt.epsilon, pt.delta, r.report.to_json()};
    };
    ScWrapperResult r = sc_wrapper(inner, data, pt.sc_mu, Vec(pt.d, 0.0), pt.seed);
    x_hat = std::move(r.x);
    rec.grad_count = r.report.grad_count;
    rec.report = r.report.to_json();
  } else {
    throw ConfigError("unknown algorithm '" + pt.algorithm + "'");
  }

  auto [fmin, baseline_cert] = detail_bench::empirical_min(loss, pt, data, cons, sign_zbar);
  rec.excess_empirical = empirical_loss(loss, x_hat, data) - fmin;
  auto [pop_excess, pop_se] = detail_bench::population_excess(pt, loss, x_hat);
  rec.excess_population_est = pop_excess;
  rec.population_stderr = pop_se;
  rec.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  rec.param_dump = pt.to_json();
  rec.param_dump["baseline"] = baseline_cert;
  rec.param_dump["lipschitz"] = L;
  if (pt.non_private) rec.param_dump["budget_is_nominal"] = true;
  return rec;
}

// Re-executes the run described by a record's param_dump; the returned excess
// must equal the record's bit-for-bit.
inline double reproduce_excess(const json& param_dump) {
  return run_single(PointConfig::from_json(param_dump)).excess_empirical;
}

struct ExperimentConfig {
  json raw;
  std::vector<PointConfig> points;  // grid x seeds, fully expanded
  std::string out;
  bool csv_mirror = false;
};

// Parses and expands an experiment file; throws ConfigError naming the field.
inline ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  try {
    if (j.value("schema_version", 0) != 1)
      throw ConfigError("config field 'schema_version' must be 1");
    PointConfig base;
    base.algorithm = j.at("algorithm").get<std::string>();
    base.inner = j.value("inner", std::string{});
    const json& inst = j.at("instance");
    base.family = inst.at("family").get<std::string>();
    base.C = inst.value("C", 1.0);
    base.scale = inst.value("scale", 1.0);
    base.planted_scale = inst.value("planted_scale", 0.0);
    base.b_noise = inst.value("b_noise", 0.0);
    base.bias = inst.value("bias", 0.5);
    base.bias_spread = inst.value("bias_spread", 0.0);
    const json& geo = j.at("geometry");
    if (geo.at("p").is_string()) {
      if (geo.at("p").get<std::string>() != "auto")
        throw ConfigError("config field 'geometry.p' must be a number or \"auto\"");
      base.p_auto = true;
    } else {
      base.p_auto = false;
      base.p = geo.at("p").get<double>();
    }
    base.D = geo.at("D").get<double>();
    base.constraint = j.value("constraint", std::string{"l1"});
    base.delta = j.at("budget").at("delta").get<double>();
    base.non_private = j.value("non_private", false);
    base.sigma_constant = j.value("sigma_constant", 100.0);
    if (j.contains("algo")) {
      const json& a = j.at("algo");
      base.md_T = a.value("T", std::int64_t{0});
      base.md_b = a.value("b", std::int64_t{0});
      base.md_eta = a.value("eta", 0.0);
      base.md_mu = a.value("mu", 0.0);
      base.reg_weight = a.value("reg_weight", 0.0);
      base.averaging = a.value("averaging", std::string{"uniform"});
      base.fw_mode = a.value("mode", std::string{"approx"});
      base.fw_T = a.value("fw_T", 0);
      base.fw_b = a.value("fw_b", std::int64_t{0});
      base.sc_mu = a.value("sc_mu", 1.0);
    }
    base.pop_samples = j.value("evaluation", json::object()).value("population_samples",
                                                                   std::int64_t{100000});
    const auto n_grid = j.at("n_grid").get<std::vector<std::int64_t>>();
    const auto d_grid = j.at("d_grid").get<std::vector<int>>();
    const auto eps_grid = j.at("budget").at("epsilons").get<std::vector<double>>();
    const auto seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (n_grid.empty() || d_grid.empty() || eps_grid.empty() || seeds.empty())
      throw ConfigError("config grids must be non-empty");
    for (std::int64_t n : n_grid)
      for (int d : d_grid)
        for (double eps : eps_grid)
          for (std::uint64_t seed : seeds) {
            PointConfig pt = base;
            pt.n = n;
            pt.d = d;
            pt.epsilon = eps;
            pt.seed = seed;
            pt.gen_seed = detail::mix64(seed ^ 0xda7a5eedULL);
            cfg.points.push_back(pt);
          }
    cfg.out = j.value("out", std::string{});
    cfg.csv_mirror = j.value("csv_mirror", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return cfg;
}

struct RunStatus {
  int completed = 0;
  int failed = 0;
};

// Runs every expanded point on a worker pool; one NDJSON line per record,
// serialized through a single writer. Failed runs are recorded as error lines.
inline RunStatus run_experiments(const ExperimentConfig& cfg, int jobs,
                                 const std::string& out_path) {
  std::ofstream out(out_path, std::ios::app);
  if (!out) throw ConfigError("cannot open output path " + out_path);
  std::ofstream csv;
  if (cfg.csv_mirror) {
    csv.open(out_path + ".csv", std::ios::app);
    csv << "algorithm,n,d,p,epsilon,delta,seed,excess_empirical,excess_population_est,"
           "population_stderr,grad_count,wall_ms,non_private\n";
  }

  std::mutex write_mu;
  std::mutex queue_mu;
  std::size_t next = 0;
  RunStatus status;

  auto worker = [&] {
    while (true) {
      std::size_t mine;
      {
        std::lock_guard<std::mutex> lk(queue_mu);
        if (next >= cfg.points.size()) return;
        mine = next++;
      }
      json line;
      bool ok = true;
      try {
        ResultRecord rec = run_single(cfg.points[mine]);
        line = rec.to_json();
      } catch (const std::exception& e) {
        ok = false;
        line = json{{"error", e.what()}, {"param_dump", cfg.points[mine].to_json()}};
      }
      std::lock_guard<std::mutex> lk(write_mu);
      out << line.dump() << "\n";
      out.flush();
      if (cfg.csv_mirror && ok) {
        csv << line["algorithm"].get<std::string>() << ',' << line["n"] << ',' << line["d"]
            << ',' << line["p"] << ',' << line["epsilon"] << ',' << line["delta"] << ','
            << line["seed"] << ',' << line["excess_empirical"] << ','
            << line["excess_population_est"] << ',' << line["population_stderr"] << ','
            << line["grad_count"] << ',' << line["wall_ms"] << ',' << line["non_private"]
            << "\n";
        csv.flush();
      }
      (ok ? status.completed : status.failed) += 1;
    }
  };

  const int workers = std::max(1, jobs);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return status;
}

// Theory slopes the tables compare against.
inline double theory_slope(const std::string& name) {
  if (name == "stat-n") return -0.5;            // statistical term vs n
  if (name == "private-smooth-neps") return -2.0 / 3.0;  // smooth private term vs n*eps
  if (name == "private-l2-neps") return -1.0;   // l2-style private term vs n*eps
  if (name == "dim-sqrt") return 0.5;           // sqrt(d) term vs d
  throw ConfigError("unknown theory reference '" + name + "'");
}

// Median excess per swept-axis value plus the fitted log-log slope.
// axis: one of n, d, epsilon, n_eps. metric: excess field to aggregate.
inline json rate_table(const std::vector<json>& records, const std::string& axis,
                       const std::string& theory,
                       const std::string& metric = "excess_empirical") {
  auto axis_value = [&](const json& r) -> double {
    if (axis == "n") return r.at("n").get<double>();
    if (axis == "d") return r.at("d").get<double>();
    if (axis == "epsilon") return r.at("epsilon").get<double>();
    if (axis == "n_eps")
      return r.at("n").get<double>() * r.at("epsilon").get<double>();
    throw ConfigError("unknown sweep axis '" + axis + "'");
  };
  std::map<double, std::vector<double>> groups;
  for (const json& r : records) {
    if (r.contains("error")) continue;
    groups[axis_value(r)].push_back(r.at(metric).get<double>());
  }
  if (groups.size() < 2)
    throw ConfigError("rate_table: need at least 2 points along the swept axis");
  std::vector<double> xs, ys;
  json rows = json::array();
  for (auto& [x, vals] : groups) {
    std::sort(vals.begin(), vals.end());
    const double med = vals.size() % 2 ? vals[vals.size() / 2]
                                       : 0.5 * (vals[vals.size() / 2 - 1] + vals[vals.size() / 2]);
    rows.push_back(json{{"axis", x}, {"median_" + metric, med}, {"count", vals.size()}});
    xs.push_back(x);
    ys.push_back(med);
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += std::log(xs[i]);
    my += std::log(ys[i]);
  }
  mx /= xs.size();
  my /= ys.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (std::log(xs[i]) - mx) * (std::log(ys[i]) - my);
    den += (std::log(xs[i]) - mx) * (std::log(xs[i]) - mx);
  }
  return json{{"axis", axis},
              {"metric", metric},
              {"rows", rows},
              {"fitted_slope", num / den},
              {"theory", theory},
              {"theory_slope", theory_slope(theory)}};
}

}  // namespace dpsco::bench

#endif  // DPSCO_BENCH_HPP_
