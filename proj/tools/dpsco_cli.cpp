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
//
// Benchmark runner. Subcommands:
//   run        execute an experiment config, one NDJSON record per run
//   rate-table aggregate a result file into a median/slope table
//   verify     run the built-in invariant suites
// Exit codes: 0 success, 1 partial run failures, 2 config error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "dpsco/bench.hpp"

namespace {

using dpsco::bench::json;

std::string resolve_out(const std::string& out_flag, const std::string& config_out,
                        const std::string& fallback) {
  std::string path = !out_flag.empty() ? out_flag : config_out;
  if (path.empty()) path = fallback;
  if (const char* dir = std::getenv("DPSCO_OUT_DIR");
      dir && !path.empty() && path.find('/') == std::string::npos) {
    path = std::string(dir) + "/" + path;
  }
  return path;
}

int cmd_run(const std::string& config_path, const std::string& out_flag, int jobs,
            bool non_private) {
  json raw;
  {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open config " << config_path << "\n";
      return 2;
    }
    try {
      in >> raw;
    } catch (const json::exception& e) {
      std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
      return 2;
    }
  }
  if (non_private) raw["non_private"] = true;
  dpsco::bench::ExperimentConfig cfg;
  try {
    cfg = dpsco::bench::parse_experiment_config(raw);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  const std::string out = resolve_out(out_flag, cfg.out, "results.ndjson");
  dpsco::bench::RunStatus status;
  try {
    status = dpsco::bench::run_experiments(cfg, jobs, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "completed " << status.completed << " run(s), " << status.failed
            << " failure(s), results in " << out << "\n";
  return status.failed == 0 ? 0 : 1;
}

int cmd_rate_table(const std::string& in_path, const std::string& axis,
                   const std::string& theory, const std::string& metric,
                   const std::string& out_flag) {
  std::ifstream in(in_path);
  if (!in) {
    std::cerr << "error: cannot open results " << in_path << "\n";
    return 2;
  }
  std::vector<json> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::exception& e) {
      std::cerr << "error: bad record line: " << e.what() << "\n";
      return 2;
    }
  }
  json table;
  try {
    table = dpsco::bench::rate_table(records, axis, theory, metric);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  const std::string out = resolve_out(out_flag, "", "rate_table.json");
  std::ofstream o(out);
  o << table.dump(2) << "\n";
  std::cout << table.dump(2) << "\n";
  return 0;
}

int check(bool ok, const std::string& name, int& failures) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
  if (!ok) ++failures;
  return failures;
}

// Compact invariant suites; the full versions live in the test tree.
int cmd_verify() {
  using namespace dpsco;
  int failures = 0;

  {  // Bregman nonnegativity and identity.
    CounterRng rng(1);
    bool ok = true;
    for (double p : {1.1, 1.5, 2.0}) {
      LpGeometry geom(p, {0.1, -0.2, 0.0});
      for (int t = 0; t < 500; ++t) {
        Vec x(3), y(3);
        for (int j = 0; j < 3; ++j) {
          x[j] = 2.0 * rng.uniform01() - 1.0;
          y[j] = 2.0 * rng.uniform01() - 1.0;
        }
        ok = ok && bregman_divergence(geom, x, y) >= -1e-12;
        ok = ok && bregman_divergence(geom, x, x) == 0.0;
      }
    }
    check(ok, "bregman nonnegativity (1500 random pairs)", failures);
  }

  {  // Mirror-step optimality against a coarse random-probe bound.
    CounterRng rng(2);
    bool ok = true;
    LpGeometry geom(1.5);
    auto ball = ConstraintSet::l1_ball(2, 1.0);
    for (int t = 0; t < 40; ++t) {
      Vec g = {4 * rng.uniform01() - 2, 4 * rng.uniform01() - 2};
      Vec xk = {0, 0};
      const double eta = 0.3 + rng.uniform01();
      Vec got = mirror_step(geom, ball, xk, g, eta);
      const double val = dot(g, got) + bregman_divergence(geom, got, xk) / eta;
      for (int probe = 0; probe < 500; ++probe) {
        Vec cand = {2 * rng.uniform01() - 1, 2 * rng.uniform01() - 1};
        if (!ball.contains(cand, 0.0)) continue;
        const double v = dot(g, cand) + bregman_divergence(geom, cand, xk) / eta;
        ok = ok && val <= v + 1e-6;
      }
    }
    check(ok, "mirror-step optimality (random probes)", failures);
  }

  {  // Tree telescoping in full-batch test mode.
    Dataset ds = gen_quadratic_instance(256, 8, 1.0, 1.0, 3);
    auto fam = LossFamily::quadratic(1.0, 1.0);
    FwConfig fw;
    fw.vertices = ConstraintSet::l1_ball(8, 1.0);
    fw.phases = 3;
    fw.batch = 64;
    fw.non_private = true;
    fw.full_batch_test_mode = true;
    fw.lipschitz = fam.lipschitz();
    fw.diameter = 1.0;
    double worst = 0;
    fw.vertex_hook = [&](const TreeAddress&, std::span<const double> x,
                         std::span<const double> v) {
      Vec exact(8);
      std::vector<std::int64_t> all(ds.n);
      std::iota(all.begin(), all.end(), 0);
      batch_grad(fam, x, ds, all, exact);
      for (int j = 0; j < 8; ++j) worst = std::max(worst, std::abs(v[j] - exact[j]));
    };
    Vec x0(8, 0.0);
    fw.vertices.vertex(0, x0);
    private_vr_fw(fam, ds, fw, x0);
    check(worst <= 1e-12, "tree gradient telescoping (full batch)", failures);
  }

  {  // Entropic-step counterexample ratios.
    const auto r1 = md_counterexample_check(0.1);
    const auto r2 = md_counterexample_check(1.0);
    check(r1.l1 >= 1.025 && r1.kl >= 1.025 && r2.l1 >= 1.25 && r2.kl >= 1.25,
          "mirror-descent expansion ratios", failures);
  }

  {  // Sign-instance minimizer at small scale.
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto inst = gen_sign_instance(5, 2, 1.0, BiasProfile::uniform(2, 0.4), seed);
      auto fam = LossFamily::abs_l1(1.0);
      Vec x_star(2);
      for (int j = 0; j < 2; ++j) x_star[j] = sign_plus(inst.z_bar[j]) * 0.5;
      const double fstar = empirical_loss(fam, x_star, inst.data);
      CounterRng rng(seed + 100);
      for (int t = 0; t < 200; ++t) {
        Vec x = {2 * rng.uniform01() - 1, 2 * rng.uniform01() - 1};
        const double s = l1_norm(x);
        if (s > 1)
          for (auto& v : x) v /= s;
        ok = ok && empirical_loss(fam, x, inst.data) >= fstar - 1e-12;
      }
    }
    check(ok, "l1-median minimizer optimality (random probes)", failures);
  }

  std::cout << (failures == 0 ? "all invariant suites passed\n"
                              : std::to_string(failures) + " suite(s) failed\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentially private stochastic convex optimization benchmarks"};
  app.require_subcommand(1);

  std::string config_path, out_path, in_path;
  std::string axis = "n", theory = "stat-n", metric = "excess_empirical";
  int jobs = 1;
  bool non_private = false;

  auto* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("--config", config_path, "experiment JSON")->required();
  run->add_option("--out", out_path, "output NDJSON path");
  run->add_option("--jobs", jobs, "worker threads");
  run->add_flag("--non-private", non_private, "zero all noise; budgets become nominal");

  auto* table = app.add_subcommand("rate-table", "fit a rate table from results");
  table->add_option("--in", in_path, "results NDJSON")->required();
  table->add_option("--axis", axis, "swept axis: n | d | epsilon | n_eps");
  table->add_option("--theory", theory,
                    "reference slope: stat-n | private-smooth-neps | private-l2-neps | dim-sqrt");
  table->add_option("--metric", metric, "excess_empirical | excess_population_est");
  table->add_option("--out", out_path, "table output path");

  auto* verify = app.add_subcommand("verify", "run the invariant suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, out_path, jobs, non_private);
    if (table->parsed()) return cmd_rate_table(in_path, axis, theory, metric, out_path);
    if (verify->parsed()) return cmd_verify();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
