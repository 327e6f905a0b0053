// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: train, compare, descent-check, cost-model.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "paca/config.hpp"
#include "paca/cost_model.hpp"
#include "paca/descent.hpp"
#include "paca/layers.hpp"
#include "paca/selection.hpp"
#include "paca/trainer.hpp"

namespace {

using nlohmann::json;

constexpr int kExitValidation = 2;
constexpr int kExitInvariant = 3;

int report_error(const std::string& kind, const std::string& field, const std::string& message,
                 int code) {
  json err = {{"error", {{"kind", kind}, {"message", message}}}};
  if (!field.empty()) err["error"]["field"] = field;
  std::cerr << err.dump() << '\n';
  return code;
}

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> dtype;
};

void apply_overrides(paca::ExperimentConfig& cfg, const GlobalOptions& g) {
  if (g.seed) {
    cfg.data_seed = *g.seed;
    cfg.model_seed = *g.seed;
    cfg.selection.seed = *g.seed;
  }
  if (g.dtype) cfg.dtype = *g.dtype == "f32" ? paca::Dtype::f32 : paca::Dtype::f64;
}

int cmd_train(const std::string& config_path, const std::string& out_dir, const GlobalOptions& g) {
  auto cfg = paca::load_config(config_path);
  apply_overrides(cfg, g);
  cfg.validate();
  const auto log = paca::run_experiment(cfg);
  paca::write_reports(log, out_dir);
  std::cout << json{{"out", out_dir},
                    {"steps", log.steps.size()},
                    {"final_train_loss", log.final_train_loss()},
                    {"final_eval_loss", log.final_eval_loss}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& out_dir,
                const GlobalOptions& g) {
  std::vector<paca::ExperimentConfig> configs;
  for (const auto& p : paths) {
    auto cfg = paca::load_config(p);
    apply_overrides(cfg, g);
    cfg.validate();
    configs.push_back(std::move(cfg));
  }
  const auto report = paca::compare_methods(configs);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream(std::filesystem::path(out_dir) / "comparison.csv") << report.to_csv();
    std::ofstream(std::filesystem::path(out_dir) / "comparison.json") << report.to_json();
  }
  std::cout << report.to_csv();
  return 0;
}

int cmd_descent(std::size_t dim, std::size_t rank, double eta_frac, std::size_t steps,
                std::size_t samples, const std::string& out_csv, const GlobalOptions& g) {
  if (!(eta_frac > 0.0 && eta_frac < 1.0)) {
    throw paca::ArgumentError("--eta-frac must lie in (0, 1)");
  }
  const std::uint64_t seed = g.seed.value_or(0);
  const auto problem = paca::QuadraticProblem::random(dim, dim, samples == 0 ? 2 * dim : samples, seed);
  const auto idx = paca::select_random(dim, rank, paca::derive_seed(seed, 1));
  const double eta = eta_frac * 2.0 / problem.lipschitz;
  const auto records = paca::descent_check(problem, paca::Matrix(dim, dim), idx, eta, steps);

  std::size_t violations = 0;
  for (const auto& r : records) violations += r.holds ? 0 : 1;
  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    out << "step,loss,loss_next,grad_p_sq,bound,holds\n";
    for (const auto& r : records) {
      out << r.step << ',' << paca::format_real(r.loss) << ',' << paca::format_real(r.loss_next)
          << ',' << paca::format_real(r.grad_p_sq) << ',' << paca::format_real(r.bound) << ','
          << (r.holds ? 1 : 0) << '\n';
    }
  }
  std::cout << json{{"dim", dim},
                    {"rank", rank},
                    {"lipschitz", problem.lipschitz},
                    {"eta", eta},
                    {"steps", records.size()},
                    {"initial_loss", records.empty() ? 0.0 : records.front().loss},
                    {"final_loss", records.empty() ? 0.0 : records.back().loss_next},
                    {"violations", violations}}
                   .dump()
            << '\n';
  if (violations > 0) {
    return report_error("invariant", "", std::to_string(violations) + " descent-bound violations",
                        kExitInvariant);
  }
  return 0;
}

int cmd_cost(std::size_t d_in, std::size_t d_out, std::size_t batch, std::size_t rank,
             const std::string& method_name, const GlobalOptions& g) {
  const auto method = paca::parse_method(method_name);
  const auto flops = paca::flop_linear(d_in, d_out, batch, method, rank);

  paca::ExperimentConfig cfg;
  cfg.method = method;
  cfg.rank = rank;
  cfg.selection.rank = rank;
  cfg.batch_size = batch;
  cfg.model.layers = {{d_in, d_out}};
  cfg.dtype = g.dtype && *g.dtype == "f32" ? paca::Dtype::f32 : paca::Dtype::f64;
  const auto mem = paca::memory_report(cfg.model, cfg);

  std::cout << json{{"method", method_name},
                    {"d_in", d_in},
                    {"d_out", d_out},
                    {"batch", batch},
                    {"rank", rank},
                    {"flops",
                     {{"forward", flops.forward},
                      {"backward_input", flops.backward_input},
                      {"backward_weight", flops.backward_weight},
                      {"total", flops.total()}}},
                    {"bytes",
                     {{"weights", mem.weights},
                      {"grads", mem.grads},
                      {"optim_state", mem.optim_state},
                      {"activations", mem.activations}}}}
                   .dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial-connection fine-tuning laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  std::uint64_t seed = 0;
  std::string dtype;
  auto* seed_opt = app.add_option("--seed", seed, "Seed overriding the data, model and selection seeds");
  auto* dtype_opt = app.add_option("--dtype", dtype, "Floating-point type")
                        ->check(CLI::IsMember({"f32", "f64"}));

  std::string config_path, out_dir;
  auto* train = app.add_subcommand("train", "Run one experiment and write steps.csv and summary.json");
  train->add_option("--config", config_path, "Experiment config (JSON)")->required();
  train->add_option("--out", out_dir, "Output directory")->required();

  std::vector<std::string> config_paths;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Run several configs and tabulate them");
  compare->add_option("--configs", config_paths, "Experiment configs")->required();
  compare->add_option("--out", compare_out, "Directory for comparison.csv/json");

  std::size_t dim = 8, rank = 4, dsteps = 1000, samples = 0;
  double eta_frac = 0.5;
  std::string descent_csv;
  auto* descent = app.add_subcommand("descent-check", "Verify the per-step descent bound");
  descent->add_option("--dim", dim, "Layer width (d_in = d_out)")->check(CLI::PositiveNumber);
  descent->add_option("--rank", rank, "Number of trained columns")->check(CLI::PositiveNumber);
  descent->add_option("--eta-frac", eta_frac, "Step size as a fraction of 2/L");
  descent->add_option("--steps", dsteps, "Iterations");
  descent->add_option("--samples", samples, "Data columns (default 2*dim)");
  descent->add_option("--out", descent_csv, "Per-step CSV");

  std::size_t c_in = 4096, c_out = 4096, c_batch = 1, c_rank = 8;
  std::string c_method = "paca";
  auto* cost = app.add_subcommand("cost-model", "FLOPs and bytes of one linear layer");
  cost->add_option("--d-in", c_in)->required();
  cost->add_option("--d-out", c_out)->required();
  cost->add_option("--batch", c_batch)->required();
  cost->add_option("--rank", c_rank);
  cost->add_option("--method", c_method)->check(CLI::IsMember({"full", "lora", "paca", "qpaca"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", "", e.what(), kExitValidation);
  }
  if (*seed_opt) g.seed = seed;
  if (*dtype_opt) g.dtype = dtype;

  try {
    if (*train) return cmd_train(config_path, out_dir, g);
    if (*compare) return cmd_compare(config_paths, compare_out, g);
    if (*descent) return cmd_descent(dim, rank, eta_frac, dsteps, samples, descent_csv, g);
    if (*cost) return cmd_cost(c_in, c_out, c_batch, c_rank, c_method, g);
  } catch (const paca::ConfigError& e) {
    return report_error("config", e.field(), e.what(), kExitValidation);
  } catch (const paca::InvariantError& e) {
    return report_error("invariant", "", e.what(), kExitInvariant);
  } catch (const std::invalid_argument& e) {
    return report_error("argument", "", e.what(), kExitValidation);
  } catch (const std::exception& e) {
    return report_error("runtime", "", e.what(), 1);
  }
  return 0;
}
