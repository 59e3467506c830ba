#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tidalopt/scenario.hpp"

using namespace tidalopt;

int main(int argc, char** argv) {
  CLI::App app{"tidal dynamics control toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  unsigned seed = 0;
  std::string mode;
  std::vector<double> tau_seq;
  int theta_samples = 0;
  int max_iters = -1;
  double tol = -1.0;
  bool has_seed = false;

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"forward", "run the controlled shallow-flow solver"},
      {"tangent", "linearized solve around a seeded base trajectory"},
      {"adjoint", "backward solve with the configured cost sources"},
      {"gradcheck", "finite-difference check of the reduced gradient"},
      {"taylor", "remainder-vs-step study of the linearization"},
      {"optimize", "gradient descent on the distributed control"},
      {"assimilate", "recover the initial velocity from measurements"},
      {"uniqueness", "small-time uniqueness certificate"},
      {"secondorder", "curvature scan at a computed optimum"},
      {"verify", "operator, inequality and bound property suites"},
  };
  for (const auto& [name, desc] : subs) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("-c,--config", config_path, "scenario config (JSON)")
        ->required();
    sub->add_option("-o,--out", out_override, "output directory override");
    sub->add_option("--seed", seed, "RNG seed override")
        ->each([&](const std::string&) { has_seed = true; });
    sub->add_option("--mode", mode, "jacobian mode: exact | paper")
        ->check(CLI::IsMember({"exact", "paper"}));
    if (name == "taylor")
      sub->add_option("--tau-seq", tau_seq, "perturbation sizes");
    if (name == "secondorder")
      sub->add_option("--theta-samples", theta_samples, "scan sample count");
    if (name == "optimize" || name == "assimilate" || name == "secondorder")
      sub->add_option("--max-iters", max_iters, "iteration cap override");
    if (name == "optimize" || name == "assimilate" || name == "gradcheck")
      sub->add_option("--tol", tol, "tolerance override");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    ScenarioConfig cfg = parse_config(config_path);
    if (!out_override.empty()) cfg.output = out_override;
    CliOverrides ov;
    ov.has_seed = has_seed;
    ov.seed = seed;
    if (!mode.empty()) {
      ov.has_mode = true;
      ov.mode = mode == "paper" ? JacobianMode::paper : JacobianMode::exact;
    }
    ov.tau_seq = tau_seq;
    ov.theta_samples = theta_samples;
    ov.max_iters = max_iters;
    ov.tol = tol;
    return run_scenario(sub, cfg, ov);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
