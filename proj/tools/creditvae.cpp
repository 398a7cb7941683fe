#include "creditvae/pipeline.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>

int main(int argc, char** argv) {
  using namespace creditvae;

  CLI::App app{"Weight-of-Evidence VAE pipeline for credit portfolios"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  app.add_option("--config", config_path, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "override the master seed");
  auto* out_opt = app.add_option("--out", out_dir, "override the output directory");

  const std::map<std::string, std::pair<std::string, std::function<void(const PipelineConfig&, std::ostream&)>>>
      commands = {
          {"synth", {"generate a synthetic portfolio (dataset CSV + schema JSON)", cmd_synth}},
          {"transform", {"fit the transform, split the majority class, write the input matrix", cmd_transform}},
          {"train", {"train the VAE on the majority-class training split", cmd_train}},
          {"embed", {"embed every row into the latent space", cmd_embed}},
          {"label", {"label latent clusters by iterative bisection", cmd_label}},
          {"report", {"default rates, confidence intervals, salient dimensions, PD colormaps", cmd_report}},
          {"all", {"run the full chain", cmd_all}},
      };
  for (const auto& [name, entry] : commands) app.add_subcommand(name, entry.first);

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig cfg = PipelineConfig::load(config_path);
    if (*seed_opt) cfg.set_seed(seed);
    if (*out_opt) cfg.set_output_dir(out_dir);
    for (const auto* sub : app.get_subcommands()) {
      commands.at(sub->get_name()).second(cfg, std::cout);
    }
  } catch (const StageError& e) {
    std::cerr << "stage error: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
