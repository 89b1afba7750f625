// Command-line driver: simulate | pde | couple | poc-scan | contract |
// bifurcate | thresholds, each reading a sectioned key=value config file and
// emitting CSV tables plus a text report into the output directory.

#include <CLI11.hpp>
#include <iostream>

#include "adhesion/experiments.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::string format = "all";
  long long seed_override = -1;
  int workers_override = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "config file (sectioned key=value)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", args.out_dir, "output directory");
  cmd->add_option("--format", args.format, "emit format: csv | report | all")
      ->check(CLI::IsMember({"csv", "report", "all"}));
  cmd->add_option("--seed", args.seed_override, "override [run] seed");
  cmd->add_option("--workers", args.workers_override, "override [run] workers");
}

adhesion::ExperimentConfig load(const CommonArgs& args) {
  adhesion::ExperimentConfig cfg = adhesion::ExperimentConfig::from_file(args.config_path);
  if (args.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed_override);
  if (args.workers_override > 0) cfg.workers = args.workers_override;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-phenotype adhesion dynamics: particle, mean-field and bifurcation tools"};
  app.require_subcommand(1);

  CommonArgs sim_args, pde_args, couple_args, poc_args, contract_args, bif_args, thr_args;
  CLI::App* sim = app.add_subcommand("simulate", "run the N-particle system");
  add_common(sim, sim_args);
  CLI::App* pde = app.add_subcommand("pde", "solve the mean-field equations");
  add_common(pde, pde_args);
  CLI::App* couple = app.add_subcommand("couple", "run coupled particle/mean-field pairs");
  add_common(couple, couple_args);
  CLI::App* poc = app.add_subcommand("poc-scan", "empirical-measure convergence ladder");
  add_common(poc, poc_args);
  CLI::App* contract = app.add_subcommand("contract", "mean-field contraction experiment");
  add_common(contract, contract_args);
  CLI::App* bif = app.add_subcommand("bifurcate", "stationary-branch sweep");
  add_common(bif, bif_args);
  CLI::App* thr = app.add_subcommand("thresholds", "critical interaction strengths per mode");
  add_common(thr, thr_args);

  CLI11_PARSE(app, argc, argv);

  try {
    adhesion::RunArtifacts art;
    std::string out_dir;
    if (sim->parsed()) {
      out_dir = sim_args.out_dir;
      std::filesystem::create_directories(out_dir);
      art = adhesion::run_simulate(load(sim_args), out_dir);
      adhesion::emit(art, out_dir, sim_args.format);
    } else if (pde->parsed()) {
      out_dir = pde_args.out_dir;
      std::filesystem::create_directories(out_dir);
      art = adhesion::run_pde(load(pde_args), out_dir);
      adhesion::emit(art, out_dir, pde_args.format);
    } else if (couple->parsed()) {
      out_dir = couple_args.out_dir;
      std::filesystem::create_directories(out_dir);
      art = adhesion::run_couple(load(couple_args), out_dir);
      adhesion::emit(art, out_dir, couple_args.format);
    } else if (poc->parsed()) {
      out_dir = poc_args.out_dir;
      art = adhesion::run_poc_scan(load(poc_args));
      adhesion::emit(art, out_dir, poc_args.format);
    } else if (contract->parsed()) {
      out_dir = contract_args.out_dir;
      art = adhesion::run_contraction(load(contract_args));
      adhesion::emit(art, out_dir, contract_args.format);
    } else if (bif->parsed()) {
      out_dir = bif_args.out_dir;
      art = adhesion::run_bifurcation_sweep(load(bif_args));
      adhesion::emit(art, out_dir, bif_args.format);
    } else if (thr->parsed()) {
      out_dir = thr_args.out_dir;
      art = adhesion::run_thresholds(load(thr_args));
      adhesion::emit(art, out_dir, thr_args.format);
    }
    std::cout << art.report;
    return 0;
  } catch (const adhesion::GateError& e) {
    std::cerr << "gate refusal: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
