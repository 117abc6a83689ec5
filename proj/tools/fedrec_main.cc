#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedrec/config.h"
#include "fedrec/error.h"
#include "fedrec/experiment.h"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "key=value configuration file");
  cmd->add_option("--seed", flags.seed, "Override the seed list with one seed");
  cmd->add_option("--out", flags.out, "Output directory");
}

fedrec::ExperimentConfig load(const CommonFlags& flags) {
  fedrec::ExperimentConfig cfg = flags.config.empty()
                                     ? fedrec::desk_preset()
                                     : fedrec::load_config(flags.config);
  if (flags.seed) cfg.seeds = {*flags.seed};
  if (!flags.out.empty()) cfg.out_dir = flags.out;
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"Federated news recommendation poisoning simulator"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  auto* gen = app.add_subcommand("generate-data",
                                 "Write a synthetic corpus as news.tsv and "
                                 "behaviors.tsv");
  add_common(gen, gen_flags);

  CommonFlags train_flags;
  auto* train = app.add_subcommand("train", "Train every configured seed");
  add_common(train, train_flags);

  CommonFlags sweep_flags;
  std::string axis;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Train once per axis value");
  add_common(sweep, sweep_flags);
  sweep->add_option("--axis", axis, "Configuration key to vary")->required();
  sweep->add_option("--values", values, "Comma-separated values")
      ->delimiter(',');

  CommonFlags sim_flags;
  std::string ckpt_a, ckpt_b;
  std::size_t pairs = 10000;
  auto* sim = app.add_subcommand("diagnose-similarity",
                                 "Correlate news similarities across two "
                                 "checkpoints");
  add_common(sim, sim_flags);
  sim->add_option("checkpoint_a", ckpt_a)->required();
  sim->add_option("checkpoint_b", ckpt_b)->required();
  sim->add_option("--pairs", pairs, "Number of news pairs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(fedrec::ExitCode::kConfig);
  }

  if (*gen) {
    fedrec::ExperimentConfig cfg = load(gen_flags);
    const std::uint64_t seed = gen_flags.seed.value_or(cfg.data_seed);
    const std::string out = gen_flags.out.empty() ? "data" : gen_flags.out;
    fedrec::cmd_generate_data(cfg.synth, seed, out);
    std::cout << "wrote " << out << "/news.tsv and " << out
              << "/behaviors.tsv\n";
  } else if (*train) {
    const fedrec::RunSummary s = fedrec::cmd_train(load(train_flags));
    std::cout << std::fixed << std::setprecision(4) << "auc " << s.auc.mean
              << " +- " << s.auc.std << "  mrr " << s.mrr.mean << "  ndcg5 "
              << s.ndcg5.mean << "  ndcg10 " << s.ndcg10.mean << "\n";
  } else if (*sweep) {
    std::cout << fedrec::cmd_sweep(load(sweep_flags), axis, values);
  } else if (*sim) {
    fedrec::ExperimentConfig cfg = load(sim_flags);
    const std::uint64_t seed = sim_flags.seed.value_or(0);
    const fedrec::SimilarityReport report =
        fedrec::cmd_diagnose_similarity(cfg, ckpt_a, ckpt_b, pairs, seed);
    std::cout << std::fixed << std::setprecision(4) << report.r << "\n";
    const std::filesystem::path out =
        sim_flags.out.empty() ? std::filesystem::path("similarity.json")
                              : std::filesystem::path(sim_flags.out);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    std::ofstream json(out);
    if (!json) throw fedrec::DataError("cannot write '" + out.string() + "'");
    json << report.to_json().dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const fedrec::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(fedrec::ExitCode::kData);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(fedrec::ExitCode::kNumeric);
  }
}
