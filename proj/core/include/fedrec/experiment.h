#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedrec/config.h"
#include "fedrec/fedcore.h"
#include "fedrec/metrics.h"
#include "fedrec/model.h"

namespace fedrec {

Corpus load_corpus(const ExperimentConfig& cfg);

// Model sized for the corpus vocabulary.
std::unique_ptr<RecModel> model_for(const ExperimentConfig& cfg,
                                    const Corpus& corpus);

// One seed of a finalized configuration.
TrainingResult run_seed(const ExperimentConfig& cfg, const RecModel& model,
                        const Corpus& corpus, std::uint64_t seed);

nlohmann::json report_to_json(std::size_t round, const EvalReport& report);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population
};

struct RunSummary {
  MetricSummary auc;
  MetricSummary mrr;
  MetricSummary ndcg5;
  MetricSummary ndcg10;
  std::vector<std::uint64_t> seeds;
  std::vector<EvalReport> finals;

  nlohmann::json to_json() const;
};

RunSummary summarize(const std::vector<std::uint64_t>& seeds,
                     const std::vector<EvalReport>& finals);

// Hex SHA-256 over the configuration snapshot (output directory excluded)
// and, for file-backed data, the input files.
std::string input_hash(const ExperimentConfig& cfg);

// Writes news.tsv and behaviors.tsv into out_dir.
void cmd_generate_data(const SynthSpec& spec, std::uint64_t seed,
                       const std::string& out_dir);

// Runs every seed and writes, under cfg.out_dir:
//   config.txt, seeds.txt, input_hash.txt, summary.json and per seed
//   seed_<s>/{eval.jsonl, rounds.jsonl, final.json, final.ckpt,
//   round_<r>.ckpt}.
RunSummary cmd_train(ExperimentConfig cfg);

// Runs cmd_train once per value of `axis` (each in its own subdirectory)
// and writes sweep.csv. Returns the CSV text.
std::string cmd_sweep(const ExperimentConfig& base, const std::string& axis,
                      const std::vector<std::string>& values);

struct SimilarityReport {
  double r = 0.0;
  std::size_t n_pairs = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

SimilarityReport cmd_diagnose_similarity(const ExperimentConfig& cfg,
                                         const std::string& checkpoint_a,
                                         const std::string& checkpoint_b,
                                         std::size_t n_pairs,
                                         std::uint64_t seed);

}  // namespace fedrec
