#include "fedrec/experiment.h"

#include <openssl/evp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fedrec/attacks.h"
#include "fedrec/checkpoint.h"
#include "fedrec/error.h"

namespace fedrec {
namespace fs = std::filesystem;
namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

MetricSummary mean_std(const std::vector<double>& xs) {
  MetricSummary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

nlohmann::json summary_json(const MetricSummary& s) {
  return {{"mean", s.mean}, {"std", s.std}};
}

std::string csv_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void hash_file(EVP_MD_CTX* ctx, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
}

}  // namespace

Corpus load_corpus(const ExperimentConfig& cfg) {
  if (cfg.source == DataSource::kMind) {
    if (cfg.news_path.empty() || cfg.behaviors_path.empty()) {
      throw ConfigError("data.news and data.behaviors are required for mind");
    }
    return load_mind(cfg.news_path, cfg.behaviors_path, cfg.max_title_len);
  }
  return synth_generate(cfg.synth, cfg.data_seed);
}

std::unique_ptr<RecModel> model_for(const ExperimentConfig& cfg,
                                    const Corpus& corpus) {
  ModelConfig mc = cfg.model;
  mc.vocab_size = corpus.vocab.size();
  mc.max_title_len = cfg.max_title_len;
  return make_model(mc);
}

TrainingResult run_seed(const ExperimentConfig& cfg, const RecModel& model,
                        const Corpus& corpus, std::uint64_t seed) {
  FedConfig fed = cfg.fed;
  fed.seed = seed;
  std::unique_ptr<AttackPlan> attack;
  if (cfg.attack.kind != AttackKind::kNone && cfg.attack.malicious_count > 0) {
    attack = make_attack(cfg.attack, corpus, seed);
  }
  TrainOptions options;
  options.eval_every = cfg.eval_every;
  options.checkpoint_rounds = cfg.checkpoint_rounds;
  options.calibration_rounds = cfg.calibration_rounds;
  return run_training(model, corpus, fed, attack.get(), &cfg.defense, options);
}

nlohmann::json report_to_json(std::size_t round, const EvalReport& report) {
  return {{"round", round},
          {"auc", report.auc},
          {"mrr", report.mrr},
          {"ndcg5", report.ndcg5},
          {"ndcg10", report.ndcg10},
          {"impressions", report.impressions},
          {"skipped", report.skipped}};
}

RunSummary summarize(const std::vector<std::uint64_t>& seeds,
                     const std::vector<EvalReport>& finals) {
  RunSummary s;
  s.seeds = seeds;
  s.finals = finals;
  std::vector<double> auc, mrr, n5, n10;
  for (const EvalReport& r : finals) {
    auc.push_back(r.auc);
    mrr.push_back(r.mrr);
    n5.push_back(r.ndcg5);
    n10.push_back(r.ndcg10);
  }
  s.auc = mean_std(auc);
  s.mrr = mean_std(mrr);
  s.ndcg5 = mean_std(n5);
  s.ndcg10 = mean_std(n10);
  return s;
}

nlohmann::json RunSummary::to_json() const {
  nlohmann::json per_seed = nlohmann::json::array();
  for (std::size_t i = 0; i < finals.size(); ++i) {
    nlohmann::json row = report_to_json(0, finals[i]);
    row.erase("round");
    row["seed"] = seeds.at(i);
    per_seed.push_back(std::move(row));
  }
  return {{"seeds", seeds},
          {"auc", summary_json(auc)},
          {"mrr", summary_json(mrr)},
          {"ndcg5", summary_json(ndcg5)},
          {"ndcg10", summary_json(ndcg10)},
          {"per_seed", per_seed}};
}

std::string input_hash(const ExperimentConfig& cfg) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(
      EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 unavailable");
  }
  ExperimentConfig inputs = cfg;
  inputs.out_dir.clear();
  const std::string snapshot = to_key_values(inputs);
  EVP_DigestUpdate(ctx.get(), snapshot.data(), snapshot.size());
  if (cfg.source == DataSource::kMind) {
    hash_file(ctx.get(), cfg.news_path);
    hash_file(ctx.get(), cfg.behaviors_path);
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0')
        << static_cast<int>(digest[i]);
  }
  return hex.str();
}

void cmd_generate_data(const SynthSpec& spec, std::uint64_t seed,
                       const std::string& out_dir) {
  const Corpus corpus = synth_generate(spec, seed);
  fs::create_directories(out_dir);
  {
    auto out = open_out(fs::path(out_dir) / "news.tsv");
    write_news_tsv(out, corpus);
  }
  auto out = open_out(fs::path(out_dir) / "behaviors.tsv");
  write_behaviors_tsv(out, corpus);
}

RunSummary cmd_train(ExperimentConfig cfg) {
  const Corpus corpus = load_corpus(cfg);
  finalize(cfg, corpus.clients.size());
  const auto model = model_for(cfg, corpus);

  const fs::path root(cfg.out_dir);
  fs::create_directories(root);
  write_text(root / "config.txt", to_key_values(cfg));
  std::string seed_list;
  for (std::uint64_t s : cfg.seeds) seed_list += std::to_string(s) + "\n";
  write_text(root / "seeds.txt", seed_list);
  write_text(root / "input_hash.txt", input_hash(cfg) + "\n");

  std::vector<EvalReport> finals;
  for (std::uint64_t seed : cfg.seeds) {
    const TrainingResult result = run_seed(cfg, *model, corpus, seed);
    const fs::path dir = root / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);

    {
      auto out = open_out(dir / "eval.jsonl");
      for (const auto& [round, report] : result.evals) {
        out << report_to_json(round, report).dump() << "\n";
      }
    }
    {
      auto out = open_out(dir / "rounds.jsonl");
      for (const RoundRecord& rec : result.records) {
        out << rec.to_json().dump() << "\n";
      }
    }
    EvalReport final_report;
    if (!result.evals.empty()) {
      final_report = result.evals.back().second;
    } else {
      final_report = evaluate(result.final_params, *model, corpus);
    }
    nlohmann::json final_json = report_to_json(cfg.fed.rounds, final_report);
    if (result.calibrated_rho) final_json["calibrated_rho"] = *result.calibrated_rho;
    write_text(dir / "final.json", final_json.dump(2) + "\n");
    save_checkpoint((dir / "final.ckpt").string(), result.final_params);
    for (const auto& [round, params] : result.checkpoints) {
      save_checkpoint((dir / ("round_" + std::to_string(round) + ".ckpt")).string(),
                      params);
    }
    finals.push_back(final_report);
  }

  RunSummary summary = summarize(cfg.seeds, finals);
  nlohmann::json sj = summary.to_json();
  sj["malicious_count"] = cfg.attack.kind == AttackKind::kNone
                              ? std::size_t{0}
                              : cfg.attack.malicious_count;
  sj["malicious_ratio"] = static_cast<double>(sj["malicious_count"].get<std::size_t>()) /
                          static_cast<double>(corpus.clients.size());
  write_text(root / "summary.json", sj.dump(2) + "\n");
  return summary;
}

std::string cmd_sweep(const ExperimentConfig& base, const std::string& axis,
                      const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("sweep: --values must not be empty");
  // Reject a bad axis or value before spending time on any run.
  for (const std::string& v : values) {
    ExperimentConfig probe = base;
    set_config_value(probe, axis, v);
  }
  std::string csv = "value,auc_mean,auc_std,mrr,ndcg5,ndcg10\n";
  for (const std::string& v : values) {
    ExperimentConfig cfg = base;
    set_config_value(cfg, axis, v);
    cfg.out_dir = (fs::path(base.out_dir) / (axis + "=" + v)).string();
    const RunSummary s = cmd_train(cfg);
    csv += v + "," + csv_number(s.auc.mean) + "," + csv_number(s.auc.std) +
           "," + csv_number(s.mrr.mean) + "," + csv_number(s.ndcg5.mean) +
           "," + csv_number(s.ndcg10.mean) + "\n";
  }
  fs::create_directories(base.out_dir);
  write_text(fs::path(base.out_dir) / "sweep.csv", csv);
  return csv;
}

nlohmann::json SimilarityReport::to_json() const {
  return {{"r", r}, {"n_pairs", n_pairs}, {"seed", seed}};
}

SimilarityReport cmd_diagnose_similarity(const ExperimentConfig& cfg,
                                         const std::string& checkpoint_a,
                                         const std::string& checkpoint_b,
                                         std::size_t n_pairs,
                                         std::uint64_t seed) {
  const ParamVector a = load_checkpoint(checkpoint_a);
  const ParamVector b = load_checkpoint(checkpoint_b);
  const Corpus corpus = load_corpus(cfg);
  const auto model = model_for(cfg, corpus);
  SimilarityReport report;
  report.r = similarity_drift(*model, a, b, corpus, n_pairs, seed);
  report.n_pairs = n_pairs;
  report.seed = seed;
  return report;
}

}  // namespace fedrec
