#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedrec/data.h"
#include "fedrec/defenses.h"
#include "fedrec/metrics.h"
#include "fedrec/model.h"
#include "fedrec/params.h"

namespace fedrec {

struct FedConfig {
  std::size_t clients_per_round = 50;
  std::size_t rounds = 300;
  double lr = 1e-4;
  std::size_t local_epochs = 1;
  double server_lr = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double tau = 1e-8;
  std::uint64_t seed = 0;
};

void validate(const FedConfig& cfg, std::size_t n_clients);

// Independent RNG streams derived from the run seed, so that each consumer
// (client sampling, negative sampling, attacks, ...) is reproducible on its
// own.
enum class Stream : std::uint64_t {
  kInit = 1,
  kSampleClients = 2,
  kNegatives = 3,
  kAttack = 4,
  kKnownNews = 5,
};
std::mt19937_64 stream_rng(std::uint64_t seed, Stream stream,
                           std::uint64_t a = 0, std::uint64_t b = 0);

// Uniform draw of k distinct indices from [0, n), sorted ascending.
std::vector<std::size_t> sample_clients(std::mt19937_64& rng, std::size_t n,
                                        std::size_t k);

// local_epochs plain gradient steps on the mean sample loss. Returns the
// parameter delta with sample_size = samples.size(); an empty sample list
// yields a zero update of size 0.
ModelUpdate local_train(const RecModel& model, const ParamVector& params,
                        std::span<const TrainSample> samples,
                        const Corpus& corpus, const FedConfig& cfg);

// Builds the client's samples with `rng`, then trains on them.
ModelUpdate local_train(const RecModel& model, const ParamVector& params,
                        const ClientLog& client, const Corpus& corpus,
                        const FedConfig& cfg, std::mt19937_64& rng);

// Sample-size weighted mean; zero-size updates are ignored. Throws
// AggregationError when the total size is zero.
std::vector<double> fedavg_aggregate(std::span<const ModelUpdate> updates);

struct ServerOptState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t round = 0;

  explicit ServerOptState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Adam-style server step without bias correction:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;  theta += lr m / (sqrt(v) + tau)
// Throws NumericError and leaves everything untouched if g is non-finite.
void fedadam_step(ServerOptState& state, std::span<const double> aggregate,
                  ParamVector& params, const FedConfig& cfg);

struct RoundContext {
  const RecModel& model;
  const Corpus& corpus;
  const FedConfig& fed;
  const ParamVector& params;
  std::size_t round = 0;
  // All clients sampled this round, ascending.
  std::span<const std::size_t> sampled;
  // The malicious subset of `sampled`.
  std::span<const std::size_t> sampled_malicious;
};

// Strategy that produces the submissions of sampled malicious clients.
// Malicious clients are those with index < malicious_count().
class AttackPlan {
 public:
  virtual ~AttackPlan() = default;
  virtual std::string name() const = 0;
  virtual std::size_t malicious_count() const = 0;
  // Called once per round, before any malicious_update() call, and only
  // when at least one malicious client was sampled.
  virtual void begin_round(const RoundContext& ctx) = 0;
  virtual ModelUpdate malicious_update(const RoundContext& ctx,
                                       std::size_t client) = 0;
  // Diagnostics for the round log.
  virtual nlohmann::json round_meta() const { return nlohmann::json::object(); }
};

struct RoundRecord {
  std::size_t round = 0;
  std::vector<std::size_t> clients;
  std::vector<std::int64_t> sizes;
  double agg_norm = 0.0;
  nlohmann::json defense_meta = nlohmann::json::object();
  nlohmann::json attack_meta = nlohmann::json::object();

  nlohmann::json to_json() const;
};

struct TrainOptions {
  // Evaluate at round 0, every eval_every rounds and after the last round.
  // 0 disables evaluation.
  std::size_t eval_every = 0;
  // Rounds after which a copy of the parameters is kept.
  std::vector<std::size_t> checkpoint_rounds;
  // Rounds of attack-free training used to calibrate an unset Norm-Bounding
  // threshold.
  std::size_t calibration_rounds = 10;
};

struct TrainingResult {
  std::vector<std::pair<std::size_t, EvalReport>> evals;
  std::vector<RoundRecord> records;
  ParamVector final_params;
  std::map<std::size_t, ParamVector> checkpoints;
  std::optional<double> calibrated_rho;
};

ParamVector initial_params(const RecModel& model, std::uint64_t seed);

// Median L2 norm of benign updates over the first `rounds` attack-free,
// defense-free rounds of the same seed.
double calibrate_norm_bound(const RecModel& model, const Corpus& corpus,
                            const FedConfig& cfg, std::size_t rounds);

TrainingResult run_training(const RecModel& model, const Corpus& corpus,
                            const FedConfig& cfg, AttackPlan* attack,
                            const DefenseRule* defense,
                            const TrainOptions& options = {});

}  // namespace fedrec
