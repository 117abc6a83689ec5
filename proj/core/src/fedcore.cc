#include "fedrec/fedcore.h"

#include <algorithm>
#include <cmath>

#include "fedrec/error.h"

namespace fedrec {

void validate(const FedConfig& cfg, std::size_t n_clients) {
  const auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("fed: " + msg);
  };
  require(cfg.clients_per_round >= 1, "clients_per_round must be >= 1");
  require(cfg.clients_per_round <= n_clients,
          "clients_per_round (" + std::to_string(cfg.clients_per_round) +
              ") exceeds the number of clients (" + std::to_string(n_clients) +
              ")");
  require(cfg.lr > 0.0, "lr must be > 0");
  require(cfg.server_lr > 0.0, "server_lr must be > 0");
  require(cfg.local_epochs >= 1, "local_epochs must be >= 1");
  require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0, "beta1 must be in [0, 1)");
  require(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0, "beta2 must be in [0, 1)");
  require(cfg.tau > 0.0, "tau must be > 0");
}

std::mt19937_64 stream_rng(std::uint64_t seed, Stream stream, std::uint64_t a,
                           std::uint64_t b) {
  const auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x); };
  const auto hi = [](std::uint64_t x) {
    return static_cast<std::uint32_t>(x >> 32);
  };
  const auto s = static_cast<std::uint64_t>(stream);
  std::seed_seq seq{lo(seed), hi(seed), lo(s), lo(a), hi(a), lo(b), hi(b)};
  return std::mt19937_64(seq);
}

std::vector<std::size_t> sample_clients(std::mt19937_64& rng, std::size_t n,
                                        std::size_t k) {
  if (k > n) {
    throw ConfigError("cannot sample " + std::to_string(k) + " of " +
                      std::to_string(n) + " clients");
  }
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

ModelUpdate local_train(const RecModel& model, const ParamVector& params,
                        std::span<const TrainSample> samples,
                        const Corpus& corpus, const FedConfig& cfg) {
  if (samples.empty()) {
    return ModelUpdate(std::vector<double>(params.size(), 0.0), params.layout,
                       0);
  }
  ParamVector local = params;
  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    const LossAndGrad lg = model.client_loss_and_grad(local, samples, corpus);
    for (std::size_t i = 0; i < local.values.size(); ++i) {
      local.values[i] -= cfg.lr * lg.grad[i];
    }
  }
  ModelUpdate update = diff_params(local, params);
  update.sample_size = static_cast<std::int64_t>(samples.size());
  return update;
}

ModelUpdate local_train(const RecModel& model, const ParamVector& params,
                        const ClientLog& client, const Corpus& corpus,
                        const FedConfig& cfg, std::mt19937_64& rng) {
  const auto samples =
      build_train_samples(client, model.config().negatives, rng);
  return local_train(model, params, samples, corpus, cfg);
}

std::vector<double> fedavg_aggregate(std::span<const ModelUpdate> updates) {
  if (updates.empty()) throw AggregationError("fedavg: no updates");
  const std::size_t dim = updates.front().delta.size();
  double total = 0.0;
  for (const ModelUpdate& u : updates) {
    if (u.delta.size() != dim) {
      throw StructuralError("fedavg: updates have different lengths");
    }
    total += static_cast<double>(u.sample_size);
  }
  if (total <= 0.0) throw AggregationError("fedavg: total sample size is zero");
  std::vector<double> out(dim, 0.0);
  for (const ModelUpdate& u : updates) {
    if (u.sample_size == 0) continue;
    const double w = static_cast<double>(u.sample_size) / total;
    for (std::size_t i = 0; i < dim; ++i) out[i] += w * u.delta[i];
  }
  return out;
}

void fedadam_step(ServerOptState& state, std::span<const double> aggregate,
                  ParamVector& params, const FedConfig& cfg) {
  if (aggregate.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw StructuralError("fedadam_step: shape mismatch");
  }
  if (!all_finite(aggregate)) {
    throw NumericError("fedadam_step: non-finite aggregate, round rejected");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = aggregate[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    params.values[i] +=
        cfg.server_lr * state.m[i] / (std::sqrt(state.v[i]) + cfg.tau);
  }
  ++state.round;
}

nlohmann::json RoundRecord::to_json() const {
  nlohmann::json j;
  j["round"] = round;
  j["clients"] = clients;
  j["sizes"] = sizes;
  j["agg_norm"] = agg_norm;
  j["defense_meta"] = defense_meta;
  if (!attack_meta.empty()) j["attack_meta"] = attack_meta;
  return j;
}

ParamVector initial_params(const RecModel& model, std::uint64_t seed) {
  auto rng = stream_rng(seed, Stream::kInit);
  return model.init_params(rng);
}

namespace {

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

TrainingResult run_rounds(const RecModel& model, const Corpus& corpus,
                          const FedConfig& cfg, AttackPlan* attack,
                          const DefenseRule& defense,
                          const TrainOptions& options,
                          std::vector<double>* benign_norms) {
  validate(cfg, corpus.clients.size());
  const std::size_t malicious = attack ? attack->malicious_count() : 0;
  if (malicious > corpus.clients.size()) {
    throw ConfigError("attack: malicious_count exceeds the number of clients");
  }

  TrainingResult result;
  ParamVector params = initial_params(model, cfg.seed);
  ServerOptState state(params.size());

  const auto maybe_eval = [&](std::size_t round) {
    if (options.eval_every == 0) return;
    if (round == 0 || round % options.eval_every == 0 || round == cfg.rounds) {
      result.evals.emplace_back(round, evaluate(params, model, corpus));
    }
  };
  maybe_eval(0);

  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    auto sample_rng = stream_rng(cfg.seed, Stream::kSampleClients, round);
    const std::vector<std::size_t> sampled =
        sample_clients(sample_rng, corpus.clients.size(), cfg.clients_per_round);
    std::vector<std::size_t> sampled_malicious;
    for (std::size_t c : sampled) {
      if (c < malicious) sampled_malicious.push_back(c);
    }

    RoundRecord record;
    record.round = round;
    record.clients = sampled;

    const RoundContext ctx{model, corpus, cfg, params, round, sampled,
                           sampled_malicious};
    if (attack != nullptr && !sampled_malicious.empty()) {
      attack->begin_round(ctx);
    }
    std::vector<ModelUpdate> updates;
    updates.reserve(sampled.size());
    for (std::size_t c : sampled) {
      if (c < malicious) {
        updates.push_back(attack->malicious_update(ctx, c));
      } else {
        auto rng = stream_rng(cfg.seed, Stream::kNegatives, round, c);
        updates.push_back(
            local_train(model, params, corpus.clients[c], corpus, cfg, rng));
        if (benign_norms != nullptr && updates.back().sample_size > 0) {
          benign_norms->push_back(l2_norm(updates.back().delta));
        }
      }
      record.sizes.push_back(updates.back().sample_size);
    }
    if (attack != nullptr && !sampled_malicious.empty()) {
      record.attack_meta = attack->round_meta();
      record.attack_meta["name"] = attack->name();
      record.attack_meta["malicious"] = sampled_malicious;
    }

    std::vector<ModelUpdate> kept;
    kept.reserve(updates.size());
    std::vector<std::size_t> kept_clients;
    for (std::size_t i = 0; i < updates.size(); ++i) {
      if (updates[i].sample_size > 0) {
        kept.push_back(std::move(updates[i]));
        kept_clients.push_back(sampled[i]);
      }
    }

    try {
      if (kept.empty()) throw AggregationError("all sample sizes are zero");
      Aggregate agg = apply_defense(defense, kept);
      record.defense_meta = std::move(agg.meta);
      record.defense_meta["submitters"] = kept_clients;
      record.agg_norm = l2_norm(agg.vector);
      fedadam_step(state, agg.vector, params, cfg);
    } catch (const AggregationError& e) {
      record.defense_meta["error"] = e.what();
    } catch (const NumericError& e) {
      record.defense_meta["error"] = e.what();
    } catch (const ConfigError& e) {
      // Per-round infeasibility, e.g. too few submissions for Krum.
      record.defense_meta["error"] = e.what();
    }
    result.records.push_back(std::move(record));

    if (std::find(options.checkpoint_rounds.begin(),
                  options.checkpoint_rounds.end(),
                  round) != options.checkpoint_rounds.end()) {
      result.checkpoints.emplace(round, params);
    }
    maybe_eval(round);
  }
  result.final_params = std::move(params);
  return result;
}

}  // namespace

double calibrate_norm_bound(const RecModel& model, const Corpus& corpus,
                            const FedConfig& cfg, std::size_t rounds) {
  if (rounds == 0) throw ConfigError("calibration needs at least one round");
  FedConfig short_cfg = cfg;
  short_cfg.rounds = rounds;
  std::vector<double> norms;
  run_rounds(model, corpus, short_cfg, nullptr, DefenseRule{}, TrainOptions{},
             &norms);
  if (norms.empty()) {
    throw AggregationError("calibration saw no benign updates");
  }
  return median_of(std::move(norms));
}

TrainingResult run_training(const RecModel& model, const Corpus& corpus,
                            const FedConfig& cfg, AttackPlan* attack,
                            const DefenseRule* defense,
                            const TrainOptions& options) {
  DefenseRule rule = defense ? *defense : DefenseRule{};
  validate(rule);
  std::optional<double> calibrated;
  if (rule.kind == DefenseKind::kNormBounding && !rule.rho) {
    calibrated = calibrate_norm_bound(model, corpus, cfg,
                                      options.calibration_rounds);
    rule.rho = calibrated;
  }
  TrainingResult result =
      run_rounds(model, corpus, cfg, attack, rule, options, nullptr);
  result.calibrated_rho = calibrated;
  return result;
}

}  // namespace fedrec
