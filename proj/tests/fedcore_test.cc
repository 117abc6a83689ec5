#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "fedrec/error.h"
#include "fedrec/fedcore.h"
#include "fedrec/model.h"
#include "test_util.h"

namespace fedrec {
namespace {

using testing::make_update;
using testing::random_vector;
using testing::tiny_corpus;

std::unique_ptr<RecModel> tiny_model(std::size_t vocab) {
  ModelConfig mc;
  mc.vocab_size = vocab;
  mc.embed_dim = 4;
  mc.max_title_len = 6;
  return make_model(mc);
}

FedConfig small_fed(std::size_t k, std::size_t rounds) {
  FedConfig f;
  f.clients_per_round = k;
  f.rounds = rounds;
  f.lr = 0.05;
  f.server_lr = 0.01;
  f.seed = 42;
  return f;
}

TEST(SampleClientsTest, Examples) {
  std::mt19937_64 rng(1);
  EXPECT_EQ(sample_clients(rng, 3, 3), (std::vector<std::size_t>{0, 1, 2}));
  std::mt19937_64 a(7), b(7);
  const auto first = sample_clients(a, 1000, 50);
  EXPECT_EQ(first, sample_clients(b, 1000, 50));
  EXPECT_EQ(first.size(), 50u);
  EXPECT_TRUE(std::is_sorted(first.begin(), first.end()));
  EXPECT_EQ(std::adjacent_find(first.begin(), first.end()), first.end());
  EXPECT_THROW(sample_clients(rng, 3, 4), ConfigError);
}

TEST(SampleClientsTest, UniformInclusionFrequency) {
  std::mt19937_64 rng(2);
  std::vector<double> hits(10, 0.0);
  const int draws = 100000;
  for (int d = 0; d < draws; ++d) {
    for (std::size_t c : sample_clients(rng, 10, 3)) hits[c] += 1;
  }
  const double sigma = std::sqrt(0.3 * 0.7 / draws);
  for (double h : hits) EXPECT_NEAR(h / draws, 0.3, 3 * sigma);
}

TEST(StreamRngTest, StreamsAreIndependentAndReproducible) {
  auto a = stream_rng(5, Stream::kNegatives, 3, 9);
  auto b = stream_rng(5, Stream::kNegatives, 3, 9);
  auto c = stream_rng(5, Stream::kNegatives, 3, 10);
  auto d = stream_rng(5, Stream::kAttack, 3, 9);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}

class LocalTrainTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(3);
    corpus_ = tiny_corpus(rng, 12, 10, 4, 2);
    model_ = tiny_model(10);
    std::mt19937_64 init(4);
    params_ = model_->init_params(init);
    std::mt19937_64 srng(5);
    samples_ = build_train_samples(corpus_.clients[0], 4, srng);
  }
  Corpus corpus_;
  std::unique_ptr<RecModel> model_;
  ParamVector params_;
  std::vector<TrainSample> samples_;
};

TEST_F(LocalTrainTest, SingleStepIsNegativeScaledGradient) {
  FedConfig cfg = small_fed(1, 1);
  const ModelUpdate u = local_train(*model_, params_, samples_, corpus_, cfg);
  const LossAndGrad lg = model_->client_loss_and_grad(params_, samples_, corpus_);
  for (std::size_t i = 0; i < u.delta.size(); ++i) {
    EXPECT_NEAR(u.delta[i], -cfg.lr * lg.grad[i], 1e-12);
  }
  EXPECT_EQ(u.sample_size, static_cast<std::int64_t>(samples_.size()));
}

TEST_F(LocalTrainTest, ZeroLearningRateGivesZeroDelta) {
  FedConfig cfg = small_fed(1, 1);
  cfg.lr = 0.0;
  const ModelUpdate u = local_train(*model_, params_, samples_, corpus_, cfg);
  for (double v : u.delta) EXPECT_EQ(v, 0.0);
}

TEST_F(LocalTrainTest, SampleSizeCountsPositives) {
  ClientLog log = corpus_.clients[0];
  log.train_impressions[0].clicked = {1, 1, 0, 1, 0};
  std::mt19937_64 rng(6);
  EXPECT_EQ(local_train(*model_, params_, log, corpus_, small_fed(1, 1), rng)
                .sample_size,
            3);
  log.train_impressions.clear();
  const ModelUpdate empty =
      local_train(*model_, params_, log, corpus_, small_fed(1, 1), rng);
  EXPECT_EQ(empty.sample_size, 0);
  EXPECT_EQ(l2_norm(empty.delta), 0.0);
}

TEST(FedAvgTest, Examples) {
  const std::vector<ModelUpdate> a{make_update({1, 0}, 1), make_update({3, 0}, 3)};
  EXPECT_EQ(fedavg_aggregate(a)[0], 2.5);
  const std::vector<ModelUpdate> b{make_update({1, 2}, 4), make_update({3, 6}, 4)};
  EXPECT_EQ(fedavg_aggregate(b), (std::vector<double>{2, 4}));
  const std::vector<ModelUpdate> zero{make_update({1, 2}, 0)};
  EXPECT_THROW(fedavg_aggregate(zero), AggregationError);
}

TEST(FedAvgTest, MatchesLoopOracleAndIgnoresZeroSizes) {
  std::mt19937_64 rng(7);
  std::vector<ModelUpdate> us;
  for (int i = 0; i < 10; ++i) {
    us.push_back(make_update(random_vector(rng, 12), i % 4));
  }
  double total = 0.0;
  for (const auto& u : us) total += static_cast<double>(u.sample_size);
  const auto got = fedavg_aggregate(us);
  for (std::size_t i = 0; i < 12; ++i) {
    double s = 0.0;
    for (const auto& u : us) s += u.sample_size * u.delta[i];
    EXPECT_NEAR(got[i], s / total, 1e-12);
  }
  // Scaling every size by 2 keeps each weight identical.
  for (auto& u : us) u.sample_size *= 2;
  EXPECT_EQ(fedavg_aggregate(us), got);
}

TEST(FedAdamTest, ZeroAggregateKeepsParams) {
  ParamVector p({0.5, -1.0}, testing::two_segments(1, 1));
  ServerOptState st(2);
  fedadam_step(st, std::vector<double>{0, 0}, p, FedConfig{});
  EXPECT_EQ(p.values, (std::vector<double>{0.5, -1.0}));
}

TEST(FedAdamTest, FirstStepHandValue) {
  ParamVector p({0.0, 0.0}, testing::two_segments(1, 1));
  ServerOptState st(2);
  fedadam_step(st, std::vector<double>{1.0, 0.0}, p, FedConfig{});
  EXPECT_NEAR(st.m[0], 0.1, 1e-15);
  EXPECT_NEAR(st.v[0], 0.01, 1e-15);
  EXPECT_NEAR(p.values[0], 0.1 / (0.1 + 1e-8), 1e-15);
  EXPECT_NEAR(p.values[0], 0.99999990, 1e-8);
}

TEST(FedAdamTest, MatchesScalarRecurrence) {
  FedConfig cfg;
  cfg.server_lr = 0.3;
  ParamVector p({1.0, 2.0}, testing::two_segments(1, 1));
  ServerOptState st(2);
  const std::vector<double> g{0.7, -0.2};
  fedadam_step(st, g, p, cfg);
  fedadam_step(st, g, p, cfg);
  for (std::size_t i = 0; i < 2; ++i) {
    double m = 0, v = 0, theta = i == 0 ? 1.0 : 2.0;
    for (int step = 0; step < 2; ++step) {
      m = 0.9 * m + 0.1 * g[i];
      v = 0.99 * v + 0.01 * g[i] * g[i];
      theta += 0.3 * m / (std::sqrt(v) + 1e-8);
    }
    EXPECT_NEAR(p.values[i], theta, 1e-12);
  }
  EXPECT_EQ(st.round, 2u);
}

TEST(FedAdamTest, NonFiniteAggregateLeavesStateUntouched) {
  ParamVector p({1.0, 2.0}, testing::two_segments(1, 1));
  ServerOptState st(2);
  fedadam_step(st, std::vector<double>{0.5, 0.5}, p, FedConfig{});
  const ParamVector p0 = p;
  const ServerOptState s0 = st;
  EXPECT_THROW(fedadam_step(st, std::vector<double>{std::nan(""), 0.0}, p, FedConfig{}),
               NumericError);
  EXPECT_EQ(p.values, p0.values);
  EXPECT_EQ(st.m, s0.m);
  EXPECT_EQ(st.v, s0.v);
  EXPECT_EQ(st.round, s0.round);
}

TEST(FedConfigTest, Validation) {
  FedConfig cfg = small_fed(5, 1);
  EXPECT_NO_THROW(validate(cfg, 5));
  EXPECT_THROW(validate(cfg, 4), ConfigError);
  cfg.lr = 0;
  EXPECT_THROW(validate(cfg, 5), ConfigError);
  cfg = small_fed(5, 1);
  cfg.beta2 = 1.0;
  EXPECT_THROW(validate(cfg, 5), ConfigError);
}

TEST(RunTrainingTest, ParamsChangeOnlyWithSamples) {
  std::mt19937_64 rng(8);
  Corpus corpus = tiny_corpus(rng, 12, 10, 4, 2);
  const auto model = tiny_model(10);
  const ParamVector init = initial_params(*model, 42);

  TrainingResult r = run_training(*model, corpus, small_fed(2, 1), nullptr, nullptr);
  EXPECT_NE(r.final_params.values, init.values);

  for (ClientLog& c : corpus.clients) c.train_impressions.clear();
  r = run_training(*model, corpus, small_fed(2, 1), nullptr, nullptr);
  EXPECT_EQ(r.final_params.values, init.values);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_TRUE(r.records[0].defense_meta.contains("error"));
}

TEST(RunTrainingTest, DeterministicAndReplayable) {
  std::mt19937_64 rng(9);
  const Corpus corpus = tiny_corpus(rng, 30, 10, 4, 20);
  const auto model = tiny_model(10);
  TrainOptions opts;
  opts.eval_every = 2;
  const FedConfig cfg = small_fed(5, 6);
  const TrainingResult a = run_training(*model, corpus, cfg, nullptr, nullptr, opts);
  const TrainingResult b = run_training(*model, corpus, cfg, nullptr, nullptr, opts);
  EXPECT_EQ(a.final_params.values, b.final_params.values);
  ASSERT_EQ(a.evals.size(), 4u);  // rounds 0, 2, 4, 6
  for (std::size_t i = 0; i < a.evals.size(); ++i) {
    EXPECT_EQ(a.evals[i].first, b.evals[i].first);
    EXPECT_EQ(a.evals[i].second, b.evals[i].second);
  }
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].to_json(), b.records[i].to_json());
    auto replay = stream_rng(cfg.seed, Stream::kSampleClients, a.records[i].round);
    EXPECT_EQ(sample_clients(replay, 20, 5), a.records[i].clients);
  }
}

TEST(RunTrainingTest, SingleClientEqualsCentralizedTraining) {
  std::mt19937_64 rng(10);
  Corpus corpus = tiny_corpus(rng, 12, 10, 4, 1);
  // Give the one client several impressions so the batch is non-trivial.
  for (int i = 0; i < 3; ++i) {
    corpus.clients[0].train_impressions.push_back(
        corpus.clients[0].train_impressions[0]);
  }
  const auto model = tiny_model(10);
  const FedConfig cfg = small_fed(1, 10);
  const TrainingResult r = run_training(*model, corpus, cfg, nullptr, nullptr);

  ParamVector theta = initial_params(*model, cfg.seed);
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);
  for (std::size_t round = 1; round <= 10; ++round) {
    auto srng = stream_rng(cfg.seed, Stream::kNegatives, round, 0);
    const auto samples = build_train_samples(corpus.clients[0], 4, srng);
    const LossAndGrad lg = model->client_loss_and_grad(theta, samples, corpus);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = (theta.values[i] - cfg.lr * lg.grad[i]) - theta.values[i];
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g * g;
      theta.values[i] += cfg.server_lr * m[i] / (std::sqrt(v[i]) + cfg.tau);
    }
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    EXPECT_NEAR(r.final_params.values[i], theta.values[i], 1e-12);
  }
}

TEST(RunTrainingTest, CheckpointsAndRecordJson) {
  std::mt19937_64 rng(11);
  const Corpus corpus = tiny_corpus(rng, 30, 10, 4, 10);
  const auto model = tiny_model(10);
  TrainOptions opts;
  opts.checkpoint_rounds = {2, 3};
  const TrainingResult r =
      run_training(*model, corpus, small_fed(4, 3), nullptr, nullptr, opts);
  ASSERT_EQ(r.checkpoints.size(), 2u);
  EXPECT_EQ(r.checkpoints.at(3).values, r.final_params.values);
  const nlohmann::json j = r.records[0].to_json();
  for (const char* key : {"round", "clients", "sizes", "agg_norm", "defense_meta"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_FALSE(j.contains("attack_meta"));
}

TEST(RunTrainingTest, NormBoundingCalibratesRho) {
  std::mt19937_64 rng(12);
  const Corpus corpus = tiny_corpus(rng, 30, 10, 4, 10);
  const auto model = tiny_model(10);
  const DefenseRule rule{DefenseKind::kNormBounding};
  TrainOptions opts;
  opts.calibration_rounds = 3;
  const FedConfig cfg = small_fed(4, 3);
  const TrainingResult r = run_training(*model, corpus, cfg, nullptr, &rule, opts);
  ASSERT_TRUE(r.calibrated_rho.has_value());
  EXPECT_DOUBLE_EQ(*r.calibrated_rho, calibrate_norm_bound(*model, corpus, cfg, 3));
  EXPECT_EQ(r.records[0].defense_meta["rho"].get<double>(), *r.calibrated_rho);
}

}  // namespace
}  // namespace fedrec
