#include "fedrec/attacks.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "fedrec/defenses.h"
#include "fedrec/error.h"

namespace fedrec {
namespace {

double signum(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void mean_std(std::span<const double> xs, double& mean, double& sd) {
  const double n = static_cast<double>(xs.size());
  mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / n);
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone: return "none";
    case AttackKind::kUaFedRec: return "ua_fedrec";
    case AttackKind::kLabelFlip: return "lf";
    case AttackKind::kPop: return "pop";
    case AttackKind::kFedAttack: return "fedattack";
    case AttackKind::kGaussian: return "gaussian";
    case AttackKind::kLie: return "lie";
    case AttackKind::kFang: return "fang";
  }
  return "unknown";
}

AttackKind parse_attack_kind(std::string_view name) {
  for (AttackKind k :
       {AttackKind::kNone, AttackKind::kUaFedRec, AttackKind::kLabelFlip,
        AttackKind::kPop, AttackKind::kFedAttack, AttackKind::kGaussian,
        AttackKind::kLie, AttackKind::kFang}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("attack.name: unknown attack '" + std::string(name) +
                    "' (valid: none, ua_fedrec, lf, pop, fedattack, gaussian, "
                    "lie, fang)");
}

void validate(const AttackConfig& cfg) {
  const auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("attack: " + msg);
  };
  require(cfg.lambda1 >= 0.0 && cfg.lambda1 <= 4.0, "lambda1 must be in [0, 4]");
  require(cfg.lambda2 >= 0.0, "lambda2 must be >= 0");
  require(cfg.lambda3 >= 0.0 && cfg.lambda3 <= 4.0, "lambda3 must be in [0, 4]");
  require(cfg.neighbor_refresh_k >= 1, "neighbor_refresh_k must be >= 1");
  require(cfg.known_news_ratio > 0.0 && cfg.known_news_ratio <= 1.0,
          "known_news_ratio must be in (0, 1]");
  require(cfg.kind == AttackKind::kNone || cfg.malicious_count >= 1,
          "malicious_count must be >= 1");
  require(!cfg.eta || *cfg.eta >= 0.0, "eta must be >= 0");
  require(cfg.jitter >= 0.0, "jitter must be >= 0");
}

BenignStats compute_benign_stats(std::span<const ModelUpdate> updates) {
  if (updates.empty()) {
    throw ConfigError("benign statistics need at least one malicious client "
                      "with local data");
  }
  const std::size_t dim = updates.front().delta.size();
  const double m = static_cast<double>(updates.size());
  BenignStats stats;
  stats.mu.assign(dim, 0.0);
  stats.sigma.assign(dim, 0.0);
  for (const ModelUpdate& u : updates) {
    if (u.delta.size() != dim) throw StructuralError("update length mismatch");
    for (std::size_t i = 0; i < dim; ++i) stats.mu[i] += u.delta[i];
  }
  for (double& x : stats.mu) x /= m;
  for (const ModelUpdate& u : updates) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = u.delta[i] - stats.mu[i];
      stats.sigma[i] += d * d;
    }
  }
  for (double& x : stats.sigma) x = std::sqrt(x / m);

  std::vector<double> norms, sizes;
  for (const ModelUpdate& u : updates) {
    norms.push_back(l2_norm(u.segment(kNewsSegment)));
    sizes.push_back(static_cast<double>(u.sample_size));
  }
  mean_std(norms, stats.norm_mu, stats.norm_sigma);
  mean_std(sizes, stats.size_mu, stats.size_sigma);
  return stats;
}

BenignEstimate estimate_benign_stats(const RecModel& model,
                                     const ParamVector& params,
                                     const Corpus& corpus,
                                     std::span<const std::size_t> malicious,
                                     const FedConfig& fed, std::size_t round) {
  if (malicious.empty()) throw ConfigError("attack: no malicious clients");
  BenignEstimate est;
  for (std::size_t c : malicious) {
    auto rng = stream_rng(fed.seed, Stream::kNegatives, round, c);
    ModelUpdate u = local_train(model, params, corpus.clients.at(c), corpus,
                                fed, rng);
    if (u.sample_size > 0) est.updates.push_back(std::move(u));
  }
  est.stats = compute_benign_stats(est.updates);
  return est;
}

std::vector<double> user_perturb(std::span<const double> mu_user,
                                 std::span<const double> sigma_user,
                                 double lambda1) {
  if (mu_user.size() != sigma_user.size()) {
    throw StructuralError("user_perturb: length mismatch");
  }
  std::vector<double> out(mu_user.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = mu_user[i] - lambda1 * signum(mu_user[i]) * sigma_user[i];
  }
  return out;
}

NeighborTable select_news_neighbors(std::span<const NewsRepr> reprs,
                                    std::span<const NewsIndex> known,
                                    std::size_t round) {
  const std::size_t n = reprs.size();
  if (n < 2) throw ConfigError("neighbor search needs at least two news items");
  if (known.size() != n) {
    throw StructuralError("neighbor search: ids and representations differ");
  }
  NeighborTable table;
  table.known.assign(known.begin(), known.end());
  table.nearest.resize(n);
  table.farthest.resize(n);
  table.built_at_round = round;
  for (std::size_t i = 0; i < n; ++i) {
    double best = -INFINITY;
    double worst = INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double s = dot(reprs[i], reprs[j]);
      if (s > best) {
        best = s;
        table.nearest[i] = j;
      }
      if (s < worst) {
        worst = s;
        table.farthest[i] = j;
      }
    }
  }
  return table;
}

const NeighborTable& NeighborCache::get(const RecModel& model,
                                        const ParamVector& params,
                                        const Corpus& corpus,
                                        std::span<const NewsIndex> known,
                                        std::size_t round) {
  rebuilt_last_ = false;
  if (!table_ || round < table_->built_at_round ||
      round - table_->built_at_round >= refresh_k_) {
    std::vector<NewsRepr> reprs;
    reprs.reserve(known.size());
    for (NewsIndex idx : known) {
      reprs.push_back(model.encode_news(
          params, corpus.news.at(static_cast<std::size_t>(idx)).title_tokens));
    }
    table_ = select_news_neighbors(reprs, known, round);
    ++rebuilds_;
    rebuilt_last_ = true;
  }
  return *table_;
}

NewsSimilarityLoss news_similarity_loss(const RecModel& model,
                                        const ParamVector& params,
                                        const Corpus& corpus,
                                        const NeighborTable& table) {
  const std::size_t n = table.known.size();
  const std::size_t d = model.config().embed_dim;
  std::vector<NewsRepr> reprs;
  reprs.reserve(n);
  for (NewsIndex idx : table.known) {
    reprs.push_back(model.encode_news(
        params, corpus.news.at(static_cast<std::size_t>(idx)).title_tokens));
  }
  NewsSimilarityLoss out;
  std::vector<std::vector<double>> d_repr(n, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t far = table.farthest[i];
    const std::size_t near = table.nearest[i];
    for (std::size_t c = 0; c < d; ++c) {
      const double df = reprs[i][c] - reprs[far][c];
      const double dn = reprs[i][c] - reprs[near][c];
      out.loss += df * df - dn * dn;
      d_repr[i][c] += 2.0 * df - 2.0 * dn;
      d_repr[far][c] -= 2.0 * df;
      d_repr[near][c] += 2.0 * dn;
    }
  }
  out.grad.assign(params.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::all_of(d_repr[i].begin(), d_repr[i].end(),
                    [](double v) { return v == 0.0; })) {
      continue;
    }
    model.news_backward(
        params,
        corpus.news.at(static_cast<std::size_t>(table.known[i])).title_tokens,
        d_repr[i], out.grad);
  }
  return out;
}

std::vector<double> news_similarity_grad(const RecModel& model,
                                         const ParamVector& params,
                                         const Corpus& corpus,
                                         const NeighborTable& table,
                                         double eta) {
  NewsSimilarityLoss ls = news_similarity_loss(model, params, corpus, table);
  std::vector<double> step(params.size(), 0.0);
  const Segment& news = params.layout.find(kNewsSegment);
  for (std::size_t i = news.offset; i < news.offset + news.length; ++i) {
    step[i] = -eta * ls.grad[i];
  }
  return step;
}

std::vector<double> clip_news_update(std::span<const double> g, double norm_mu,
                                     double norm_sigma, double lambda2) {
  const double bound = norm_mu + lambda2 * norm_sigma;
  if (!(bound > 0.0)) return std::vector<double>(g.size(), 0.0);
  const double scale = std::max(1.0, l2_norm(g) / bound);
  std::vector<double> out(g.begin(), g.end());
  for (double& v : out) v /= scale;
  return out;
}

std::int64_t quantity_perturb(double size_mu, double size_sigma,
                              double lambda3) {
  const double raw = std::floor(size_mu + lambda3 * size_sigma);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(raw));
}

ModelUpdate compose_ua_fedrec(const RecModel& model, const ParamVector& params,
                              const Corpus& corpus, const BenignStats& stats,
                              const NeighborTable& table,
                              const AttackConfig& cfg, double eta) {
  ModelUpdate update(std::vector<double>(params.size(), 0.0), params.layout, 0);

  const std::vector<double> g_n =
      news_similarity_grad(model, params, corpus, table, eta);
  const auto news_raw = segment_slice(std::span<const double>(g_n),
                                      params.layout, kNewsSegment);
  const std::vector<double> news = clip_news_update(
      news_raw, stats.norm_mu, stats.norm_sigma, cfg.lambda2);
  std::copy(news.begin(), news.end(), update.segment(kNewsSegment).begin());

  const auto mu_u = segment_slice(std::span<const double>(stats.mu),
                                  params.layout, kUserSegment);
  const auto sigma_u = segment_slice(std::span<const double>(stats.sigma),
                                     params.layout, kUserSegment);
  const std::vector<double> user = user_perturb(mu_u, sigma_u, cfg.lambda1);
  std::copy(user.begin(), user.end(), update.segment(kUserSegment).begin());

  update.sample_size =
      quantity_perturb(stats.size_mu, stats.size_sigma, cfg.lambda3);
  return update;
}

std::vector<TrainSample> baseline_lf(std::vector<TrainSample> samples) {
  for (TrainSample& s : samples) {
    check_sample(s);
    const std::size_t pos = s.positive_index();
    const auto neg = std::find(s.labels.begin(), s.labels.end(), 0);
    if (neg == s.labels.end()) continue;
    s.labels[pos] = 0;
    *neg = 1;
  }
  return samples;
}

std::vector<std::size_t> click_counts(const Corpus& corpus) {
  std::vector<std::size_t> counts(corpus.news.size(), 0);
  for (const ClientLog& c : corpus.clients) {
    for (const Impression& imp : c.train_impressions) {
      for (std::size_t s = 0; s < imp.shown.size(); ++s) {
        if (imp.clicked[s]) ++counts[static_cast<std::size_t>(imp.shown[s])];
      }
    }
  }
  return counts;
}

std::vector<NewsIndex> coldest_decile(std::span<const std::size_t> counts) {
  if (counts.empty()) throw DataError("no news to rank by popularity");
  std::vector<NewsIndex> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](NewsIndex a, NewsIndex b) {
    return counts[static_cast<std::size_t>(a)] <
           counts[static_cast<std::size_t>(b)];
  });
  const auto size = static_cast<std::size_t>(
      std::ceil(0.1 * static_cast<double>(counts.size())));
  order.resize(size);
  return order;
}

ClientLog baseline_pop(const ClientLog& client,
                       std::span<const NewsIndex> cold, std::mt19937_64& rng) {
  if (cold.empty()) throw ConfigError("pop attack: empty cold set");
  ClientLog out = client;
  for (Impression& imp : out.train_impressions) {
    for (std::size_t s = 0; s < imp.shown.size(); ++s) {
      if (imp.clicked[s]) imp.shown[s] = cold[uniform_index(rng, cold.size())];
    }
  }
  return out;
}

std::vector<TrainSample> baseline_fedattack(
    const RecModel& model, const ParamVector& params, const Corpus& corpus,
    std::vector<TrainSample> samples, std::span<const NewsIndex> known) {
  const std::vector<NewsRepr> reprs = model.encode_all_news(params, corpus);
  for (TrainSample& s : samples) {
    check_sample(s);
    const std::size_t pos = s.positive_index();
    const NewsIndex positive = s.candidates[pos];
    const std::size_t needed = s.candidates.size() - 1;
    const UserRepr user = model.encode_history(params, reprs, s.history);

    std::vector<NewsIndex> pool;
    for (NewsIndex idx : known) {
      if (idx != positive) pool.push_back(idx);
    }
    if (pool.size() < needed) {
      throw ConfigError("fedattack: attacker knows fewer news than negatives");
    }
    std::vector<double> score(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      score[i] = dot(user, reprs[static_cast<std::size_t>(pool[i])]);
    }
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return score[a] > score[b];
    });
    std::size_t next = 0;
    for (std::size_t slot = 0; slot < s.candidates.size(); ++slot) {
      if (slot == pos) continue;
      s.candidates[slot] = pool[order[next++]];
    }
  }
  return samples;
}

ModelUpdate baseline_gaussian(const BenignStats& stats,
                              const SegmentMap& layout, std::mt19937_64& rng) {
  std::vector<double> delta(stats.mu.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < delta.size(); ++i) {
    delta[i] = stats.mu[i] + stats.sigma[i] * normal(rng);
  }
  return ModelUpdate(std::move(delta), layout,
                     quantity_perturb(stats.size_mu, 0.0, 0.0));
}

double lie_z(std::size_t n, std::size_t m) {
  if (m >= n) throw ConfigError("lie: need more sampled clients than attackers");
  const double s = std::floor(static_cast<double>(n) / 2.0 + 1.0) -
                   static_cast<double>(m);
  double p = 1.0 - s / static_cast<double>(n - m);
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

ModelUpdate baseline_lie(const BenignStats& stats, const SegmentMap& layout,
                         double z) {
  std::vector<double> delta(stats.mu.size());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    delta[i] = stats.mu[i] - z * stats.sigma[i];
  }
  return ModelUpdate(std::move(delta), layout,
                     quantity_perturb(stats.size_mu, 0.0, 0.0));
}

bool survives_multi_krum(std::span<const ModelUpdate> estimates,
                         const ModelUpdate& candidate, std::size_t f,
                         std::optional<std::size_t> c) {
  const std::size_t n = estimates.size() + 1;
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    for (std::size_t j = i + 1; j < estimates.size(); ++j) {
      dist[i][j] = dist[j][i] =
          squared_distance(estimates[i].delta, estimates[j].delta);
    }
    dist[i][n - 1] = dist[n - 1][i] =
        squared_distance(estimates[i].delta, candidate.delta);
  }
  const std::size_t count = c.value_or(n - f - 2);
  const auto selected = multi_krum_select(dist, f, count);
  return std::find(selected.begin(), selected.end(), n - 1) != selected.end();
}

FangResult baseline_fang(const BenignStats& stats,
                         std::span<const ModelUpdate> estimates,
                         const SegmentMap& layout, std::size_t f,
                         std::optional<std::size_t> c, bool local_krum) {
  constexpr double kEps = 1e-6;
  constexpr double kGammaMax = 10.0;
  const std::size_t dim = stats.mu.size();
  std::vector<double> direction(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    direction[i] = signum(stats.mu[i]) * std::max(stats.sigma[i], kEps);
  }
  const std::int64_t size = quantity_perturb(stats.size_mu, 0.0, 0.0);
  const auto make = [&](double gamma) {
    std::vector<double> delta(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      delta[i] = stats.mu[i] - gamma * direction[i];
    }
    return ModelUpdate(std::move(delta), layout, size);
  };

  const std::size_t n_local = estimates.size() + 1;
  const std::size_t count = c.value_or(n_local >= f + 3 ? n_local - f - 2 : 1);
  const bool feasible = local_krum && n_local >= f + 3 && count >= 1 &&
                        count <= n_local - f - 2;
  if (!feasible) return {make(kGammaMax), kGammaMax};

  const auto survives = [&](double gamma) {
    return survives_multi_krum(estimates, make(gamma), f, count);
  };
  if (survives(kGammaMax)) return {make(kGammaMax), kGammaMax};
  if (!survives(0.0)) return {make(0.0), 0.0};
  double lo = 0.0;
  double hi = kGammaMax;
  for (int it = 0; it < 20; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (survives(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {make(lo), lo};
}

std::vector<NewsIndex> known_news_subset(std::size_t n_news, double ratio,
                                         std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw ConfigError("known_news_ratio must be in (0, 1]");
  }
  std::vector<NewsIndex> ids(n_news);
  std::iota(ids.begin(), ids.end(), 0);
  const auto count = std::min(
      n_news,
      static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n_news))));
  if (count < n_news) {
    auto rng = stream_rng(seed, Stream::kKnownNews);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(count);
    std::sort(ids.begin(), ids.end());
  }
  return ids;
}

namespace {

class ConfiguredAttack final : public AttackPlan {
 public:
  ConfiguredAttack(AttackConfig cfg, const Corpus& corpus, std::uint64_t seed)
      : cfg_(std::move(cfg)),
        seed_(seed),
        cache_(cfg_.neighbor_refresh_k),
        known_(known_news_subset(corpus.news.size(), cfg_.known_news_ratio,
                                 seed)) {
    if (cfg_.kind == AttackKind::kPop) cold_ = coldest_decile(click_counts(corpus));
  }

  std::string name() const override { return std::string(to_string(cfg_.kind)); }
  std::size_t malicious_count() const override { return cfg_.malicious_count; }

  void begin_round(const RoundContext& ctx) override {
    meta_ = nlohmann::json::object();
    shared_.reset();
    if (!is_model_poisoning()) return;

    std::vector<std::size_t> all(cfg_.malicious_count);
    std::iota(all.begin(), all.end(), 0);
    BenignEstimate est = estimate_benign_stats(ctx.model, ctx.params, ctx.corpus,
                                               all, ctx.fed, ctx.round);
    meta_["size_mu"] = est.stats.size_mu;
    meta_["size_sigma"] = est.stats.size_sigma;
    meta_["norm_mu"] = est.stats.norm_mu;
    meta_["norm_sigma"] = est.stats.norm_sigma;

    switch (cfg_.kind) {
      case AttackKind::kUaFedRec: {
        const NeighborTable& table = cache_.get(ctx.model, ctx.params,
                                                ctx.corpus, known_, ctx.round);
        shared_ = compose_ua_fedrec(ctx.model, ctx.params, ctx.corpus,
                                    est.stats, table, cfg_,
                                    cfg_.eta.value_or(ctx.fed.lr));
        meta_["table_rebuilt"] = cache_.rebuilt_last();
        meta_["news_bound"] =
            est.stats.norm_mu + cfg_.lambda2 * est.stats.norm_sigma;
        meta_["news_norm"] = l2_norm(shared_->segment(kNewsSegment));
        break;
      }
      case AttackKind::kGaussian: {
        auto rng = stream_rng(seed_, Stream::kAttack, ctx.round);
        shared_ = baseline_gaussian(est.stats, ctx.params.layout, rng);
        break;
      }
      case AttackKind::kLie: {
        const double z = cfg_.z_override.value_or(
            lie_z(ctx.sampled.size(), ctx.sampled_malicious.size()));
        shared_ = baseline_lie(est.stats, ctx.params.layout, z);
        meta_["z"] = z;
        break;
      }
      case AttackKind::kFang: {
        FangResult res =
            baseline_fang(est.stats, est.updates, ctx.params.layout,
                          cfg_.fang_f, cfg_.fang_c, cfg_.fang_local_krum);
        shared_ = std::move(res.update);
        meta_["gamma"] = res.gamma;
        break;
      }
      default:
        break;
    }
    sigma_ = std::move(est.stats.sigma);
    meta_["reported_size"] = shared_->sample_size;
  }

  ModelUpdate malicious_update(const RoundContext& ctx,
                               std::size_t client) override {
    if (shared_) {
      if (cfg_.collude || cfg_.jitter == 0.0) return *shared_;
      ModelUpdate jittered = *shared_;
      auto rng = stream_rng(seed_, Stream::kAttack, ctx.round, client + 1);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (std::size_t i = 0; i < jittered.delta.size(); ++i) {
        jittered.delta[i] += cfg_.jitter * sigma_[i] * normal(rng);
      }
      return jittered;
    }
    const ClientLog& log = ctx.corpus.clients.at(client);
    auto rng = stream_rng(ctx.fed.seed, Stream::kNegatives, ctx.round, client);
    const std::size_t p = ctx.model.config().negatives;
    switch (cfg_.kind) {
      case AttackKind::kLabelFlip: {
        auto samples = baseline_lf(build_train_samples(log, p, rng));
        return local_train(ctx.model, ctx.params, samples, ctx.corpus, ctx.fed);
      }
      case AttackKind::kPop: {
        auto pop_rng = stream_rng(seed_, Stream::kAttack, ctx.round, client + 1);
        const ClientLog poisoned = baseline_pop(log, cold_, pop_rng);
        return local_train(ctx.model, ctx.params, poisoned, ctx.corpus, ctx.fed,
                           rng);
      }
      case AttackKind::kFedAttack: {
        auto samples =
            baseline_fedattack(ctx.model, ctx.params, ctx.corpus,
                               build_train_samples(log, p, rng), known_);
        return local_train(ctx.model, ctx.params, samples, ctx.corpus, ctx.fed);
      }
      default:
        // kNone: malicious clients behave honestly.
        return local_train(ctx.model, ctx.params, log, ctx.corpus, ctx.fed,
                           rng);
    }
  }

  nlohmann::json round_meta() const override { return meta_; }

 private:
  bool is_model_poisoning() const {
    return cfg_.kind == AttackKind::kUaFedRec ||
           cfg_.kind == AttackKind::kGaussian || cfg_.kind == AttackKind::kLie ||
           cfg_.kind == AttackKind::kFang;
  }

  AttackConfig cfg_;
  std::uint64_t seed_;
  NeighborCache cache_;
  std::vector<NewsIndex> known_;
  std::vector<NewsIndex> cold_;
  std::optional<ModelUpdate> shared_;
  std::vector<double> sigma_;
  nlohmann::json meta_ = nlohmann::json::object();
};

}  // namespace

std::unique_ptr<AttackPlan> make_attack(const AttackConfig& cfg,
                                        const Corpus& corpus,
                                        std::uint64_t seed) {
  validate(cfg);
  if (cfg.kind == AttackKind::kNone) return nullptr;
  if (cfg.malicious_count > corpus.clients.size()) {
    throw ConfigError("attack: malicious_count exceeds the number of clients");
  }
  return std::make_unique<ConfiguredAttack>(cfg, corpus, seed);
}

}  // namespace fedrec
