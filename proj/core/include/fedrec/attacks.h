#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedrec/data.h"
#include "fedrec/fedcore.h"
#include "fedrec/model.h"
#include "fedrec/params.h"

namespace fedrec {

enum class AttackKind {
  kNone,
  kUaFedRec,
  kLabelFlip,
  kPop,
  kFedAttack,
  kGaussian,
  kLie,
  kFang,
};

std::string_view to_string(AttackKind kind);
// Throws ConfigError listing the valid names.
AttackKind parse_attack_kind(std::string_view name);

struct AttackConfig {
  AttackKind kind = AttackKind::kNone;
  double lambda1 = 3.0;
  double lambda2 = 3.0;
  double lambda3 = 3.0;
  std::size_t neighbor_refresh_k = 100;
  double known_news_ratio = 1.0;
  std::size_t malicious_count = 0;
  bool collude = true;
  // Relative std of per-client jitter when collude is false.
  double jitter = 0.01;
  // Step size applied to the news-similarity gradient; defaults to fed.lr.
  std::optional<double> eta;
  // Replaces the LIE quantile when set.
  std::optional<double> z_override;
  // Fang's locally simulated Multi-Krum.
  std::size_t fang_f = 1;
  std::optional<std::size_t> fang_c;
  bool fang_local_krum = true;
};

void validate(const AttackConfig& cfg);

// Elementwise mean / population std of benign updates, plus the same
// statistics over their news-segment norms and sample sizes.
struct BenignStats {
  std::vector<double> mu;
  std::vector<double> sigma;
  double norm_mu = 0.0;
  double norm_sigma = 0.0;
  double size_mu = 0.0;
  double size_sigma = 0.0;
};

BenignStats compute_benign_stats(std::span<const ModelUpdate> updates);

struct BenignEstimate {
  std::vector<ModelUpdate> updates;
  BenignStats stats;
};

// Trains honestly on every malicious client's local data at the current
// parameters. Clients without training samples are left out.
BenignEstimate estimate_benign_stats(const RecModel& model,
                                     const ParamVector& params,
                                     const Corpus& corpus,
                                     std::span<const std::size_t> malicious,
                                     const FedConfig& fed, std::size_t round);

// mu - lambda1 * sign(mu) * sigma, with sign(0) = 0.
std::vector<double> user_perturb(std::span<const double> mu_user,
                                 std::span<const double> sigma_user,
                                 double lambda1);

struct NeighborTable {
  // Known news in search order; nearest/farthest are positions in `known`.
  std::vector<NewsIndex> known;
  std::vector<std::size_t> nearest;
  std::vector<std::size_t> farthest;
  std::size_t built_at_round = 0;
};

// For each item: argmax / argmin of the dot product over the others, lowest
// position on ties. Needs at least two items.
NeighborTable select_news_neighbors(std::span<const NewsRepr> reprs,
                                    std::span<const NewsIndex> known,
                                    std::size_t round);

// Holds the table and rebuilds it only once `refresh_k` rounds have passed.
class NeighborCache {
 public:
  explicit NeighborCache(std::size_t refresh_k) : refresh_k_(refresh_k) {}

  const NeighborTable& get(const RecModel& model, const ParamVector& params,
                           const Corpus& corpus,
                           std::span<const NewsIndex> known,
                           std::size_t round);
  std::size_t rebuilds() const { return rebuilds_; }
  bool rebuilt_last() const { return rebuilt_last_; }

 private:
  std::size_t refresh_k_;
  std::optional<NeighborTable> table_;
  std::size_t rebuilds_ = 0;
  bool rebuilt_last_ = false;
};

struct NewsSimilarityLoss {
  double loss = 0.0;
  std::vector<double> grad;  // full parameter length, user segment zero
};

// sum_i |n_i - n_far(i)|^2 - |n_i - n_near(i)|^2 under the current
// parameters, with its gradient through the news encoder.
NewsSimilarityLoss news_similarity_loss(const RecModel& model,
                                        const ParamVector& params,
                                        const Corpus& corpus,
                                        const NeighborTable& table);

// -eta * grad of the news similarity loss, restricted to the news segment.
std::vector<double> news_similarity_grad(const RecModel& model,
                                         const ParamVector& params,
                                         const Corpus& corpus,
                                         const NeighborTable& table,
                                         double eta);

// g / max(1, |g| / (norm_mu + lambda2 * norm_sigma)); zero when the bound is
// not positive.
std::vector<double> clip_news_update(std::span<const double> g, double norm_mu,
                                     double norm_sigma, double lambda2);

// floor(size_mu + lambda3 * size_sigma), at least 1.
std::int64_t quantity_perturb(double size_mu, double size_sigma,
                              double lambda3);

ModelUpdate compose_ua_fedrec(const RecModel& model, const ParamVector& params,
                              const Corpus& corpus, const BenignStats& stats,
                              const NeighborTable& table,
                              const AttackConfig& cfg, double eta);

// Swaps the positive with the lowest-index negative in each sample.
std::vector<TrainSample> baseline_lf(std::vector<TrainSample> samples);

// Click counts over all training impressions, per news item.
std::vector<std::size_t> click_counts(const Corpus& corpus);
// ceil(10%) least-clicked news, ties by lowest index.
std::vector<NewsIndex> coldest_decile(std::span<const std::size_t> counts);

// Replaces every clicked item of the client's training impressions with a
// uniformly drawn cold news item.
ClientLog baseline_pop(const ClientLog& client,
                       std::span<const NewsIndex> cold, std::mt19937_64& rng);

// Replaces the negatives of each sample by the known news whose
// representations score highest against the client's user vector.
std::vector<TrainSample> baseline_fedattack(
    const RecModel& model, const ParamVector& params, const Corpus& corpus,
    std::vector<TrainSample> samples, std::span<const NewsIndex> known);

ModelUpdate baseline_gaussian(const BenignStats& stats,
                              const SegmentMap& layout, std::mt19937_64& rng);

// Phi^-1(1 - s / (n - m)) with s = floor(n/2 + 1) - m.
double lie_z(std::size_t n, std::size_t m);
ModelUpdate baseline_lie(const BenignStats& stats, const SegmentMap& layout,
                         double z);

struct FangResult {
  ModelUpdate update;
  double gamma = 0.0;
};

// Whether `candidate` is among the Multi-Krum selections over
// estimates + {candidate}.
bool survives_multi_krum(std::span<const ModelUpdate> estimates,
                         const ModelUpdate& candidate, std::size_t f,
                         std::optional<std::size_t> c);

// mu - gamma * sign(mu) * max(sigma, 1e-6), gamma the largest value in
// [0, 10] (20 bisection steps) surviving the local Multi-Krum.
FangResult baseline_fang(const BenignStats& stats,
                         std::span<const ModelUpdate> estimates,
                         const SegmentMap& layout, std::size_t f,
                         std::optional<std::size_t> c, bool local_krum = true);

// Seeded subsample of ceil(ratio * L) news ids, ascending.
std::vector<NewsIndex> known_news_subset(std::size_t n_news, double ratio,
                                         std::uint64_t seed);

std::unique_ptr<AttackPlan> make_attack(const AttackConfig& cfg,
                                        const Corpus& corpus,
                                        std::uint64_t seed);

}  // namespace fedrec
