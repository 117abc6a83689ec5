#pragma once

#include <memory>
#include <random>
#include <span>
#include <vector>

#include "fedrec/data.h"
#include "fedrec/params.h"

namespace fedrec {

using NewsRepr = std::vector<double>;
using UserRepr = std::vector<double>;

struct ModelConfig {
  std::size_t vocab_size = 1;
  std::size_t embed_dim = 32;
  // 0 means "same as embed_dim".
  std::size_t attn_hidden = 0;
  std::size_t max_title_len = kDefaultMaxTitleLen;
  std::size_t max_history_len = 50;
  std::size_t negatives = 4;
  // Accepted for compatibility; the reference model trains without dropout.
  double dropout = 0.0;

  std::size_t hidden() const { return attn_hidden == 0 ? embed_dim : attn_hidden; }
};

void validate(const ModelConfig& cfg);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Softmax cross-entropy over one positive and P negatives.
struct SoftmaxLoss {
  double loss = 0.0;
  std::vector<double> probs;
};

SoftmaxLoss ns_softmax_loss(std::span<const double> scores,
                            std::span<const int> labels);

std::vector<double> click_scores(std::span<const double> user,
                                 std::span<const NewsRepr> candidates);

// A differentiable news recommender split into a news encoder (parameters in
// the "news_model" segment) and a user encoder ("user_model" segment), scored
// by dot product.
class RecModel {
 public:
  virtual ~RecModel() = default;

  virtual const ModelConfig& config() const = 0;
  virtual const SegmentMap& layout() const = 0;
  virtual ParamVector init_params(std::mt19937_64& rng) const = 0;

  virtual NewsRepr encode_news(const ParamVector& params,
                               std::span<const TokenId> title) const = 0;
  // Empty history encodes to the zero vector.
  virtual UserRepr encode_user(const ParamVector& params,
                               std::span<const NewsRepr> history) const = 0;

  // Mean negative-sampling loss over `samples` and its gradient with respect
  // to every parameter.
  virtual LossAndGrad client_loss_and_grad(
      const ParamVector& params, std::span<const TrainSample> samples,
      const Corpus& corpus) const = 0;

  // Accumulates (d news_repr / d params)^T * d_repr into `grad`, which spans
  // the full parameter vector.
  virtual void news_backward(const ParamVector& params,
                             std::span<const TokenId> title,
                             std::span<const double> d_repr,
                             std::span<double> grad) const = 0;

  std::vector<NewsRepr> encode_all_news(const ParamVector& params,
                                        const Corpus& corpus) const;
  // Encodes the most recent max_history_len items of `history`.
  UserRepr encode_history(const ParamVector& params,
                          std::span<const NewsRepr> news_reprs,
                          std::span<const NewsIndex> history) const;
};

// Reference model: additive-attention pooling over word embeddings for news,
// additive-attention pooling over clicked-news vectors for users.
class AttnRec final : public RecModel {
 public:
  explicit AttnRec(ModelConfig cfg);

  const ModelConfig& config() const override { return cfg_; }
  const SegmentMap& layout() const override { return layout_; }
  ParamVector init_params(std::mt19937_64& rng) const override;

  NewsRepr encode_news(const ParamVector& params,
                       std::span<const TokenId> title) const override;
  UserRepr encode_user(const ParamVector& params,
                       std::span<const NewsRepr> history) const override;
  LossAndGrad client_loss_and_grad(const ParamVector& params,
                                   std::span<const TrainSample> samples,
                                   const Corpus& corpus) const override;
  void news_backward(const ParamVector& params, std::span<const TokenId> title,
                     std::span<const double> d_repr,
                     std::span<double> grad) const override;

  // Offsets of the individual tensors inside the flat vector.
  struct Offsets {
    std::size_t embedding, news_w, news_b, news_q;
    std::size_t user_w, user_b, user_q;
  };
  const Offsets& offsets() const { return offsets_; }

 private:
  void check_title(std::span<const TokenId> title) const;

  ModelConfig cfg_;
  SegmentMap layout_;
  Offsets offsets_{};
};

std::unique_ptr<RecModel> make_model(const ModelConfig& cfg);

}  // namespace fedrec
