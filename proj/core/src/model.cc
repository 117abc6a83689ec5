#include "fedrec/model.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "attention.h"
#include "fedrec/error.h"

namespace fedrec {

using internal::AttentionCache;
using internal::AttentionGrads;
using internal::AttentionParams;

void validate(const ModelConfig& cfg) {
  if (cfg.vocab_size < 1 || cfg.embed_dim < 1 || cfg.max_title_len < 1 ||
      cfg.max_history_len < 1 || cfg.negatives < 1) {
    throw ConfigError("model: all sizes must be >= 1");
  }
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) {
    throw ConfigError("model: dropout must be in [0, 1)");
  }
}

SoftmaxLoss ns_softmax_loss(std::span<const double> scores,
                            std::span<const int> labels) {
  if (scores.empty() || scores.size() != labels.size()) {
    throw ContractViolation("scores and labels must be non-empty and aligned");
  }
  std::size_t positive = scores.size();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      if (positive != scores.size()) {
        throw ContractViolation("more than one positive label");
      }
      positive = i;
    } else if (labels[i] != 0) {
      throw ContractViolation("labels must be 0/1");
    }
  }
  if (positive == scores.size()) throw ContractViolation("no positive label");

  const double max_score = *std::max_element(scores.begin(), scores.end());
  SoftmaxLoss out;
  out.probs.resize(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.probs[i] = std::exp(scores[i] - max_score);
    total += out.probs[i];
  }
  for (double& p : out.probs) p /= total;
  // -log p_pos computed in log space to stay finite for extreme scores.
  out.loss = std::log(total) - (scores[positive] - max_score);
  return out;
}

std::vector<double> click_scores(std::span<const double> user,
                                 std::span<const NewsRepr> candidates) {
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const NewsRepr& n : candidates) {
    if (n.size() != user.size()) {
      throw StructuralError("click_scores: dimension mismatch");
    }
    scores.push_back(dot(user, n));
  }
  return scores;
}

std::vector<NewsRepr> RecModel::encode_all_news(const ParamVector& params,
                                                const Corpus& corpus) const {
  std::vector<NewsRepr> out;
  out.reserve(corpus.news.size());
  for (const NewsItem& item : corpus.news) {
    out.push_back(encode_news(params, item.title_tokens));
  }
  return out;
}

UserRepr RecModel::encode_history(const ParamVector& params,
                                  std::span<const NewsRepr> news_reprs,
                                  std::span<const NewsIndex> history) const {
  const std::size_t keep = std::min(history.size(), config().max_history_len);
  std::vector<NewsRepr> items;
  items.reserve(keep);
  for (NewsIndex idx : history.last(keep)) {
    items.push_back(news_reprs[static_cast<std::size_t>(idx)]);
  }
  return encode_user(params, items);
}

AttnRec::AttnRec(ModelConfig cfg) : cfg_(cfg) {
  validate(cfg_);
  const std::size_t d = cfg_.embed_dim;
  const std::size_t h = cfg_.hidden();
  const std::size_t news_len = cfg_.vocab_size * d + h * d + 2 * h;
  const std::size_t user_len = h * d + 2 * h;
  layout_ = SegmentMap::from_lengths(
      {{std::string(kNewsSegment), news_len},
       {std::string(kUserSegment), user_len}});
  offsets_.embedding = 0;
  offsets_.news_w = cfg_.vocab_size * d;
  offsets_.news_b = offsets_.news_w + h * d;
  offsets_.news_q = offsets_.news_b + h;
  offsets_.user_w = news_len;
  offsets_.user_b = offsets_.user_w + h * d;
  offsets_.user_q = offsets_.user_b + h;
}

ParamVector AttnRec::init_params(std::mt19937_64& rng) const {
  ParamVector params(layout_);
  std::uniform_real_distribution<double> embed(-0.1, 0.1);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg_.embed_dim));
  std::uniform_real_distribution<double> dense(-bound, bound);
  for (std::size_t i = 0; i < params.values.size(); ++i) {
    params.values[i] = i < offsets_.news_w ? embed(rng) : dense(rng);
  }
  return params;
}

void AttnRec::check_title(std::span<const TokenId> title) const {
  if (title.empty()) throw ContractViolation("encode_news: empty title");
  if (title.size() > cfg_.max_title_len) {
    throw ContractViolation("encode_news: title longer than max_title_len");
  }
  for (TokenId t : title) {
    if (t < 0 || static_cast<std::size_t>(t) >= cfg_.vocab_size) {
      throw LookupError("encode_news: token id " + std::to_string(t) +
                        " outside vocabulary");
    }
  }
}

namespace {

AttentionParams news_attention(const ParamVector& p, const AttnRec& m) {
  const auto& o = m.offsets();
  const std::size_t d = m.config().embed_dim;
  const std::size_t h = m.config().hidden();
  std::span<const double> v(p.values);
  return {v.subspan(o.news_w, h * d), v.subspan(o.news_b, h),
          v.subspan(o.news_q, h), h, d};
}

AttentionParams user_attention(const ParamVector& p, const AttnRec& m) {
  const auto& o = m.offsets();
  const std::size_t d = m.config().embed_dim;
  const std::size_t h = m.config().hidden();
  std::span<const double> v(p.values);
  return {v.subspan(o.user_w, h * d), v.subspan(o.user_b, h),
          v.subspan(o.user_q, h), h, d};
}

AttentionGrads news_grads(std::span<double> grad, const AttnRec& m) {
  const auto& o = m.offsets();
  const std::size_t d = m.config().embed_dim;
  const std::size_t h = m.config().hidden();
  return {grad.subspan(o.news_w, h * d), grad.subspan(o.news_b, h),
          grad.subspan(o.news_q, h)};
}

AttentionGrads user_grads(std::span<double> grad, const AttnRec& m) {
  const auto& o = m.offsets();
  const std::size_t d = m.config().embed_dim;
  const std::size_t h = m.config().hidden();
  return {grad.subspan(o.user_w, h * d), grad.subspan(o.user_b, h),
          grad.subspan(o.user_q, h)};
}

std::vector<double> gather_embeddings(const ParamVector& p,
                                      std::span<const TokenId> title,
                                      std::size_t d) {
  std::vector<double> rows(title.size() * d);
  for (std::size_t t = 0; t < title.size(); ++t) {
    const double* src = p.values.data() + static_cast<std::size_t>(title[t]) * d;
    std::copy(src, src + d, rows.begin() + static_cast<std::ptrdiff_t>(t * d));
  }
  return rows;
}

struct NewsForward {
  std::vector<double> inputs;
  AttentionCache cache;
  NewsRepr repr;
  std::vector<double> d_repr;
};

struct UserForward {
  std::vector<std::size_t> news_slots;
  std::vector<double> inputs;
  AttentionCache cache;
  UserRepr repr;
  std::vector<double> d_repr;
};

}  // namespace

NewsRepr AttnRec::encode_news(const ParamVector& params,
                              std::span<const TokenId> title) const {
  check_title(title);
  const std::size_t d = cfg_.embed_dim;
  const std::vector<double> inputs = gather_embeddings(params, title, d);
  AttentionCache cache;
  NewsRepr out(d);
  internal::attention_forward(news_attention(params, *this), inputs,
                              title.size(), cache, out);
  return out;
}

UserRepr AttnRec::encode_user(const ParamVector& params,
                              std::span<const NewsRepr> history) const {
  const std::size_t d = cfg_.embed_dim;
  UserRepr out(d, 0.0);
  if (history.empty()) return out;
  if (history.size() > cfg_.max_history_len) {
    throw ContractViolation("encode_user: history longer than max_history_len");
  }
  std::vector<double> inputs;
  inputs.reserve(history.size() * d);
  for (const NewsRepr& n : history) {
    if (n.size() != d) throw StructuralError("encode_user: dimension mismatch");
    inputs.insert(inputs.end(), n.begin(), n.end());
  }
  AttentionCache cache;
  internal::attention_forward(user_attention(params, *this), inputs,
                              history.size(), cache, out);
  return out;
}

void AttnRec::news_backward(const ParamVector& params,
                            std::span<const TokenId> title,
                            std::span<const double> d_repr,
                            std::span<double> grad) const {
  check_title(title);
  const std::size_t d = cfg_.embed_dim;
  const std::vector<double> inputs = gather_embeddings(params, title, d);
  AttentionCache cache;
  NewsRepr out(d);
  const AttentionParams attn = news_attention(params, *this);
  internal::attention_forward(attn, inputs, title.size(), cache, out);
  std::vector<double> d_inputs(inputs.size(), 0.0);
  internal::attention_backward(attn, inputs, title.size(), cache, d_repr,
                               news_grads(grad, *this), d_inputs);
  for (std::size_t t = 0; t < title.size(); ++t) {
    double* row = grad.data() + static_cast<std::size_t>(title[t]) * d;
    for (std::size_t c = 0; c < d; ++c) row[c] += d_inputs[t * d + c];
  }
}

LossAndGrad AttnRec::client_loss_and_grad(const ParamVector& params,
                                          std::span<const TrainSample> samples,
                                          const Corpus& corpus) const {
  if (samples.empty()) {
    throw ContractViolation("client_loss_and_grad: empty sample list");
  }
  if (!(params.layout == layout_)) {
    throw StructuralError("client_loss_and_grad: layout mismatch");
  }
  const std::size_t d = cfg_.embed_dim;
  const AttentionParams news_attn = news_attention(params, *this);
  const AttentionParams user_attn = user_attention(params, *this);

  // Encode every distinct news item once.
  std::unordered_map<NewsIndex, std::size_t> news_slot;
  std::vector<NewsForward> news;
  const auto slot_of = [&](NewsIndex idx) {
    auto [it, inserted] = news_slot.try_emplace(idx, news.size());
    if (inserted) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= corpus.news.size()) {
        throw LookupError("unknown news index " + std::to_string(idx));
      }
      const auto& title = corpus.news[static_cast<std::size_t>(idx)].title_tokens;
      check_title(title);
      NewsForward f;
      f.inputs = gather_embeddings(params, title, d);
      f.repr.assign(d, 0.0);
      internal::attention_forward(news_attn, f.inputs, title.size(), f.cache,
                                  f.repr);
      f.d_repr.assign(d, 0.0);
      news.push_back(std::move(f));
    }
    return it->second;
  };

  // Encode every distinct (truncated) history once.
  std::map<std::vector<NewsIndex>, std::size_t> user_slot;
  std::vector<UserForward> users;
  std::vector<std::size_t> sample_user(samples.size());
  std::vector<std::vector<std::size_t>> sample_cands(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const TrainSample& sample = samples[s];
    check_sample(sample);
    const std::size_t keep =
        std::min(sample.history.size(), cfg_.max_history_len);
    std::vector<NewsIndex> key(sample.history.end() - static_cast<std::ptrdiff_t>(keep),
                               sample.history.end());
    auto [it, inserted] = user_slot.try_emplace(key, users.size());
    if (inserted) {
      UserForward u;
      for (NewsIndex idx : key) u.news_slots.push_back(slot_of(idx));
      users.push_back(std::move(u));
    }
    sample_user[s] = it->second;
    for (NewsIndex idx : sample.candidates) {
      sample_cands[s].push_back(slot_of(idx));
    }
  }
  for (UserForward& u : users) {
    u.repr.assign(d, 0.0);
    u.d_repr.assign(d, 0.0);
    if (u.news_slots.empty()) continue;
    for (std::size_t slot : u.news_slots) {
      u.inputs.insert(u.inputs.end(), news[slot].repr.begin(),
                      news[slot].repr.end());
    }
    internal::attention_forward(user_attn, u.inputs, u.news_slots.size(),
                                u.cache, u.repr);
  }

  LossAndGrad out;
  out.grad.assign(params.values.size(), 0.0);
  const double inv_count = 1.0 / static_cast<double>(samples.size());
  std::vector<double> scores;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    UserForward& u = users[sample_user[s]];
    scores.clear();
    for (std::size_t slot : sample_cands[s]) {
      scores.push_back(dot(u.repr, news[slot].repr));
    }
    const SoftmaxLoss sl = ns_softmax_loss(scores, samples[s].labels);
    out.loss += sl.loss * inv_count;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double g = (sl.probs[i] - samples[s].labels[i]) * inv_count;
      NewsForward& n = news[sample_cands[s][i]];
      for (std::size_t c = 0; c < d; ++c) {
        u.d_repr[c] += g * n.repr[c];
        n.d_repr[c] += g * u.repr[c];
      }
    }
  }

  const AttentionGrads ug = user_grads(out.grad, *this);
  for (UserForward& u : users) {
    if (u.news_slots.empty()) continue;
    std::vector<double> d_inputs(u.inputs.size(), 0.0);
    internal::attention_backward(user_attn, u.inputs, u.news_slots.size(),
                                 u.cache, u.d_repr, ug, d_inputs);
    for (std::size_t t = 0; t < u.news_slots.size(); ++t) {
      std::vector<double>& target = news[u.news_slots[t]].d_repr;
      for (std::size_t c = 0; c < d; ++c) target[c] += d_inputs[t * d + c];
    }
  }

  const AttentionGrads ng = news_grads(out.grad, *this);
  // Walk slots in insertion order so accumulation order is deterministic.
  std::vector<NewsIndex> slot_news(news.size());
  for (const auto& [idx, slot] : news_slot) slot_news[slot] = idx;
  for (std::size_t slot = 0; slot < news.size(); ++slot) {
    const NewsForward& n = news[slot];
    const auto& title =
        corpus.news[static_cast<std::size_t>(slot_news[slot])].title_tokens;
    std::vector<double> d_inputs(n.inputs.size(), 0.0);
    internal::attention_backward(news_attn, n.inputs, title.size(), n.cache,
                                 n.d_repr, ng, d_inputs);
    for (std::size_t t = 0; t < title.size(); ++t) {
      double* row = out.grad.data() + static_cast<std::size_t>(title[t]) * d;
      for (std::size_t c = 0; c < d; ++c) row[c] += d_inputs[t * d + c];
    }
  }
  return out;
}

std::unique_ptr<RecModel> make_model(const ModelConfig& cfg) {
  return std::make_unique<AttnRec>(cfg);
}

}  // namespace fedrec
