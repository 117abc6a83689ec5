#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fedrec {

// Index into Corpus::news.
using NewsIndex = int;
// Token id; 0 is reserved for padding / unknown.
using TokenId = int;

inline constexpr std::size_t kDefaultMaxTitleLen = 20;

struct NewsItem {
  std::string id;
  std::vector<TokenId> title_tokens;

  bool operator==(const NewsItem&) const = default;
};

class Vocab {
 public:
  Vocab();

  // Returns the id of `token`, inserting it if absent.
  TokenId intern(const std::string& token);
  std::optional<TokenId> lookup(const std::string& token) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  // Includes the reserved padding id.
  std::size_t size() const { return tokens_.size(); }

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

struct Impression {
  std::vector<NewsIndex> shown;
  std::vector<std::uint8_t> clicked;

  std::size_t positives() const;
  std::size_t negatives() const { return shown.size() - positives(); }

  bool operator==(const Impression&) const = default;
};

struct ClientLog {
  std::string user_id;
  std::vector<NewsIndex> history;
  std::vector<Impression> train_impressions;

  bool operator==(const ClientLog&) const = default;
};

struct EvalImpression {
  std::size_t client = 0;
  Impression impression;

  bool operator==(const EvalImpression&) const = default;
};

// Ground truth kept by the synthetic generator; absent for parsed data.
struct SynthTruth {
  std::vector<int> news_topic;
  std::vector<std::vector<double>> user_affinity;  // per client, per topic
};

struct Corpus {
  std::vector<NewsItem> news;
  std::unordered_map<std::string, NewsIndex> news_index;
  Vocab vocab;
  std::vector<ClientLog> clients;
  std::vector<EvalImpression> eval_impressions;
  std::optional<SynthTruth> truth;

  // Count of behaviour entries dropped because they referenced unknown news.
  std::size_t skipped_unknown = 0;

  NewsIndex index_of(const std::string& id) const;
  // Equality over news, vocabulary, clients and evaluation impressions.
  bool same_content(const Corpus& other) const;
};

// Lowercases ASCII, splits on whitespace (ASCII and common Unicode spaces)
// and ASCII punctuation.
std::vector<std::string> tokenize(std::string_view text);

struct NewsTable {
  std::vector<NewsItem> news;
  std::unordered_map<std::string, NewsIndex> index;
  Vocab vocab;
};

// Columns: newsID, category, subcategory, title, [ignored...].
NewsTable parse_news_tsv(std::istream& in,
                         std::size_t max_title_len = kDefaultMaxTitleLen);

struct BehaviorsOptions {
  bool skip_unknown_news = true;
};

// Columns: impressionID, userID, time, history, impressions. Rows are grouped
// by user in first-seen order; each user's last impression is held out for
// evaluation and the rest become training impressions.
Corpus parse_behaviors_tsv(std::istream& in, NewsTable news,
                           const BehaviorsOptions& options = {});

Corpus load_mind(const std::string& news_path,
                 const std::string& behaviors_path,
                 std::size_t max_title_len = kDefaultMaxTitleLen,
                 const BehaviorsOptions& options = {});

void write_news_tsv(std::ostream& out, const Corpus& corpus);
void write_behaviors_tsv(std::ostream& out, const Corpus& corpus);

struct SynthSpec {
  std::size_t n_users = 1000;
  std::size_t n_news = 500;
  std::size_t n_topics = 8;
  std::size_t title_len = 6;
  std::size_t history_min = 5;
  std::size_t history_max = 15;
  std::size_t impressions_per_user = 4;
  std::size_t candidates_per_impression = 8;
  std::size_t tokens_per_topic = 16;
  std::size_t common_tokens = 32;
  // Probability a title token comes from its topic's block rather than the
  // shared block.
  double topic_token_prob = 0.8;
  // Click probability of an item is click_scale * n_topics * affinity,
  // clamped to [0, 1].
  double click_scale = 0.15;
  // Dirichlet concentration of user topic preferences.
  double affinity_concentration = 0.3;
};

void validate(const SynthSpec& spec);

// Topic-structured synthetic corpus. Deterministic in (spec, seed). Every
// generated impression has at least one click and one non-click.
Corpus synth_generate(const SynthSpec& spec, std::uint64_t seed);

struct TrainSample {
  std::vector<NewsIndex> history;
  std::vector<NewsIndex> candidates;
  std::vector<int> labels;  // one-hot over candidates

  std::size_t positive_index() const;
  bool operator==(const TrainSample&) const = default;
};

// Throws ContractViolation unless `labels` is one-hot over the candidates.
void check_sample(const TrainSample& sample);

struct SampleStats {
  std::size_t skipped_no_negatives = 0;
};

// One sample per clicked item; P negatives from the same impression, drawn
// with replacement only when fewer than P distinct negatives exist. The
// positive's slot is shuffled uniformly.
std::vector<TrainSample> build_train_samples(const ClientLog& client,
                                             std::size_t negatives,
                                             std::mt19937_64& rng,
                                             SampleStats* stats = nullptr);

}  // namespace fedrec
