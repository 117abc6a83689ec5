#include "fedrec/data.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fedrec/error.h"

namespace fedrec {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::vector<std::string_view> split_spaces(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < text.size() && text[i] != ' ') ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

bool getline_stripped(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

// Length in bytes of a Unicode whitespace sequence starting at `i`, or 0.
std::size_t unicode_space_len(std::string_view s, std::size_t i) {
  const auto byte = [&](std::size_t k) {
    return k < s.size() ? static_cast<unsigned char>(s[k]) : 0u;
  };
  const unsigned b0 = byte(i);
  if (b0 == 0xC2 && byte(i + 1) == 0xA0) return 2;  // U+00A0
  if (b0 == 0xE1 && byte(i + 1) == 0x9A && byte(i + 2) == 0x80) return 3;
  if (b0 == 0xE2 && byte(i + 1) == 0x80) {
    const unsigned b2 = byte(i + 2);
    if ((b2 >= 0x80 && b2 <= 0x8A) || b2 == 0xA8 || b2 == 0xA9 || b2 == 0xAF) {
      return 3;
    }
  }
  if (b0 == 0xE2 && byte(i + 1) == 0x81 && byte(i + 2) == 0x9F) return 3;
  if (b0 == 0xE3 && byte(i + 1) == 0x80 && byte(i + 2) == 0x80) return 3;
  return 0;
}

void add_news(NewsTable& table, std::string id, std::string_view title,
              std::size_t max_title_len, std::size_t line) {
  if (table.index.contains(id)) {
    throw StructuralError("duplicate news id '" + id + "' at line " +
                          std::to_string(line));
  }
  std::vector<std::string> words = tokenize(title);
  if (words.empty()) throw ParseError(line, "empty title");
  if (words.size() > max_title_len) words.resize(max_title_len);
  NewsItem item{std::move(id), {}};
  item.title_tokens.reserve(words.size());
  for (const std::string& w : words) {
    item.title_tokens.push_back(table.vocab.intern(w));
  }
  table.index.emplace(item.id, static_cast<NewsIndex>(table.news.size()));
  table.news.push_back(std::move(item));
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

Vocab::Vocab() : tokens_{"<pad>"} {}

TokenId Vocab::intern(const std::string& token) {
  auto [it, inserted] =
      ids_.try_emplace(token, static_cast<TokenId>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::optional<TokenId> Vocab::lookup(const std::string& token) const {
  const auto it = ids_.find(token);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::size_t Impression::positives() const {
  return static_cast<std::size_t>(
      std::count(clicked.begin(), clicked.end(), std::uint8_t{1}));
}

NewsIndex Corpus::index_of(const std::string& id) const {
  const auto it = news_index.find(id);
  if (it == news_index.end()) throw LookupError("unknown news id '" + id + "'");
  return it->second;
}

bool Corpus::same_content(const Corpus& other) const {
  return news == other.news && vocab == other.vocab &&
         clients == other.clients &&
         eval_impressions == other.eval_impressions;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      if (std::isspace(c) || std::ispunct(c)) {
        flush();
      } else {
        current.push_back(static_cast<char>(std::tolower(c)));
      }
      ++i;
      continue;
    }
    if (const std::size_t n = unicode_space_len(text, i); n > 0) {
      flush();
      i += n;
      continue;
    }
    current.push_back(static_cast<char>(c));
    ++i;
  }
  flush();
  return out;
}

NewsTable parse_news_tsv(std::istream& in, std::size_t max_title_len) {
  if (max_title_len == 0) throw ConfigError("max_title_len must be >= 1");
  NewsTable table;
  std::string line;
  std::size_t line_no = 0;
  while (getline_stripped(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 4) {
      throw ParseError(line_no, "expected at least 4 tab-separated columns, got " +
                                    std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw ParseError(line_no, "empty news id");
    add_news(table, std::string(fields[0]), fields[3], max_title_len, line_no);
  }
  return table;
}

Corpus parse_behaviors_tsv(std::istream& in, NewsTable news,
                           const BehaviorsOptions& options) {
  Corpus corpus;
  corpus.news = std::move(news.news);
  corpus.news_index = std::move(news.index);
  corpus.vocab = std::move(news.vocab);

  struct UserRows {
    std::vector<NewsIndex> history;
    std::vector<Impression> impressions;
  };
  std::vector<std::string> user_order;
  std::unordered_map<std::string, UserRows> users;

  const auto resolve = [&](std::string_view id,
                           std::size_t line_no) -> std::optional<NewsIndex> {
    const auto it = corpus.news_index.find(std::string(id));
    if (it != corpus.news_index.end()) return it->second;
    if (!options.skip_unknown_news) {
      throw ParseError(line_no, "unknown news id '" + std::string(id) + "'");
    }
    ++corpus.skipped_unknown;
    return std::nullopt;
  };

  std::string line;
  std::size_t line_no = 0;
  while (getline_stripped(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 5) {
      throw ParseError(line_no, "expected 5 tab-separated columns, got " +
                                    std::to_string(fields.size()));
    }
    const std::string user(fields[1]);
    if (user.empty()) throw ParseError(line_no, "empty user id");

    std::vector<NewsIndex> history;
    for (std::string_view id : split_spaces(fields[3])) {
      if (auto idx = resolve(id, line_no)) history.push_back(*idx);
    }

    Impression imp;
    for (std::string_view entry : split_spaces(fields[4])) {
      const std::size_t dash = entry.rfind('-');
      if (dash == std::string_view::npos || dash + 2 != entry.size() ||
          (entry[dash + 1] != '0' && entry[dash + 1] != '1') || dash == 0) {
        throw ParseError(line_no, "malformed impression entry '" +
                                      std::string(entry) + "'");
      }
      if (auto idx = resolve(entry.substr(0, dash), line_no)) {
        imp.shown.push_back(*idx);
        imp.clicked.push_back(entry[dash + 1] == '1' ? 1 : 0);
      }
    }

    auto [it, inserted] = users.try_emplace(user);
    if (inserted) {
      user_order.push_back(user);
      it->second.history = std::move(history);
    }
    if (!imp.shown.empty()) it->second.impressions.push_back(std::move(imp));
  }

  corpus.clients.reserve(user_order.size());
  for (const std::string& user : user_order) {
    UserRows& rows = users.at(user);
    ClientLog log{user, std::move(rows.history), {}};
    if (!rows.impressions.empty()) {
      corpus.eval_impressions.push_back(
          {corpus.clients.size(), std::move(rows.impressions.back())});
      rows.impressions.pop_back();
    }
    log.train_impressions = std::move(rows.impressions);
    corpus.clients.push_back(std::move(log));
  }
  return corpus;
}

Corpus load_mind(const std::string& news_path,
                 const std::string& behaviors_path, std::size_t max_title_len,
                 const BehaviorsOptions& options) {
  std::ifstream news_in(news_path);
  if (!news_in) throw DataError("cannot open '" + news_path + "'");
  std::ifstream behaviors_in(behaviors_path);
  if (!behaviors_in) throw DataError("cannot open '" + behaviors_path + "'");
  return parse_behaviors_tsv(behaviors_in,
                             parse_news_tsv(news_in, max_title_len), options);
}

void write_news_tsv(std::ostream& out, const Corpus& corpus) {
  for (std::size_t i = 0; i < corpus.news.size(); ++i) {
    const NewsItem& item = corpus.news[i];
    std::string category = "news";
    if (corpus.truth) {
      category = "topic" + std::to_string(corpus.truth->news_topic[i]);
    }
    out << item.id << '\t' << category << '\t' << category << '\t';
    for (std::size_t t = 0; t < item.title_tokens.size(); ++t) {
      if (t > 0) out << ' ';
      out << corpus.vocab.token(item.title_tokens[t]);
    }
    out << "\t\t\t[]\t[]\n";
  }
}

void write_behaviors_tsv(std::ostream& out, const Corpus& corpus) {
  std::vector<const Impression*> held_out(corpus.clients.size(), nullptr);
  for (const EvalImpression& e : corpus.eval_impressions) {
    held_out.at(e.client) = &e.impression;
  }
  std::size_t impression_id = 0;
  const auto write_row = [&](const ClientLog& client, const Impression& imp) {
    out << ++impression_id << '\t' << client.user_id << '\t'
        << "11/15/2019 8:00:00 AM" << '\t';
    for (std::size_t h = 0; h < client.history.size(); ++h) {
      if (h > 0) out << ' ';
      out << corpus.news[client.history[h]].id;
    }
    out << '\t';
    for (std::size_t s = 0; s < imp.shown.size(); ++s) {
      if (s > 0) out << ' ';
      out << corpus.news[imp.shown[s]].id << '-' << int{imp.clicked[s]};
    }
    out << '\n';
  };
  for (std::size_t c = 0; c < corpus.clients.size(); ++c) {
    const ClientLog& client = corpus.clients[c];
    for (const Impression& imp : client.train_impressions) {
      write_row(client, imp);
    }
    if (held_out[c] != nullptr) write_row(client, *held_out[c]);
  }
}

void validate(const SynthSpec& spec) {
  const auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("synth: " + msg);
  };
  require(spec.n_users >= 1, "n_users must be >= 1");
  require(spec.n_topics >= 1, "n_topics must be >= 1");
  require(spec.n_news >= spec.n_topics, "n_news must be >= n_topics");
  require(spec.title_len >= 1 && spec.title_len <= kDefaultMaxTitleLen,
          "title_len must be in [1, " + std::to_string(kDefaultMaxTitleLen) +
              "]");
  require(spec.history_min <= spec.history_max,
          "history_min must be <= history_max");
  require(spec.history_max <= spec.n_news, "history_max must be <= n_news");
  require(spec.impressions_per_user >= 1,
          "impressions_per_user must be >= 1");
  require(spec.candidates_per_impression >= 2,
          "candidates_per_impression must be >= 2");
  require(spec.candidates_per_impression <= spec.n_news,
          "candidates_per_impression must be <= n_news");
  require(spec.tokens_per_topic >= 1 && spec.common_tokens >= 1,
          "token blocks must be non-empty");
  require(spec.topic_token_prob >= 0.0 && spec.topic_token_prob <= 1.0,
          "topic_token_prob must be in [0, 1]");
  require(spec.click_scale > 0.0, "click_scale must be > 0");
  require(spec.affinity_concentration > 0.0,
          "affinity_concentration must be > 0");
}

Corpus synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  validate(spec);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SynthTruth truth;
  truth.news_topic.resize(spec.n_news);
  std::vector<std::vector<NewsIndex>> by_topic(spec.n_topics);
  for (std::size_t i = 0; i < spec.n_news; ++i) {
    const std::size_t topic =
        i < spec.n_topics ? i : uniform_index(rng, spec.n_topics);
    truth.news_topic[i] = static_cast<int>(topic);
    by_topic[topic].push_back(static_cast<NewsIndex>(i));
  }

  NewsTable table;
  for (std::size_t i = 0; i < spec.n_news; ++i) {
    std::string title;
    for (std::size_t t = 0; t < spec.title_len; ++t) {
      if (t > 0) title.push_back(' ');
      if (unit(rng) < spec.topic_token_prob) {
        title += "t" + std::to_string(truth.news_topic[i]) + "w" +
                 std::to_string(uniform_index(rng, spec.tokens_per_topic));
      } else {
        title += "c" + std::to_string(uniform_index(rng, spec.common_tokens));
      }
    }
    add_news(table, "N" + std::to_string(i + 1), title, kDefaultMaxTitleLen,
             i + 1);
  }

  Corpus corpus;
  corpus.news = std::move(table.news);
  corpus.news_index = std::move(table.index);
  corpus.vocab = std::move(table.vocab);

  std::gamma_distribution<double> gamma(spec.affinity_concentration, 1.0);
  for (std::size_t u = 0; u < spec.n_users; ++u) {
    std::vector<double> affinity(spec.n_topics);
    double total = 0.0;
    for (double& a : affinity) {
      a = gamma(rng);
      total += a;
    }
    if (total <= 0.0) {
      affinity.assign(spec.n_topics, 1.0 / static_cast<double>(spec.n_topics));
    } else {
      for (double& a : affinity) a /= total;
    }
    std::discrete_distribution<std::size_t> pick_topic(affinity.begin(),
                                                       affinity.end());

    ClientLog client;
    client.user_id = "U" + std::to_string(u + 1);
    const std::size_t history_len =
        spec.history_min + uniform_index(rng, spec.history_max -
                                                  spec.history_min + 1);
    for (std::size_t h = 0; h < history_len; ++h) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        const auto& pool = by_topic[pick_topic(rng)];
        const NewsIndex candidate = pool[uniform_index(rng, pool.size())];
        if (std::find(client.history.begin(), client.history.end(),
                      candidate) == client.history.end()) {
          client.history.push_back(candidate);
          break;
        }
      }
    }

    std::vector<NewsIndex> all(spec.n_news);
    std::iota(all.begin(), all.end(), 0);
    std::vector<Impression> impressions;
    for (std::size_t k = 0; k < spec.impressions_per_user; ++k) {
      Impression imp;
      for (int attempt = 0;; ++attempt) {
        // Partial Fisher-Yates draw of distinct candidates.
        for (std::size_t s = 0; s < spec.candidates_per_impression; ++s) {
          std::swap(all[s], all[s + uniform_index(rng, spec.n_news - s)]);
        }
        imp.shown.assign(all.begin(),
                         all.begin() + static_cast<std::ptrdiff_t>(
                                           spec.candidates_per_impression));
        imp.clicked.assign(imp.shown.size(), 0);
        for (std::size_t s = 0; s < imp.shown.size(); ++s) {
          const double p =
              std::min(1.0, spec.click_scale *
                                static_cast<double>(spec.n_topics) *
                                affinity[truth.news_topic[imp.shown[s]]]);
          imp.clicked[s] = unit(rng) < p ? 1 : 0;
        }
        const std::size_t pos = imp.positives();
        if (pos >= 1 && pos < imp.shown.size()) break;
        if (attempt >= 1000) {
          // Force one of each label by affinity order.
          std::vector<std::size_t> order(imp.shown.size());
          std::iota(order.begin(), order.end(), 0);
          std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
            return affinity[truth.news_topic[imp.shown[a]]] >
                   affinity[truth.news_topic[imp.shown[b]]];
          });
          imp.clicked.assign(imp.shown.size(), 0);
          imp.clicked[order.front()] = 1;
          break;
        }
      }
      impressions.push_back(std::move(imp));
    }
    corpus.eval_impressions.push_back(
        {corpus.clients.size(), std::move(impressions.back())});
    impressions.pop_back();
    client.train_impressions = std::move(impressions);
    truth.user_affinity.push_back(std::move(affinity));
    corpus.clients.push_back(std::move(client));
  }
  corpus.truth = std::move(truth);
  return corpus;
}

std::size_t TrainSample::positive_index() const {
  const auto it = std::find(labels.begin(), labels.end(), 1);
  if (it == labels.end()) throw ContractViolation("sample has no positive");
  return static_cast<std::size_t>(it - labels.begin());
}

void check_sample(const TrainSample& sample) {
  if (sample.candidates.empty()) {
    throw ContractViolation("sample has no candidates");
  }
  if (sample.labels.size() != sample.candidates.size()) {
    throw ContractViolation("labels and candidates differ in length");
  }
  std::size_t ones = 0;
  for (int y : sample.labels) {
    if (y != 0 && y != 1) throw ContractViolation("labels must be 0/1");
    ones += static_cast<std::size_t>(y);
  }
  if (ones != 1) {
    throw ContractViolation("sample must have exactly one positive label");
  }
}

std::vector<TrainSample> build_train_samples(const ClientLog& client,
                                             std::size_t negatives,
                                             std::mt19937_64& rng,
                                             SampleStats* stats) {
  if (negatives < 1) throw ConfigError("negatives per positive must be >= 1");
  std::vector<TrainSample> samples;
  for (const Impression& imp : client.train_impressions) {
    std::vector<NewsIndex> pool;
    for (std::size_t s = 0; s < imp.shown.size(); ++s) {
      if (!imp.clicked[s]) pool.push_back(imp.shown[s]);
    }
    for (std::size_t s = 0; s < imp.shown.size(); ++s) {
      if (!imp.clicked[s]) continue;
      if (pool.empty()) {
        if (stats != nullptr) ++stats->skipped_no_negatives;
        continue;
      }
      std::vector<NewsIndex> drawn;
      drawn.reserve(negatives);
      if (pool.size() >= negatives) {
        std::vector<NewsIndex> scratch = pool;
        for (std::size_t j = 0; j < negatives; ++j) {
          std::swap(scratch[j],
                    scratch[j + uniform_index(rng, scratch.size() - j)]);
          drawn.push_back(scratch[j]);
        }
      } else {
        for (std::size_t j = 0; j < negatives; ++j) {
          drawn.push_back(pool[uniform_index(rng, pool.size())]);
        }
      }
      const std::size_t slot = uniform_index(rng, negatives + 1);
      TrainSample sample;
      sample.history = client.history;
      sample.candidates = std::move(drawn);
      sample.candidates.insert(
          sample.candidates.begin() + static_cast<std::ptrdiff_t>(slot),
          imp.shown[s]);
      sample.labels.assign(negatives + 1, 0);
      sample.labels[slot] = 1;
      samples.push_back(std::move(sample));
    }
  }
  return samples;
}

}  // namespace fedrec
