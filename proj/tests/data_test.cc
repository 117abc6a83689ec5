#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "fedrec/data.h"
#include "fedrec/error.h"
#include "fedrec/metrics.h"

namespace fedrec {
namespace {

TEST(TokenizeTest, LowercasesAndSplits) {
  EXPECT_EQ(tokenize("Best PS5 games"),
            (std::vector<std::string>{"best", "ps5", "games"}));
  EXPECT_EQ(tokenize("Hello, world! (Again)"),
            (std::vector<std::string>{"hello", "world", "again"}));
  // U+00A0 no-break space and U+2003 em space separate words.
  EXPECT_EQ(tokenize("a\xC2\xA0" "b\xE2\x80\x83" "c"),
            (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(tokenize("caf\xC3\xA9"), (std::vector<std::string>{"caf\xC3\xA9"}));
  EXPECT_TRUE(tokenize(" \t ...").empty());
}

TEST(ParseNewsTest, DirectParse) {
  std::istringstream in("N1\tsports\tsoccer\tBest PS5 games\tabstract\n");
  const NewsTable t = parse_news_tsv(in);
  ASSERT_EQ(t.news.size(), 1u);
  EXPECT_EQ(t.news[0].id, "N1");
  ASSERT_EQ(t.news[0].title_tokens.size(), 3u);
  EXPECT_EQ(t.vocab.token(t.news[0].title_tokens[0]), "best");
  EXPECT_EQ(t.vocab.token(t.news[0].title_tokens[1]), "ps5");
  EXPECT_EQ(t.vocab.token(t.news[0].title_tokens[2]), "games");
  EXPECT_EQ(t.vocab.token(0), "<pad>");
}

TEST(ParseNewsTest, Errors) {
  std::istringstream empty_title("N1\ta\tb\t\n");
  EXPECT_THROW(parse_news_tsv(empty_title), ParseError);

  std::istringstream short_row("N1\ta\tb\tok title\nN2\ta\tb\n");
  try {
    parse_news_tsv(short_row);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }

  std::istringstream dup("N1\ta\tb\tx\nN1\ta\tb\ty\n");
  EXPECT_THROW(parse_news_tsv(dup), StructuralError);
}

TEST(ParseNewsTest, VocabMatchesDistinctTokens) {
  const std::string text =
      "N1\ta\tb\tThe cat sat\n"
      "N2\ta\tb\tthe dog, the cat\n"
      "N3\ta\tb\tA bird!\n";
  std::istringstream in(text);
  const NewsTable t = parse_news_tsv(in);
  std::set<std::string> distinct;
  std::istringstream again(text);
  std::string line;
  while (std::getline(again, line)) {
    const std::string title = line.substr(line.rfind('\t') + 1);
    for (const std::string& w : tokenize(title)) distinct.insert(w);
  }
  EXPECT_EQ(t.vocab.size() - 1, distinct.size());
}

TEST(ParseNewsTest, TruncatesTitles) {
  std::istringstream in("N1\ta\tb\tone two three four five\n");
  const NewsTable t = parse_news_tsv(in, 3);
  EXPECT_EQ(t.news[0].title_tokens.size(), 3u);
}

NewsTable four_news() {
  std::istringstream in(
      "N1\ta\tb\tw1\nN2\ta\tb\tw2\nN3\ta\tb\tw3\nN4\ta\tb\tw4\n");
  return parse_news_tsv(in);
}

TEST(ParseBehaviorsTest, SingleRow) {
  std::istringstream in("1\tU1\tt\tN1 N2\tN3-1 N4-0\n");
  const Corpus c = parse_behaviors_tsv(in, four_news());
  ASSERT_EQ(c.clients.size(), 1u);
  EXPECT_EQ(c.clients[0].history, (std::vector<NewsIndex>{0, 1}));
  ASSERT_EQ(c.eval_impressions.size(), 1u);
  const Impression& imp = c.eval_impressions[0].impression;
  EXPECT_EQ(imp.shown, (std::vector<NewsIndex>{2, 3}));
  EXPECT_EQ(imp.positives(), 1u);
  EXPECT_TRUE(c.clients[0].train_impressions.empty());
}

TEST(ParseBehaviorsTest, EmptyHistory) {
  std::istringstream in("1\tU1\tt\t\tN3-1 N4-0\n");
  const Corpus c = parse_behaviors_tsv(in, four_news());
  EXPECT_TRUE(c.clients[0].history.empty());
}

TEST(ParseBehaviorsTest, GroupsByUser) {
  const std::vector<std::pair<std::string, std::string>> rows{
      {"U1", "N1-1 N2-0"}, {"U2", "N2-1 N3-0"}, {"U1", "N3-0 N4-1"},
      {"U1", "N1-0 N4-1"}, {"U2", "N1-1 N4-0"}};
  std::string text;
  std::map<std::string, std::size_t> oracle;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    text += std::to_string(i + 1) + "\t" + rows[i].first + "\tt\tN1\t" +
            rows[i].second + "\n";
    ++oracle[rows[i].first];
  }
  std::istringstream in(text);
  const Corpus c = parse_behaviors_tsv(in, four_news());
  ASSERT_EQ(c.clients.size(), 2u);
  EXPECT_EQ(c.clients[0].user_id, "U1");
  EXPECT_EQ(c.clients[1].user_id, "U2");
  for (std::size_t u = 0; u < 2; ++u) {
    EXPECT_EQ(c.clients[u].train_impressions.size() + 1,
              oracle[c.clients[u].user_id]);
  }
  // The last row of each user is held out.
  EXPECT_EQ(c.eval_impressions[0].impression.shown,
            (std::vector<NewsIndex>{0, 3}));
  EXPECT_EQ(c.eval_impressions[1].impression.shown,
            (std::vector<NewsIndex>{0, 3}));
}

TEST(ParseBehaviorsTest, MalformedAndUnknown) {
  std::istringstream bad("1\tU1\tt\tN1\tN3-2\n");
  EXPECT_THROW(parse_behaviors_tsv(bad, four_news()), ParseError);
  std::istringstream nosuffix("1\tU1\tt\tN1\tN3\n");
  EXPECT_THROW(parse_behaviors_tsv(nosuffix, four_news()), ParseError);
  std::istringstream short_row("1\tU1\tt\tN1\n");
  EXPECT_THROW(parse_behaviors_tsv(short_row, four_news()), ParseError);

  std::istringstream unknown("1\tU1\tt\tN1 N9\tN3-1 N8-0 N4-0\n");
  const Corpus c = parse_behaviors_tsv(unknown, four_news());
  EXPECT_EQ(c.skipped_unknown, 2u);
  EXPECT_EQ(c.clients[0].history, (std::vector<NewsIndex>{0}));
  EXPECT_EQ(c.eval_impressions[0].impression.shown,
            (std::vector<NewsIndex>{2, 3}));

  std::istringstream strict("1\tU1\tt\tN9\tN3-1\n");
  EXPECT_THROW(parse_behaviors_tsv(strict, four_news(), {false}), ParseError);
}

SynthSpec small_spec() {
  SynthSpec s;
  s.n_users = 60;
  s.n_news = 80;
  s.n_topics = 4;
  return s;
}

std::string export_tsv(const Corpus& c) {
  std::ostringstream news, behaviors;
  write_news_tsv(news, c);
  write_behaviors_tsv(behaviors, c);
  return news.str() + "\x1e" + behaviors.str();
}

TEST(SynthTest, DeterministicBytes) {
  const Corpus a = synth_generate(small_spec(), 5);
  const Corpus b = synth_generate(small_spec(), 5);
  EXPECT_TRUE(a.same_content(b));
  EXPECT_EQ(export_tsv(a), export_tsv(b));
  EXPECT_NE(export_tsv(a), export_tsv(synth_generate(small_spec(), 6)));
}

TEST(SynthTest, TsvRoundTrip) {
  const Corpus a = synth_generate(small_spec(), 7);
  std::ostringstream news, behaviors;
  write_news_tsv(news, a);
  write_behaviors_tsv(behaviors, a);
  std::istringstream news_in(news.str()), behaviors_in(behaviors.str());
  const Corpus b = parse_behaviors_tsv(behaviors_in, parse_news_tsv(news_in));
  EXPECT_TRUE(a.same_content(b));
  EXPECT_EQ(b.skipped_unknown, 0u);
}

TEST(SynthTest, EveryImpressionHasBothLabels) {
  const Corpus c = synth_generate(small_spec(), 8);
  for (const ClientLog& log : c.clients) {
    for (const Impression& imp : log.train_impressions) {
      EXPECT_GE(imp.positives(), 1u);
      EXPECT_GE(imp.negatives(), 1u);
    }
    EXPECT_GE(log.history.size(), small_spec().history_min);
    EXPECT_LE(log.history.size(), small_spec().history_max);
  }
  for (const EvalImpression& e : c.eval_impressions) {
    EXPECT_GE(e.impression.positives(), 1u);
    EXPECT_GE(e.impression.negatives(), 1u);
  }
}

TEST(SynthTest, InfeasibleSpecIsConfigError) {
  SynthSpec s = small_spec();
  s.candidates_per_impression = s.n_news + 1;
  EXPECT_THROW(synth_generate(s, 1), ConfigError);
  s = small_spec();
  s.history_min = 10;
  s.history_max = 5;
  EXPECT_THROW(synth_generate(s, 1), ConfigError);
}

TEST(SynthTest, SingleTopicClickRateIsUniform) {
  SynthSpec s;
  s.n_users = 2000;
  s.n_news = 100;
  s.n_topics = 1;
  s.impressions_per_user = 5;
  const Corpus c = synth_generate(s, 9);
  std::vector<double> shows(s.n_news, 0), clicks(s.n_news, 0);
  double total_shows = 0, total_clicks = 0;
  const auto count = [&](const Impression& imp) {
    for (std::size_t i = 0; i < imp.shown.size(); ++i) {
      shows[imp.shown[i]] += 1;
      clicks[imp.shown[i]] += imp.clicked[i];
      total_shows += 1;
      total_clicks += imp.clicked[i];
    }
  };
  for (const ClientLog& log : c.clients) {
    for (const Impression& imp : log.train_impressions) count(imp);
  }
  for (const EvalImpression& e : c.eval_impressions) count(e.impression);
  const double p = total_clicks / total_shows;
  std::size_t outside = 0;
  for (std::size_t i = 0; i < s.n_news; ++i) {
    const double sigma = std::sqrt(shows[i] * p * (1 - p));
    if (std::abs(clicks[i] - shows[i] * p) > 3 * sigma) ++outside;
  }
  // About 0.3% of items fall outside 3 sigma by chance.
  EXPECT_LE(outside, 3u);
}

TEST(SynthTest, OracleScorerBeatsThreshold) {
  const Corpus c = synth_generate(SynthSpec{}, 7);
  EXPECT_EQ(c.clients.size(), 1000u);
  EXPECT_EQ(c.news.size(), 500u);
  EXPECT_GT(evaluate_oracle(c).auc, 0.75);
}

ClientLog client_with(std::vector<std::uint8_t> clicks) {
  ClientLog log;
  log.user_id = "U";
  Impression imp;
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    imp.shown.push_back(static_cast<NewsIndex>(10 + i));
    imp.clicked.push_back(clicks[i]);
  }
  log.train_impressions.push_back(imp);
  return log;
}

TEST(TrainSamplesTest, ForcedCandidates) {
  std::mt19937_64 rng(1);
  const auto samples = build_train_samples(client_with({1, 0, 0, 0, 0}), 4, rng);
  ASSERT_EQ(samples.size(), 1u);
  std::vector<NewsIndex> cands = samples[0].candidates;
  std::sort(cands.begin(), cands.end());
  EXPECT_EQ(cands, (std::vector<NewsIndex>{10, 11, 12, 13, 14}));
  EXPECT_EQ(samples[0].candidates[samples[0].positive_index()], 10);
  check_sample(samples[0]);
}

TEST(TrainSamplesTest, DrawsWithReplacementWhenShort) {
  std::mt19937_64 rng(2);
  const auto samples = build_train_samples(client_with({0, 1, 0}), 4, rng);
  ASSERT_EQ(samples.size(), 1u);
  EXPECT_EQ(samples[0].candidates.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    if (samples[0].labels[i] == 1) {
      EXPECT_EQ(samples[0].candidates[i], 11);
    } else {
      EXPECT_TRUE(samples[0].candidates[i] == 10 || samples[0].candidates[i] == 12);
    }
  }
}

TEST(TrainSamplesTest, NoNegativesSkipped) {
  std::mt19937_64 rng(3);
  SampleStats stats;
  const auto samples = build_train_samples(client_with({1, 1}), 4, rng, &stats);
  EXPECT_TRUE(samples.empty());
  EXPECT_EQ(stats.skipped_no_negatives, 2u);
}

TEST(TrainSamplesTest, PositiveSlotIsUniform) {
  const ClientLog log = client_with({1, 0, 1, 0, 0, 1, 0, 0});
  std::vector<double> counts(5, 0.0);
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    std::mt19937_64 rng(seed);
    const auto samples = build_train_samples(log, 4, rng);
    ASSERT_EQ(samples.size(), 3u);
    counts[samples[0].positive_index()] += 1;
    for (const TrainSample& s : samples) check_sample(s);
  }
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - 2000.0) * (c - 2000.0) / 2000.0;
  // 99.9th percentile of chi-square with 4 degrees of freedom.
  EXPECT_LT(chi2, 18.47);
}

TEST(TrainSamplesTest, CheckSampleRejectsInvalid) {
  TrainSample s{{}, {1, 2}, {0, 0}};
  EXPECT_THROW(check_sample(s), ContractViolation);
  s.labels = {1, 1};
  EXPECT_THROW(check_sample(s), ContractViolation);
}

}  // namespace
}  // namespace fedrec
