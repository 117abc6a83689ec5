#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fedrec/defenses.h"
#include "fedrec/error.h"
#include "fedrec/fedcore.h"
#include "test_util.h"

namespace fedrec {
namespace {

using testing::krum_oracle;
using testing::median_oracle;
using testing::trimmed_oracle;
using testing::make_update;
using testing::multi_krum_oracle;
using testing::random_vector;
using testing::sq_dist;

std::vector<ModelUpdate> random_updates(std::mt19937_64& rng, std::size_t k,
                                        std::size_t dim) {
  std::vector<ModelUpdate> out;
  std::uniform_int_distribution<std::int64_t> size(1, 9);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back(make_update(random_vector(rng, dim), size(rng)));
  }
  return out;
}

std::vector<ModelUpdate> scalars(std::initializer_list<double> xs) {
  std::vector<ModelUpdate> out;
  for (double x : xs) out.push_back(make_update({x, 0.0}, 1));
  return out;
}

TEST(MedianTest, EvenAndOddCounts) {
  EXPECT_EQ(median_agg(scalars({3, 1, 2}))[0], 2.0);
  EXPECT_EQ(median_agg(scalars({4, 1, 2, 3}))[0], 2.5);
}

TEST(TrimmedMeanTest, DropsExtremes) {
  // k = 10, beta = 0.1 drops one value per side.
  const auto us = scalars({100, 1, 2, 3, 4, 5, 6, 7, 8, -100});
  EXPECT_DOUBLE_EQ(trimmed_mean_agg(us, 0.1)[0], 4.5);
  EXPECT_THROW(trimmed_mean_agg(us, 0.5), ConfigError);
}

TEST(KrumTest, Examples) {
  const KrumSelection sel = krum_select(scalars({0, 0.1, 0.2, 10}), 1);
  EXPECT_EQ(sel.index, 0u);

  std::mt19937_64 rng(1);
  std::vector<ModelUpdate> cluster;
  cluster.push_back(make_update({50, 50, 50, 50}, 1));
  for (int i = 0; i < 5; ++i) {
    cluster.push_back(make_update(random_vector(rng, 4, -0.1, 0.1), 1));
  }
  EXPECT_NE(krum_select(cluster, 1).index, 0u);

  EXPECT_EQ(krum_select(scalars({7, 7, 7, 7}), 1).index, 0u);
  EXPECT_THROW(krum_select(scalars({1, 2, 3}), 1), ConfigError);
}

TEST(MultiKrumTest, Examples) {
  std::mt19937_64 rng(2);
  const auto us = random_updates(rng, 8, 6);
  const MultiKrumResult one = multi_krum_agg(us, 1, 1);
  EXPECT_EQ(one.vector, krum_select(us, 1).vector);

  const MultiKrumResult three = multi_krum_agg(us, 1, 3);
  EXPECT_EQ(three.selected, multi_krum_oracle(us, 1, 3));

  EXPECT_THROW(multi_krum_agg(us, 0, 8), ConfigError);
  EXPECT_THROW(multi_krum_agg(us, 1, 0), ConfigError);
}

TEST(DefenseOracleTest, RandomInstancesMatchBruteForce) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 4 + rng() % 17;
    const std::size_t dim = 2 * (1 + rng() % 25);
    const auto us = random_updates(rng, k, dim);

    const auto med = median_agg(us);
    const auto med_o = median_oracle(us);
    for (std::size_t i = 0; i < dim; ++i) EXPECT_EQ(med[i], med_o[i]);

    const auto tm = trimmed_mean_agg(us, 0.2);
    const auto tm_o = trimmed_oracle(us, 0.2);
    for (std::size_t i = 0; i < dim; ++i) EXPECT_NEAR(tm[i], tm_o[i], 1e-12);

    const std::size_t f = rng() % (k - 3 + 1);
    std::vector<const std::vector<double>*> xs;
    for (const auto& u : us) xs.push_back(&u.delta);
    EXPECT_EQ(krum_select(us, f).index, krum_oracle(xs, f));

    const std::size_t c = 1 + rng() % (k - f - 2);
    const MultiKrumResult mk = multi_krum_agg(us, f, c);
    const auto picked = multi_krum_oracle(us, f, c);
    EXPECT_EQ(mk.selected, picked);
    for (std::size_t i = 0; i < dim; ++i) {
      double mean = 0.0;
      for (std::size_t p : picked) mean += us[p].delta[i];
      EXPECT_NEAR(mk.vector[i], mean / static_cast<double>(c), 1e-12);
    }
  }
}

TEST(KrumPropertyTest, NeverSelectsPlantedOutlier) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 5 + rng() % 16;
    const std::size_t f = 1 + rng() % ((k - 3) / 2);
    const std::size_t dim = 2 * (1 + rng() % 25);
    auto us = random_updates(rng, k, dim);
    // Benign spread is at most 2 per coordinate; outliers sit >= 100x away.
    std::vector<std::size_t> planted;
    for (std::size_t o = 0; o < f; ++o) {
      const std::size_t idx = rng() % k;
      const double shift = 200.0 * std::sqrt(static_cast<double>(dim)) * (o + 1);
      for (double& v : us[idx].delta) v += shift;
      planted.push_back(idx);
    }
    const std::size_t chosen = krum_select(us, f).index;
    EXPECT_EQ(std::count(planted.begin(), planted.end(), chosen), 0);
  }
}

TEST(KrumPropertyTest, TranslationInvariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto us = random_updates(rng, 9, 8);
    const std::size_t before = krum_select(us, 2).index;
    const auto shift = random_vector(rng, 8, -3, 3);
    for (auto& u : us) {
      for (std::size_t i = 0; i < 8; ++i) u.delta[i] += shift[i];
    }
    EXPECT_EQ(krum_select(us, 2).index, before);
  }
}

TEST(CoordinatewisePropertyTest, PermutationInvariant) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    auto us = random_updates(rng, 11, 10);
    const auto med = median_agg(us);
    const auto tm = trimmed_mean_agg(us, 0.1);
    std::shuffle(us.begin(), us.end(), rng);
    EXPECT_EQ(median_agg(us), med);
    EXPECT_EQ(trimmed_mean_agg(us, 0.1), tm);
  }
}

TEST(NormBoundTest, Examples) {
  std::mt19937_64 rng(7);
  const auto small = random_updates(rng, 5, 6);
  EXPECT_EQ(norm_bound_agg(small, 1e6), fedavg_aggregate(small));

  const std::vector<ModelUpdate> one{make_update({6, 8}, 3)};
  EXPECT_NEAR(l2_norm(norm_bound_agg(one, 5.0)), 5.0, 1e-12);

  const auto mixed = random_updates(rng, 7, 10);
  const double rho = 1.2;
  std::vector<double> oracle(10, 0.0);
  double total = 0.0;
  for (const auto& u : mixed) total += static_cast<double>(u.sample_size);
  for (const auto& u : mixed) {
    const double n = std::sqrt(sq_dist(u.delta, std::vector<double>(10, 0.0)));
    const double scale = std::min(1.0, rho / n);
    for (std::size_t i = 0; i < 10; ++i) {
      oracle[i] += static_cast<double>(u.sample_size) / total * scale * u.delta[i];
    }
  }
  const auto got = norm_bound_agg(mixed, rho);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(got[i], oracle[i], 1e-12);

  const auto inf = norm_bound_agg(mixed, std::numeric_limits<double>::infinity());
  const auto plain = fedavg_aggregate(mixed);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(inf[i], plain[i], 1e-12);
}

TEST(ApplyDefenseTest, RobustRulesIgnoreSampleSizes) {
  std::mt19937_64 rng(8);
  auto us = random_updates(rng, 7, 4);
  DefenseRule median{DefenseKind::kMedian};
  const auto before = apply_defense(median, us).vector;
  for (auto& u : us) u.sample_size = 1000 + u.sample_size * 37;
  EXPECT_EQ(apply_defense(median, us).vector, before);
}

TEST(ApplyDefenseTest, MetadataAndDefaults) {
  std::mt19937_64 rng(9);
  const auto us = random_updates(rng, 12, 4);

  const Aggregate none = apply_defense(DefenseRule{}, us);
  double total = 0.0;
  for (const auto& u : us) total += static_cast<double>(u.sample_size);
  ASSERT_EQ(none.meta["weights"].size(), us.size());
  EXPECT_DOUBLE_EQ(none.meta["weights"][0].get<double>(),
                   static_cast<double>(us[0].sample_size) / total);

  const Aggregate mk = apply_defense({DefenseKind::kMultiKrum}, us);
  EXPECT_EQ(mk.meta["f"], 2);  // ceil(0.1 * 12)
  EXPECT_EQ(mk.meta["c"], 8);  // 12 - 2 - 2
  EXPECT_EQ(mk.meta["selected"].size(), 8u);

  const Aggregate krum = apply_defense({DefenseKind::kKrum}, us);
  EXPECT_EQ(krum.meta["selected"][0].get<std::size_t>(), krum_select(us, 2).index);

  EXPECT_THROW(apply_defense({DefenseKind::kNormBounding}, us), ConfigError);
  DefenseRule nb{DefenseKind::kNormBounding};
  nb.rho = 0.5;
  EXPECT_EQ(apply_defense(nb, us).meta["rho"], 0.5);
}

TEST(DefenseKindTest, ParseListsValidNames) {
  EXPECT_EQ(parse_defense_kind("multi_krum"), DefenseKind::kMultiKrum);
  try {
    parse_defense_kind("bogus");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("norm_bounding"), std::string::npos);
  }
}

}  // namespace
}  // namespace fedrec
