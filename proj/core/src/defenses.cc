#include "fedrec/defenses.h"

#include <algorithm>
#include <cmath>

#include "fedrec/error.h"
#include "fedrec/fedcore.h"

namespace fedrec {
namespace {

std::size_t check_updates(std::span<const ModelUpdate> updates) {
  if (updates.empty()) throw AggregationError("no updates to aggregate");
  const std::size_t dim = updates.front().delta.size();
  for (const ModelUpdate& u : updates) {
    if (u.delta.size() != dim) {
      throw StructuralError("updates have different lengths");
    }
  }
  return dim;
}

std::vector<std::vector<double>> pairwise_sq_distances(
    std::span<const ModelUpdate> updates) {
  const std::size_t k = updates.size();
  std::vector<std::vector<double>> dist(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      dist[i][j] = dist[j][i] =
          squared_distance(updates[i].delta, updates[j].delta);
    }
  }
  return dist;
}

// Krum over the `alive` subset; returns the position in `alive`.
std::size_t krum_pick(const std::vector<std::vector<double>>& dist,
                      const std::vector<std::size_t>& alive, std::size_t f) {
  const std::size_t k = alive.size();
  if (k < f + 3) {
    throw ConfigError("krum needs k >= f + 3 (k=" + std::to_string(k) +
                      ", f=" + std::to_string(f) + ")");
  }
  const std::size_t neighbours = k - f - 2;
  std::size_t best = 0;
  double best_score = INFINITY;
  std::vector<double> row;
  for (std::size_t a = 0; a < k; ++a) {
    row.clear();
    for (std::size_t b = 0; b < k; ++b) {
      if (a != b) row.push_back(dist[alive[a]][alive[b]]);
    }
    std::sort(row.begin(), row.end());
    double score = 0.0;
    for (std::size_t n = 0; n < neighbours; ++n) score += row[n];
    if (score < best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

}  // namespace

std::string_view to_string(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::kNone: return "none";
    case DefenseKind::kMedian: return "median";
    case DefenseKind::kTrimmedMean: return "trimmed_mean";
    case DefenseKind::kKrum: return "krum";
    case DefenseKind::kMultiKrum: return "multi_krum";
    case DefenseKind::kNormBounding: return "norm_bounding";
  }
  return "unknown";
}

DefenseKind parse_defense_kind(std::string_view name) {
  for (DefenseKind k :
       {DefenseKind::kNone, DefenseKind::kMedian, DefenseKind::kTrimmedMean,
        DefenseKind::kKrum, DefenseKind::kMultiKrum,
        DefenseKind::kNormBounding}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("defense.name: unknown defense '" + std::string(name) +
                    "' (valid: none, median, trimmed_mean, krum, multi_krum, "
                    "norm_bounding)");
}

void validate(const DefenseRule& rule) {
  if (rule.beta < 0.0 || rule.beta >= 0.5) {
    throw ConfigError("defense.beta must be in [0, 0.5)");
  }
  if (rule.rho && !(*rule.rho > 0.0)) {
    throw ConfigError("defense.rho must be > 0");
  }
  if (rule.c && *rule.c < 1) throw ConfigError("defense.c must be >= 1");
}

std::size_t default_krum_f(std::size_t k) {
  return static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(k)));
}

std::vector<double> median_agg(std::span<const ModelUpdate> updates) {
  const std::size_t dim = check_updates(updates);
  const std::size_t k = updates.size();
  std::vector<double> out(dim);
  std::vector<double> column(k);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < k; ++j) column[j] = updates[j].delta[i];
    std::sort(column.begin(), column.end());
    out[i] = k % 2 == 1 ? column[k / 2]
                        : 0.5 * (column[k / 2 - 1] + column[k / 2]);
  }
  return out;
}

std::vector<double> trimmed_mean_agg(std::span<const ModelUpdate> updates,
                                     double beta) {
  const std::size_t dim = check_updates(updates);
  const std::size_t k = updates.size();
  if (beta < 0.0 || beta >= 0.5) {
    throw ConfigError("trimmed mean: beta must be in [0, 0.5)");
  }
  const auto t = static_cast<std::size_t>(std::floor(beta * static_cast<double>(k)));
  if (k < 2 * t + 1) throw ConfigError("trimmed mean: nothing left after trim");
  std::vector<double> out(dim);
  std::vector<double> column(k);
  const double kept = static_cast<double>(k - 2 * t);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < k; ++j) column[j] = updates[j].delta[i];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (std::size_t j = t; j < k - t; ++j) sum += column[j];
    out[i] = sum / kept;
  }
  return out;
}

KrumSelection krum_select(std::span<const ModelUpdate> updates,
                          std::size_t f) {
  check_updates(updates);
  const auto dist = pairwise_sq_distances(updates);
  std::vector<std::size_t> alive(updates.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
  const std::size_t index = krum_pick(dist, alive, f);
  return {index, updates[index].delta};
}

std::vector<std::size_t> multi_krum_select(
    const std::vector<std::vector<double>>& sq_dist, std::size_t f,
    std::size_t c) {
  const std::size_t k = sq_dist.size();
  if (c < 1 || k < f + 3 || c > k - f - 2) {
    throw ConfigError("multi-krum needs 1 <= c <= k - f - 2 (k=" +
                      std::to_string(k) + ", f=" + std::to_string(f) +
                      ", c=" + std::to_string(c) + ")");
  }
  std::vector<std::size_t> alive(k);
  for (std::size_t i = 0; i < k; ++i) alive[i] = i;
  std::vector<std::size_t> selected;
  for (std::size_t round = 0; round < c; ++round) {
    const std::size_t pos = krum_pick(sq_dist, alive, f);
    selected.push_back(alive[pos]);
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(pos));
  }
  return selected;
}

MultiKrumResult multi_krum_agg(std::span<const ModelUpdate> updates,
                               std::size_t f, std::size_t c) {
  const std::size_t dim = check_updates(updates);
  MultiKrumResult out;
  out.selected = multi_krum_select(pairwise_sq_distances(updates), f, c);
  out.vector.assign(dim, 0.0);
  for (std::size_t idx : out.selected) {
    const auto& d = updates[idx].delta;
    for (std::size_t i = 0; i < dim; ++i) out.vector[i] += d[i];
  }
  for (double& v : out.vector) v /= static_cast<double>(c);
  return out;
}

std::vector<double> norm_bound_agg(std::span<const ModelUpdate> updates,
                                   double rho) {
  check_updates(updates);
  if (!(rho > 0.0)) throw ConfigError("norm bounding: rho must be > 0");
  std::vector<ModelUpdate> clipped(updates.begin(), updates.end());
  for (ModelUpdate& u : clipped) {
    const double norm = l2_norm(u.delta);
    if (norm > rho) {
      const double scale = rho / norm;
      for (double& v : u.delta) v *= scale;
    }
  }
  return fedavg_aggregate(clipped);
}

Aggregate apply_defense(const DefenseRule& rule,
                        std::span<const ModelUpdate> updates) {
  const std::size_t k = updates.size();
  Aggregate out;
  out.meta["rule"] = std::string(to_string(rule.kind));
  switch (rule.kind) {
    case DefenseKind::kNone: {
      out.vector = fedavg_aggregate(updates);
      double total = 0.0;
      for (const ModelUpdate& u : updates) {
        total += static_cast<double>(u.sample_size);
      }
      std::vector<double> weights;
      for (const ModelUpdate& u : updates) {
        weights.push_back(static_cast<double>(u.sample_size) / total);
      }
      out.meta["weights"] = weights;
      break;
    }
    case DefenseKind::kMedian:
      out.vector = median_agg(updates);
      break;
    case DefenseKind::kTrimmedMean:
      out.vector = trimmed_mean_agg(updates, rule.beta);
      out.meta["beta"] = rule.beta;
      out.meta["trimmed_per_side"] = static_cast<std::size_t>(
          std::floor(rule.beta * static_cast<double>(k)));
      break;
    case DefenseKind::kKrum: {
      const std::size_t f = rule.f.value_or(default_krum_f(k));
      KrumSelection sel = krum_select(updates, f);
      out.vector = std::move(sel.vector);
      out.meta["f"] = f;
      out.meta["selected"] = std::vector<std::size_t>{sel.index};
      break;
    }
    case DefenseKind::kMultiKrum: {
      const std::size_t f = rule.f.value_or(default_krum_f(k));
      const std::size_t c =
          rule.c.value_or(k >= f + 3 ? k - f - 2 : std::size_t{1});
      MultiKrumResult res = multi_krum_agg(updates, f, c);
      out.vector = std::move(res.vector);
      out.meta["f"] = f;
      out.meta["c"] = c;
      out.meta["selected"] = res.selected;
      break;
    }
    case DefenseKind::kNormBounding: {
      if (!rule.rho) throw ConfigError("norm bounding: rho not calibrated");
      out.vector = norm_bound_agg(updates, *rule.rho);
      out.meta["rho"] = *rule.rho;
      std::size_t clipped = 0;
      for (const ModelUpdate& u : updates) {
        if (l2_norm(u.delta) > *rule.rho) ++clipped;
      }
      out.meta["clipped"] = clipped;
      break;
    }
  }
  return out;
}

}  // namespace fedrec
