#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedrec/params.h"

namespace fedrec {

enum class DefenseKind {
  kNone,
  kMedian,
  kTrimmedMean,
  kKrum,
  kMultiKrum,
  kNormBounding,
};

std::string_view to_string(DefenseKind kind);
// Throws ConfigError listing the valid names.
DefenseKind parse_defense_kind(std::string_view name);

struct DefenseRule {
  DefenseKind kind = DefenseKind::kNone;
  // Assumed Byzantine count; default ceil(0.1 * k).
  std::optional<std::size_t> f;
  // Multi-Krum selection count; default k - f - 2.
  std::optional<std::size_t> c;
  // Trimmed-mean fraction per side.
  double beta = 0.1;
  // Norm-Bounding threshold; when unset the caller calibrates it.
  std::optional<double> rho;
};

void validate(const DefenseRule& rule);

// Coordinate-wise median; the mean of the two middle values for even counts.
std::vector<double> median_agg(std::span<const ModelUpdate> updates);

// Drops floor(beta * k) smallest and largest values per coordinate.
std::vector<double> trimmed_mean_agg(std::span<const ModelUpdate> updates,
                                     double beta);

struct KrumSelection {
  std::size_t index = 0;
  std::vector<double> vector;
};

// Picks the update whose k - f - 2 nearest peers are closest in squared L2
// distance; lowest index wins ties. Requires k >= f + 3.
KrumSelection krum_select(std::span<const ModelUpdate> updates, std::size_t f);

struct MultiKrumResult {
  std::vector<double> vector;
  // Indices into the input list, in selection order.
  std::vector<std::size_t> selected;
};

// Applies Krum c times, removing each pick, and averages the picks.
// Requires 1 <= c <= k - f - 2.
MultiKrumResult multi_krum_agg(std::span<const ModelUpdate> updates,
                               std::size_t f, std::size_t c);

// Iterative Krum selection over a precomputed squared-distance matrix.
// Returns the selected indices in order.
std::vector<std::size_t> multi_krum_select(
    const std::vector<std::vector<double>>& sq_dist, std::size_t f,
    std::size_t c);

// Scales each delta by min(1, rho / ||delta||) then takes the sample-size
// weighted mean.
std::vector<double> norm_bound_agg(std::span<const ModelUpdate> updates,
                                   double rho);

struct Aggregate {
  std::vector<double> vector;
  nlohmann::json meta = nlohmann::json::object();
};

// Dispatches to the configured rule (plain weighted FedAvg for kNone).
// Updates must already exclude zero-size submissions.
Aggregate apply_defense(const DefenseRule& rule,
                        std::span<const ModelUpdate> updates);

std::size_t default_krum_f(std::size_t k);

}  // namespace fedrec
