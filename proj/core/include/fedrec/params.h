#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fedrec {

inline constexpr std::string_view kNewsSegment = "news_model";
inline constexpr std::string_view kUserSegment = "user_model";

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const Segment&) const = default;
};

// Ordered, contiguous partition of a flat parameter vector into named ranges.
class SegmentMap {
 public:
  SegmentMap() = default;

  // Validates contiguity, uniqueness and the presence of both required
  // segments. Throws StructuralError otherwise.
  explicit SegmentMap(std::vector<Segment> entries);

  // Builds a contiguous map from (name, length) pairs in order.
  static SegmentMap from_lengths(
      const std::vector<std::pair<std::string, std::size_t>>& lengths);

  const std::vector<Segment>& entries() const { return entries_; }
  std::size_t total_len() const { return total_len_; }

  // Throws LookupError for unknown names.
  const Segment& find(std::string_view name) const;
  bool contains(std::string_view name) const;

  bool operator==(const SegmentMap&) const = default;

 private:
  std::vector<Segment> entries_;
  std::size_t total_len_ = 0;
};

struct ParamVector {
  std::vector<double> values;
  SegmentMap layout;

  ParamVector() = default;
  ParamVector(std::vector<double> v, SegmentMap l);
  explicit ParamVector(SegmentMap l);

  std::size_t size() const { return values.size(); }
  std::span<double> segment(std::string_view name);
  std::span<const double> segment(std::string_view name) const;
};

struct ModelUpdate {
  std::vector<double> delta;
  SegmentMap layout;
  std::int64_t sample_size = 0;

  ModelUpdate() = default;
  ModelUpdate(std::vector<double> d, SegmentMap l, std::int64_t size = 0);

  std::span<double> segment(std::string_view name);
  std::span<const double> segment(std::string_view name) const;
};

// new - old, elementwise. sample_size is left at 0.
ModelUpdate diff_params(const ParamVector& updated, const ParamVector& old);

std::span<double> segment_slice(std::span<double> v, const SegmentMap& layout,
                                std::string_view name);
std::span<const double> segment_slice(std::span<const double> v,
                                      const SegmentMap& layout,
                                      std::string_view name);

double l2_norm(std::span<const double> v);
double squared_distance(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);

bool all_finite(std::span<const double> v);

}  // namespace fedrec
