#include "fedrec/params.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "fedrec/error.h"

namespace fedrec {

SegmentMap::SegmentMap(std::vector<Segment> entries)
    : entries_(std::move(entries)) {
  std::set<std::string> names;
  std::size_t cursor = 0;
  for (const Segment& s : entries_) {
    if (s.offset != cursor) {
      throw StructuralError("segment '" + s.name + "' is not contiguous");
    }
    if (!names.insert(s.name).second) {
      throw StructuralError("duplicate segment name '" + s.name + "'");
    }
    cursor += s.length;
  }
  total_len_ = cursor;
  for (std::string_view required : {kNewsSegment, kUserSegment}) {
    if (!names.contains(std::string(required))) {
      throw StructuralError("missing required segment '" +
                            std::string(required) + "'");
    }
  }
}

SegmentMap SegmentMap::from_lengths(
    const std::vector<std::pair<std::string, std::size_t>>& lengths) {
  std::vector<Segment> entries;
  std::size_t offset = 0;
  for (const auto& [name, len] : lengths) {
    entries.push_back({name, offset, len});
    offset += len;
  }
  return SegmentMap(std::move(entries));
}

const Segment& SegmentMap::find(std::string_view name) const {
  for (const Segment& s : entries_) {
    if (s.name == name) return s;
  }
  throw LookupError("unknown segment '" + std::string(name) + "'");
}

bool SegmentMap::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Segment& s) { return s.name == name; });
}

ParamVector::ParamVector(std::vector<double> v, SegmentMap l)
    : values(std::move(v)), layout(std::move(l)) {
  if (values.size() != layout.total_len()) {
    throw StructuralError("parameter vector length does not match layout");
  }
}

ParamVector::ParamVector(SegmentMap l)
    : values(l.total_len(), 0.0), layout(std::move(l)) {}

std::span<double> ParamVector::segment(std::string_view name) {
  return segment_slice(std::span<double>(values), layout, name);
}

std::span<const double> ParamVector::segment(std::string_view name) const {
  return segment_slice(std::span<const double>(values), layout, name);
}

ModelUpdate::ModelUpdate(std::vector<double> d, SegmentMap l,
                         std::int64_t size)
    : delta(std::move(d)), layout(std::move(l)), sample_size(size) {
  if (delta.size() != layout.total_len()) {
    throw StructuralError("update length does not match layout");
  }
  if (sample_size < 0) throw StructuralError("negative sample size");
}

std::span<double> ModelUpdate::segment(std::string_view name) {
  return segment_slice(std::span<double>(delta), layout, name);
}

std::span<const double> ModelUpdate::segment(std::string_view name) const {
  return segment_slice(std::span<const double>(delta), layout, name);
}

ModelUpdate diff_params(const ParamVector& updated, const ParamVector& old) {
  if (!(updated.layout == old.layout) ||
      updated.values.size() != old.values.size()) {
    throw StructuralError("diff_params: layout mismatch");
  }
  std::vector<double> delta(updated.values.size());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    delta[i] = updated.values[i] - old.values[i];
  }
  return ModelUpdate(std::move(delta), updated.layout, 0);
}

std::span<double> segment_slice(std::span<double> v, const SegmentMap& layout,
                                std::string_view name) {
  const Segment& s = layout.find(name);
  if (s.offset + s.length > v.size()) {
    throw StructuralError("segment exceeds vector length");
  }
  return v.subspan(s.offset, s.length);
}

std::span<const double> segment_slice(std::span<const double> v,
                                      const SegmentMap& layout,
                                      std::string_view name) {
  const Segment& s = layout.find(name);
  if (s.offset + s.length > v.size()) {
    throw StructuralError("segment exceeds vector length");
  }
  return v.subspan(s.offset, s.length);
}

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace fedrec
