#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emghd/encoder.hpp"
#include "emghd/hdvec.hpp"

namespace emghd {

// The four hard gestures plus rest. Ids are stable; ties break toward the
// lowest id.
enum class Gesture : int {
  fist = 0,
  raise = 1,
  lower = 2,
  open = 3,
  rest = 4,
};

inline constexpr int kGestureCount = 5;
inline constexpr std::array<Gesture, kGestureCount> kAllGestures = {
    Gesture::fist, Gesture::raise, Gesture::lower, Gesture::open, Gesture::rest};

std::string_view gesture_name(Gesture g);
std::optional<Gesture> gesture_from_name(std::string_view name);
inline int gesture_id(Gesture g) { return static_cast<int>(g); }

struct LabelSimilarity {
  Gesture label;
  double cosine;
};

struct ClassificationResult {
  Gesture predicted = Gesture::rest;
  std::vector<LabelSimilarity> similarities;  // trained labels in id order
  std::int64_t time_index = 0;
};

// Per-gesture prototype store. Prototypes are always the thresholded
// accumulators, so training is resumable.
class AssociativeMemory {
 public:
  explicit AssociativeMemory(EncoderConfig config);

  const EncoderConfig& config() const { return config_; }

  /// Adds every vector with unit weight to the label's accumulator and
  /// refreshes the prototype. Throws on an empty sequence.
  void train(std::span<const SpatiotemporalVector> vectors, Gesture label);

  /// Cosine similarity against every trained prototype; argmax wins,
  /// exact ties go to the lowest label id. Throws when nothing is trained.
  ClassificationResult classify(const SpatiotemporalVector& g) const;

  std::vector<Gesture> labels() const;
  bool has(Gesture label) const;
  const Accumulator& accumulator(Gesture label) const;
  const HdVector& prototype(Gesture label) const;

  /// Writes a text manifest at `path` plus a binary payload at `path`.f64;
  /// round-trips bit-exactly.
  void save(const std::string& path) const;
  static AssociativeMemory load(const std::string& path);

 private:
  void restore(Gesture label, std::vector<double> sums, std::size_t count);

  EncoderConfig config_;
  std::array<std::optional<Accumulator>, kGestureCount> acc_;
  std::array<HdVector, kGestureCount> proto_;
};

/// Majority vote over the most recent min(window, available) results; ties go
/// to the label seen most recently among the tied ones.
Gesture vote(std::span<const ClassificationResult> results, int window = 11);

}  // namespace emghd
