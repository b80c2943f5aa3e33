#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "emghd/rng.hpp"

namespace emghd {

/// Bipolar hyperdimensional vector: every element is exactly +1 or -1.
class HdVector {
 public:
  HdVector() = default;

  /// Validates that every element is +1 or -1.
  explicit HdVector(std::vector<std::int8_t> elements);

  /// Constant vector of `value` (+1 or -1).
  static HdVector filled(std::size_t dim, std::int8_t value);

  std::size_t dim() const { return elems_.size(); }
  std::int8_t operator[](std::size_t i) const { return elems_[i]; }
  std::span<const std::int8_t> elements() const { return elems_; }

  bool operator==(const HdVector&) const = default;

 private:
  struct Unchecked {};
  HdVector(std::vector<std::int8_t> elements, Unchecked) : elems_(std::move(elements)) {}

  std::vector<std::int8_t> elems_;

  friend HdVector random_hd(Rng&, std::size_t);
  friend HdVector bind(const HdVector&, const HdVector&);
  friend HdVector permute(const HdVector&, std::size_t);
  friend HdVector negate(const HdVector&);
  friend class Accumulator;
};

/// Real-valued element sums for bundling; single-writer.
class Accumulator {
 public:
  explicit Accumulator(std::size_t dim) : sums_(dim, 0.0) {}

  /// Reconstructs persisted state (sums must be finite).
  static Accumulator from_raw(std::vector<double> sums, std::size_t count);

  std::size_t dim() const { return sums_.size(); }
  std::size_t count() const { return count_; }
  std::span<const double> sums() const { return sums_; }

  /// sums += weight * v, element-wise; count is incremented.
  void add(const HdVector& v, double weight);

  /// Element-wise sign; a sum of exactly 0 maps to +1.
  HdVector thresholded() const;

 private:
  std::vector<double> sums_;
  std::size_t count_ = 0;
};

/// Random bipolar vector with exactly dim/2 elements of each sign,
/// placed by a seeded Fisher-Yates shuffle. dim must be even.
HdVector random_hd(Rng& rng, std::size_t dim);

/// Element-wise product; the result is dissimilar to both inputs.
HdVector bind(const HdVector& a, const HdVector& b);

/// Free-function form of Accumulator::add.
void accumulate(Accumulator& acc, const HdVector& v, double weight);

/// Free-function form of Accumulator::thresholded.
HdVector threshold(const Accumulator& acc);

/// Cyclic rotation: element at index i moves to index (i + k) mod dim.
HdVector permute(const HdVector& v, std::size_t k);

HdVector negate(const HdVector& v);

/// Cosine similarity in [-1, 1]; for bipolar vectors equals
/// (dim - 2 * hamming) / dim.
double cosine(const HdVector& a, const HdVector& b);

/// Cosine of raw accumulator sums against a bipolar vector.
/// Throws if the accumulator has zero norm.
double cosine(const Accumulator& a, const HdVector& b);

/// Fixed symbol table: one quasi-orthogonal vector per electrode channel,
/// regenerated bit-exactly from (seed, channels, dim).
class ItemMemory {
 public:
  ItemMemory(std::uint64_t seed, std::size_t channels, std::size_t dim);

  const HdVector& entry(std::size_t channel) const { return entries_[channel]; }
  std::size_t channels() const { return entries_.size(); }
  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::size_t dim_;
  std::vector<HdVector> entries_;
};

}  // namespace emghd
