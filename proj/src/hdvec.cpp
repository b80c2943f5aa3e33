#include "emghd/hdvec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace emghd {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

std::int64_t dot(const HdVector& a, const HdVector& b) {
  std::int64_t sum = 0;
  const auto ea = a.elements();
  const auto eb = b.elements();
  for (std::size_t i = 0; i < ea.size(); ++i) {
    sum += static_cast<std::int64_t>(ea[i]) * eb[i];
  }
  return sum;
}

}  // namespace

HdVector::HdVector(std::vector<std::int8_t> elements) : elems_(std::move(elements)) {
  for (std::size_t i = 0; i < elems_.size(); ++i) {
    if (elems_[i] != 1 && elems_[i] != -1) {
      throw std::invalid_argument("HdVector: element " + std::to_string(i) +
                                  " is not bipolar");
    }
  }
}

HdVector HdVector::filled(std::size_t dim, std::int8_t value) {
  if (value != 1 && value != -1) {
    throw std::invalid_argument("HdVector::filled: value must be +1 or -1");
  }
  return HdVector(std::vector<std::int8_t>(dim, value), Unchecked{});
}

Accumulator Accumulator::from_raw(std::vector<double> sums, std::size_t count) {
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (!std::isfinite(sums[i])) {
      throw std::invalid_argument("Accumulator::from_raw: non-finite sum at index " +
                                  std::to_string(i));
    }
  }
  Accumulator acc(0);
  acc.sums_ = std::move(sums);
  acc.count_ = count;
  return acc;
}

void Accumulator::add(const HdVector& v, double weight) {
  require_same_dim(dim(), v.dim(), "accumulate");
  if (!std::isfinite(weight)) {
    throw std::invalid_argument("accumulate: weight is not finite");
  }
  const auto e = v.elements();
  for (std::size_t i = 0; i < sums_.size(); ++i) {
    sums_[i] += weight * e[i];
  }
  ++count_;
}

HdVector Accumulator::thresholded() const {
  std::vector<std::int8_t> out(sums_.size());
  for (std::size_t i = 0; i < sums_.size(); ++i) {
    out[i] = sums_[i] < 0.0 ? -1 : 1;
  }
  return HdVector(std::move(out), HdVector::Unchecked{});
}

HdVector random_hd(Rng& rng, std::size_t dim) {
  if (dim == 0 || dim % 2 != 0) {
    throw std::invalid_argument("random_hd: dimension must be even and positive");
  }
  std::vector<std::int8_t> e(dim);
  for (std::size_t i = 0; i < dim / 2; ++i) e[i] = 1;
  for (std::size_t i = dim / 2; i < dim; ++i) e[i] = -1;
  // Fisher-Yates with a fully specified draw, so the same seed reproduces the
  // same vector on every platform.
  for (std::size_t i = dim - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i + 1));
    std::swap(e[i], e[j]);
  }
  return HdVector(std::move(e), HdVector::Unchecked{});
}

HdVector bind(const HdVector& a, const HdVector& b) {
  require_same_dim(a.dim(), b.dim(), "bind");
  std::vector<std::int8_t> out(a.dim());
  const auto ea = a.elements();
  const auto eb = b.elements();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::int8_t>(ea[i] * eb[i]);
  }
  return HdVector(std::move(out), HdVector::Unchecked{});
}

void accumulate(Accumulator& acc, const HdVector& v, double weight) {
  acc.add(v, weight);
}

HdVector threshold(const Accumulator& acc) { return acc.thresholded(); }

HdVector permute(const HdVector& v, std::size_t k) {
  const std::size_t dim = v.dim();
  if (dim == 0) return v;
  k %= dim;
  if (k == 0) return v;
  std::vector<std::int8_t> out(dim);
  const auto e = v.elements();
  // element i moves to (i + k) mod dim
  std::copy(e.begin(), e.end() - k, out.begin() + k);
  std::copy(e.end() - k, e.end(), out.begin());
  return HdVector(std::move(out), HdVector::Unchecked{});
}

HdVector negate(const HdVector& v) {
  std::vector<std::int8_t> out(v.dim());
  const auto e = v.elements();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::int8_t>(-e[i]);
  return HdVector(std::move(out), HdVector::Unchecked{});
}

double cosine(const HdVector& a, const HdVector& b) {
  require_same_dim(a.dim(), b.dim(), "cosine");
  if (a.dim() == 0) throw std::invalid_argument("cosine: empty vectors");
  return static_cast<double>(dot(a, b)) / static_cast<double>(a.dim());
}

double cosine(const Accumulator& a, const HdVector& b) {
  require_same_dim(a.dim(), b.dim(), "cosine");
  if (a.dim() == 0) throw std::invalid_argument("cosine: empty vectors");
  double num = 0.0;
  double norm_sq = 0.0;
  const auto s = a.sums();
  const auto e = b.elements();
  for (std::size_t i = 0; i < s.size(); ++i) {
    num += s[i] * e[i];
    norm_sq += s[i] * s[i];
  }
  if (norm_sq == 0.0) {
    throw std::domain_error("cosine: accumulator has zero norm");
  }
  return num / (std::sqrt(norm_sq) * std::sqrt(static_cast<double>(b.dim())));
}

ItemMemory::ItemMemory(std::uint64_t seed, std::size_t channels, std::size_t dim)
    : seed_(seed), dim_(dim) {
  if (channels == 0) {
    throw std::invalid_argument("ItemMemory: channel count must be positive");
  }
  Rng rng(seed);
  entries_.reserve(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    entries_.push_back(random_hd(rng, dim));
  }
  // Quasi-orthogonality gate: |cos| <= 5/sqrt(dim) for every pair. A seed
  // failing this is astronomically rare; reject it rather than carry
  // correlated symbols into the encoder.
  const double bound = 5.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t i = 0; i < channels; ++i) {
    for (std::size_t j = i + 1; j < channels; ++j) {
      const double c = cosine(entries_[i], entries_[j]);
      if (std::abs(c) > bound) {
        throw std::runtime_error(
            "ItemMemory: seed " + std::to_string(seed) + " yields correlated entries " +
            std::to_string(i) + "," + std::to_string(j) + " (|cos|=" + std::to_string(std::abs(c)) +
            " > " + std::to_string(bound) + "); choose another seed");
      }
    }
  }
}

}  // namespace emghd
