#include "emghd/encoder.hpp"

#include <iostream>
#include <stdexcept>
#include <string>

namespace emghd {

void validate(const EncoderConfig& config) {
  if (config.dimension == 0 || config.dimension % 2 != 0) {
    throw std::invalid_argument("EncoderConfig: dimension must be even and positive");
  }
  if (config.channels < 1) {
    throw std::invalid_argument("EncoderConfig: channels must be >= 1");
  }
  if (config.ngram_n < 1) {
    throw std::invalid_argument("EncoderConfig: ngram_n must be >= 1");
  }
}

SpatialVector encode_spatial(const FeatureFrame& frame, const ItemMemory& im) {
  if (frame.values.size() != im.channels()) {
    throw std::invalid_argument("encode_spatial: frame has " +
                                std::to_string(frame.values.size()) + " channels, item memory " +
                                std::to_string(im.channels()));
  }
  Accumulator acc(im.dim());
  for (std::size_t c = 0; c < im.channels(); ++c) {
    accumulate(acc, im.entry(c), frame.values[c]);
  }
  return SpatialVector{threshold(acc), frame.time_index};
}

SpatiotemporalVector encode_temporal(std::span<const SpatialVector> window,
                                     const EncoderConfig& config) {
  validate(config);
  if (window.size() != static_cast<std::size_t>(config.ngram_n)) {
    throw std::invalid_argument("encode_temporal: window length " +
                                std::to_string(window.size()) + " != ngram_n " +
                                std::to_string(config.ngram_n));
  }
  // oldest vector gets rotation 0, newest rotation n-1
  HdVector g = window[0].vec;
  for (std::size_t t = 1; t < window.size(); ++t) {
    g = bind(g, permute(window[t].vec, t));
  }
  return SpatiotemporalVector{std::move(g), window.back().time_index};
}

std::vector<SpatiotemporalVector> stream_encode(std::span<const FeatureFrame> frames,
                                                const ItemMemory& im,
                                                const EncoderConfig& config) {
  validate(config);
  const std::size_t n = static_cast<std::size_t>(config.ngram_n);
  if (frames.size() < n) {
    std::clog << "stream_encode: " << frames.size() << " frames < ngram window " << n
              << ", no windows emitted\n";
    return {};
  }
  std::vector<SpatialVector> spatial;
  spatial.reserve(frames.size());
  for (const FeatureFrame& f : frames) {
    spatial.push_back(encode_spatial(f, im));
  }
  std::vector<SpatiotemporalVector> out;
  out.reserve(frames.size() - n + 1);
  for (std::size_t end = n; end <= spatial.size(); ++end) {
    out.push_back(encode_temporal(std::span(spatial).subspan(end - n, n), config));
  }
  return out;
}

}  // namespace emghd
