#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "emghd/dsp.hpp"
#include "emghd/hdvec.hpp"

namespace emghd {

struct EncoderConfig {
  std::size_t dimension = 10000;
  std::size_t channels = 64;
  int ngram_n = 5;
  std::uint64_t im_seed = 42;
};

void validate(const EncoderConfig& config);

// Thresholded weighted sum of electrode vectors for one feature frame.
struct SpatialVector {
  HdVector vec;
  std::int64_t time_index = 0;
};

// Product of progressively rotated spatial vectors over an n-frame window,
// tagged with the newest frame's index.
struct SpatiotemporalVector {
  HdVector vec;
  std::int64_t time_index = 0;
};

/// S = sign(sum_i E_i * v_i) over all channels of the frame.
SpatialVector encode_spatial(const FeatureFrame& frame, const ItemMemory& im);

/// G = prod_t rotate(S_t, t) for t = 0..n-1, window ordered oldest to newest.
SpatiotemporalVector encode_temporal(std::span<const SpatialVector> window,
                                     const EncoderConfig& config);

/// One spatiotemporal vector per frame index >= n-1, sliding by one frame;
/// spatial vectors are computed once and shared across overlapping windows.
/// Fewer than n frames yields an empty result (with a diagnostic on clog).
std::vector<SpatiotemporalVector> stream_encode(std::span<const FeatureFrame> frames,
                                                const ItemMemory& im,
                                                const EncoderConfig& config);

}  // namespace emghd
