#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "emghd/classifier.hpp"
#include "emghd/dsp.hpp"

namespace emghd {

// Multichannel raw EMG, channels-major.
struct Recording {
  std::size_t channels = 0;
  std::size_t sample_count = 0;  // per channel
  double sample_rate = 1000.0;
  std::string subject_id;
  std::string session_id;
  double scale = 1.0;  // physical units per sample value (metadata only)
  std::vector<float> samples;  // channels * sample_count, channel-major

  std::span<const float> channel(std::size_t c) const {
    return std::span(samples).subspan(c * sample_count, sample_count);
  }
  std::span<float> channel(std::size_t c) {
    return std::span(samples).subspan(c * sample_count, sample_count);
  }

  /// Rectangular shape, positive rate, finite samples.
  void validate() const;
};

// Half-open labeled range of samples. trial is -1 when unknown.
struct LabeledSegment {
  Gesture label = Gesture::rest;
  std::int64_t start_sample = 0;
  std::int64_t end_sample = 0;
  int trial = -1;
};

// One session: `trials` sequences of the four hard gestures, each hold
// bracketed by rest, with the centered labeled_seconds of every hold labeled.
struct SessionPlan {
  int trials = 10;
  std::vector<std::vector<Gesture>> trial_sequences;  // hard gestures per trial
  double hold_seconds = 5.0;
  double labeled_seconds = 3.0;
  bool rest_bracketing = true;
};

/// Plan with per-trial seeded shuffles of the four hard gestures.
SessionPlan make_default_plan(int trials, std::uint64_t seed);

// The electrode grid: 4 rows of 16 electrodes around the forearm
// circumference. Channel index = row * 16 + column.
inline constexpr int kGridRows = 4;
inline constexpr int kGridCols = 16;
inline constexpr std::size_t kGridChannels = 64;
inline std::size_t grid_channel(int row, int col) {
  return static_cast<std::size_t>(row) * kGridCols + static_cast<std::size_t>(col);
}

// Per-gesture 64-channel intensity profiles driving the synthesizer.
struct GestureProfiles {
  std::array<std::array<double, kGridChannels>, kGestureCount> intensity{};
};

/// Five overlapping-but-distinct spatial patterns (pairwise correlation
/// <= 0.5) with a near-zero rest pattern.
GestureProfiles default_gesture_profiles();

/// Multiplies every intensity by (1 + jitter * u), u uniform in [-1, 1].
GestureProfiles jittered_profiles(const GestureProfiles& base, double jitter, std::uint64_t seed);

struct SynthesisConfig {
  double sample_rate = 1000.0;
  std::size_t channels = kGridChannels;
  double noise_level = 0.05;        // baseline wideband noise, std
  double interference_amp = 0.5;    // 60 Hz interference amplitude
  double interference_freq = 60.0;
  double ramp_seconds = 0.2;        // intensity crossfade at hold boundaries
  double carrier_low = 20.0;        // flat carrier band
  double carrier_high = 150.0;
  double hold_variability = 0.3;    // per-hold per-channel contraction spread
};

struct SynthesizedSession {
  Recording recording;
  std::vector<LabeledSegment> segments;
};

/// Band-limited noise carriers amplitude-modulated by the held gesture's
/// channel intensity, plus baseline noise and power-line interference.
/// Deterministic given the seed.
SynthesizedSession synthesize(const SessionPlan& plan, const GestureProfiles& profiles,
                              const SynthesisConfig& config, std::uint64_t seed);

/// Per-channel gain, added noise, and cyclic rotation of the channel order
/// within each grid row (armband rotation). gains may be empty (all 1).
Recording perturb(const Recording& recording, std::span<const double> gains, double extra_noise,
                  int channel_shift, std::uint64_t seed);

// Mean normalized activity per electrode for one gesture, on the 16 x 4 grid.
struct ActivityMap {
  std::array<double, kGridChannels> values{};  // in [0, 1]
};

/// Per gesture, per channel mean of the listed frames, rescaled to [0, 1]
/// per map (an all-zero map stays zero).
std::map<Gesture, ActivityMap> activity_maps(
    std::span<const FeatureFrame> frames,
    const std::map<Gesture, std::vector<std::size_t>>& frames_by_gesture);

/// Frame indices fully covered by [start_sample, end_sample) after
/// decimation: [ceil(start/d), floor(end/d)).
std::pair<std::int64_t, std::int64_t> frame_range(const LabeledSegment& segment, int decim_factor);

// Native container: text manifest at `path` plus `path`.f32 payload of
// little-endian floats, channel-major, guarded by a CRC32.
void save_recording(const std::string& path, const Recording& recording,
                    std::span<const LabeledSegment> segments);

struct LoadedRecording {
  Recording recording;
  std::vector<LabeledSegment> segments;
};

LoadedRecording load_recording(const std::string& path);

/// 16 x 4 portable graymap (P2, maxval 255); deterministic bytes.
void write_pgm(const std::string& path, const ActivityMap& map);

}  // namespace emghd
