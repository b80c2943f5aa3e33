#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace emghd {

struct Recording;  // dataset.hpp

// Parameters of the preprocessing chain. Defaults: 60 Hz notch with Q 50,
// 8th-order 1-200 Hz Butterworth band-pass, 100-sample rectified moving
// average, decimation by 100 (1 kS/s -> 10 frames/s).
struct FilterSpec {
  double sample_rate = 1000.0;
  double notch_freq = 60.0;
  double notch_q = 50.0;
  double bp_low = 1.0;
  double bp_high = 200.0;
  int bp_order = 8;
  int ma_window = 100;
  int decim_factor = 100;
};

/// Throws emghd::Error{validation} when the spec violates its invariants.
void validate(const FilterSpec& spec);

// One second-order section, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

// Cascade of second-order sections with per-channel direct-form-II-transposed
// state. Coefficients are immutable; state is single-writer per channel.
class BiquadCascade {
 public:
  explicit BiquadCascade(std::vector<Biquad> sections);

  const std::vector<Biquad>& sections() const { return sections_; }

  /// Allocates and zeroes state for `channels` independent streams.
  void reset(std::size_t channels);
  std::size_t channels() const { return channels_; }

  /// All poles strictly inside the unit circle (Jury criterion per section).
  bool stable() const;

  /// Causal single-pass filtering of one channel; state evolves.
  /// in and out may alias. Throws on non-finite input, naming channel and index.
  void apply(std::size_t channel, std::span<const double> in, std::span<double> out);

  std::vector<double> apply_copy(std::size_t channel, std::span<const double> in);

 private:
  std::vector<Biquad> sections_;
  std::size_t channels_ = 0;
  std::vector<double> state_;  // channels x sections x 2
};

/// Second-order IIR notch at spec.notch_freq with quality factor spec.notch_q;
/// unity gain at DC and Nyquist.
BiquadCascade design_notch(const FilterSpec& spec);

/// Butterworth band-pass of order spec.bp_order (bp_order/2 sections) with
/// -3 dB points at bp_low and bp_high, via the analog prototype and bilinear
/// transform with frequency prewarping.
BiquadCascade design_bandpass(const FilterSpec& spec);

/// Causal rectified moving average: y[t] = mean |x[t-w+1 .. t]|, with prefix
/// means over the first w-1 samples.
std::vector<double> envelope(std::span<const double> x, int ma_window);

// Per-channel scale fitted on a training recording and reused on test data.
struct ChannelNormalization {
  std::vector<double> scale;  // all > 0
  std::string method = "max_abs";
};

/// scale[c] = max envelope value on channel c; a silent channel gets scale 1.
ChannelNormalization fit_normalization(const std::vector<std::vector<double>>& env_channels);

// One preprocessed, normalized, decimated multichannel sample.
struct FeatureFrame {
  std::vector<double> values;  // per channel, in [0, 1]
  std::int64_t time_index = 0;
};

/// Divides each channel by its scale, clamps to [0, 1], and keeps the last
/// sample of every decim_factor-sized block.
std::vector<FeatureFrame> normalize_decimate(const std::vector<std::vector<double>>& env_channels,
                                             const ChannelNormalization& norm, int decim_factor);

struct PreprocessResult {
  std::vector<FeatureFrame> frames;
  ChannelNormalization norm;
};

/// Full chain: notch -> band-pass -> envelope -> normalize -> decimate.
/// Fits normalization on this recording when norm is null, else reuses it.
PreprocessResult preprocess(const Recording& recording, const FilterSpec& spec,
                            const ChannelNormalization* norm = nullptr);

}  // namespace emghd
