#include "emghd/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "emghd/dataset.hpp"
#include "emghd/errors.hpp"

namespace emghd {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::complex<double> bilinear(std::complex<double> s, double k) { return (k + s) / (k - s); }

double section_magnitude(const Biquad& s, double omega) {
  const std::complex<double> z1 = std::polar(1.0, -omega);
  const std::complex<double> z2 = z1 * z1;
  const std::complex<double> num = s.b0 + s.b1 * z1 + s.b2 * z2;
  const std::complex<double> den = 1.0 + s.a1 * z1 + s.a2 * z2;
  return std::abs(num / den);
}

}  // namespace

void validate(const FilterSpec& spec) {
  const double nyquist = spec.sample_rate / 2.0;
  if (!(spec.sample_rate > 0.0)) {
    throw Error(ErrorCategory::validation, "FilterSpec: sample_rate must be positive");
  }
  if (!(spec.bp_low > 0.0 && spec.bp_low < spec.bp_high && spec.bp_high < nyquist)) {
    throw Error(ErrorCategory::validation,
                "FilterSpec: requires 0 < bp_low < bp_high < sample_rate/2");
  }
  if (!(spec.notch_freq > 0.0 && spec.notch_freq < nyquist)) {
    throw Error(ErrorCategory::validation, "FilterSpec: notch_freq must be below Nyquist");
  }
  if (!(spec.notch_q > 0.0)) {
    throw Error(ErrorCategory::validation, "FilterSpec: notch_q must be positive");
  }
  if (spec.bp_order < 2 || spec.bp_order % 2 != 0) {
    throw Error(ErrorCategory::validation, "FilterSpec: bp_order must be even and >= 2");
  }
  if (spec.ma_window < 1) {
    throw Error(ErrorCategory::validation, "FilterSpec: ma_window must be >= 1");
  }
  if (spec.decim_factor < 1) {
    throw Error(ErrorCategory::validation, "FilterSpec: decim_factor must be >= 1");
  }
}

BiquadCascade::BiquadCascade(std::vector<Biquad> sections) : sections_(std::move(sections)) {
  reset(1);
}

void BiquadCascade::reset(std::size_t channels) {
  channels_ = channels;
  state_.assign(channels * sections_.size() * 2, 0.0);
}

bool BiquadCascade::stable() const {
  for (const Biquad& s : sections_) {
    if (!(std::abs(s.a2) < 1.0 && std::abs(s.a1) < 1.0 + s.a2)) return false;
  }
  return true;
}

void BiquadCascade::apply(std::size_t channel, std::span<const double> in,
                          std::span<double> out) {
  if (channel >= channels_) {
    throw Error(ErrorCategory::validation,
                "filter_apply: channel " + std::to_string(channel) + " outside allocated state (" +
                    std::to_string(channels_) + " channels)");
  }
  if (out.size() != in.size()) {
    throw Error(ErrorCategory::validation, "filter_apply: output length mismatch");
  }
  double* st = state_.data() + channel * sections_.size() * 2;
  for (std::size_t n = 0; n < in.size(); ++n) {
    double x = in[n];
    if (!std::isfinite(x)) {
      throw Error(ErrorCategory::validation, "filter_apply: non-finite sample on channel " +
                                                 std::to_string(channel) + " at index " +
                                                 std::to_string(n));
    }
    for (std::size_t k = 0; k < sections_.size(); ++k) {
      const Biquad& s = sections_[k];
      double& s1 = st[2 * k];
      double& s2 = st[2 * k + 1];
      const double y = s.b0 * x + s1;
      s1 = s.b1 * x - s.a1 * y + s2;
      s2 = s.b2 * x - s.a2 * y;
      x = y;
    }
    out[n] = x;
  }
}

std::vector<double> BiquadCascade::apply_copy(std::size_t channel, std::span<const double> in) {
  std::vector<double> out(in.size());
  apply(channel, in, out);
  return out;
}

BiquadCascade design_notch(const FilterSpec& spec) {
  validate(spec);
  const double w0 = 2.0 * kPi * spec.notch_freq / spec.sample_rate;
  const double alpha = std::sin(w0) / (2.0 * spec.notch_q);
  const double a0 = 1.0 + alpha;
  const double c = -2.0 * std::cos(w0);
  return BiquadCascade({Biquad{1.0 / a0, c / a0, 1.0 / a0, c / a0, (1.0 - alpha) / a0}});
}

BiquadCascade design_bandpass(const FilterSpec& spec) {
  validate(spec);
  const int n_proto = spec.bp_order / 2;
  const double fs = spec.sample_rate;
  const double k = 2.0 * fs;
  // prewarped analog edge frequencies
  const double w1 = k * std::tan(kPi * spec.bp_low / fs);
  const double w2 = k * std::tan(kPi * spec.bp_high / fs);
  const double w0sq = w1 * w2;
  const double bw = w2 - w1;

  std::vector<Biquad> sections;
  sections.reserve(static_cast<std::size_t>(n_proto));
  for (int i = 1; i <= n_proto; ++i) {
    const double theta = kPi * (2.0 * i + n_proto - 1.0) / (2.0 * n_proto);
    const std::complex<double> proto(std::cos(theta), std::sin(theta));
    if (proto.imag() < -1e-12) continue;  // conjugate of an already-handled pole
    // low-pass -> band-pass: s_lp = (s^2 + w0^2) / (bw * s)
    const std::complex<double> half = 0.5 * bw * proto;
    const std::complex<double> disc = std::sqrt(half * half - w0sq);
    const std::complex<double> sa = half + disc;
    const std::complex<double> sb = half - disc;
    if (std::abs(proto.imag()) <= 1e-12) {
      // real prototype pole: sa and sb together form one section
      const std::complex<double> za = bilinear(sa, k);
      const std::complex<double> zb = bilinear(sb, k);
      sections.push_back(Biquad{1.0, 0.0, -1.0, -(za + zb).real(), (za * zb).real()});
    } else {
      // complex pole: each band-pass pole pairs with its conjugate
      for (const auto& s : {sa, sb}) {
        const std::complex<double> z = bilinear(s, k);
        sections.push_back(Biquad{1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
      }
    }
  }
  // unity gain at the digital centre frequency (the image of sqrt(w1*w2))
  const double wc = 2.0 * std::atan(std::sqrt(w0sq) / k);
  for (Biquad& s : sections) {
    const double g = section_magnitude(s, wc);
    s.b0 /= g;
    s.b1 /= g;
    s.b2 /= g;
  }
  return BiquadCascade(std::move(sections));
}

std::vector<double> envelope(std::span<const double> x, int ma_window) {
  if (ma_window < 1) {
    throw Error(ErrorCategory::validation, "envelope: ma_window must be >= 1");
  }
  const std::size_t w = static_cast<std::size_t>(ma_window);
  std::vector<double> y(x.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    sum += std::abs(x[t]);
    if (t >= w) sum -= std::abs(x[t - w]);
    if (sum < 0.0) sum = 0.0;  // guard against rounding in the running sum
    y[t] = sum / static_cast<double>(std::min(t + 1, w));
  }
  return y;
}

ChannelNormalization fit_normalization(const std::vector<std::vector<double>>& env_channels) {
  if (env_channels.empty()) {
    throw Error(ErrorCategory::validation, "fit_normalization: no channels");
  }
  ChannelNormalization norm;
  norm.scale.reserve(env_channels.size());
  for (std::size_t c = 0; c < env_channels.size(); ++c) {
    if (env_channels[c].empty()) {
      throw Error(ErrorCategory::validation,
                  "fit_normalization: channel " + std::to_string(c) + " is empty");
    }
    const double m = *std::max_element(env_channels[c].begin(), env_channels[c].end());
    norm.scale.push_back(m > 0.0 ? m : 1.0);
  }
  return norm;
}

std::vector<FeatureFrame> normalize_decimate(const std::vector<std::vector<double>>& env_channels,
                                             const ChannelNormalization& norm, int decim_factor) {
  if (decim_factor < 1) {
    throw Error(ErrorCategory::validation, "normalize_decimate: decim_factor must be >= 1");
  }
  if (norm.scale.size() != env_channels.size()) {
    throw Error(ErrorCategory::validation, "normalize_decimate: normalization channel mismatch");
  }
  const std::size_t channels = env_channels.size();
  const std::size_t samples = channels == 0 ? 0 : env_channels[0].size();
  const std::size_t d = static_cast<std::size_t>(decim_factor);
  const std::size_t n_frames = samples / d;
  std::vector<FeatureFrame> frames(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    frames[i].time_index = static_cast<std::int64_t>(i);
    frames[i].values.resize(channels);
    const std::size_t t = (i + 1) * d - 1;  // last sample of the block
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = env_channels[c][t] / norm.scale[c];
      frames[i].values[c] = std::clamp(v, 0.0, 1.0);
    }
  }
  return frames;
}

PreprocessResult preprocess(const Recording& recording, const FilterSpec& spec,
                            const ChannelNormalization* norm) {
  validate(spec);
  if (recording.sample_rate != spec.sample_rate) {
    throw Error(ErrorCategory::validation,
                "preprocess: recording sample rate does not match FilterSpec");
  }
  if (norm != nullptr && norm->scale.size() != recording.channels) {
    throw Error(ErrorCategory::validation, "preprocess: normalization channel mismatch");
  }
  BiquadCascade notch = design_notch(spec);
  BiquadCascade bp = design_bandpass(spec);
  notch.reset(recording.channels);
  bp.reset(recording.channels);

  std::vector<std::vector<double>> kept(recording.channels);
  std::vector<double> fitted_scale(recording.channels, 1.0);
  std::vector<double> buf;
  for (std::size_t c = 0; c < recording.channels; ++c) {
    const auto raw = recording.channel(c);
    buf.assign(raw.begin(), raw.end());
    notch.apply(c, buf, buf);
    bp.apply(c, buf, buf);
    const std::vector<double> env = envelope(buf, spec.ma_window);
    if (norm == nullptr && !env.empty()) {
      const double m = *std::max_element(env.begin(), env.end());
      fitted_scale[c] = m > 0.0 ? m : 1.0;
    }
    const std::size_t d = static_cast<std::size_t>(spec.decim_factor);
    kept[c].reserve(env.size() / d);
    for (std::size_t t = d - 1; t < env.size(); t += d) {
      kept[c].push_back(env[t]);
    }
  }

  PreprocessResult result;
  if (norm != nullptr) {
    result.norm = *norm;
  } else {
    result.norm.scale = std::move(fitted_scale);
  }
  // kept already holds one sample per decimation block
  result.frames = normalize_decimate(kept, result.norm, 1);
  return result;
}

}  // namespace emghd
