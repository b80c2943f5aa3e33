#include "emghd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "container_io.hpp"
#include "emghd/errors.hpp"
#include "emghd/rng.hpp"

namespace emghd {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string sanitize_id(const std::string& id) {
  std::string out = id.empty() ? "unnamed" : id;
  for (char& c : out) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') c = '_';
  }
  return out;
}

// Gaussian blob on the electrode grid; columns wrap around the circumference.
double grid_blob(int row, int col, double row0, double col0, double row_sigma,
                 double col_sigma) {
  const double dr = (row - row0) / row_sigma;
  double dc = std::abs(col - col0);
  dc = std::min(dc, kGridCols - dc) / col_sigma;
  return std::exp(-0.5 * (dr * dr + dc * dc));
}

}  // namespace

void Recording::validate() const {
  if (channels == 0 || sample_count == 0) {
    throw Error(ErrorCategory::validation, "Recording: empty");
  }
  if (samples.size() != channels * sample_count) {
    throw Error(ErrorCategory::validation, "Recording: sample matrix is not rectangular");
  }
  if (!(sample_rate > 0.0)) {
    throw Error(ErrorCategory::validation, "Recording: sample_rate must be positive");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      throw Error(ErrorCategory::validation,
                  "Recording: non-finite sample at flat index " + std::to_string(i));
    }
  }
}

SessionPlan make_default_plan(int trials, std::uint64_t seed) {
  if (trials < 1) {
    throw Error(ErrorCategory::validation, "make_default_plan: trials must be >= 1");
  }
  SessionPlan plan;
  plan.trials = trials;
  Rng rng(seed);
  const std::array<Gesture, 4> hard = {Gesture::fist, Gesture::raise, Gesture::lower,
                                       Gesture::open};
  for (int t = 0; t < trials; ++t) {
    std::vector<Gesture> seq(hard.begin(), hard.end());
    for (std::size_t i = seq.size() - 1; i > 0; --i) {
      std::swap(seq[i], seq[uniform_below(rng, i + 1)]);
    }
    plan.trial_sequences.push_back(std::move(seq));
  }
  return plan;
}

GestureProfiles default_gesture_profiles() {
  GestureProfiles p;
  struct Blob {
    double row, col, row_sigma, col_sigma, amp;
  };
  const std::array<std::vector<Blob>, kGestureCount> blobs = {{
      /* fist  */ {{1.0, 2.0, 1.2, 1.6, 1.0}, {2.5, 4.0, 1.2, 1.6, 0.8}},
      /* raise */ {{0.5, 7.0, 1.2, 1.6, 1.0}, {1.5, 9.0, 1.2, 1.6, 0.7}},
      /* lower */ {{3.0, 10.5, 1.2, 1.6, 1.0}, {2.0, 12.5, 1.2, 1.6, 0.7}},
      /* open  */ {{0.5, 14.0, 1.2, 1.6, 1.0}, {2.5, 0.0, 1.2, 1.6, 0.6}},
      /* rest  */ {{0.5, 4.5, 1.5, 2.5, 0.04}, {3.0, 12.0, 1.5, 2.5, 0.04}},
  }};
  for (int g = 0; g < kGestureCount; ++g) {
    const bool is_rest = g == gesture_id(Gesture::rest);
    for (int r = 0; r < kGridRows; ++r) {
      for (int c = 0; c < kGridCols; ++c) {
        double v = 0.0;
        for (const Blob& b : blobs[g]) {
          v += b.amp * grid_blob(r, c, b.row, b.col, b.row_sigma, b.col_sigma);
        }
        // hard gestures ride on a small muscle-tone floor
        if (!is_rest) {
          v = 0.05 + 0.95 * std::min(v, 1.0);
        } else {
          v += 0.08;
        }
        p.intensity[g][grid_channel(r, c)] = v;
      }
    }
  }
  return p;
}

GestureProfiles jittered_profiles(const GestureProfiles& base, double jitter,
                                  std::uint64_t seed) {
  GestureProfiles out = base;
  Rng rng(seed);
  for (auto& gesture : out.intensity) {
    for (double& v : gesture) {
      const double u = 2.0 * uniform01(rng) - 1.0;
      v = std::max(0.0, v * (1.0 + jitter * u));
    }
  }
  return out;
}

SynthesizedSession synthesize(const SessionPlan& plan, const GestureProfiles& profiles,
                              const SynthesisConfig& config, std::uint64_t seed) {
  for (const auto& gesture : profiles.intensity) {
    for (double v : gesture) {
      if (!(v >= 0.0)) {
        throw Error(ErrorCategory::validation, "synthesize: intensity profiles must be >= 0");
      }
    }
  }
  if (static_cast<int>(plan.trial_sequences.size()) != plan.trials) {
    throw Error(ErrorCategory::validation, "synthesize: plan sequences do not match trials");
  }
  const double fs = config.sample_rate;
  const auto hold_samples = static_cast<std::int64_t>(std::llround(plan.hold_seconds * fs));
  const auto labeled_samples = static_cast<std::int64_t>(std::llround(plan.labeled_seconds * fs));
  if (labeled_samples > hold_samples || hold_samples <= 0) {
    throw Error(ErrorCategory::validation, "synthesize: labeled duration exceeds hold duration");
  }
  const std::int64_t label_offset = (hold_samples - labeled_samples) / 2;

  // flatten the plan into one hold sequence
  struct Hold {
    Gesture gesture;
    int trial;
  };
  std::vector<Hold> holds;
  for (int t = 0; t < plan.trials; ++t) {
    if (plan.rest_bracketing) holds.push_back({Gesture::rest, t});
    for (Gesture g : plan.trial_sequences[t]) holds.push_back({g, t});
    if (plan.rest_bracketing) holds.push_back({Gesture::rest, t});
  }

  const std::size_t n_holds = holds.size();
  const std::size_t ns = n_holds * static_cast<std::size_t>(hold_samples);
  SynthesizedSession out;
  out.recording.channels = config.channels;
  out.recording.sample_count = ns;
  out.recording.sample_rate = fs;
  out.recording.samples.assign(config.channels * ns, 0.0f);
  for (std::size_t h = 0; h < n_holds; ++h) {
    LabeledSegment seg;
    seg.label = holds[h].gesture;
    seg.start_sample = static_cast<std::int64_t>(h) * hold_samples + label_offset;
    seg.end_sample = seg.start_sample + labeled_samples;
    seg.trial = holds[h].trial;
    out.segments.push_back(seg);
  }

  // carrier shaping filter: flat band between carrier_low and carrier_high
  FilterSpec carrier_spec;
  carrier_spec.sample_rate = fs;
  carrier_spec.bp_low = config.carrier_low;
  carrier_spec.bp_high = config.carrier_high;
  carrier_spec.bp_order = 4;
  BiquadCascade carrier_filter = design_bandpass(carrier_spec);
  carrier_filter.reset(config.channels);

  const auto ramp = static_cast<std::int64_t>(std::llround(config.ramp_seconds * fs));
  const double interference_w = 2.0 * kPi * config.interference_freq / fs;
  std::vector<double> white(ns);
  std::vector<double> carrier(ns);
  std::vector<double> level(n_holds);
  for (std::size_t c = 0; c < config.channels; ++c) {
    Rng carrier_rng(mix_seed(seed, 3 * c));
    Rng base_rng(mix_seed(seed, 3 * c + 1));
    Rng hold_rng(mix_seed(seed, 3 * c + 2));
    const double phase = 2.0 * kPi * uniform01(base_rng);
    // contractions are not perfectly reproducible: each hold of this channel
    // gets its own intensity factor
    for (std::size_t h = 0; h < n_holds; ++h) {
      const double u = 2.0 * uniform01(hold_rng) - 1.0;
      level[h] = profiles.intensity[gesture_id(holds[h].gesture)][c] *
                 (1.0 + config.hold_variability * u);
    }
    // unit-variance white noise, shaped into the carrier band
    for (std::size_t t = 0; t < ns; ++t) {
      white[t] = (uniform01(carrier_rng) - 0.5) * 3.4641016151377544;  // sqrt(12)
    }
    carrier_filter.apply(c, white, carrier);

    auto row = out.recording.channel(c);
    for (std::size_t t = 0; t < ns; ++t) {
      const std::size_t h = t / static_cast<std::size_t>(hold_samples);
      const std::int64_t into = static_cast<std::int64_t>(t) -
                                static_cast<std::int64_t>(h) * hold_samples;
      double intensity = level[h];
      if (h > 0 && ramp > 0 && into < ramp) {
        const double a = static_cast<double>(into) / static_cast<double>(ramp);
        intensity = level[h - 1] + (intensity - level[h - 1]) * a;
      }
      double x = intensity * carrier[t];
      if (config.noise_level > 0.0) {
        x += config.noise_level * (uniform01(base_rng) - 0.5) * 3.4641016151377544;
      }
      if (config.interference_amp > 0.0) {
        x += config.interference_amp * std::sin(interference_w * static_cast<double>(t) + phase);
      }
      row[t] = static_cast<float>(x);
    }
  }
  return out;
}

Recording perturb(const Recording& recording, std::span<const double> gains, double extra_noise,
                  int channel_shift, std::uint64_t seed) {
  if (!gains.empty() && gains.size() != recording.channels) {
    throw Error(ErrorCategory::validation, "perturb: gain vector channel mismatch");
  }
  if (channel_shift <= -64 || channel_shift >= 64) {
    throw Error(ErrorCategory::validation, "perturb: |channel_shift| must be < 64");
  }
  if (channel_shift != 0 && recording.channels != kGridChannels) {
    throw Error(ErrorCategory::validation,
                "perturb: channel rotation requires the 64-channel grid layout");
  }
  Recording out = recording;
  const int shift = ((channel_shift % kGridCols) + kGridCols) % kGridCols;
  for (std::size_t dest = 0; dest < recording.channels; ++dest) {
    std::size_t src = dest;
    if (shift != 0) {
      const int row = static_cast<int>(dest) / kGridCols;
      const int col = static_cast<int>(dest) % kGridCols;
      src = grid_channel(row, (col - shift + kGridCols) % kGridCols);
    }
    const double gain = gains.empty() ? 1.0 : gains[src];
    const auto in_row = recording.channel(src);
    auto out_row = out.channel(dest);
    if (gain == 1.0 && extra_noise == 0.0) {
      std::copy(in_row.begin(), in_row.end(), out_row.begin());
    } else if (extra_noise == 0.0) {
      for (std::size_t t = 0; t < in_row.size(); ++t) {
        out_row[t] = static_cast<float>(gain * in_row[t]);
      }
    } else {
      Rng rng(mix_seed(seed, dest));
      NormalSampler normal(rng);
      for (std::size_t t = 0; t < in_row.size(); ++t) {
        out_row[t] = static_cast<float>(gain * in_row[t] + extra_noise * normal());
      }
    }
  }
  return out;
}

std::map<Gesture, ActivityMap> activity_maps(
    std::span<const FeatureFrame> frames,
    const std::map<Gesture, std::vector<std::size_t>>& frames_by_gesture) {
  std::map<Gesture, ActivityMap> maps;
  for (const auto& [gesture, unordered] : frames_by_gesture) {
    if (unordered.empty()) {
      throw Error(ErrorCategory::validation, "activity_maps: gesture '" +
                                                 std::string(gesture_name(gesture)) +
                                                 "' has no frames");
    }
    // canonical accumulation order keeps the mean independent of caller order
    std::vector<std::size_t> indices = unordered;
    std::sort(indices.begin(), indices.end());
    ActivityMap map;
    for (std::size_t idx : indices) {
      if (idx >= frames.size() || frames[idx].values.size() != kGridChannels) {
        throw Error(ErrorCategory::validation, "activity_maps: frame index out of range");
      }
      for (std::size_t c = 0; c < kGridChannels; ++c) {
        map.values[c] += frames[idx].values[c];
      }
    }
    double peak = 0.0;
    for (double& v : map.values) {
      v /= static_cast<double>(indices.size());
      peak = std::max(peak, v);
    }
    if (peak > 0.0) {
      for (double& v : map.values) v /= peak;
    }
    maps.emplace(gesture, map);
  }
  return maps;
}

std::pair<std::int64_t, std::int64_t> frame_range(const LabeledSegment& segment,
                                                  int decim_factor) {
  const std::int64_t d = decim_factor;
  const std::int64_t first = (segment.start_sample + d - 1) / d;
  const std::int64_t end = segment.end_sample / d;
  return {first, std::max(first, end)};
}

void save_recording(const std::string& path, const Recording& recording,
                    std::span<const LabeledSegment> segments) {
  namespace io = detail;
  recording.validate();
  std::vector<LabeledSegment> sorted(segments.begin(), segments.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const LabeledSegment& a, const LabeledSegment& b) {
              return a.start_sample < b.start_sample;
            });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& s = sorted[i];
    if (s.start_sample < 0 || s.start_sample >= s.end_sample ||
        s.end_sample > static_cast<std::int64_t>(recording.sample_count)) {
      throw Error(ErrorCategory::format_shape, "save_recording: segment out of range");
    }
    if (i > 0 && s.start_sample < sorted[i - 1].end_sample) {
      throw Error(ErrorCategory::format_overlap, "save_recording: overlapping segments");
    }
  }

  std::string payload;
  payload.reserve(recording.samples.size() * sizeof(float));
  for (float v : recording.samples) io::append_f32le(payload, v);

  const std::string payload_name =
      path.substr(path.find_last_of('/') + 1) + ".f32";
  std::string m;
  m += "EMGREC v1\n";
  m += "subject " + sanitize_id(recording.subject_id) + "\n";
  m += "session " + sanitize_id(recording.session_id) + "\n";
  m += "channels " + std::to_string(recording.channels) + "\n";
  m += "sample_rate " + io::format_double(recording.sample_rate) + "\n";
  m += "samples " + std::to_string(recording.sample_count) + "\n";
  m += "scale " + io::format_double(recording.scale) + "\n";
  m += "payload " + payload_name + "\n";
  m += "payload_bytes " + std::to_string(payload.size()) + "\n";
  m += "payload_crc32 " + io::format_u32hex(io::crc32_bytes(payload)) + "\n";
  m += "segments " + std::to_string(sorted.size()) + "\n";
  for (const auto& s : sorted) {
    m += "segment " + std::string(gesture_name(s.label)) + " " +
         std::to_string(s.start_sample) + " " + std::to_string(s.end_sample) + " trial " +
         std::to_string(s.trial) + "\n";
  }
  m += "end\n";
  io::write_file(path + ".f32", payload);
  io::write_file(path, m);
}

LoadedRecording load_recording(const std::string& path) {
  namespace io = detail;
  const auto lines = io::read_manifest_lines(io::read_file(path));
  if (lines.empty() || lines[0].size() != 2 || lines[0][0] != "EMGREC" || lines[0][1] != "v1") {
    throw Error(ErrorCategory::format_shape, path + ": not an EMGREC v1 manifest");
  }
  LoadedRecording out;
  Recording& rec = out.recording;
  std::size_t declared_segments = 0;
  std::size_t payload_bytes = 0;
  std::uint32_t payload_crc = 0;
  bool have_end = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& t = lines[i];
    if (t[0] == "subject" && t.size() == 2) {
      rec.subject_id = t[1];
    } else if (t[0] == "session" && t.size() == 2) {
      rec.session_id = t[1];
    } else if (t[0] == "channels" && t.size() == 2) {
      rec.channels = io::parse_uint(t[1], "channels");
    } else if (t[0] == "sample_rate" && t.size() == 2) {
      rec.sample_rate = io::parse_double(t[1], "sample_rate");
    } else if (t[0] == "samples" && t.size() == 2) {
      rec.sample_count = io::parse_uint(t[1], "samples");
    } else if (t[0] == "scale" && t.size() == 2) {
      rec.scale = io::parse_double(t[1], "scale");
    } else if (t[0] == "payload" && t.size() == 2) {
      // payload sits next to the manifest with the declared name
    } else if (t[0] == "payload_bytes" && t.size() == 2) {
      payload_bytes = io::parse_uint(t[1], "payload_bytes");
    } else if (t[0] == "payload_crc32" && t.size() == 2) {
      payload_crc = io::parse_u32hex(t[1], "payload_crc32");
    } else if (t[0] == "segments" && t.size() == 2) {
      declared_segments = io::parse_uint(t[1], "segments");
    } else if (t[0] == "segment" && (t.size() == 4 || t.size() == 6)) {
      LabeledSegment seg;
      const auto g = gesture_from_name(t[1]);
      if (!g.has_value()) {
        throw Error(ErrorCategory::format_label, path + ": unknown gesture label '" + t[1] + "'");
      }
      seg.label = *g;
      seg.start_sample = io::parse_int(t[2], "segment start");
      seg.end_sample = io::parse_int(t[3], "segment end");
      if (t.size() == 6) {
        if (t[4] != "trial") {
          throw Error(ErrorCategory::format_shape, path + ": malformed segment line");
        }
        seg.trial = static_cast<int>(io::parse_int(t[5], "segment trial"));
      }
      out.segments.push_back(seg);
    } else if (t[0] == "end") {
      have_end = true;
    } else {
      throw Error(ErrorCategory::format_shape,
                  path + ": unrecognized manifest line '" + t[0] + "'");
    }
  }
  if (!have_end) {
    throw Error(ErrorCategory::format_shape, path + ": manifest truncated (missing end)");
  }
  if (out.segments.size() != declared_segments) {
    throw Error(ErrorCategory::format_shape, path + ": segment count does not match manifest");
  }
  const std::string payload = io::read_file(path + ".f32");
  if (payload.size() != payload_bytes ||
      payload.size() != rec.channels * rec.sample_count * sizeof(float)) {
    throw Error(ErrorCategory::format_shape,
                path + ": payload size does not match declared shape");
  }
  if (io::crc32_bytes(payload) != payload_crc) {
    throw Error(ErrorCategory::format_checksum, path + ": payload checksum mismatch");
  }
  rec.samples.resize(rec.channels * rec.sample_count);
  const char* p = payload.data();
  for (std::size_t i = 0; i < rec.samples.size(); ++i, p += sizeof(float)) {
    rec.samples[i] = io::read_f32le(p);
  }
  rec.validate();
  std::sort(out.segments.begin(), out.segments.end(),
            [](const LabeledSegment& a, const LabeledSegment& b) {
              return a.start_sample < b.start_sample;
            });
  for (std::size_t i = 0; i < out.segments.size(); ++i) {
    const auto& s = out.segments[i];
    if (s.start_sample < 0 || s.start_sample >= s.end_sample ||
        s.end_sample > static_cast<std::int64_t>(rec.sample_count)) {
      throw Error(ErrorCategory::format_shape, path + ": segment out of range");
    }
    if (i > 0 && s.start_sample < out.segments[i - 1].end_sample) {
      throw Error(ErrorCategory::format_overlap, path + ": overlapping segments");
    }
  }
  return out;
}

void write_pgm(const std::string& path, const ActivityMap& map) {
  std::string out = "P2\n16 4\n255\n";
  for (int r = 0; r < kGridRows; ++r) {
    for (int c = 0; c < kGridCols; ++c) {
      const double v = std::clamp(map.values[grid_channel(r, c)], 0.0, 1.0);
      out += std::to_string(static_cast<int>(std::lround(v * 255.0)));
      out += (c + 1 == kGridCols) ? '\n' : ' ';
    }
  }
  detail::write_file(path, out);
}

}  // namespace emghd
