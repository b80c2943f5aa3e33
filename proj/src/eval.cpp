#include "emghd/eval.hpp"

#include <atomic>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <mutex>
#include <thread>

#include "container_io.hpp"
#include "emghd/errors.hpp"
#include "emghd/rng.hpp"

namespace emghd {

namespace {

std::uint64_t subject_seed(const ExperimentConfig& config, int subject) {
  return mix_seed(config.seed, 1000 + static_cast<std::uint64_t>(subject));
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  threads = std::clamp(threads, 1, n);
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct SegmentWindows {
  Gesture label = Gesture::rest;
  int trial = -1;
  std::vector<SpatiotemporalVector> windows;
};

struct SubjectData {
  std::string subject_id;
  Recording train_rec;
  Recording test_rec;
  std::vector<LabeledSegment> train_segs;
  std::vector<LabeledSegment> test_segs;
};

SubjectData prepare_subject_data(const ExperimentConfig& config, int subject) {
  SubjectData data;
  const std::uint64_t sseed = subject_seed(config, subject);
  if (config.files.has_value()) {
    auto train = load_recording(config.files->train_paths[subject]);
    auto test = load_recording(config.files->test_paths[subject]);
    data.subject_id = train.recording.subject_id.empty()
                          ? "sub" + std::to_string(subject + 1)
                          : train.recording.subject_id;
    data.train_rec = std::move(train.recording);
    data.train_segs = std::move(train.segments);
    data.test_rec = std::move(test.recording);
    data.test_segs = std::move(test.segments);
    return data;
  }
  const SynthDataParams& sp = *config.synth;
  data.subject_id = "sub" + std::to_string(subject + 1);
  auto [train, test] = make_synthetic_subject(config, subject);

  switch (config.condition) {
    case Condition::same_session:
      break;
    case Condition::across_sessions: {
      Rng gain_rng(mix_seed(sseed, 3));
      std::vector<double> gains(test.recording.channels);
      for (double& g : gains) {
        g = 1.0 + sp.perturb.gain_drift * (2.0 * uniform01(gain_rng) - 1.0);
      }
      test.recording = perturb(test.recording, gains, sp.perturb.extra_noise,
                               sp.perturb.channel_shift, mix_seed(sseed, 7));
      test.recording.session_id = "test_perturbed";
      break;
    }
    case Condition::rotated:
      // a fresh placement: both sessions recorded with the band rotated
      train.recording = perturb(train.recording, {}, 0.0, sp.rotation_shift, 0);
      test.recording = perturb(test.recording, {}, 0.0, sp.rotation_shift, 0);
      break;
  }
  data.train_rec = std::move(train.recording);
  data.train_segs = std::move(train.segments);
  data.test_rec = std::move(test.recording);
  data.test_segs = std::move(test.segments);
  return data;
}

std::vector<SegmentWindows> encode_segments(std::span<const FeatureFrame> frames,
                                            std::span<const LabeledSegment> segments,
                                            const ItemMemory& im, const EncoderConfig& enc,
                                            int decim_factor) {
  std::vector<SegmentWindows> out;
  out.reserve(segments.size());
  for (const LabeledSegment& seg : segments) {
    const auto [first, end] = frame_range(seg, decim_factor);
    const auto lo = static_cast<std::size_t>(std::clamp<std::int64_t>(
        first, 0, static_cast<std::int64_t>(frames.size())));
    const auto hi = static_cast<std::size_t>(std::clamp<std::int64_t>(
        end, static_cast<std::int64_t>(lo), static_cast<std::int64_t>(frames.size())));
    SegmentWindows sw;
    sw.label = seg.label;
    sw.trial = seg.trial;
    if (hi - lo >= static_cast<std::size_t>(enc.ngram_n)) {
      sw.windows = stream_encode(frames.subspan(lo, hi - lo), im, enc);
    }
    out.push_back(std::move(sw));
  }
  return out;
}

struct EncodedSubject {
  std::string subject_id;
  std::vector<SegmentWindows> train_windows;
  std::vector<SegmentWindows> test_windows;
  std::vector<int> trial_order;  // distinct training trials, selection order
  std::map<std::string, ActivityMap> heatmaps;
};

EncodedSubject encode_subject(const ExperimentConfig& config, int subject) {
  SubjectData data = prepare_subject_data(config, subject);
  EncodedSubject enc;
  enc.subject_id = data.subject_id;

  PreprocessResult train_pp = preprocess(data.train_rec, config.filter);
  PreprocessResult test_pp = preprocess(data.test_rec, config.filter, &train_pp.norm);

  const ItemMemory im(config.encoder.im_seed, config.encoder.channels,
                      config.encoder.dimension);
  enc.train_windows = encode_segments(train_pp.frames, data.train_segs, im, config.encoder,
                                      config.filter.decim_factor);
  enc.test_windows = encode_segments(test_pp.frames, data.test_segs, im, config.encoder,
                                     config.filter.decim_factor);

  // training trials in order of first appearance, optionally shuffled
  for (const LabeledSegment& seg : data.train_segs) {
    if (std::find(enc.trial_order.begin(), enc.trial_order.end(), seg.trial) ==
        enc.trial_order.end()) {
      enc.trial_order.push_back(seg.trial);
    }
  }
  if (config.random_trial_selection) {
    Rng rng(mix_seed(subject_seed(config, subject), 8));
    for (std::size_t i = enc.trial_order.size(); i > 1; --i) {
      std::swap(enc.trial_order[i - 1], enc.trial_order[uniform_below(rng, i)]);
    }
  }

  if (config.encoder.channels == kGridChannels) {
    std::map<Gesture, std::vector<std::size_t>> by_gesture;
    for (const LabeledSegment& seg : data.train_segs) {
      const auto [first, end] = frame_range(seg, config.filter.decim_factor);
      for (std::int64_t f = first; f < end; ++f) {
        if (f >= 0 && f < static_cast<std::int64_t>(train_pp.frames.size())) {
          by_gesture[seg.label].push_back(static_cast<std::size_t>(f));
        }
      }
    }
    const auto maps = activity_maps(train_pp.frames, by_gesture);
    const std::string prefix =
        std::string(condition_name(config.condition)) + "_" + enc.subject_id + "_";
    for (const auto& [gesture, map] : maps) {
      enc.heatmaps.emplace(prefix + std::string(gesture_name(gesture)), map);
    }
  }
  return enc;
}

AssociativeMemory train_on_trials(const ExperimentConfig& config, const EncodedSubject& enc,
                                  std::span<const int> trials) {
  std::array<bool, kGestureCount> covered{};
  AssociativeMemory am(config.encoder);
  for (int trial : trials) {
    for (const SegmentWindows& sw : enc.train_windows) {
      if (sw.trial != trial || sw.windows.empty()) continue;
      am.train(sw.windows, sw.label);
      covered[static_cast<std::size_t>(sw.label)] = true;
    }
  }
  std::string missing;
  for (Gesture g : kAllGestures) {
    if (!covered[static_cast<std::size_t>(g)]) {
      if (!missing.empty()) missing += ", ";
      missing += gesture_name(g);
    }
  }
  if (!missing.empty()) {
    throw Error(ErrorCategory::validation, "training data missing gestures: " + missing);
  }
  return am;
}

void score_subject(const ExperimentConfig& config, const EncodedSubject& enc,
                   const AssociativeMemory& am, SubjectResult& result) {
  result.subject_id = enc.subject_id;
  result.total_windows = 0;
  result.matched_novote = 0;
  result.matched_vote = 0;
  for (auto& row : result.confusion) row.fill(0);
  for (auto& row : result.confusion_vote) row.fill(0);
  std::vector<ClassificationResult> results;
  for (const SegmentWindows& sw : enc.test_windows) {
    if (sw.windows.empty()) continue;
    results.clear();
    const auto truth = static_cast<std::size_t>(sw.label);
    for (const SpatiotemporalVector& g : sw.windows) {
      results.push_back(am.classify(g));
      const ClassificationResult& r = results.back();
      const Gesture voted = vote(std::span(results), config.vote_window);
      ++result.total_windows;
      if (r.predicted == sw.label) ++result.matched_novote;
      if (voted == sw.label) ++result.matched_vote;
      ++result.confusion[truth][static_cast<std::size_t>(r.predicted)];
      ++result.confusion_vote[truth][static_cast<std::size_t>(voted)];
    }
  }
}

nlohmann::json make_provenance(const ExperimentConfig& config, const std::string& command) {
  nlohmann::json p;
  p["tool"] = "emghd";
  p["format_version"] = 1;
  p["command"] = command;
  p["config"] = config_to_json(config);
  return p;
}

int subject_count(const ExperimentConfig& config) {
  if (config.files.has_value()) return static_cast<int>(config.files->train_paths.size());
  return config.synth->subjects;
}

void append_csv_percent(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  out += buf;
}

}  // namespace

std::string_view condition_name(Condition c) {
  switch (c) {
    case Condition::same_session: return "same_session";
    case Condition::across_sessions: return "across_sessions";
    case Condition::rotated: return "rotated";
  }
  return "?";
}

std::optional<Condition> condition_from_name(std::string_view name) {
  for (Condition c : {Condition::same_session, Condition::across_sessions, Condition::rotated}) {
    if (condition_name(c) == name) return c;
  }
  return std::nullopt;
}

double SubjectResult::accuracy_novote() const {
  return total_windows == 0 ? 0.0
                            : 100.0 * static_cast<double>(matched_novote) /
                                  static_cast<double>(total_windows);
}

double SubjectResult::accuracy_vote() const {
  return total_windows == 0 ? 0.0
                            : 100.0 * static_cast<double>(matched_vote) /
                                  static_cast<double>(total_windows);
}

double ConditionResult::avg_novote() const {
  if (subjects.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : subjects) s += r.accuracy_novote();
  return s / static_cast<double>(subjects.size());
}

double ConditionResult::avg_vote() const {
  if (subjects.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : subjects) s += r.accuracy_vote();
  return s / static_cast<double>(subjects.size());
}

void validate(const ExperimentConfig& config) {
  validate(config.filter);
  validate(config.encoder);
  if (config.vote_window < 1 || config.vote_window % 2 == 0) {
    throw Error(ErrorCategory::config, "ExperimentConfig: vote_window must be odd and >= 1");
  }
  if (config.train_trials < 1) {
    throw Error(ErrorCategory::config, "ExperimentConfig: train_trials must be >= 1");
  }
  if (config.files.has_value()) {
    if (config.files->train_paths.empty() ||
        config.files->train_paths.size() != config.files->test_paths.size()) {
      throw Error(ErrorCategory::config,
                  "ExperimentConfig: files mode needs equal nonempty train/test path lists");
    }
  } else if (config.synth.has_value()) {
    const auto& sp = *config.synth;
    if (sp.subjects < 1 || sp.trials < 1) {
      throw Error(ErrorCategory::config, "ExperimentConfig: subjects and trials must be >= 1");
    }
    if (!(sp.labeled_seconds > 0.0 && sp.labeled_seconds <= sp.hold_seconds)) {
      throw Error(ErrorCategory::config,
                  "ExperimentConfig: labeled_seconds must be in (0, hold_seconds]");
    }
    if (config.train_trials > sp.trials) {
      throw Error(ErrorCategory::config,
                  "ExperimentConfig: train_trials exceeds available trials");
    }
  } else {
    throw Error(ErrorCategory::config, "ExperimentConfig: no data source configured");
  }
}

std::pair<SynthesizedSession, SynthesizedSession> make_synthetic_subject(
    const ExperimentConfig& config, int subject) {
  if (!config.synth.has_value()) {
    throw Error(ErrorCategory::config, "make_synthetic_subject: config has no synthetic data");
  }
  const SynthDataParams& sp = *config.synth;
  const std::uint64_t sseed = subject_seed(config, subject);
  const std::string id = "sub" + std::to_string(subject + 1);
  const GestureProfiles profiles =
      jittered_profiles(default_gesture_profiles(), sp.profile_jitter, mix_seed(sseed, 4));
  SessionPlan plan_train = make_default_plan(sp.trials, mix_seed(sseed, 5));
  SessionPlan plan_test = make_default_plan(sp.trials, mix_seed(sseed, 6));
  plan_train.hold_seconds = plan_test.hold_seconds = sp.hold_seconds;
  plan_train.labeled_seconds = plan_test.labeled_seconds = sp.labeled_seconds;
  SynthesisConfig sc;
  sc.sample_rate = config.filter.sample_rate;
  sc.channels = config.encoder.channels;
  sc.noise_level = sp.noise_level;
  sc.interference_amp = sp.interference_amp;
  sc.hold_variability = sp.hold_variability;
  sc.interference_freq = config.filter.notch_freq;

  auto train = synthesize(plan_train, profiles, sc, mix_seed(sseed, 1));
  auto test = synthesize(plan_test, profiles, sc, mix_seed(sseed, 2));
  train.recording.subject_id = id;
  train.recording.session_id = "train";
  test.recording.subject_id = id;
  test.recording.session_id = "test";
  return {std::move(train), std::move(test)};
}

EvalReport run_condition(const ExperimentConfig& config, int threads) {
  validate(config);
  const int n = subject_count(config);
  ConditionResult cond;
  cond.condition = config.condition;
  cond.subjects.resize(static_cast<std::size_t>(n));
  std::vector<std::map<std::string, ActivityMap>> maps(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](int s) {
    EncodedSubject enc = encode_subject(config, s);
    std::vector<int> selected(
        enc.trial_order.begin(),
        enc.trial_order.begin() +
            std::min<std::size_t>(enc.trial_order.size(),
                                  static_cast<std::size_t>(config.train_trials)));
    if (static_cast<int>(selected.size()) < config.train_trials) {
      throw Error(ErrorCategory::validation,
                  enc.subject_id + ": only " + std::to_string(selected.size()) +
                      " trials available, train_trials=" + std::to_string(config.train_trials));
    }
    const AssociativeMemory am = train_on_trials(config, enc, selected);
    score_subject(config, enc, am, cond.subjects[static_cast<std::size_t>(s)]);
    maps[static_cast<std::size_t>(s)] = std::move(enc.heatmaps);
  });
  EvalReport report;
  report.conditions.push_back(std::move(cond));
  for (auto& m : maps) {
    report.heatmaps.insert(m.begin(), m.end());
  }
  report.provenance = make_provenance(config, "eval");
  return report;
}

EvalReport sweep_trials(const ExperimentConfig& config, std::span<const int> counts,
                        int threads) {
  validate(config);
  if (counts.empty()) {
    throw Error(ErrorCategory::config, "sweep_trials: empty count list");
  }
  std::vector<int> ks(counts.begin(), counts.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.front() < 1) {
    throw Error(ErrorCategory::config, "sweep_trials: counts must be >= 1");
  }
  const int n = subject_count(config);
  // per subject, per count
  std::vector<std::vector<SubjectResult>> grid(static_cast<std::size_t>(n));
  std::vector<std::string> subject_ids(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](int s) {
    EncodedSubject enc = encode_subject(config, s);
    if (ks.back() > static_cast<int>(enc.trial_order.size())) {
      throw Error(ErrorCategory::validation,
                  enc.subject_id + ": sweep count " + std::to_string(ks.back()) +
                      " exceeds available trials (" + std::to_string(enc.trial_order.size()) +
                      ")");
    }
    subject_ids[static_cast<std::size_t>(s)] = enc.subject_id;
    auto& row = grid[static_cast<std::size_t>(s)];
    row.resize(ks.size());
    // incremental training: add one trial at a time, score at requested counts
    AssociativeMemory am(config.encoder);
    std::array<bool, kGestureCount> covered{};
    std::size_t next_k = 0;
    for (int used = 1; used <= ks.back(); ++used) {
      const int trial = enc.trial_order[static_cast<std::size_t>(used - 1)];
      for (const SegmentWindows& sw : enc.train_windows) {
        if (sw.trial != trial || sw.windows.empty()) continue;
        am.train(sw.windows, sw.label);
        covered[static_cast<std::size_t>(sw.label)] = true;
      }
      if (next_k < ks.size() && ks[next_k] == used) {
        std::string missing;
        for (Gesture g : kAllGestures) {
          if (!covered[static_cast<std::size_t>(g)]) {
            if (!missing.empty()) missing += ", ";
            missing += gesture_name(g);
          }
        }
        if (!missing.empty()) {
          throw Error(ErrorCategory::validation,
                      enc.subject_id + ": training data missing gestures: " + missing);
        }
        score_subject(config, enc, am, row[next_k]);
        ++next_k;
      }
    }
  });
  EvalReport report;
  report.sweep_subjects = std::move(subject_ids);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    SweepPoint point;
    point.train_trials = ks[i];
    double sum_nv = 0.0;
    double sum_v = 0.0;
    for (int s = 0; s < n; ++s) {
      const SubjectResult& r = grid[static_cast<std::size_t>(s)][i];
      point.novote_by_subject.push_back(r.accuracy_novote());
      point.vote_by_subject.push_back(r.accuracy_vote());
      sum_nv += r.accuracy_novote();
      sum_v += r.accuracy_vote();
    }
    point.avg_novote = sum_nv / static_cast<double>(n);
    point.avg_vote = sum_v / static_cast<double>(n);
    report.sweep.push_back(std::move(point));
  }
  report.provenance = make_provenance(config, "sweep");
  report.provenance["counts"] = ks;
  return report;
}

std::string render_text_table(const EvalReport& report) {
  std::string out;
  char buf[256];
  auto emit = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof(buf), fmt, args...);
    out += buf;
  };
  out += "Classification Accuracy Results\n";
  out += "===============================\n\n";
  if (!report.conditions.empty()) {
    const char* display[] = {"Same Session", "Across Sessions", "Same Session Rotated"};
    emit("%-10s", "");
    for (const auto& c : report.conditions) {
      emit("  %-22s", display[static_cast<int>(c.condition)]);
    }
    out += "\n";
    emit("%-10s", "");
    for (std::size_t i = 0; i < report.conditions.size(); ++i) {
      emit("  %10s%10s  ", "No Vote", "Vote");
    }
    out += "\n";
    const std::size_t n_subjects =
        report.conditions.empty() ? 0 : report.conditions.front().subjects.size();
    for (std::size_t s = 0; s < n_subjects; ++s) {
      emit("%-10s", report.conditions.front().subjects[s].subject_id.c_str());
      for (const auto& c : report.conditions) {
        if (s < c.subjects.size()) {
          emit("  %9.2f%%%9.2f%%  ", c.subjects[s].accuracy_novote(),
               c.subjects[s].accuracy_vote());
        }
      }
      out += "\n";
    }
    emit("%-10s", "Avg.");
    for (const auto& c : report.conditions) {
      emit("  %9.2f%%%9.2f%%  ", c.avg_novote(), c.avg_vote());
    }
    out += "\n\n";
    for (const auto& c : report.conditions) {
      for (const auto& r : c.subjects) {
        emit("windows %s %s: total=%lld matched=%lld matched_vote=%lld\n",
             std::string(condition_name(c.condition)).c_str(), r.subject_id.c_str(),
             static_cast<long long>(r.total_windows), static_cast<long long>(r.matched_novote),
             static_cast<long long>(r.matched_vote));
      }
    }
    out += "\n";
    for (const auto& c : report.conditions) {
      for (const auto& r : c.subjects) {
        emit("confusion (no vote) %s %s rows=true cols=predicted [fist raise lower open rest]\n",
             std::string(condition_name(c.condition)).c_str(), r.subject_id.c_str());
        for (int t = 0; t < kGestureCount; ++t) {
          emit("%-6s", std::string(gesture_name(static_cast<Gesture>(t))).c_str());
          for (int p = 0; p < kGestureCount; ++p) {
            emit(" %7lld", static_cast<long long>(r.confusion[t][p]));
          }
          out += "\n";
        }
      }
    }
  }
  if (!report.sweep.empty()) {
    out += "\nTraining-trials sweep (unweighted average over subjects)\n";
    emit("%8s%12s%12s\n", "trials", "no_vote", "vote");
    for (const auto& p : report.sweep) {
      emit("%8d%11.2f%%%11.2f%%\n", p.train_trials, p.avg_novote, p.avg_vote);
    }
  }
  out += "\nProvenance:\n";
  out += report.provenance.dump(2);
  out += "\n";
  return out;
}

void emit_report(const EvalReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw Error(ErrorCategory::io, "emit_report: cannot create " + out_dir);
  }
  detail::write_file(out_dir + "/report.txt", render_text_table(report));

  std::string acc = "condition,subject,windows,accuracy_novote,accuracy_vote\n";
  for (const auto& c : report.conditions) {
    for (const auto& r : c.subjects) {
      acc += std::string(condition_name(c.condition)) + "," + r.subject_id + "," +
             std::to_string(r.total_windows) + ",";
      append_csv_percent(acc, r.accuracy_novote());
      acc += ",";
      append_csv_percent(acc, r.accuracy_vote());
      acc += "\n";
    }
    acc += std::string(condition_name(c.condition)) + ",avg,,";
    append_csv_percent(acc, c.avg_novote());
    acc += ",";
    append_csv_percent(acc, c.avg_vote());
    acc += "\n";
  }
  detail::write_file(out_dir + "/accuracy.csv", acc);

  std::string conf = "condition,subject,vote,true,predicted,count\n";
  for (const auto& c : report.conditions) {
    for (const auto& r : c.subjects) {
      for (int t = 0; t < kGestureCount; ++t) {
        for (int p = 0; p < kGestureCount; ++p) {
          conf += std::string(condition_name(c.condition)) + "," + r.subject_id + ",no," +
                  std::string(gesture_name(static_cast<Gesture>(t))) + "," +
                  std::string(gesture_name(static_cast<Gesture>(p))) + "," +
                  std::to_string(r.confusion[t][p]) + "\n";
          conf += std::string(condition_name(c.condition)) + "," + r.subject_id + ",yes," +
                  std::string(gesture_name(static_cast<Gesture>(t))) + "," +
                  std::string(gesture_name(static_cast<Gesture>(p))) + "," +
                  std::to_string(r.confusion_vote[t][p]) + "\n";
        }
      }
    }
  }
  detail::write_file(out_dir + "/confusion.csv", conf);

  if (!report.sweep.empty()) {
    std::string sw = "subject,train_trials,accuracy_novote,accuracy_vote\n";
    for (const auto& p : report.sweep) {
      for (std::size_t s = 0; s < p.novote_by_subject.size(); ++s) {
        const std::string id = s < report.sweep_subjects.size() ? report.sweep_subjects[s]
                                                                : "sub" + std::to_string(s + 1);
        sw += id + "," + std::to_string(p.train_trials) + ",";
        append_csv_percent(sw, p.novote_by_subject[s]);
        sw += ",";
        append_csv_percent(sw, p.vote_by_subject[s]);
        sw += "\n";
      }
      sw += "avg," + std::to_string(p.train_trials) + ",";
      append_csv_percent(sw, p.avg_novote);
      sw += ",";
      append_csv_percent(sw, p.avg_vote);
      sw += "\n";
    }
    detail::write_file(out_dir + "/sweep.csv", sw);
  }

  for (const auto& [key, map] : report.heatmaps) {
    write_pgm(out_dir + "/heatmap_" + key + ".pgm", map);
  }
}

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const char* context) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw Error(ErrorCategory::config,
                  std::string("config: unknown key '") + key + "' in " + context);
    }
  }
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig c;
    check_keys(j, {"seed", "filter", "encoder", "vote_window", "train_trials",
                   "random_trial_selection", "condition", "data"},
               "top level");
    c.seed = j.value("seed", c.seed);
    if (j.contains("filter")) {
      const auto& f = j.at("filter");
      check_keys(f, {"sample_rate", "notch_freq", "notch_q", "bp_low", "bp_high", "bp_order",
                     "ma_window", "decim_factor"},
                 "filter");
      c.filter.sample_rate = f.value("sample_rate", c.filter.sample_rate);
      c.filter.notch_freq = f.value("notch_freq", c.filter.notch_freq);
      c.filter.notch_q = f.value("notch_q", c.filter.notch_q);
      c.filter.bp_low = f.value("bp_low", c.filter.bp_low);
      c.filter.bp_high = f.value("bp_high", c.filter.bp_high);
      c.filter.bp_order = f.value("bp_order", c.filter.bp_order);
      c.filter.ma_window = f.value("ma_window", c.filter.ma_window);
      c.filter.decim_factor = f.value("decim_factor", c.filter.decim_factor);
    }
    if (j.contains("encoder")) {
      const auto& e = j.at("encoder");
      check_keys(e, {"dimension", "channels", "ngram", "im_seed"}, "encoder");
      c.encoder.dimension = e.value("dimension", c.encoder.dimension);
      c.encoder.channels = e.value("channels", c.encoder.channels);
      c.encoder.ngram_n = e.value("ngram", c.encoder.ngram_n);
      c.encoder.im_seed = e.value("im_seed", c.encoder.im_seed);
    }
    c.vote_window = j.value("vote_window", c.vote_window);
    c.train_trials = j.value("train_trials", c.train_trials);
    c.random_trial_selection = j.value("random_trial_selection", c.random_trial_selection);
    if (j.contains("condition")) {
      const auto name = j.at("condition").get<std::string>();
      const auto cond = condition_from_name(name);
      if (!cond.has_value()) {
        throw Error(ErrorCategory::config, "config: unknown condition '" + name + "'");
      }
      c.condition = *cond;
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      check_keys(d, {"synthetic", "files"}, "data");
      if (d.contains("synthetic") && d.contains("files")) {
        throw Error(ErrorCategory::config, "config: data must be synthetic or files, not both");
      }
      if (d.contains("files")) {
        const auto& f = d.at("files");
        check_keys(f, {"train", "test"}, "data.files");
        FileDataParams fp;
        fp.train_paths = f.at("train").get<std::vector<std::string>>();
        fp.test_paths = f.at("test").get<std::vector<std::string>>();
        c.files = std::move(fp);
        c.synth.reset();
      } else if (d.contains("synthetic")) {
        const auto& s = d.at("synthetic");
        check_keys(s, {"subjects", "trials", "hold_seconds", "labeled_seconds", "noise_level",
                       "interference_amp", "hold_variability", "profile_jitter", "perturb",
                       "rotation_shift"},
                   "data.synthetic");
        SynthDataParams sp;
        sp.subjects = s.value("subjects", sp.subjects);
        sp.trials = s.value("trials", sp.trials);
        sp.hold_seconds = s.value("hold_seconds", sp.hold_seconds);
        sp.labeled_seconds = s.value("labeled_seconds", sp.labeled_seconds);
        sp.noise_level = s.value("noise_level", sp.noise_level);
        sp.interference_amp = s.value("interference_amp", sp.interference_amp);
        sp.hold_variability = s.value("hold_variability", sp.hold_variability);
        sp.profile_jitter = s.value("profile_jitter", sp.profile_jitter);
        if (s.contains("perturb")) {
          const auto& p = s.at("perturb");
          check_keys(p, {"gain_drift", "extra_noise", "channel_shift"}, "data.synthetic.perturb");
          sp.perturb.gain_drift = p.value("gain_drift", sp.perturb.gain_drift);
          sp.perturb.extra_noise = p.value("extra_noise", sp.perturb.extra_noise);
          sp.perturb.channel_shift = p.value("channel_shift", sp.perturb.channel_shift);
        }
        sp.rotation_shift = s.value("rotation_shift", sp.rotation_shift);
        c.synth = sp;
      }
    }
    validate(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::config, std::string("config: ") + e.what());
  }
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
  nlohmann::json j;
  j["seed"] = config.seed;
  j["filter"] = {{"sample_rate", config.filter.sample_rate},
                 {"notch_freq", config.filter.notch_freq},
                 {"notch_q", config.filter.notch_q},
                 {"bp_low", config.filter.bp_low},
                 {"bp_high", config.filter.bp_high},
                 {"bp_order", config.filter.bp_order},
                 {"ma_window", config.filter.ma_window},
                 {"decim_factor", config.filter.decim_factor}};
  j["encoder"] = {{"dimension", config.encoder.dimension},
                  {"channels", config.encoder.channels},
                  {"ngram", config.encoder.ngram_n},
                  {"im_seed", config.encoder.im_seed}};
  j["vote_window"] = config.vote_window;
  j["train_trials"] = config.train_trials;
  j["random_trial_selection"] = config.random_trial_selection;
  j["condition"] = std::string(condition_name(config.condition));
  if (config.files.has_value()) {
    j["data"] = {{"files", {{"train", config.files->train_paths},
                            {"test", config.files->test_paths}}}};
  } else if (config.synth.has_value()) {
    const auto& sp = *config.synth;
    j["data"] = {{"synthetic",
                  {{"subjects", sp.subjects},
                   {"trials", sp.trials},
                   {"hold_seconds", sp.hold_seconds},
                   {"labeled_seconds", sp.labeled_seconds},
                   {"noise_level", sp.noise_level},
                   {"interference_amp", sp.interference_amp},
                   {"hold_variability", sp.hold_variability},
                   {"profile_jitter", sp.profile_jitter},
                   {"perturb",
                    {{"gain_drift", sp.perturb.gain_drift},
                     {"extra_noise", sp.perturb.extra_noise},
                     {"channel_shift", sp.perturb.channel_shift}}},
                   {"rotation_shift", sp.rotation_shift}}}};
  }
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::config, path + ": " + e.what());
  }
  return config_from_json(j);
}

void save_model(const std::string& path, const Model& model) {
  namespace io = detail;
  if (model.norm.scale.size() != model.am.config().channels) {
    throw Error(ErrorCategory::validation, "save_model: normalization channel mismatch");
  }
  const std::string am_path = path + ".am";
  model.am.save(am_path);
  std::string m;
  m += "EMGHD-MODEL v1\n";
  m += "sample_rate " + io::format_double(model.filter.sample_rate) + "\n";
  m += "notch_freq " + io::format_double(model.filter.notch_freq) + "\n";
  m += "notch_q " + io::format_double(model.filter.notch_q) + "\n";
  m += "bp_low " + io::format_double(model.filter.bp_low) + "\n";
  m += "bp_high " + io::format_double(model.filter.bp_high) + "\n";
  m += "bp_order " + std::to_string(model.filter.bp_order) + "\n";
  m += "ma_window " + std::to_string(model.filter.ma_window) + "\n";
  m += "decim_factor " + std::to_string(model.filter.decim_factor) + "\n";
  m += "norm_method " + model.norm.method + "\n";
  m += "norm_channels " + std::to_string(model.norm.scale.size()) + "\n";
  for (std::size_t c = 0; c < model.norm.scale.size(); ++c) {
    m += "norm_scale " + std::to_string(c) + " " + io::format_double(model.norm.scale[c]) + "\n";
  }
  m += "am " + am_path.substr(am_path.find_last_of('/') + 1) + "\n";
  m += "end\n";
  io::write_file(path, m);
}

Model load_model(const std::string& path) {
  namespace io = detail;
  const auto lines = io::read_manifest_lines(io::read_file(path));
  if (lines.empty() || lines[0].size() != 2 || lines[0][0] != "EMGHD-MODEL" ||
      lines[0][1] != "v1") {
    throw Error(ErrorCategory::format_shape, path + ": not an EMGHD-MODEL v1 manifest");
  }
  FilterSpec filter;
  ChannelNormalization norm;
  std::size_t norm_channels = 0;
  bool have_end = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& t = lines[i];
    if (t[0] == "sample_rate" && t.size() == 2) {
      filter.sample_rate = io::parse_double(t[1], "sample_rate");
    } else if (t[0] == "notch_freq" && t.size() == 2) {
      filter.notch_freq = io::parse_double(t[1], "notch_freq");
    } else if (t[0] == "notch_q" && t.size() == 2) {
      filter.notch_q = io::parse_double(t[1], "notch_q");
    } else if (t[0] == "bp_low" && t.size() == 2) {
      filter.bp_low = io::parse_double(t[1], "bp_low");
    } else if (t[0] == "bp_high" && t.size() == 2) {
      filter.bp_high = io::parse_double(t[1], "bp_high");
    } else if (t[0] == "bp_order" && t.size() == 2) {
      filter.bp_order = static_cast<int>(io::parse_int(t[1], "bp_order"));
    } else if (t[0] == "ma_window" && t.size() == 2) {
      filter.ma_window = static_cast<int>(io::parse_int(t[1], "ma_window"));
    } else if (t[0] == "decim_factor" && t.size() == 2) {
      filter.decim_factor = static_cast<int>(io::parse_int(t[1], "decim_factor"));
    } else if (t[0] == "norm_method" && t.size() == 2) {
      norm.method = t[1];
    } else if (t[0] == "norm_channels" && t.size() == 2) {
      norm_channels = io::parse_uint(t[1], "norm_channels");
    } else if (t[0] == "norm_scale" && t.size() == 3) {
      norm.scale.push_back(io::parse_double(t[2], "norm_scale"));
    } else if (t[0] == "am" && t.size() == 2) {
      // associative memory container sits next to the manifest
    } else if (t[0] == "end") {
      have_end = true;
    } else {
      throw Error(ErrorCategory::format_shape,
                  path + ": unrecognized manifest line '" + t[0] + "'");
    }
  }
  if (!have_end || norm.scale.size() != norm_channels) {
    throw Error(ErrorCategory::format_shape, path + ": manifest inconsistent");
  }
  Model model{filter, std::move(norm), AssociativeMemory::load(path + ".am")};
  if (model.norm.scale.size() != model.am.config().channels) {
    throw Error(ErrorCategory::format_shape, path + ": normalization channel mismatch");
  }
  return model;
}

}  // namespace emghd
