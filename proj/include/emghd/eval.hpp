#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "emghd/classifier.hpp"
#include "emghd/dataset.hpp"

namespace emghd {

enum class Condition {
  same_session,
  across_sessions,
  rotated,
};

std::string_view condition_name(Condition c);
std::optional<Condition> condition_from_name(std::string_view name);

// Test-set perturbation applied for the across_sessions condition.
struct PerturbParams {
  double gain_drift = 0.2;   // per-channel gain drawn from [1-g, 1+g]
  double extra_noise = 0.02;
  int channel_shift = 0;
};

struct SynthDataParams {
  int subjects = 3;
  int trials = 10;
  double hold_seconds = 5.0;
  double labeled_seconds = 3.0;
  double noise_level = 0.05;
  double interference_amp = 0.5;
  double hold_variability = 0.3;
  double profile_jitter = 0.1;
  PerturbParams perturb;
  int rotation_shift = 4;  // electrode columns, rotated condition
};

// File-backed data: one train and one test recording per subject.
struct FileDataParams {
  std::vector<std::string> train_paths;
  std::vector<std::string> test_paths;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  FilterSpec filter;
  EncoderConfig encoder;
  int vote_window = 11;
  int train_trials = 3;
  bool random_trial_selection = false;
  Condition condition = Condition::same_session;
  std::optional<SynthDataParams> synth = SynthDataParams{};
  std::optional<FileDataParams> files;
};

void validate(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

struct SubjectResult {
  std::string subject_id;
  std::int64_t total_windows = 0;
  std::int64_t matched_novote = 0;
  std::int64_t matched_vote = 0;
  // confusion[true][predicted], window counts
  std::array<std::array<std::int64_t, kGestureCount>, kGestureCount> confusion{};
  std::array<std::array<std::int64_t, kGestureCount>, kGestureCount> confusion_vote{};

  double accuracy_novote() const;
  double accuracy_vote() const;
};

struct ConditionResult {
  Condition condition = Condition::same_session;
  std::vector<SubjectResult> subjects;

  // unweighted means across subjects, percent
  double avg_novote() const;
  double avg_vote() const;
};

struct SweepPoint {
  int train_trials = 0;
  std::vector<double> novote_by_subject;  // percent
  std::vector<double> vote_by_subject;
  double avg_novote = 0.0;
  double avg_vote = 0.0;
};

struct EvalReport {
  std::vector<ConditionResult> conditions;
  std::vector<SweepPoint> sweep;
  std::vector<std::string> sweep_subjects;      // ids behind the sweep columns
  std::map<std::string, ActivityMap> heatmaps;  // "<condition>_<subject>_<gesture>"
  nlohmann::json provenance;
};

/// The clean synthetic train/test pair the harness evaluates for `subject`
/// under the same_session condition; deterministic in config.seed.
std::pair<SynthesizedSession, SynthesizedSession> make_synthetic_subject(
    const ExperimentConfig& config, int subject);

/// Trains on each subject's training session and scores every sliding window
/// of the test session, with and without majority voting.
EvalReport run_condition(const ExperimentConfig& config, int threads = 1);

/// Accuracy-vs-training-trials curve with incremental retraining; the test
/// set is fixed across counts.
EvalReport sweep_trials(const ExperimentConfig& config, std::span<const int> counts,
                        int threads = 1);

/// Writes report.txt, accuracy.csv, confusion.csv, sweep.csv (when present)
/// and per-gesture heat maps under out_dir. Byte-deterministic.
void emit_report(const EvalReport& report, const std::string& out_dir);

std::string render_text_table(const EvalReport& report);

// Bundled artifacts needed to classify new recordings: preprocessing spec,
// fitted normalization, and the trained associative memory.
struct Model {
  FilterSpec filter;
  ChannelNormalization norm;
  AssociativeMemory am;
};

void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace emghd
