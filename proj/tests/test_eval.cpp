#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "emghd/eval.hpp"
#include "emghd/errors.hpp"

using namespace emghd;

namespace {

std::string test_dir(const std::string& leaf) {
  const auto dir = std::filesystem::temp_directory_path() / "emghd_eval_test" / leaf;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

// small but complete: 2 subjects, 3 trials of full-length holds
ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.synth->subjects = 2;
  cfg.synth->trials = 3;
  cfg.train_trials = 2;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("config json round-trip and defaults") {
  const ExperimentConfig def;
  const auto j = config_to_json(def);
  const ExperimentConfig back = config_from_json(j);
  CHECK(back.seed == def.seed);
  CHECK(back.filter.notch_freq == 60.0);
  CHECK(back.filter.notch_q == 50.0);
  CHECK(back.filter.bp_low == 1.0);
  CHECK(back.filter.bp_high == 200.0);
  CHECK(back.filter.bp_order == 8);
  CHECK(back.filter.ma_window == 100);
  CHECK(back.filter.decim_factor == 100);
  CHECK(back.encoder.dimension == 10000);
  CHECK(back.encoder.channels == 64);
  CHECK(back.encoder.ngram_n == 5);
  CHECK(back.vote_window == 11);
  CHECK(config_to_json(back) == j);

  SUBCASE("empty config object yields full defaults") {
    const ExperimentConfig c = config_from_json(nlohmann::json::object());
    CHECK(c.encoder.dimension == 10000);
    CHECK(c.synth.has_value());
    CHECK(c.synth->subjects == 3);
  }
  SUBCASE("unknown keys are rejected") {
    nlohmann::json j2 = {{"notch", 50}};
    CHECK_THROWS_AS(config_from_json(j2), Error);
  }
  SUBCASE("even vote window is rejected") {
    nlohmann::json j2 = {{"vote_window", 10}};
    CHECK_THROWS_AS(config_from_json(j2), Error);
  }
  SUBCASE("train_trials beyond available trials is rejected") {
    nlohmann::json j2 = {{"train_trials", 11}};
    CHECK_THROWS_AS(config_from_json(j2), Error);
  }
}

TEST_CASE("run_condition accounting is consistent") {
  const ExperimentConfig cfg = small_config();
  const EvalReport report = run_condition(cfg);
  REQUIRE(report.conditions.size() == 1);
  const ConditionResult& cond = report.conditions[0];
  REQUIRE(cond.subjects.size() == 2);
  for (const SubjectResult& r : cond.subjects) {
    // 3 trials x 6 segments x 26 windows each
    CHECK(r.total_windows == 3 * 6 * 26);
    CHECK(r.matched_novote <= r.total_windows);
    // confusion rows sum to the evaluated windows per true label
    std::int64_t sum = 0;
    for (int t = 0; t < kGestureCount; ++t) {
      std::int64_t row = 0;
      std::int64_t row_vote = 0;
      for (int p = 0; p < kGestureCount; ++p) {
        row += r.confusion[t][p];
        row_vote += r.confusion_vote[t][p];
      }
      CHECK(row == row_vote);
      sum += row;
    }
    CHECK(sum == r.total_windows);
    // diagonal equals the matched counters
    std::int64_t diag = 0;
    std::int64_t diag_vote = 0;
    for (int t = 0; t < kGestureCount; ++t) {
      diag += r.confusion[t][t];
      diag_vote += r.confusion_vote[t][t];
    }
    CHECK(diag == r.matched_novote);
    CHECK(diag_vote == r.matched_vote);
    CHECK(r.accuracy_novote() >= 0.0);
    CHECK(r.accuracy_novote() <= 100.0);
  }
  // separable synthetic data classifies well even at this small scale
  CHECK(cond.avg_novote() >= 90.0);
  CHECK(report.heatmaps.size() == 2 * kGestureCount);
}

TEST_CASE("sweep at the full trial count reproduces run_condition") {
  ExperimentConfig cfg = small_config();
  cfg.train_trials = 3;
  const EvalReport direct = run_condition(cfg);
  const int counts[] = {2, 3};
  const EvalReport swept = sweep_trials(cfg, counts);
  REQUIRE(swept.sweep.size() == 2);
  CHECK(swept.sweep[1].train_trials == 3);
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(swept.sweep[1].novote_by_subject[s] ==
          direct.conditions[0].subjects[s].accuracy_novote());
    CHECK(swept.sweep[1].vote_by_subject[s] ==
          direct.conditions[0].subjects[s].accuracy_vote());
  }
  // and the k=2 point matches a direct run with train_trials=2
  ExperimentConfig cfg2 = small_config();
  const EvalReport direct2 = run_condition(cfg2);
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(swept.sweep[0].novote_by_subject[s] ==
          direct2.conditions[0].subjects[s].accuracy_novote());
  }
}

TEST_CASE("reports are byte-deterministic, serial or parallel") {
  const ExperimentConfig cfg = small_config();
  const std::string d1 = test_dir("serial");
  const std::string d2 = test_dir("serial2");
  const std::string d3 = test_dir("parallel");
  emit_report(run_condition(cfg, 1), d1);
  emit_report(run_condition(cfg, 1), d2);
  emit_report(run_condition(cfg, 4), d3);
  for (const char* name : {"report.txt", "accuracy.csv", "confusion.csv"}) {
    const std::string a = slurp(d1 + "/" + name);
    CHECK(a == slurp(d2 + "/" + name));
    CHECK(a == slurp(d3 + "/" + name));
  }
  // heat map files exist with the grid shape
  const std::string pgm = slurp(d1 + "/heatmap_same_session_sub1_fist.pgm");
  CHECK(pgm.substr(0, 8) == "P2\n16 4\n");
}

TEST_CASE("testing on the training recording with clean data scores 100%") {
  const std::string dir = test_dir("identity");
  SessionPlan plan = make_default_plan(2, 11);
  SynthesisConfig sc;
  sc.noise_level = 0.005;
  sc.interference_amp = 0.0;
  auto session = synthesize(plan, default_gesture_profiles(), sc, 13);
  session.recording.subject_id = "subI";
  save_recording(dir + "/both.emgrec", session.recording, session.segments);

  ExperimentConfig cfg;
  cfg.train_trials = 2;
  FileDataParams files;
  files.train_paths = {dir + "/both.emgrec"};
  files.test_paths = {dir + "/both.emgrec"};
  cfg.files = files;
  cfg.synth.reset();
  const EvalReport report = run_condition(cfg);
  CHECK(report.conditions[0].subjects[0].accuracy_novote() == 100.0);
  CHECK(report.conditions[0].subjects[0].accuracy_vote() == 100.0);
}

TEST_CASE("missing gestures in the training selection fail loudly") {
  // build a file-mode dataset whose training recording lacks 'rest'
  const std::string dir = test_dir("missing");
  ExperimentConfig cfg = small_config();
  cfg.synth->subjects = 1;

  SessionPlan plan = make_default_plan(2, 3);
  SynthesisConfig sc;
  auto session = synthesize(plan, default_gesture_profiles(), sc, 5);
  std::vector<LabeledSegment> no_rest;
  for (const auto& seg : session.segments) {
    if (seg.label != Gesture::rest) no_rest.push_back(seg);
  }
  session.recording.subject_id = "subA";
  save_recording(dir + "/train.emgrec", session.recording, no_rest);
  save_recording(dir + "/test.emgrec", session.recording, session.segments);

  ExperimentConfig fcfg;
  fcfg.train_trials = 2;
  FileDataParams files;
  files.train_paths = {dir + "/train.emgrec"};
  files.test_paths = {dir + "/test.emgrec"};
  fcfg.files = files;
  fcfg.synth.reset();
  try {
    run_condition(fcfg);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::validation);
    CHECK(std::string(e.what()).find("rest") != std::string::npos);
  }
}

TEST_CASE("extreme perturbation visibly degrades accuracy") {
  // guards the perturbation wiring: an untrained array rotation must hurt
  ExperimentConfig cfg = small_config();
  cfg.synth->subjects = 1;
  cfg.condition = Condition::across_sessions;
  cfg.synth->perturb.channel_shift = 3;
  const EvalReport rotated = run_condition(cfg);
  CHECK(rotated.conditions[0].avg_novote() < 70.0);
}

TEST_CASE("model container round-trips") {
  Rng rng(5);
  EncoderConfig ec;
  ec.dimension = 2000;
  ec.channels = 8;
  AssociativeMemory am(ec);
  std::vector<SpatiotemporalVector> v;
  for (int i = 0; i < 3; ++i) v.push_back({random_hd(rng, 2000), i});
  am.train(v, Gesture::open);
  am.train(v, Gesture::rest);

  Model model{FilterSpec{}, ChannelNormalization{{1.0, 0.5, 2.0, 1.0, 0.25, 3.5, 1.0, 0.125}},
              std::move(am)};
  const std::string path = test_dir("model") + "/m.model";
  save_model(path, model);
  const Model back = load_model(path);
  CHECK(back.filter.notch_q == 50.0);
  CHECK(back.norm.scale == model.norm.scale);
  CHECK(back.am.labels() == model.am.labels());
  CHECK(back.am.prototype(Gesture::open) == model.am.prototype(Gesture::open));
}
