// emghd: EMG gesture recognition with hyperdimensional computing.
// Subcommands cover dataset synthesis, preprocessing, training,
// classification, evaluation, trial sweeps, heat maps, and import of raw
// recordings.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "emghd/errors.hpp"
#include "emghd/eval.hpp"

namespace {

using namespace emghd;
using nlohmann::json;

constexpr const char* kVersion = "1.0.0";

ExperimentConfig resolve_config(const std::string& config_path) {
  if (config_path.empty()) return ExperimentConfig{};
  return load_config(config_path);
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, "cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_all(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCategory::io, "cannot create " + path);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out.good()) throw Error(ErrorCategory::io, "write failed for " + path);
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::io, "cannot create directory " + dir);
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// label of the segment fully covering frame index f, if any
std::optional<Gesture> frame_label(const std::vector<LabeledSegment>& segments,
                                   std::int64_t frame, int decim) {
  for (const auto& seg : segments) {
    const auto [first, end] = frame_range(seg, decim);
    if (frame >= first && frame < end) return seg.label;
  }
  return std::nullopt;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig cfg = resolve_config(config_path);
  if (!cfg.synth.has_value()) {
    throw Error(ErrorCategory::config, "synth: config has no synthetic data block");
  }
  make_dir(out_dir);
  for (int s = 0; s < cfg.synth->subjects; ++s) {
    const auto [train, test] = make_synthetic_subject(cfg, s);
    const std::string base = out_dir + "/sub" + std::to_string(s + 1);
    save_recording(base + "_train.emgrec", train.recording, train.segments);
    save_recording(base + "_test.emgrec", test.recording, test.segments);
    std::printf("wrote %s_train.emgrec (%zu ch x %zu samples, %zu segments)\n", base.c_str(),
                train.recording.channels, train.recording.sample_count, train.segments.size());
    std::printf("wrote %s_test.emgrec  (%zu ch x %zu samples, %zu segments)\n", base.c_str(),
                test.recording.channels, test.recording.sample_count, test.segments.size());
  }
  return 0;
}

int cmd_preprocess(const std::string& config_path, const std::string& input,
                   const std::string& output, const std::string& norm_in,
                   const std::string& norm_out) {
  const ExperimentConfig cfg = resolve_config(config_path);
  const LoadedRecording loaded = load_recording(input);
  std::optional<ChannelNormalization> norm;
  if (!norm_in.empty()) {
    json j;
    try {
      j = json::parse(read_all(norm_in));
      ChannelNormalization n;
      n.method = j.at("method").get<std::string>();
      n.scale = j.at("scale").get<std::vector<double>>();
      norm = std::move(n);
    } catch (const json::exception& e) {
      throw Error(ErrorCategory::config, norm_in + ": " + e.what());
    }
  }
  const PreprocessResult result =
      preprocess(loaded.recording, cfg.filter, norm.has_value() ? &*norm : nullptr);

  std::string csv = "time_index,label";
  for (std::size_t c = 0; c < loaded.recording.channels; ++c) {
    csv += ",ch" + std::to_string(c);
  }
  csv += "\n";
  for (const FeatureFrame& f : result.frames) {
    csv += std::to_string(f.time_index);
    const auto label = frame_label(loaded.segments, f.time_index, cfg.filter.decim_factor);
    csv += ",";
    if (label.has_value()) csv += gesture_name(*label);
    for (double v : f.values) {
      csv += "," + format_value(v);
    }
    csv += "\n";
  }
  write_all(output, csv);
  std::printf("wrote %s (%zu frames x %zu channels)\n", output.c_str(), result.frames.size(),
              loaded.recording.channels);
  if (!norm_out.empty()) {
    json j;
    j["method"] = result.norm.method;
    j["scale"] = result.norm.scale;
    write_all(norm_out, j.dump(2) + "\n");
    std::printf("wrote %s\n", norm_out.c_str());
  }
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& input,
              const std::string& output) {
  const ExperimentConfig cfg = resolve_config(config_path);
  const LoadedRecording loaded = load_recording(input);
  const PreprocessResult pp = preprocess(loaded.recording, cfg.filter);
  const ItemMemory im(cfg.encoder.im_seed, cfg.encoder.channels, cfg.encoder.dimension);

  // first train_trials distinct trials, in recording order
  std::vector<int> order;
  for (const auto& seg : loaded.segments) {
    if (std::find(order.begin(), order.end(), seg.trial) == order.end()) {
      order.push_back(seg.trial);
    }
  }
  if (static_cast<int>(order.size()) < cfg.train_trials) {
    throw Error(ErrorCategory::validation,
                input + ": only " + std::to_string(order.size()) +
                    " trials available, train_trials=" + std::to_string(cfg.train_trials));
  }
  order.resize(static_cast<std::size_t>(cfg.train_trials));

  AssociativeMemory am(cfg.encoder);
  std::array<std::int64_t, kGestureCount> counts{};
  for (const auto& seg : loaded.segments) {
    if (std::find(order.begin(), order.end(), seg.trial) == order.end()) continue;
    const auto [first, end] = frame_range(seg, cfg.filter.decim_factor);
    if (end - first < cfg.encoder.ngram_n) continue;
    const auto windows =
        stream_encode(std::span(pp.frames).subspan(static_cast<std::size_t>(first),
                                                   static_cast<std::size_t>(end - first)),
                      im, cfg.encoder);
    if (windows.empty()) continue;
    am.train(windows, seg.label);
    counts[static_cast<std::size_t>(seg.label)] += static_cast<std::int64_t>(windows.size());
  }
  std::string missing;
  for (Gesture g : kAllGestures) {
    if (!am.has(g)) {
      if (!missing.empty()) missing += ", ";
      missing += gesture_name(g);
    }
  }
  if (!missing.empty()) {
    throw Error(ErrorCategory::validation, "training data missing gestures: " + missing);
  }
  save_model(output, Model{cfg.filter, pp.norm, std::move(am)});
  std::printf("wrote %s\n", output.c_str());
  for (Gesture g : kAllGestures) {
    std::printf("  %-6s %lld windows\n", std::string(gesture_name(g)).c_str(),
                static_cast<long long>(counts[static_cast<std::size_t>(g)]));
  }
  return 0;
}

int cmd_classify(const std::string& config_path, const std::string& model_path,
                 const std::string& input, const std::string& output) {
  const ExperimentConfig cfg = resolve_config(config_path);
  const Model model = load_model(model_path);
  const LoadedRecording loaded = load_recording(input);
  const PreprocessResult pp = preprocess(loaded.recording, model.filter, &model.norm);
  const EncoderConfig& enc = model.am.config();
  const ItemMemory im(enc.im_seed, enc.channels, enc.dimension);

  std::string csv = "time_index,true,predicted,voted";
  for (Gesture g : model.am.labels()) {
    csv += ",sim_" + std::string(gesture_name(g));
  }
  csv += "\n";

  std::int64_t matched = 0;
  std::int64_t matched_vote = 0;
  std::int64_t total = 0;
  auto classify_stream = [&](std::span<const FeatureFrame> frames,
                             std::optional<Gesture> truth) {
    const auto windows = stream_encode(frames, im, enc);
    std::vector<ClassificationResult> results;
    for (const auto& g : windows) {
      results.push_back(model.am.classify(g));
      const ClassificationResult& r = results.back();
      const Gesture voted = vote(results, cfg.vote_window);
      csv += std::to_string(r.time_index) + ",";
      if (truth.has_value()) csv += gesture_name(*truth);
      csv += ",";
      csv += gesture_name(r.predicted);
      csv += ",";
      csv += gesture_name(voted);
      for (const auto& s : r.similarities) {
        csv += "," + format_value(s.cosine);
      }
      csv += "\n";
      if (truth.has_value()) {
        ++total;
        if (r.predicted == *truth) ++matched;
        if (voted == *truth) ++matched_vote;
      }
    }
  };

  if (loaded.segments.empty()) {
    classify_stream(pp.frames, std::nullopt);
  } else {
    for (const auto& seg : loaded.segments) {
      const auto [first, end] = frame_range(seg, model.filter.decim_factor);
      if (end - first < enc.ngram_n) continue;
      classify_stream(std::span(pp.frames).subspan(static_cast<std::size_t>(first),
                                                   static_cast<std::size_t>(end - first)),
                      seg.label);
    }
  }
  write_all(output, csv);
  std::printf("wrote %s\n", output.c_str());
  if (total > 0) {
    std::printf("accuracy: %.2f%% no vote, %.2f%% with vote (%lld windows)\n",
                100.0 * double(matched) / double(total),
                100.0 * double(matched_vote) / double(total), static_cast<long long>(total));
  }
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& out_dir, bool all_conditions,
             int threads) {
  ExperimentConfig cfg = resolve_config(config_path);
  EvalReport report;
  if (all_conditions) {
    for (Condition c :
         {Condition::same_session, Condition::across_sessions, Condition::rotated}) {
      cfg.condition = c;
      EvalReport part = run_condition(cfg, threads);
      report.conditions.push_back(std::move(part.conditions[0]));
      report.heatmaps.insert(part.heatmaps.begin(), part.heatmaps.end());
      report.provenance = std::move(part.provenance);
    }
    report.provenance["config"]["condition"] = "all";
  } else {
    report = run_condition(cfg, threads);
  }
  emit_report(report, out_dir);
  std::fputs(render_text_table(report).c_str(), stdout);
  std::printf("\nreport written to %s\n", out_dir.c_str());
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              std::vector<int> counts, int threads) {
  const ExperimentConfig cfg = resolve_config(config_path);
  if (counts.empty()) {
    const int max_trials = cfg.synth.has_value() ? cfg.synth->trials : cfg.train_trials;
    for (int k = 1; k <= max_trials; ++k) counts.push_back(k);
  }
  const EvalReport report = sweep_trials(cfg, counts, threads);
  emit_report(report, out_dir);
  std::fputs(render_text_table(report).c_str(), stdout);
  std::printf("\nreport written to %s\n", out_dir.c_str());
  return 0;
}

int cmd_heatmap(const std::string& config_path, const std::string& input,
                const std::string& out_dir) {
  const ExperimentConfig cfg = resolve_config(config_path);
  const LoadedRecording loaded = load_recording(input);
  if (loaded.recording.channels != kGridChannels) {
    throw Error(ErrorCategory::validation,
                "heatmap: requires the 64-channel grid layout");
  }
  const PreprocessResult pp = preprocess(loaded.recording, cfg.filter);
  std::map<Gesture, std::vector<std::size_t>> by_gesture;
  for (const auto& seg : loaded.segments) {
    const auto [first, end] = frame_range(seg, cfg.filter.decim_factor);
    for (std::int64_t f = first; f < end; ++f) {
      if (f >= 0 && f < static_cast<std::int64_t>(pp.frames.size())) {
        by_gesture[seg.label].push_back(static_cast<std::size_t>(f));
      }
    }
  }
  if (by_gesture.empty()) {
    throw Error(ErrorCategory::validation, "heatmap: recording has no labeled segments");
  }
  make_dir(out_dir);
  for (const auto& [gesture, map] : activity_maps(pp.frames, by_gesture)) {
    const std::string path =
        out_dir + "/heatmap_" + std::string(gesture_name(gesture)) + ".pgm";
    write_pgm(path, map);
    std::printf("wrote %s\n", path.c_str());
  }
  return 0;
}

int cmd_import(const std::string& mapping_path, const std::string& input,
               const std::string& output) {
  if (mapping_path.empty()) {
    throw Error(ErrorCategory::import_mapping,
                "import requires --mapping with a format descriptor (dtype, layout, channels, "
                "sample_rate, optional channel_map/segments); see README for the schema");
  }
  json j;
  try {
    j = json::parse(read_all(mapping_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::config, mapping_path + ": " + e.what());
  }
  std::string dtype;
  std::string layout;
  Recording rec;
  std::vector<LabeledSegment> segments;
  std::vector<std::size_t> channel_map;
  try {
    dtype = j.at("dtype").get<std::string>();
    layout = j.at("layout").get<std::string>();
    rec.channels = j.at("channels").get<std::size_t>();
    rec.sample_rate = j.at("sample_rate").get<double>();
    rec.scale = j.value("scale", 1.0);
    rec.subject_id = j.value("subject", "imported");
    rec.session_id = j.value("session", "imported");
    if (j.contains("channel_map")) {
      channel_map = j.at("channel_map").get<std::vector<std::size_t>>();
    }
    if (j.contains("segments")) {
      for (const auto& s : j.at("segments")) {
        LabeledSegment seg;
        const auto g = gesture_from_name(s.at("label").get<std::string>());
        if (!g.has_value()) {
          throw Error(ErrorCategory::format_label,
                      "import: unknown gesture label '" + s.at("label").get<std::string>() + "'");
        }
        seg.label = *g;
        seg.start_sample = s.at("start").get<std::int64_t>();
        seg.end_sample = s.at("end").get<std::int64_t>();
        seg.trial = s.value("trial", -1);
        segments.push_back(seg);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::config, mapping_path + ": " + e.what());
  }
  if (rec.channels == 0) {
    throw Error(ErrorCategory::config, "import: channels must be positive");
  }
  if (!channel_map.empty() && channel_map.size() != rec.channels) {
    throw Error(ErrorCategory::config, "import: channel_map length must equal channels");
  }
  std::size_t elem = 0;
  if (dtype == "f32le") {
    elem = 4;
  } else if (dtype == "f64le") {
    elem = 8;
  } else if (dtype == "i16le") {
    elem = 2;
  } else {
    throw Error(ErrorCategory::config, "import: dtype must be f32le, f64le, or i16le");
  }
  if (layout != "interleaved" && layout != "channels_major") {
    throw Error(ErrorCategory::config, "import: layout must be interleaved or channels_major");
  }
  const std::string bytes = read_all(input);
  if (bytes.size() % (elem * rec.channels) != 0) {
    throw Error(ErrorCategory::format_shape,
                input + ": byte count is not a whole number of multichannel samples");
  }
  rec.sample_count = bytes.size() / (elem * rec.channels);
  rec.samples.resize(rec.channels * rec.sample_count);
  auto read_elem = [&](std::size_t flat) -> float {
    const char* p = bytes.data() + flat * elem;
    if (dtype == "f32le") {
      std::uint32_t u = 0;
      std::memcpy(&u, p, 4);
      float f = 0.0f;
      std::memcpy(&f, &u, 4);
      return f;
    }
    if (dtype == "f64le") {
      double d = 0.0;
      std::memcpy(&d, p, 8);
      return static_cast<float>(d);
    }
    std::int16_t v = 0;
    std::memcpy(&v, p, 2);
    return static_cast<float>(v);
  };
  for (std::size_t c = 0; c < rec.channels; ++c) {
    const std::size_t src_c = channel_map.empty() ? c : channel_map[c];
    if (src_c >= rec.channels) {
      throw Error(ErrorCategory::config, "import: channel_map entry out of range");
    }
    auto row = rec.channel(c);
    for (std::size_t t = 0; t < rec.sample_count; ++t) {
      const std::size_t flat = layout == "interleaved" ? t * rec.channels + src_c
                                                       : src_c * rec.sample_count + t;
      row[t] = read_elem(flat);
    }
  }
  save_recording(output, rec, segments);
  std::printf("wrote %s (%zu ch x %zu samples, %zu segments)\n", output.c_str(), rec.channels,
              rec.sample_count, segments.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EMG gesture recognition with hyperdimensional computing"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string input;
  std::string output;
  std::string out_dir = "out";
  std::string norm_in;
  std::string norm_out;
  std::string model_path;
  std::string mapping_path;
  std::string counts_arg;
  bool all_conditions = false;
  int threads = 1;

  auto* synth = app.add_subcommand("synth", "Generate synthetic train/test recordings");
  synth->add_option("--config", config_path, "Experiment config (JSON)");
  synth->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* preprocess = app.add_subcommand("preprocess", "Run the preprocessing chain on a recording");
  preprocess->add_option("--config", config_path, "Experiment config (JSON)");
  preprocess->add_option("--input", input, "Recording manifest (.emgrec)")->required();
  preprocess->add_option("--output", output, "Feature frame CSV")->required();
  preprocess->add_option("--norm-in", norm_in, "Reuse a fitted normalization (JSON)");
  preprocess->add_option("--norm-out", norm_out, "Write the fitted normalization (JSON)");

  auto* train = app.add_subcommand("train", "Train an associative memory from a recording");
  train->add_option("--config", config_path, "Experiment config (JSON)");
  train->add_option("--input", input, "Training recording (.emgrec)")->required();
  train->add_option("--output", output, "Model manifest path")->required();

  auto* classify = app.add_subcommand("classify", "Classify a recording with a trained model");
  classify->add_option("--config", config_path, "Experiment config (JSON)");
  classify->add_option("--model", model_path, "Model manifest path")->required();
  classify->add_option("--input", input, "Recording manifest (.emgrec)")->required();
  classify->add_option("--output", output, "Per-window result CSV")->required();

  auto* eval = app.add_subcommand("eval", "Run a full evaluation condition");
  eval->add_option("--config", config_path, "Experiment config (JSON)");
  eval->add_option("--out-dir", out_dir, "Report directory")->required();
  eval->add_flag("--all-conditions", all_conditions, "Run all three conditions");
  eval->add_option("--threads", threads, "Worker threads across subjects");

  auto* sweep = app.add_subcommand("sweep", "Accuracy versus number of training trials");
  sweep->add_option("--config", config_path, "Experiment config (JSON)");
  sweep->add_option("--out-dir", out_dir, "Report directory")->required();
  sweep->add_option("--counts", counts_arg, "Comma-separated trial counts (default 1..trials)");
  sweep->add_option("--threads", threads, "Worker threads across subjects");

  auto* heatmap = app.add_subcommand("heatmap", "Per-gesture activity heat maps (PGM)");
  heatmap->add_option("--config", config_path, "Experiment config (JSON)");
  heatmap->add_option("--input", input, "Recording manifest (.emgrec)")->required();
  heatmap->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* import = app.add_subcommand("import", "Convert a raw recording to the native format");
  import->add_option("--mapping", mapping_path, "Format descriptor (JSON)");
  import->add_option("--input", input, "Raw payload file")->required();
  import->add_option("--output", output, "Output recording manifest (.emgrec)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(config_path, out_dir);
    if (preprocess->parsed()) {
      return cmd_preprocess(config_path, input, output, norm_in, norm_out);
    }
    if (train->parsed()) return cmd_train(config_path, input, output);
    if (classify->parsed()) return cmd_classify(config_path, model_path, input, output);
    if (eval->parsed()) return cmd_eval(config_path, out_dir, all_conditions, threads);
    if (sweep->parsed()) {
      std::vector<int> counts;
      if (!counts_arg.empty()) {
        std::size_t pos = 0;
        while (pos < counts_arg.size()) {
          const std::size_t comma = counts_arg.find(',', pos);
          const std::string tok = counts_arg.substr(
              pos, comma == std::string::npos ? std::string::npos : comma - pos);
          try {
            counts.push_back(std::stoi(tok));
          } catch (const std::exception&) {
            throw Error(ErrorCategory::usage, "sweep: bad count '" + tok + "'");
          }
          if (comma == std::string::npos) break;
          pos = comma + 1;
        }
      }
      return cmd_sweep(config_path, out_dir, counts, threads);
    }
    if (heatmap->parsed()) return cmd_heatmap(config_path, input, out_dir);
    if (import->parsed()) return cmd_import(mapping_path, input, output);
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: category=%s: %s\n", to_string(e.category()), e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: category=internal: %s\n", e.what());
    return 1;
  }
}
