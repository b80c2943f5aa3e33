#include "emghd/classifier.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include "container_io.hpp"
#include "emghd/errors.hpp"

namespace emghd {

std::string_view gesture_name(Gesture g) {
  switch (g) {
    case Gesture::fist: return "fist";
    case Gesture::raise: return "raise";
    case Gesture::lower: return "lower";
    case Gesture::open: return "open";
    case Gesture::rest: return "rest";
  }
  return "?";
}

std::optional<Gesture> gesture_from_name(std::string_view name) {
  for (Gesture g : kAllGestures) {
    if (gesture_name(g) == name) return g;
  }
  return std::nullopt;
}

AssociativeMemory::AssociativeMemory(EncoderConfig config) : config_(config) {
  validate(config_);
}

void AssociativeMemory::train(std::span<const SpatiotemporalVector> vectors, Gesture label) {
  if (vectors.empty()) {
    throw std::invalid_argument("train: empty vector sequence");
  }
  auto& slot = acc_[static_cast<std::size_t>(label)];
  if (!slot.has_value()) {
    slot.emplace(config_.dimension);
  }
  for (const SpatiotemporalVector& v : vectors) {
    slot->add(v.vec, 1.0);
  }
  proto_[static_cast<std::size_t>(label)] = slot->thresholded();
}

ClassificationResult AssociativeMemory::classify(const SpatiotemporalVector& g) const {
  ClassificationResult result;
  result.time_index = g.time_index;
  bool any = false;
  double best = 0.0;
  for (Gesture label : kAllGestures) {
    const auto idx = static_cast<std::size_t>(label);
    if (!acc_[idx].has_value()) continue;
    const double sim = cosine(proto_[idx], g.vec);
    result.similarities.push_back(LabelSimilarity{label, sim});
    if (!any || sim > best) {  // strict: exact ties keep the lowest id
      any = true;
      best = sim;
      result.predicted = label;
    }
  }
  if (!any) {
    throw std::runtime_error("classify: associative memory has no trained labels");
  }
  return result;
}

std::vector<Gesture> AssociativeMemory::labels() const {
  std::vector<Gesture> out;
  for (Gesture label : kAllGestures) {
    if (acc_[static_cast<std::size_t>(label)].has_value()) out.push_back(label);
  }
  return out;
}

bool AssociativeMemory::has(Gesture label) const {
  return acc_[static_cast<std::size_t>(label)].has_value();
}

const Accumulator& AssociativeMemory::accumulator(Gesture label) const {
  const auto& slot = acc_[static_cast<std::size_t>(label)];
  if (!slot.has_value()) {
    throw std::invalid_argument("accumulator: label not trained: " +
                                std::string(gesture_name(label)));
  }
  return *slot;
}

const HdVector& AssociativeMemory::prototype(Gesture label) const {
  if (!has(label)) {
    throw std::invalid_argument("prototype: label not trained: " +
                                std::string(gesture_name(label)));
  }
  return proto_[static_cast<std::size_t>(label)];
}

void AssociativeMemory::save(const std::string& path) const {
  namespace io = detail;
  std::string payload;
  std::string manifest;
  manifest += "EMGHD-AM v1\n";
  manifest += "dimension " + std::to_string(config_.dimension) + "\n";
  manifest += "channels " + std::to_string(config_.channels) + "\n";
  manifest += "ngram " + std::to_string(config_.ngram_n) + "\n";
  manifest += "im_seed " + std::to_string(config_.im_seed) + "\n";
  const auto trained = labels();
  manifest += "labels " + std::to_string(trained.size()) + "\n";
  for (Gesture label : trained) {
    const Accumulator& acc = accumulator(label);
    manifest += "label " + std::to_string(gesture_id(label)) + " " +
                std::string(gesture_name(label)) + " " + std::to_string(acc.count()) + "\n";
    for (double s : acc.sums()) io::append_f64le(payload, s);
  }
  const std::string payload_path = path + ".f64";
  manifest += "payload " + payload_path.substr(payload_path.find_last_of('/') + 1) + "\n";
  manifest += "payload_bytes " + std::to_string(payload.size()) + "\n";
  manifest += "payload_crc32 " + io::format_u32hex(io::crc32_bytes(payload)) + "\n";
  manifest += "end\n";
  io::write_file(payload_path, payload);
  io::write_file(path, manifest);
}

AssociativeMemory AssociativeMemory::load(const std::string& path) {
  namespace io = detail;
  const auto lines = io::read_manifest_lines(io::read_file(path));
  if (lines.empty() || lines[0].size() != 2 || lines[0][0] != "EMGHD-AM" || lines[0][1] != "v1") {
    throw Error(ErrorCategory::format_shape, path + ": not an EMGHD-AM v1 manifest");
  }
  EncoderConfig cfg;
  struct LabelEntry {
    Gesture label;
    std::size_t count;
  };
  std::vector<LabelEntry> entries;
  std::size_t declared_labels = 0;
  std::size_t payload_bytes = 0;
  std::uint32_t payload_crc = 0;
  bool have_end = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& t = lines[i];
    if (t[0] == "dimension" && t.size() == 2) {
      cfg.dimension = io::parse_uint(t[1], "dimension");
    } else if (t[0] == "channels" && t.size() == 2) {
      cfg.channels = io::parse_uint(t[1], "channels");
    } else if (t[0] == "ngram" && t.size() == 2) {
      cfg.ngram_n = static_cast<int>(io::parse_int(t[1], "ngram"));
    } else if (t[0] == "im_seed" && t.size() == 2) {
      cfg.im_seed = io::parse_uint(t[1], "im_seed");
    } else if (t[0] == "labels" && t.size() == 2) {
      declared_labels = io::parse_uint(t[1], "labels");
    } else if (t[0] == "label" && t.size() == 4) {
      const auto g = gesture_from_name(t[2]);
      if (!g.has_value()) {
        throw Error(ErrorCategory::format_label, path + ": unknown gesture '" + t[2] + "'");
      }
      if (io::parse_int(t[1], "label id") != gesture_id(*g)) {
        throw Error(ErrorCategory::format_label, path + ": label id mismatch for '" + t[2] + "'");
      }
      const std::size_t count = io::parse_uint(t[3], "label count");
      if (count == 0) {
        throw Error(ErrorCategory::format_shape,
                    path + ": stored label '" + t[2] + "' has no accumulated vectors");
      }
      entries.push_back({*g, count});
    } else if (t[0] == "payload" && t.size() == 2) {
      // payload lives next to the manifest with a fixed suffix
    } else if (t[0] == "payload_bytes" && t.size() == 2) {
      payload_bytes = io::parse_uint(t[1], "payload_bytes");
    } else if (t[0] == "payload_crc32" && t.size() == 2) {
      payload_crc = io::parse_u32hex(t[1], "payload_crc32");
    } else if (t[0] == "end") {
      have_end = true;
    } else {
      throw Error(ErrorCategory::format_shape, path + ": unrecognized manifest line '" + t[0] + "'");
    }
  }
  if (!have_end || entries.size() != declared_labels) {
    throw Error(ErrorCategory::format_shape, path + ": manifest label table inconsistent");
  }
  const std::string payload = io::read_file(path + ".f64");
  if (payload.size() != payload_bytes ||
      payload.size() != entries.size() * cfg.dimension * sizeof(double)) {
    throw Error(ErrorCategory::format_shape, path + ": payload size does not match manifest");
  }
  if (io::crc32_bytes(payload) != payload_crc) {
    throw Error(ErrorCategory::format_checksum, path + ": payload checksum mismatch");
  }
  AssociativeMemory am(cfg);
  const char* p = payload.data();
  for (const auto& e : entries) {
    std::vector<double> sums(cfg.dimension);
    for (std::size_t i = 0; i < cfg.dimension; ++i, p += sizeof(double)) {
      sums[i] = io::read_f64le(p);
    }
    am.restore(e.label, std::move(sums), e.count);
  }
  return am;
}

void AssociativeMemory::restore(Gesture label, std::vector<double> sums, std::size_t count) {
  const auto idx = static_cast<std::size_t>(label);
  acc_[idx] = Accumulator::from_raw(std::move(sums), count);
  proto_[idx] = acc_[idx]->thresholded();
}

Gesture vote(std::span<const ClassificationResult> results, int window) {
  if (results.empty()) {
    throw std::invalid_argument("vote: no results");
  }
  if (window < 1) {
    throw std::invalid_argument("vote: window must be >= 1");
  }
  const std::size_t take = std::min<std::size_t>(results.size(), static_cast<std::size_t>(window));
  std::array<int, kGestureCount> counts{};
  std::array<std::size_t, kGestureCount> last_seen{};
  const std::size_t begin = results.size() - take;
  for (std::size_t i = begin; i < results.size(); ++i) {
    const auto idx = static_cast<std::size_t>(results[i].predicted);
    ++counts[idx];
    last_seen[idx] = i;
  }
  int best_count = -1;
  std::size_t best_last = 0;
  Gesture winner = results.back().predicted;
  for (Gesture g : kAllGestures) {
    const auto idx = static_cast<std::size_t>(g);
    if (counts[idx] == 0) continue;
    if (counts[idx] > best_count ||
        (counts[idx] == best_count && last_seen[idx] > best_last)) {
      best_count = counts[idx];
      best_last = last_seen[idx];
      winner = g;
    }
  }
  return winner;
}

}  // namespace emghd
