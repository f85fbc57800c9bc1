#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "textlcd/text_entity.hpp"

namespace textlcd {

/// Value stored in the text dictionary.
struct TextObservation {
  std::size_t frame = 0;
  Pose pose;  // T_text^L
  double confidence = 0.0;
  TextCategory category = TextCategory::Generic;
};

/// Value stored in the frame dictionary.
struct FrameObservation {
  std::string content;
  Pose pose;
  double confidence = 0.0;
  TextCategory category = TextCategory::Generic;
};

/// Every historical text entity observation, indexed twice: by content
/// (candidate retrieval) and by anchor frame (local map construction).
/// Single writer; readers may share a const reference between inserts.
class ObservationDatabase {
 public:
  /// Returns false when the exact (frame, content, pose) triplet is
  /// already stored.
  bool insert(std::size_t frame, const TextEntity& entity);

  /// Observations of `content` in insertion order; empty if unseen.
  const std::vector<TextObservation>& frames_observing(const std::string& content) const;

  /// Observations anchored at `frame` in insertion order.
  const std::vector<FrameObservation>& entities_in_frame(std::size_t frame) const;

  std::size_t size() const { return count_; }
  std::size_t content_count() const { return text_dict_.size(); }

  const std::unordered_map<std::string, std::vector<TextObservation>>& text_dict() const {
    return text_dict_;
  }
  const std::unordered_map<std::size_t, std::vector<FrameObservation>>& frame_dict() const {
    return frame_dict_;
  }

  /// Cross-check of both dictionaries; true when every entry has its mirror.
  bool audit() const;

  /// One JSON object per line, in global insertion order.
  void dump_jsonl(std::ostream& out) const;
  static ObservationDatabase load_jsonl(std::istream& in);

 private:
  std::unordered_map<std::string, std::vector<TextObservation>> text_dict_;
  std::unordered_map<std::size_t, std::vector<FrameObservation>> frame_dict_;
  // (frame, index within the frame list) in insertion order, for dumps.
  std::vector<std::pair<std::size_t, std::size_t>> order_;
  std::size_t count_ = 0;
};

}  // namespace textlcd
