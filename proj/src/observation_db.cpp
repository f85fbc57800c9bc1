#include "textlcd/observation_db.hpp"

#include <istream>
#include <ostream>

#include "textlcd/log_io.hpp"

namespace textlcd {

namespace {

bool same_pose(const Pose& a, const Pose& b) {
  return a.rotation() == b.rotation() && a.translation() == b.translation();
}

const char* category_name(TextCategory c) { return c == TextCategory::ID ? "id" : "generic"; }

}  // namespace

bool ObservationDatabase::insert(std::size_t frame, const TextEntity& entity) {
  auto& in_frame = frame_dict_[frame];
  for (const auto& obs : in_frame) {
    if (obs.content == entity.content && same_pose(obs.pose, entity.pose_in_anchor)) return false;
  }
  in_frame.push_back({entity.content, entity.pose_in_anchor, entity.confidence, entity.category});
  text_dict_[entity.content].push_back(
      {frame, entity.pose_in_anchor, entity.confidence, entity.category});
  order_.emplace_back(frame, in_frame.size() - 1);
  ++count_;
  return true;
}

const std::vector<TextObservation>& ObservationDatabase::frames_observing(
    const std::string& content) const {
  static const std::vector<TextObservation> kEmpty;
  auto it = text_dict_.find(content);
  return it == text_dict_.end() ? kEmpty : it->second;
}

const std::vector<FrameObservation>& ObservationDatabase::entities_in_frame(std::size_t frame) const {
  static const std::vector<FrameObservation> kEmpty;
  auto it = frame_dict_.find(frame);
  return it == frame_dict_.end() ? kEmpty : it->second;
}

bool ObservationDatabase::audit() const {
  std::size_t text_entries = 0;
  for (const auto& [content, list] : text_dict_) {
    text_entries += list.size();
    for (const auto& obs : list) {
      const auto& in_frame = entities_in_frame(obs.frame);
      bool found = false;
      for (const auto& f : in_frame) {
        if (f.content == content && same_pose(f.pose, obs.pose)) {
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
  }
  std::size_t frame_entries = 0;
  for (const auto& [frame, list] : frame_dict_) {
    frame_entries += list.size();
    for (const auto& f : list) {
      bool found = false;
      for (const auto& obs : frames_observing(f.content)) {
        if (obs.frame == frame && same_pose(obs.pose, f.pose)) {
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
  }
  return text_entries == frame_entries && text_entries == count_;
}

void ObservationDatabase::dump_jsonl(std::ostream& out) const {
  for (const auto& [frame, index] : order_) {
    const auto& obs = frame_dict_.at(frame)[index];
    out << Json{{"frame", frame},
                {"text", obs.content},
                {"category", category_name(obs.category)},
                {"conf", obs.confidence},
                {"pose", pose_to_json(obs.pose)}}
               .dump()
        << '\n';
  }
}

ObservationDatabase ObservationDatabase::load_jsonl(std::istream& in) {
  ObservationDatabase db;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Json j = parse_line(text, line);
    try {
      TextEntity e;
      e.anchor_frame = j.at("frame").get<std::size_t>();
      e.content = j.at("text").get<std::string>();
      e.category = j.at("category").get<std::string>() == "id" ? TextCategory::ID
                                                               : TextCategory::Generic;
      e.confidence = j.at("conf").get<double>();
      e.pose_in_anchor = pose_from_json(j.at("pose"));
      db.insert(e.anchor_frame, e);
    } catch (const std::exception& ex) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line) + ": " + ex.what());
    }
  }
  return db;
}

}  // namespace textlcd
