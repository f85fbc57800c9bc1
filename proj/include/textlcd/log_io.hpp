#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "textlcd/text_entity.hpp"

namespace textlcd {

using Json = nlohmann::json;

/// {"t":[x,y,z], "q":[w,x,y,z]}
Json pose_to_json(const Pose& pose);
Pose pose_from_json(const Json& j);

struct CalibRecord {
  CalibratedRig rig;
};

struct OdomRecord {
  double t = 0.0;
  std::size_t frame = 0;
  Pose pose;
};

struct CloudRecord {
  std::size_t frame = 0;
  PointCloud points;
};

struct TextsRecord {
  double t = 0.0;
  std::vector<TextDetection> detections;
};

struct GtRecord {
  std::size_t frame = 0;
  Pose pose;
};

using LogRecord = std::variant<CalibRecord, OdomRecord, CloudRecord, TextsRecord>;

Json record_to_json(const LogRecord& record);
Json gt_to_json(const GtRecord& record);

/// Throws MalformedRecord naming `line` when the object is not a valid
/// sensor-log record.
LogRecord record_from_json(const Json& j, std::size_t line);

void write_log(std::ostream& out, const std::vector<LogRecord>& records);
std::vector<LogRecord> read_log(std::istream& in);

void write_ground_truth(std::ostream& out, const std::vector<Pose>& gt);
std::vector<Pose> read_ground_truth(std::istream& in);

/// {"frame":k, "pose":{...}} per line.
void write_trajectory(std::ostream& out, const std::vector<Pose>& poses);
std::vector<Pose> read_trajectory(std::istream& in);

/// Parses one JSONL line; throws MalformedRecord naming the line on failure.
Json parse_line(const std::string& text, std::size_t line);

}  // namespace textlcd
