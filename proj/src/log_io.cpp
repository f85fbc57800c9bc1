#include "textlcd/log_io.hpp"

#include <istream>
#include <ostream>

namespace textlcd {

namespace {

[[noreturn]] void malformed(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line) + ": " + why);
}

Vec3 vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

Json pose_to_json(const Pose& pose) {
  const auto q = pose.quaternion();
  const auto& t = pose.translation();
  return Json{{"t", {t.x(), t.y(), t.z()}}, {"q", {q.w(), q.x(), q.y(), q.z()}}};
}

Pose pose_from_json(const Json& j) {
  const Json& t = j.at("t");
  const Json& q = j.at("q");
  if (!q.is_array() || q.size() != 4) throw std::invalid_argument("pose quaternion needs 4 values");
  Eigen::Quaterniond quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                          q[3].get<double>());
  if (quat.norm() < 1e-12) throw std::invalid_argument("zero quaternion");
  return Pose(quat, vec3_from_json(t));
}

Json record_to_json(const LogRecord& record) {
  return std::visit(
      [](const auto& r) -> Json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, CalibRecord>) {
          const auto& k = r.rig.intrinsics;
          return Json{{"type", "calib"},
                      {"intrinsics", {k.fx, k.fy, k.cx, k.cy}},
                      {"extrinsic", pose_to_json(r.rig.extrinsic_cam_in_lidar)}};
        } else if constexpr (std::is_same_v<T, OdomRecord>) {
          return Json{{"type", "odom"}, {"t", r.t}, {"frame", r.frame}, {"pose", pose_to_json(r.pose)}};
        } else if constexpr (std::is_same_v<T, CloudRecord>) {
          Json pts = Json::array();
          for (const auto& p : r.points) pts.push_back({p.x(), p.y(), p.z()});
          return Json{{"type", "cloud"}, {"frame", r.frame}, {"points", std::move(pts)}};
        } else {
          Json dets = Json::array();
          for (const auto& d : r.detections) {
            Json quad = Json::array();
            for (const auto& px : d.quad) quad.push_back({px.u, px.v});
            dets.push_back({{"text", d.content}, {"conf", d.confidence}, {"quad", std::move(quad)}});
          }
          return Json{{"type", "texts"}, {"t", r.t}, {"detections", std::move(dets)}};
        }
      },
      record);
}

Json gt_to_json(const GtRecord& record) {
  return Json{{"type", "gt"}, {"frame", record.frame}, {"pose", pose_to_json(record.pose)}};
}

LogRecord record_from_json(const Json& j, std::size_t line) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "calib") {
      const Json& k = j.at("intrinsics");
      if (!k.is_array() || k.size() != 4) malformed(line, "intrinsics needs [fx,fy,cx,cy]");
      CalibRecord r;
      r.rig.intrinsics = {k[0].get<double>(), k[1].get<double>(), k[2].get<double>(),
                          k[3].get<double>()};
      if (!(r.rig.intrinsics.fx > 0.0 && r.rig.intrinsics.fy > 0.0)) {
        malformed(line, "focal lengths must be positive");
      }
      r.rig.extrinsic_cam_in_lidar = pose_from_json(j.at("extrinsic"));
      return r;
    }
    if (type == "odom") {
      return OdomRecord{j.at("t").get<double>(), j.at("frame").get<std::size_t>(),
                        pose_from_json(j.at("pose"))};
    }
    if (type == "cloud") {
      CloudRecord r;
      r.frame = j.at("frame").get<std::size_t>();
      const Json& pts = j.at("points");
      r.points.reserve(pts.size());
      for (const auto& p : pts) r.points.push_back(vec3_from_json(p));
      return r;
    }
    if (type == "texts") {
      TextsRecord r;
      r.t = j.at("t").get<double>();
      for (const auto& d : j.at("detections")) {
        TextDetection det;
        det.content = d.at("text").get<std::string>();
        det.confidence = d.at("conf").get<double>();
        det.timestamp = r.t;
        const Json& quad = d.at("quad");
        if (!quad.is_array() || quad.size() != 4) malformed(line, "quad needs 4 corners");
        for (std::size_t c = 0; c < 4; ++c) {
          if (!quad[c].is_array() || quad[c].size() != 2) malformed(line, "quad corner needs [u,v]");
          det.quad[c] = {quad[c][0].get<double>(), quad[c][1].get<double>()};
        }
        r.detections.push_back(std::move(det));
      }
      return r;
    }
    malformed(line, "unknown record type '" + type + "'");
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    malformed(line, e.what());
  }
}

Json parse_line(const std::string& text, std::size_t line) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    malformed(line, std::string("invalid JSON: ") + e.what());
  }
}

void write_log(std::ostream& out, const std::vector<LogRecord>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

std::vector<LogRecord> read_log(std::istream& in) {
  std::vector<LogRecord> records;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(record_from_json(parse_line(text, line), line));
  }
  return records;
}

void write_ground_truth(std::ostream& out, const std::vector<Pose>& gt) {
  for (std::size_t k = 0; k < gt.size(); ++k) out << gt_to_json({k, gt[k]}).dump() << '\n';
}

namespace {

std::vector<Pose> read_frame_poses(std::istream& in) {
  std::vector<Pose> poses;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Json j = parse_line(text, line);
    try {
      const auto frame = j.at("frame").get<std::size_t>();
      if (frame != poses.size()) malformed(line, "frames must be consecutive from 0");
      poses.push_back(pose_from_json(j.at("pose")));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      malformed(line, e.what());
    }
  }
  return poses;
}

}  // namespace

std::vector<Pose> read_ground_truth(std::istream& in) { return read_frame_poses(in); }

void write_trajectory(std::ostream& out, const std::vector<Pose>& poses) {
  for (std::size_t k = 0; k < poses.size(); ++k) {
    out << Json{{"frame", k}, {"pose", pose_to_json(poses[k])}}.dump() << '\n';
  }
}

std::vector<Pose> read_trajectory(std::istream& in) { return read_frame_poses(in); }

}  // namespace textlcd
