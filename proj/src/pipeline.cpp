#include "textlcd/pipeline.hpp"

#include <chrono>

namespace textlcd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Json nullable(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

double StageTiming::mean_frame_seconds() const {
  return frames ? (extraction_seconds + loop_seconds) / static_cast<double>(frames) : 0.0;
}

Json StageTiming::to_json() const {
  const double n = frames ? static_cast<double>(frames) : 1.0;
  return Json{{"frames", frames},
              {"entity_extraction_s", extraction_seconds},
              {"loop_closure_s", loop_seconds},
              {"entity_extraction_ms_per_frame", 1e3 * extraction_seconds / n},
              {"loop_closure_ms_per_frame", 1e3 * loop_seconds / n},
              {"detect_ms_per_frame", 1e3 * mean_frame_seconds()}};
}

std::optional<TextEntity> extract_entity(const TextDetection& det, const CalibratedRig& rig,
                                         std::span<const Vec3> cloud_in_cam,
                                         const Pose& cam_in_anchor, std::size_t anchor_frame,
                                         const IdPattern& pattern, const RansacParams& ransac,
                                         std::uint64_t seed) {
  const PointCloud region = points_in_region(cloud_in_cam, rig.intrinsics, det.quad);
  try {
    const PlaneParams plane = fit_plane_ransac(region, seed, ransac);
    const Pose in_cam = make_entity_pose(rig.intrinsics, plane, det.quad);
    TextEntity e;
    e.content = normalize_content(det.content);
    e.category = classify_text(e.content, pattern);
    e.pose_in_anchor = cam_in_anchor * in_cam;
    e.anchor_frame = anchor_frame;
    e.confidence = det.confidence;
    return e;
  } catch (const Error&) {
    return std::nullopt;
  }
}

DetectPipeline::DetectPipeline(PipelineConfig config)
    : config_(std::move(config)),
      pattern_(config_.text.id_pattern),
      detector_(config_.loop, [this](std::size_t frame) -> std::optional<PointCloud> {
        if (frame >= odom_.size()) return std::nullopt;
        try {
          return accumulate_local_cloud(lidar_, odom_[frame].timestamp, config_.text.cloud_window);
        } catch (const Error&) {
          return std::nullopt;
        }
      }) {}

void DetectPipeline::push(const LogRecord& record) {
  if (finished_) throw std::logic_error("pipeline already finished");
  std::visit(
      [this](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, CalibRecord>) {
          rig_ = r.rig;
        } else if constexpr (std::is_same_v<T, OdomRecord>) {
          on_odometry(r);
        } else if constexpr (std::is_same_v<T, CloudRecord>) {
          if (r.frame >= odom_.size()) {
            throw Error(ErrorCode::MalformedRecord,
                        "cloud for frame " + std::to_string(r.frame) + " precedes its odometry");
          }
          if (!lidar_.empty() && odom_[r.frame].timestamp <= lidar_.back().timestamp) {
            throw Error(ErrorCode::MalformedRecord, "cloud records must follow frame order");
          }
          lidar_.push_back({odom_[r.frame].timestamp, odom_[r.frame].pose, r.points});
        } else {
          if (!rig_) throw Error(ErrorCode::MalformedRecord, "texts record before calib");
          pending_.push_back(r);
          drain_texts(false);
        }
      },
      record);
}

void DetectPipeline::on_odometry(const OdomRecord& r) {
  if (r.frame != odom_.size()) {
    throw Error(ErrorCode::MalformedRecord, "odometry frame " + std::to_string(r.frame) +
                                                " out of order (expected " +
                                                std::to_string(odom_.size()) + ")");
  }
  if (!odom_.empty() && !(r.t > odom_.back().timestamp)) {
    throw Error(ErrorCode::MalformedRecord, "odometry timestamps must increase");
  }
  odom_.push_back({r.t, r.pose});
  poses_.push_back(r.pose);
  drain_texts(false);
  process_frames_before(odom_.size() - 1);
}

const PointCloud& DetectPipeline::local_cloud(std::size_t frame) {
  auto it = cloud_cache_.find(frame);
  if (it != cloud_cache_.end()) return it->second;
  for (auto c = cloud_cache_.begin(); c != cloud_cache_.end();) {
    c = c->first + 2 < frame ? cloud_cache_.erase(c) : std::next(c);
  }
  PointCloud cloud;
  try {
    cloud = accumulate_local_cloud(lidar_, odom_[frame].timestamp, config_.text.cloud_window);
  } catch (const Error&) {
  }
  return cloud_cache_.emplace(frame, std::move(cloud)).first->second;
}

void DetectPipeline::drain_texts(bool final) {
  if (pending_.empty()) return;
  const auto start = Clock::now();
  std::vector<TextsRecord> keep;
  for (auto& texts : pending_) {
    const double t = texts.t;
    const std::size_t i = latest_frame_at_or_before(odom_, t);
    const bool exact = i != kNoFrame && odom_[i].timestamp == t;
    const bool bracketed = i != kNoFrame && i + 1 < odom_.size();
    if (!exact && !bracketed) {
      if (final || i == kNoFrame) {
        stats_.detections += texts.detections.size();
        stats_.unbracketed += texts.detections.size();
      } else {
        keep.push_back(std::move(texts));
      }
      continue;
    }
    const Pose cam = exact ? rig_->extrinsic_cam_in_lidar
                           : anchor_between(Pose::identity(), *rig_, odom_[i], odom_[i + 1], t);
    const Pose to_cam = cam.inverse();
    const PointCloud& cloud = local_cloud(i);
    PointCloud in_cam;
    in_cam.reserve(cloud.size());
    for (const auto& p : cloud) in_cam.push_back(to_cam * p);

    auto& bucket = entities_[i];
    for (std::size_t d = 0; d < texts.detections.size(); ++d) {
      const auto& det = texts.detections[d];
      ++stats_.detections;
      if (det.confidence < config_.text.min_confidence) {
        ++stats_.low_confidence;
        continue;
      }
      const std::uint64_t seed = config_.text.ransac_seed * 1000003ull + i * 1009ull + d;
      auto entity = extract_entity(det, *rig_, in_cam, cam, i, pattern_, config_.ransac, seed);
      if (!entity || entity->content.empty()) {
        ++stats_.geometry_failures;
        continue;
      }
      ++stats_.entities;
      bucket.push_back(std::move(*entity));
    }
  }
  pending_ = std::move(keep);
  timing_.extraction_seconds += seconds_since(start);
}

void DetectPipeline::process_frames_before(std::size_t end) {
  for (; next_frame_ < end; ++next_frame_) {
    const auto start = Clock::now();
    std::vector<TextEntity> entities;
    if (auto it = entities_.find(next_frame_); it != entities_.end()) {
      entities = std::move(it->second);
      entities_.erase(it);
    }
    detector_.process_frame(next_frame_, entities,
                            std::span<const Pose>(poses_.data(), next_frame_ + 1));
    timing_.loop_seconds += seconds_since(start);
    ++timing_.frames;
  }
}

void DetectPipeline::finish() {
  if (finished_) return;
  drain_texts(true);
  process_frames_before(odom_.size());
  finished_ = true;
}

DetectOutput run_detect(const std::vector<LogRecord>& records, const PipelineConfig& config) {
  DetectPipeline pipeline(config);
  for (const auto& r : records) pipeline.push(r);
  pipeline.finish();
  return {pipeline.constraints(), pipeline.odometry(), pipeline.timing(),
          pipeline.extraction_stats()};
}

OptimizationResult run_optimize(const std::vector<Pose>& odometry,
                                const std::vector<LoopConstraint>& constraints,
                                const PipelineConfig& config) {
  auto graph = PoseGraph::from_odometry(odometry, config.odom_sigma_t, config.odom_sigma_r);
  for (const auto& c : constraints) graph.add_loop(c);
  return graph.optimize(config.optimizer);
}

Json evaluate_run(const std::vector<Pose>& estimate, const std::vector<Pose>& ground_truth,
                  const std::vector<LoopConstraint>& constraints, const PipelineConfig& config) {
  const auto errors = ate(estimate, ground_truth);
  const auto labels = label_loop_poses(ground_truth, config.evaluation.tau, config.evaluation.s_min);
  std::vector<std::pair<std::size_t, std::size_t>> predictions;
  for (const auto& c : constraints) predictions.emplace_back(c.frame_i, c.frame_j);
  const auto s = score(predictions, labels);
  return Json{{"recall", nullable(s.recall)},
              {"precision", nullable(s.precision)},
              {"tp", s.tp},
              {"fp", s.fp},
              {"fn", s.fn},
              {"ate_mean", errors.mean},
              {"ate_per_pose", errors.per_pose},
              {"params", {{"tau", config.evaluation.tau}, {"s_min", config.evaluation.s_min}}}};
}

}  // namespace textlcd
