#pragma once

#include <cstddef>
#include <optional>
#include <unordered_map>
#include <vector>

#include "textlcd/config.hpp"
#include "textlcd/evaluation.hpp"

namespace textlcd {

struct StageTiming {
  std::size_t frames = 0;
  double extraction_seconds = 0.0;
  double loop_seconds = 0.0;

  double mean_frame_seconds() const;
  Json to_json() const;
};

struct ExtractionStats {
  std::size_t detections = 0;
  std::size_t low_confidence = 0;
  std::size_t unbracketed = 0;
  std::size_t geometry_failures = 0;
  std::size_t entities = 0;
};

/// Text entity from one detection, given the local cloud of the anchor
/// frame and the camera pose in that frame at the image time. Returns
/// nothing when the region yields no usable plane.
std::optional<TextEntity> extract_entity(const TextDetection& det, const CalibratedRig& rig,
                                         std::span<const Vec3> cloud_in_cam,
                                         const Pose& cam_in_anchor, std::size_t anchor_frame,
                                         const IdPattern& pattern, const RansacParams& ransac,
                                         std::uint64_t seed);

/// Streams log records through entity extraction and loop closure. Text
/// records are held until the odometry frame after their timestamp arrives.
class DetectPipeline {
 public:
  explicit DetectPipeline(PipelineConfig config);
  DetectPipeline(const DetectPipeline&) = delete;
  DetectPipeline& operator=(const DetectPipeline&) = delete;

  void push(const LogRecord& record);
  /// Flushes held text records and the final frame.
  void finish();

  const std::vector<LoopConstraint>& constraints() const { return detector_.constraints(); }
  const std::vector<Pose>& odometry() const { return poses_; }
  const StageTiming& timing() const { return timing_; }
  const ExtractionStats& extraction_stats() const { return stats_; }
  const LoopDetector& detector() const { return detector_; }

 private:
  void on_odometry(const OdomRecord& r);
  void drain_texts(bool final);
  void process_frames_before(std::size_t end);
  const PointCloud& local_cloud(std::size_t frame);

  PipelineConfig config_;
  IdPattern pattern_;
  std::optional<CalibratedRig> rig_;
  std::vector<OdometryFrame> odom_;
  std::vector<Pose> poses_;
  std::vector<LidarFrame> lidar_;
  std::vector<TextsRecord> pending_;
  std::unordered_map<std::size_t, std::vector<TextEntity>> entities_;
  std::unordered_map<std::size_t, PointCloud> cloud_cache_;
  std::size_t next_frame_ = 0;
  bool finished_ = false;
  LoopDetector detector_;
  StageTiming timing_;
  ExtractionStats stats_;
};

struct DetectOutput {
  std::vector<LoopConstraint> constraints;
  std::vector<Pose> odometry;
  StageTiming timing;
  ExtractionStats stats;
};

DetectOutput run_detect(const std::vector<LogRecord>& records, const PipelineConfig& config);

OptimizationResult run_optimize(const std::vector<Pose>& odometry,
                                const std::vector<LoopConstraint>& constraints,
                                const PipelineConfig& config);

/// Report document: recall, precision, tp, fp, fn, ate_mean, ate_per_pose, params.
Json evaluate_run(const std::vector<Pose>& estimate, const std::vector<Pose>& ground_truth,
                  const std::vector<LoopConstraint>& constraints, const PipelineConfig& config);

}  // namespace textlcd
