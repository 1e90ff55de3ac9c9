#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gapart/types.hpp"

namespace gapart {

struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GtInstance {
  std::vector<int> point_indices;  // sorted
  int semantic_label = 0;          // 1..9
};

struct MatchRecord {
  int pred_index = -1;
  int gt_index = -1;  // -1 when unmatched (false positive)
  double iou = 0.0;
};

struct ApResult {
  std::map<int, double> per_class_ap;  // only classes with >= 1 GT or pred
  double mean_ap = 0.0;
  std::vector<MatchRecord> matches;
};

// Greedy matching by descending score within each class: a prediction
// matches the highest-IoU unmatched ground truth of its class with
// IoU >= iou_thresh. AP is the 101-point interpolated area under the
// precision-recall curve. Classes with no GT and no predictions are
// skipped from the mean.
ApResult instance_ap(const std::vector<Proposal>& preds,
                     const std::vector<GtInstance>& gts, double iou_thresh);

// Mean AP over IoU thresholds 0.50, 0.55, ..., 0.95.
double instance_map(const std::vector<Proposal>& preds,
                    const std::vector<GtInstance>& gts);

struct PoseErrors {
  double rotation_deg = 0.0;     // R_e, symmetry-aware
  double translation_cm = 0.0;   // T_e
  double size_cm = 0.0;          // S_e
  double axis_angle_deg = 0.0;   // theta_e, undirected (<= 90)
  std::optional<double> axis_dist_cm;  // d_e, revolute joints only
  double iou3d = 0.0;            // oriented-box volume IoU
};

PoseErrors pose_errors(const PartPose& pred_pose, const JointParams& pred_joint,
                       const PartPose& gt_pose, const JointParams& gt_joint,
                       PartClass cls);

// Fraction (in percent) of entries with rotation error < deg_thresh AND
// translation error < cm_thresh. Empty input has no defined value.
std::optional<double> pose_accuracy(const std::vector<PoseErrors>& errors,
                                    double deg_thresh, double cm_thresh);

// Volume IoU of two oriented boxes via exact convex-polyhedron clipping;
// falls back to stratified sampling if clipping is ill-conditioned.
double box_iou3d(const PartPose& a, const PartPose& b);
// Sampling estimate, exposed for cross-checking the exact path.
double box_iou3d_sampled(const PartPose& a, const PartPose& b,
                         int samples = 100000, std::uint64_t seed = 0);

}  // namespace gapart
