#include "gapart/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gapart/grouping.hpp"

namespace gapart {

namespace {

double interpolated_ap_101(std::vector<char> tp_flags, int num_gt) {
  // tp_flags are ordered by descending score.
  if (num_gt == 0) return 0.0;
  std::vector<double> precision, recall;
  int tp = 0, fp = 0;
  for (char f : tp_flags) {
    if (f) ++tp; else ++fp;
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    recall.push_back(static_cast<double>(tp) / num_gt);
  }
  double ap = 0.0;
  for (int ri = 0; ri <= 100; ++ri) {
    const double r = ri / 100.0;
    double best = 0.0;
    for (std::size_t i = 0; i < precision.size(); ++i)
      if (recall[i] >= r) best = std::max(best, precision[i]);
    ap += best;
  }
  return ap / 101.0;
}

}  // namespace

ApResult instance_ap(const std::vector<Proposal>& preds,
                     const std::vector<GtInstance>& gts, double iou_thresh) {
  // Stable order by descending score, globally.
  std::vector<int> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return preds[a].score > preds[b].score;
  });

  std::set<int> classes;
  for (const auto& p : preds) classes.insert(p.semantic_label);
  for (const auto& g : gts) classes.insert(g.semantic_label);

  ApResult res;
  std::vector<char> gt_used(gts.size(), 0);
  std::vector<std::vector<char>> class_tp;  // parallel to class iteration

  for (int cls : classes) {
    int num_gt = 0;
    for (const auto& g : gts)
      if (g.semantic_label == cls) ++num_gt;

    std::vector<char> tp_flags;
    for (int pi : order) {
      const Proposal& p = preds[pi];
      if (p.semantic_label != cls) continue;
      int best_gt = -1;
      double best_iou = 0.0;
      for (std::size_t gi = 0; gi < gts.size(); ++gi) {
        if (gt_used[gi] || gts[gi].semantic_label != cls) continue;
        const double iou = point_set_iou(p.point_indices, gts[gi].point_indices);
        if (iou >= iou_thresh && iou > best_iou) {
          best_iou = iou;
          best_gt = static_cast<int>(gi);
        }
      }
      MatchRecord rec;
      rec.pred_index = pi;
      if (best_gt >= 0) {
        gt_used[best_gt] = 1;
        rec.gt_index = best_gt;
        rec.iou = best_iou;
        tp_flags.push_back(1);
      } else {
        tp_flags.push_back(0);
      }
      res.matches.push_back(rec);
    }
    if (num_gt == 0 && tp_flags.empty()) continue;  // vacuous class
    res.per_class_ap[cls] = interpolated_ap_101(tp_flags, num_gt);
  }

  if (!res.per_class_ap.empty()) {
    double sum = 0.0;
    for (const auto& [c, ap] : res.per_class_ap) sum += ap;
    res.mean_ap = sum / static_cast<double>(res.per_class_ap.size());
  }
  return res;
}

double instance_map(const std::vector<Proposal>& preds,
                    const std::vector<GtInstance>& gts) {
  double sum = 0.0;
  int n = 0;
  for (int t = 50; t <= 95; t += 5) {
    sum += instance_ap(preds, gts, t / 100.0).mean_ap;
    ++n;
  }
  return sum / n;
}

namespace {

// Shortest distance between two lines (point + direction).
double line_line_distance(const Vec3& p1, const Vec3& d1, const Vec3& p2,
                          const Vec3& d2) {
  const Vec3 n = d1.cross(d2);
  const Vec3 dp = p2 - p1;
  if (n.norm() < 1e-12) {
    // Parallel: perpendicular offset.
    return (dp - dp.dot(d1.normalized()) * d1.normalized()).norm();
  }
  return std::abs(dp.dot(n.normalized()));
}

}  // namespace

PoseErrors pose_errors(const PartPose& pred_pose, const JointParams& pred_joint,
                       const PartPose& gt_pose, const JointParams& gt_joint,
                       PartClass cls) {
  if (pred_joint.kind != gt_joint.kind)
    throw MetricError("mismatched joint kinds");

  PoseErrors e;
  const SymmetryType group = symmetry_group(cls);

  double best_angle = 1e300;
  Mat3 best_gt_rot = gt_pose.rotation;
  for (const Mat3& g : group.generators) {
    const Mat3 aligned = gt_pose.rotation * g;
    const double a = rotation_angle_deg(pred_pose.rotation * aligned.transpose());
    if (a < best_angle) {
      best_angle = a;
      best_gt_rot = aligned;
    }
  }
  e.rotation_deg = best_angle;
  e.translation_cm = (pred_pose.translation - gt_pose.translation).norm() * 100.0;
  e.size_cm = (pred_pose.size - gt_pose.size).norm() * 100.0;

  // Undirected axis angle, folded to <= 90 degrees.
  const Vec3 a1 = pred_joint.axis_direction.normalized();
  const Vec3 a2 = gt_joint.axis_direction.normalized();
  const double c = std::clamp(std::abs(a1.dot(a2)), 0.0, 1.0);
  e.axis_angle_deg = rad2deg(std::acos(c));

  if (pred_joint.kind == JointKind::Revolute)
    e.axis_dist_cm =
        line_line_distance(pred_joint.pivot, a1, gt_joint.pivot, a2) * 100.0;

  PartPose gt_aligned = gt_pose;
  gt_aligned.rotation = best_gt_rot;
  e.iou3d = box_iou3d(pred_pose, gt_aligned);
  return e;
}

std::optional<double> pose_accuracy(const std::vector<PoseErrors>& errors,
                                    double deg_thresh, double cm_thresh) {
  if (errors.empty()) return std::nullopt;
  int pass = 0;
  for (const PoseErrors& e : errors)
    if (e.rotation_deg < deg_thresh && e.translation_cm < cm_thresh) ++pass;
  return 100.0 * pass / static_cast<double>(errors.size());
}

}  // namespace gapart
