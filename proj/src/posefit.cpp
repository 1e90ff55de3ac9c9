#include "gapart/posefit.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace gapart {

SimilarityTransform umeyama(const std::vector<Vec3>& src,
                            const std::vector<Vec3>& dst) {
  if (src.size() != dst.size())
    throw std::invalid_argument("correspondence count mismatch");
  const std::size_t m = src.size();
  if (m < 3) throw FitError("need at least 3 correspondences");

  Vec3 mu_src = Vec3::Zero(), mu_dst = Vec3::Zero();
  for (std::size_t i = 0; i < m; ++i) {
    mu_src += src[i];
    mu_dst += dst[i];
  }
  mu_src /= static_cast<double>(m);
  mu_dst /= static_cast<double>(m);

  Mat3 sigma = Mat3::Zero();
  double var_src = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Vec3 a = src[i] - mu_src;
    const Vec3 b = dst[i] - mu_dst;
    sigma += b * a.transpose();
    var_src += a.squaredNorm();
  }
  sigma /= static_cast<double>(m);
  var_src /= static_cast<double>(m);
  if (var_src <= 0.0) throw FitError("source points are coincident");

  Eigen::JacobiSVD<Mat3> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 d = svd.singularValues();
  if (d(1) <= 1e-15 * std::max(d(0), 1e-300))
    throw FitError("degenerate correspondence geometry (rank < 2)");

  // Sign correction keeps R in SO(3) even for reflected correspondences.
  Vec3 s_diag = Vec3::Ones();
  const double det_uv =
      svd.matrixU().determinant() * svd.matrixV().determinant();
  if (det_uv < 0) s_diag(2) = -1.0;

  SimilarityTransform t;
  t.rotation = svd.matrixU() * s_diag.asDiagonal() * svd.matrixV().transpose();
  t.scale = (d.dot(s_diag)) / var_src;
  if (!(t.scale > 0)) throw FitError("non-positive fitted scale");
  t.translation = mu_dst - t.scale * (t.rotation * mu_src);
  return t;
}

RansacResult ransac_umeyama(const std::vector<Vec3>& src,
                            const std::vector<Vec3>& dst,
                            const RansacParams& params) {
  if (src.size() != dst.size())
    throw std::invalid_argument("correspondence count mismatch");
  const std::size_t m = src.size();
  if (m < 3) throw FitError("need at least 3 correspondences");

  double thresh = params.inlier_thresh;
  if (thresh <= 0) {
    Vec3 lo = dst[0], hi = dst[0];
    for (const Vec3& p : dst) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    thresh = 0.05 * (hi - lo).norm();
    if (thresh <= 0) throw FitError("destination points are coincident");
  }

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, m - 1);

  int best_count = -1;
  std::vector<char> best_mask;
  for (int it = 0; it < params.iterations; ++it) {
    std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    if (a == b || a == c || b == c) continue;
    SimilarityTransform t;
    try {
      t = umeyama({src[a], src[b], src[c]}, {dst[a], dst[b], dst[c]});
    } catch (const FitError&) {
      continue;
    }
    std::vector<char> mask(m, 0);
    int count = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if ((dst[i] - t.apply(src[i])).norm() < thresh) {
        mask[i] = 1;
        ++count;
      }
    }
    if (count > best_count) {
      best_count = count;
      best_mask = std::move(mask);
    }
  }
  if (best_count < 3) throw FitError("RANSAC found no model with >= 3 inliers");

  auto refit = [&](const std::vector<char>& mask) {
    std::vector<Vec3> in_src, in_dst;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask[i]) {
        in_src.push_back(src[i]);
        in_dst.push_back(dst[i]);
      }
    }
    return umeyama(in_src, in_dst);
  };

  RansacResult res;
  res.transform = refit(best_mask);
  // Local refinement with a shrinking threshold: outliers that barely clear
  // the scoring threshold would otherwise bias the least-squares refit.
  for (int round = 1; round <= 3; ++round) {
    const double t_r = thresh / (1 << round);
    std::vector<char> mask(m, 0);
    int count = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if ((dst[i] - res.transform.apply(src[i])).norm() < t_r) {
        mask[i] = 1;
        ++count;
      }
    }
    if (count < 3) break;
    try {
      res.transform = refit(mask);
    } catch (const FitError&) {
      break;
    }
  }
  // Re-score with the refined model.
  res.inliers.assign(m, 0);
  for (std::size_t i = 0; i < m; ++i)
    if ((dst[i] - res.transform.apply(src[i])).norm() < thresh) {
      res.inliers[i] = 1;
      ++res.inlier_count;
    }
  return res;
}

PartPose pose_from_fit(const SimilarityTransform& t, const NpcsMap& npcs) {
  if (npcs.empty()) throw std::invalid_argument("empty NPCS map");
  Vec3 lo = npcs[0], hi = npcs[0];
  for (const Vec3& p : npcs) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  PartPose pose;
  pose.rotation = t.rotation;
  pose.translation = t.translation + t.scale * (t.rotation * ((lo + hi) / 2.0));
  pose.size = t.scale * (hi - lo);
  return pose;
}

namespace {

inline double soft_l1(double e, double delta) {
  const double a = std::abs(e);
  return a < delta ? 0.5 * e * e / delta : a - 0.5 * delta;
}

}  // namespace

double symmetry_aware_npcs_loss(const NpcsMap& pred, const NpcsMap& gt,
                                PartClass cls, double delta) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("pred/gt size mismatch");
  if (pred.empty()) return 0.0;

  const SymmetryType group = symmetry_group(cls);
  double best = std::numeric_limits<double>::infinity();
  for (const Mat3& g : group.generators) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const Vec3 e = pred[i] - g * gt[i];
      acc += soft_l1(e.x(), delta) + soft_l1(e.y(), delta) + soft_l1(e.z(), delta);
    }
    best = std::min(best, acc / (3.0 * static_cast<double>(pred.size())));
  }
  return best;
}

JointParams joint_from_pose(const PartPose& pose, PartClass cls) {
  JointParams j;
  j.kind = joint_kind(cls);
  switch (cls) {
    case PartClass::SliderLid:
    case PartClass::SliderButton:
    case PartClass::SliderDrawer:
      j.axis_direction = pose.rotation * Vec3::UnitZ();
      break;
    case PartClass::HingeDoor:
    case PartClass::HingeLid:
      j.axis_direction = pose.rotation * Vec3::UnitY();
      j.pivot = pose.translation +
                pose.rotation * Vec3(-pose.size.x() / 2.0, 0.0, 0.0);
      break;
    case PartClass::HingeKnob:
    case PartClass::HingeHandle:
      j.axis_direction = pose.rotation * Vec3::UnitZ();
      j.pivot = pose.translation;
      break;
    case PartClass::LineFixedHandle:
    case PartClass::RoundFixedHandle:
      // Fixed parts carry only the canonical approach axis.
      j.axis_direction = pose.rotation * Vec3::UnitZ();
      break;
  }
  return j;
}

PartPose canonicalize_pose(const PartPose& pose, PartClass cls) {
  const SymmetryKind kind = symmetry_kind(cls);
  if (kind != SymmetryKind::Type3 && kind != SymmetryKind::Type4) return pose;

  PartPose out = pose;
  double best_angle = std::numeric_limits<double>::infinity();
  for (const Mat3& g : symmetry_group(cls).generators) {
    // Flip elements change the box orientation in a way the pose should
    // keep; only pure z-rotations are canonicalized away.
    if ((g * Vec3::UnitZ() - Vec3::UnitZ()).norm() > 1e-9) continue;
    const Mat3 cand = pose.rotation * g;
    const double angle = rotation_angle_deg(cand);
    if (angle < best_angle) {
      best_angle = angle;
      out.rotation = cand;
    }
  }
  return out;
}

}  // namespace gapart
