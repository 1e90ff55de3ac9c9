#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gapart/types.hpp"

namespace gapart {

// Raised when a similarity fit is degenerate or RANSAC finds no model.
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-point canonical coordinates of a part, in [-0.5, 0.5]^3. The tight
// bounding box is centered at the origin and uniformly scaled so its space
// diagonal has length 1.
using NpcsMap = std::vector<Vec3>;

// Closed-form least-squares similarity fit: minimizes
// sum_i |dst_i - (s * R * src_i + t)|^2 with R in SO(3), s > 0.
// Requires >= 3 correspondences and a rank-2 cross-covariance.
SimilarityTransform umeyama(const std::vector<Vec3>& src,
                            const std::vector<Vec3>& dst);

struct RansacParams {
  int iterations = 100;
  // <= 0 selects the adaptive default: 5% of the dst bounding-box diagonal.
  double inlier_thresh = -1.0;
  std::uint64_t seed = 0;
};

struct RansacResult {
  SimilarityTransform transform;
  std::vector<char> inliers;  // size M
  int inlier_count = 0;
};

RansacResult ransac_umeyama(const std::vector<Vec3>& src,
                            const std::vector<Vec3>& dst,
                            const RansacParams& params = {});

// Recovers the oriented bounding box from a fitted transform and the NPCS
// coordinates it was fitted on.
PartPose pose_from_fit(const SimilarityTransform& t, const NpcsMap& npcs);

// min over the class's symmetry group g of the mean per-coordinate
// soft-L1(pred - g * gt); delta = 0.1.
double symmetry_aware_npcs_loss(const NpcsMap& pred, const NpcsMap& gt,
                                PartClass cls, double delta = 0.1);

// Joint parameters read off the pose using the canonical frame conventions:
//   prismatic classes        axis = R * z
//   hinge door / hinge lid   axis = R * y, pivot at the midline of the
//                            canonical x = -size_x/2 face
//   hinge knob / handle      axis = R * z through the box center
//   fixed classes            kind = fixed, approach axis R * z only
JointParams joint_from_pose(const PartPose& pose, PartClass cls);

// Canonicalizes the z-rotation of a fitted pose for Type 3/4 classes so the
// reported rotation is the group representative with minimal angle.
PartPose canonicalize_pose(const PartPose& pose, PartClass cls);

}  // namespace gapart
