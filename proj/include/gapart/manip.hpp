#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gapart/types.hpp"

namespace gapart {

struct PolicyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GripperPose {
  Vec3 position = Vec3::Zero();
  Vec3 approach_dir = -Vec3::UnitZ();  // unit
  Vec3 closing_dir = Vec3::UnitY();    // unit, perpendicular to approach
  double aperture = 0.0;               // meters
};

enum class TrajectoryPhase { Approach, Grasp, Actuate };

struct Trajectory {
  std::vector<GripperPose> waypoints;
  std::vector<TrajectoryPhase> phases;  // parallel to waypoints
  double dt = 1.0 / 250.0;
};

// Drawer handling intent (Appendix-style heuristics offer two strategies).
enum class DrawerIntent { Open, Fetch };

struct GraspParams {
  double aperture_margin = 0.01;  // meters beyond the grasped box side
  DrawerIntent drawer_intent = DrawerIntent::Open;
};

// Class-specific grasp selection on the oriented part box. Approach and
// closing directions are expressed in the camera frame; the rules live in
// the part's canonical frame and map through the pose.
GripperPose grasp_pose(const PartPose& pose, PartClass cls,
                       const GraspParams& params = {});

struct TrajectoryParams {
  double dt = 1.0 / 250.0;
  double linear_speed = 0.1;            // m/s, prismatic actuation
  double angular_speed = deg2rad(30.0); // rad/s, revolute actuation
  double approach_standoff = 0.10;      // meters before contact
};

// Approach from standoff, grasp, then actuate along the joint constraint:
// straight line for prismatic joints, circular arc about (pivot, axis) for
// revolute joints with co-rotated gripper directions.
Trajectory actuation_trajectory(const GripperPose& grasp,
                                const JointParams& joint, double motion_range,
                                const TrajectoryParams& params = {});

// True iff achieved >= 0.9 * range (inclusive at the boundary).
bool check_success(double achieved_motion, double motion_range);

}  // namespace gapart
