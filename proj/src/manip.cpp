#include "gapart/manip.hpp"

#include <Eigen/Geometry>
#include <cmath>

namespace gapart {

GripperPose grasp_pose(const PartPose& pose, PartClass cls,
                       const GraspParams& params) {
  const Mat3& r = pose.rotation;
  const Vec3 x = r.col(0), y = r.col(1), z = r.col(2);
  GripperPose g;
  g.position = pose.translation;

  switch (cls) {
    case PartClass::RoundFixedHandle:
    case PartClass::HingeKnob:
      // Approach from +z of the part, clamp over the box.
      g.approach_dir = -z;
      g.closing_dir = y;
      g.aperture = std::max(pose.size.x(), pose.size.y()) + params.aperture_margin;
      break;
    case PartClass::LineFixedHandle:
    case PartClass::HingeHandle:
      // Opening direction parallel to the part's y axis, so the jaws close
      // across the handle bar.
      g.approach_dir = -z;
      g.closing_dir = y;
      g.aperture = pose.size.y() + params.aperture_margin;
      break;
    case PartClass::SliderButton:
      // Closed gripper, press along -z.
      g.approach_dir = -z;
      g.closing_dir = y;
      g.aperture = 0.0;
      break;
    case PartClass::SliderDrawer:
      if (params.drawer_intent == DrawerIntent::Fetch) {
        g.approach_dir = -z;
        g.closing_dir = y;
      } else {
        // Open: approach the front face against the part x axis.
        g.position = pose.translation + x * (pose.size.x() / 2.0);
        g.approach_dir = -x;
        g.closing_dir = z;
      }
      g.aperture = pose.size.z() + params.aperture_margin;
      break;
    case PartClass::HingeDoor:
    case PartClass::HingeLid:
      // Clamp the outer edge along the part y axis (the edge opposite the
      // hinge at x = -size_x/2).
      g.position = pose.translation + x * (pose.size.x() / 2.0);
      g.approach_dir = -x;
      g.closing_dir = z;  // jaws close across the panel thickness
      g.aperture = pose.size.z() + params.aperture_margin;
      break;
    case PartClass::SliderLid:
      // Clamp the lid edge in the box x-y plane.
      g.position = pose.translation + x * (pose.size.x() / 2.0);
      g.approach_dir = -x;
      g.closing_dir = z;
      g.aperture = pose.size.z() + params.aperture_margin;
      break;
  }
  g.approach_dir.normalize();
  g.closing_dir.normalize();
  return g;
}

bool check_success(double achieved_motion, double motion_range) {
  if (!(motion_range > 0)) throw PolicyError("motion range must be positive");
  return achieved_motion >= 0.9 * motion_range;
}

Trajectory actuation_trajectory(const GripperPose& grasp,
                                const JointParams& joint, double motion_range,
                                const TrajectoryParams& params) {
  if (joint.kind == JointKind::Fixed)
    throw PolicyError("cannot actuate a fixed joint");
  if (!(motion_range > 0)) throw PolicyError("motion range must be positive");

  Trajectory traj;
  traj.dt = params.dt;

  // Approach from the standoff point to contact.
  {
    const double duration = params.approach_standoff / params.linear_speed;
    const int n = std::max(1, static_cast<int>(std::ceil(duration / params.dt)));
    for (int i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      GripperPose wp = grasp;
      wp.position = grasp.position -
                    (1.0 - t) * params.approach_standoff * grasp.approach_dir;
      traj.waypoints.push_back(wp);
      traj.phases.push_back(TrajectoryPhase::Approach);
    }
  }

  traj.waypoints.push_back(grasp);
  traj.phases.push_back(TrajectoryPhase::Grasp);

  const Vec3 axis = joint.axis_direction.normalized();
  if (joint.kind == JointKind::Prismatic) {
    const double duration = motion_range / params.linear_speed;
    const int n = std::max(1, static_cast<int>(std::ceil(duration / params.dt)));
    for (int i = 1; i <= n; ++i) {
      const double d = motion_range * static_cast<double>(i) / n;
      GripperPose wp = grasp;
      wp.position = grasp.position + d * axis;
      traj.waypoints.push_back(wp);
      traj.phases.push_back(TrajectoryPhase::Actuate);
    }
  } else {
    const double duration = motion_range / params.angular_speed;
    const int n = std::max(1, static_cast<int>(std::ceil(duration / params.dt)));
    for (int i = 1; i <= n; ++i) {
      const double ang = motion_range * static_cast<double>(i) / n;
      const Mat3 rot = Eigen::AngleAxisd(ang, axis).toRotationMatrix();
      GripperPose wp = grasp;
      wp.position = joint.pivot + rot * (grasp.position - joint.pivot);
      wp.approach_dir = rot * grasp.approach_dir;
      wp.closing_dir = rot * grasp.closing_dir;
      traj.waypoints.push_back(wp);
      traj.phases.push_back(TrajectoryPhase::Actuate);
    }
  }
  return traj;
}

}  // namespace gapart
