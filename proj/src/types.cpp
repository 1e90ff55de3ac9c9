#include "gapart/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gapart {

const std::vector<PartClass>& all_part_classes() {
  static const std::vector<PartClass> classes = {
      PartClass::LineFixedHandle, PartClass::RoundFixedHandle,
      PartClass::HingeHandle,     PartClass::HingeLid,
      PartClass::SliderLid,       PartClass::SliderButton,
      PartClass::SliderDrawer,    PartClass::HingeDoor,
      PartClass::HingeKnob};
  return classes;
}

std::string to_string(PartClass c) {
  switch (c) {
    case PartClass::LineFixedHandle: return "line_fixed_handle";
    case PartClass::RoundFixedHandle: return "round_fixed_handle";
    case PartClass::HingeHandle: return "hinge_handle";
    case PartClass::HingeLid: return "hinge_lid";
    case PartClass::SliderLid: return "slider_lid";
    case PartClass::SliderButton: return "slider_button";
    case PartClass::SliderDrawer: return "slider_drawer";
    case PartClass::HingeDoor: return "hinge_door";
    case PartClass::HingeKnob: return "hinge_knob";
  }
  throw std::invalid_argument("unknown PartClass");
}

PartClass part_class_from_label(int label) {
  if (label < 1 || label > kNumPartClasses)
    throw std::invalid_argument("part class label must be in 1..9, got " +
                                std::to_string(label));
  return static_cast<PartClass>(label);
}

PartClass part_class_from_string(const std::string& name) {
  for (PartClass c : all_part_classes())
    if (to_string(c) == name) return c;
  throw std::invalid_argument("unknown part class name: " + name);
}

SymmetryKind symmetry_kind(PartClass c) {
  switch (c) {
    case PartClass::LineFixedHandle:
    case PartClass::HingeHandle:
      return SymmetryKind::Type1;
    case PartClass::HingeDoor:
    case PartClass::HingeLid:
      return SymmetryKind::Type2;
    case PartClass::SliderButton:
    case PartClass::SliderLid:
    case PartClass::RoundFixedHandle:
      return SymmetryKind::Type3;
    case PartClass::HingeKnob:
      return SymmetryKind::Type4;
    case PartClass::SliderDrawer:
      return SymmetryKind::Type5;
  }
  throw std::invalid_argument("unknown PartClass");
}

JointKind joint_kind(PartClass c) {
  switch (c) {
    case PartClass::HingeHandle:
    case PartClass::HingeLid:
    case PartClass::HingeDoor:
    case PartClass::HingeKnob:
      return JointKind::Revolute;
    case PartClass::SliderLid:
    case PartClass::SliderButton:
    case PartClass::SliderDrawer:
      return JointKind::Prismatic;
    case PartClass::LineFixedHandle:
    case PartClass::RoundFixedHandle:
      return JointKind::Fixed;
  }
  throw std::invalid_argument("unknown PartClass");
}

Mat3 rot_x(double radians) {
  return Eigen::AngleAxisd(radians, Vec3::UnitX()).toRotationMatrix();
}
Mat3 rot_y(double radians) {
  return Eigen::AngleAxisd(radians, Vec3::UnitY()).toRotationMatrix();
}
Mat3 rot_z(double radians) {
  return Eigen::AngleAxisd(radians, Vec3::UnitZ()).toRotationMatrix();
}

double rotation_angle_deg(const Mat3& r) {
  // atan2 of the sine/cosine parts stays accurate for tiny angles, where
  // acos((trace-1)/2) loses ~half the significant digits.
  const Vec3 skew(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double s = 0.5 * skew.norm();
  const double c = (r.trace() - 1.0) / 2.0;
  return rad2deg(std::atan2(s, c));
}

SymmetryType symmetry_group(PartClass c) {
  SymmetryType g;
  g.kind = symmetry_kind(c);
  switch (g.kind) {
    case SymmetryKind::Type1:
      g.generators = {Mat3::Identity(), rot_z(kPi)};
      break;
    case SymmetryKind::Type2:
      g.generators = {Mat3::Identity(), rot_y(kPi)};
      break;
    case SymmetryKind::Type3:
      // 12 z-rotations plus the same set composed with a 180deg flip about
      // the x axis; all elements stay in SO(3).
      for (int k = 0; k < 12; ++k) g.generators.push_back(rot_z(k * kPi / 6.0));
      for (int k = 0; k < 12; ++k)
        g.generators.push_back(rot_z(k * kPi / 6.0) * rot_x(kPi));
      break;
    case SymmetryKind::Type4:
      for (int k = 0; k < 12; ++k) g.generators.push_back(rot_z(k * kPi / 6.0));
      break;
    case SymmetryKind::Type5:
      g.generators = {Mat3::Identity()};
      break;
  }
  return g;
}

void PointCloud::validate() const {
  const std::size_t n = positions.size();
  auto check_len = [&](std::size_t len, const char* name) {
    if (len != 0 && len != n)
      throw std::invalid_argument(std::string("channel '") + name +
                                  "' length does not match point count");
  };
  check_len(colors.size(), "colors");
  check_len(semantic_labels.size(), "semantic_labels");
  check_len(instance_labels.size(), "instance_labels");
  for (const Vec3& p : positions)
    if (!p.allFinite())
      throw std::invalid_argument("point cloud contains non-finite positions");
}

SimilarityTransform SimilarityTransform::inverse() const {
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = rotation.transpose();
  inv.translation = -inv.scale * (inv.rotation * translation);
  return inv;
}

}  // namespace gapart
