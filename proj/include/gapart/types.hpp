#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gapart {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

// The 9 GAPart semantic classes. Semantic label 0 is background; labels
// 1..9 map onto this enum in declaration order.
enum class PartClass : int {
  LineFixedHandle = 1,
  RoundFixedHandle = 2,
  HingeHandle = 3,
  HingeLid = 4,
  SliderLid = 5,
  SliderButton = 6,
  SliderDrawer = 7,
  HingeDoor = 8,
  HingeKnob = 9,
};

inline constexpr int kNumPartClasses = 9;

const std::vector<PartClass>& all_part_classes();
std::string to_string(PartClass c);
PartClass part_class_from_label(int label);  // throws on label outside 1..9
PartClass part_class_from_string(const std::string& name);

enum class SymmetryKind { Type1, Type2, Type3, Type4, Type5 };

enum class JointKind { Revolute, Prismatic, Fixed };

SymmetryKind symmetry_kind(PartClass c);
JointKind joint_kind(PartClass c);

// Discrete symmetry group of a part class, as rotation matrices in SO(3)
// acting on canonical (NPCS) coordinates.
//   Type1: {I, Rz(180deg)}
//   Type2: {I, Ry(180deg)}
//   Type3: {Rz(k*30deg)} u {Rz(k*30deg)*Rx(180deg)}, k = 0..11  (24 elements)
//   Type4: {Rz(k*30deg)}, k = 0..11
//   Type5: {I}
struct SymmetryType {
  SymmetryKind kind;
  std::vector<Mat3> generators;
};

SymmetryType symmetry_group(PartClass c);

struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> colors;            // empty or size N, components in [0,1]
  std::vector<int> semantic_labels;    // empty or size N, 0 = background
  std::vector<int> instance_labels;    // empty or size N, -1 = background

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  void validate() const;  // throws std::invalid_argument on shape/NaN issues
};

// Oriented tight bounding box of a part: canonical axes mapped to camera
// frame by `rotation`, box center at `translation`, extents in `size`.
struct PartPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  Vec3 size = Vec3::Ones();
};

struct SimilarityTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  SimilarityTransform inverse() const;
};

struct Proposal {
  std::vector<int> point_indices;
  int semantic_label = 0;  // 1..9
  double score = 1.0;
  std::optional<int> domain_label;
};

struct JointParams {
  JointKind kind = JointKind::Fixed;
  Vec3 axis_direction = Vec3::UnitZ();
  Vec3 pivot = Vec3::Zero();  // meaningful for revolute joints only
};

// Rotation helpers used throughout.
Mat3 rot_x(double radians);
Mat3 rot_y(double radians);
Mat3 rot_z(double radians);
double rotation_angle_deg(const Mat3& r);  // geodesic angle of r, degrees

inline constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace gapart
