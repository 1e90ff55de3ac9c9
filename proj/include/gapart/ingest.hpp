#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "gapart/types.hpp"

namespace gapart {

struct PinholeIntrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const;  // throws std::invalid_argument
};

// Row-major depth map in meters; 0 or NaN marks an invalid pixel.
struct DepthImage {
  int width = 0, height = 0;
  std::vector<double> values;

  double at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
};

// Row-major RGB image with components in [0,1].
struct ColorImage {
  int width = 0, height = 0;
  std::vector<Vec3> pixels;

  const Vec3& at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * width + u]; }
};

// Back-projects every valid depth pixel through the pinhole model:
//   point = ((u - cx) * z / fx, (v - cy) * z / fy, z).
PointCloud back_project(const DepthImage& depth, const PinholeIntrinsics& intr,
                        const ColorImage* color = nullptr);

struct FpsResult {
  PointCloud cloud;
  std::vector<int> indices;  // selected indices into the input cloud
};

// Farthest-point sampling. The seed point is chosen deterministically:
// index (seed mod N). Each subsequent pick maximizes the min distance to
// the already-selected set; distance ties go to the lower index. If
// N <= k the whole cloud comes back in original order.
FpsResult farthest_point_sample(const PointCloud& cloud, std::size_t k,
                                std::size_t seed = 0);

}  // namespace gapart
