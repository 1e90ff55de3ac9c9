#include "gapart/ingest.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gapart {

void PinholeIntrinsics::validate() const {
  if (fx <= 0 || fy <= 0)
    throw std::invalid_argument("focal lengths must be positive");
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("image size must be positive");
  if (cx < 0 || cx >= width || cy < 0 || cy >= height)
    throw std::invalid_argument("principal point outside the image");
}

PointCloud back_project(const DepthImage& depth, const PinholeIntrinsics& intr,
                        const ColorImage* color) {
  intr.validate();
  if (depth.width != intr.width || depth.height != intr.height)
    throw std::invalid_argument("depth image size does not match intrinsics");
  if (color && (color->width != intr.width || color->height != intr.height))
    throw std::invalid_argument("color image size does not match intrinsics");

  PointCloud out;
  out.positions.reserve(depth.values.size());
  if (color) out.colors.reserve(depth.values.size());
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const double z = depth.at(u, v);
      if (!(z > 0) || !std::isfinite(z)) continue;
      out.positions.emplace_back((u - intr.cx) * z / intr.fx,
                                 (v - intr.cy) * z / intr.fy, z);
      if (color) out.colors.push_back(color->at(u, v));
    }
  }
  return out;
}

namespace {

PointCloud subsample(const PointCloud& cloud, const std::vector<int>& idx) {
  PointCloud out;
  out.positions.reserve(idx.size());
  for (int i : idx) out.positions.push_back(cloud.positions[i]);
  auto take = [&](const auto& src, auto& dst) {
    if (src.empty()) return;
    dst.reserve(idx.size());
    for (int i : idx) dst.push_back(src[i]);
  };
  take(cloud.colors, out.colors);
  take(cloud.semantic_labels, out.semantic_labels);
  take(cloud.instance_labels, out.instance_labels);
  return out;
}

}  // namespace

FpsResult farthest_point_sample(const PointCloud& cloud, std::size_t k,
                                std::size_t seed) {
  if (cloud.empty()) throw std::invalid_argument("cannot sample an empty cloud");
  if (k < 1) throw std::invalid_argument("sample count must be >= 1");

  const std::size_t n = cloud.size();
  FpsResult res;
  if (n <= k) {
    res.indices.resize(n);
    std::iota(res.indices.begin(), res.indices.end(), 0);
    res.cloud = subsample(cloud, res.indices);
    return res;
  }

  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  res.indices.reserve(k);
  int current = static_cast<int>(seed % n);
  res.indices.push_back(current);
  for (std::size_t picked = 1; picked < k; ++picked) {
    const Vec3& p = cloud.positions[current];
    int best = -1;
    double best_d2 = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d2 = (cloud.positions[i] - p).squaredNorm();
      if (d2 < min_d2[i]) min_d2[i] = d2;
      if (min_d2[i] > best_d2) {
        best_d2 = min_d2[i];
        best = static_cast<int>(i);
      }
    }
    current = best;
    res.indices.push_back(current);
  }
  res.cloud = subsample(cloud, res.indices);
  return res;
}

}  // namespace gapart
