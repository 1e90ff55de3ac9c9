#pragma once

#include <random>

#include "gapart/types.hpp"

namespace gapart::test {

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline Vec3 random_vec(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> uni(lo, hi);
  return Vec3(uni(rng), uni(rng), uni(rng));
}

inline std::vector<Vec3> random_npcs_cloud(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> uni(-0.5, 0.5);
  std::vector<Vec3> pts(n);
  for (Vec3& p : pts) p = Vec3(uni(rng), uni(rng), uni(rng));
  return pts;
}

}  // namespace gapart::test
