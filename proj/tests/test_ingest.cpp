#include <doctest.h>

#include <random>

#include "gapart/ingest.hpp"
#include "test_utils.hpp"

using namespace gapart;

namespace {

PinholeIntrinsics simple_intr(int w, int h) {
  PinholeIntrinsics intr;
  intr.fx = intr.fy = 400.0;
  intr.cx = w / 2.0;
  intr.cy = h / 2.0;
  intr.width = w;
  intr.height = h;
  return intr;
}

}  // namespace

TEST_CASE("back projection of the principal-point ray") {
  auto intr = simple_intr(801, 801);
  intr.cx = 400;
  intr.cy = 400;
  DepthImage d;
  d.width = 801;
  d.height = 801;
  d.values.assign(801 * 801, 0.0);
  d.values[400 * 801 + 400] = 1.0;  // pixel (u=400, v=400)
  const PointCloud cloud = back_project(d, intr);
  REQUIRE(cloud.size() == 1);
  CHECK(cloud.positions[0].isApprox(Vec3(0, 0, 1), 1e-12));
}

TEST_CASE("back projection hand-evaluated off-center pixel") {
  // fx=fy=400, cx=cy=400, pixel (800,400), z=2 -> (2, 0, 2)
  auto intr = simple_intr(801, 801);
  intr.cx = 400;
  intr.cy = 400;
  DepthImage d;
  d.width = 801;
  d.height = 801;
  d.values.assign(801 * 801, 0.0);
  d.values[400 * 801 + 800] = 2.0;
  const PointCloud cloud = back_project(d, intr);
  REQUIRE(cloud.size() == 1);
  CHECK(cloud.positions[0].isApprox(Vec3(2.0, 0.0, 2.0), 1e-12));
}

TEST_CASE("all-zero depth gives empty cloud; NaN and dimension errors") {
  auto intr = simple_intr(4, 4);
  DepthImage d;
  d.width = 4;
  d.height = 4;
  d.values.assign(16, 0.0);
  CHECK(back_project(d, intr).empty());

  d.values.assign(16, std::numeric_limits<double>::quiet_NaN());
  CHECK(back_project(d, intr).empty());

  d.width = 3;
  d.values.assign(12, 1.0);
  CHECK_THROWS_AS(back_project(d, intr), std::invalid_argument);
}

TEST_CASE("back_project inverts projection on valid pixels") {
  const auto intr = simple_intr(32, 24);
  DepthImage d;
  d.width = 32;
  d.height = 24;
  d.values.assign(32 * 24, 0.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uz(0.2, 3.0);
  for (int v = 0; v < 24; ++v)
    for (int u = 0; u < 32; ++u) d.values[v * 32 + u] = uz(rng);
  const PointCloud cloud = back_project(d, intr);
  REQUIRE(cloud.size() == 32u * 24u);
  std::size_t i = 0;
  for (int v = 0; v < 24; ++v)
    for (int u = 0; u < 32; ++u, ++i) {
      const Vec3& p = cloud.positions[i];
      // project back
      const double pu = p.x() / p.z() * intr.fx + intr.cx;
      const double pv = p.y() / p.z() * intr.fy + intr.cy;
      CHECK(std::abs(pu - u) < 1e-6);
      CHECK(std::abs(pv - v) < 1e-6);
    }
}

TEST_CASE("fps identity and k=1 cases") {
  PointCloud c;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i) c.positions.push_back(test::random_vec(rng));
  c.semantic_labels.assign(10, 3);

  const FpsResult all = farthest_point_sample(c, 10);
  REQUIRE(all.indices.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(all.indices[i] == i);
  CHECK(all.cloud.semantic_labels.size() == 10);

  const FpsResult one = farthest_point_sample(c, 1);
  REQUIRE(one.indices.size() == 1);
  CHECK(one.indices[0] == 0);
}

TEST_CASE("fps on unit square corners plus center selects the corners") {
  PointCloud c;
  c.positions = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0),
                 Vec3(0.5, 0.5, 0)};
  const FpsResult res = farthest_point_sample(c, 4);
  std::vector<int> idx = res.indices;
  std::sort(idx.begin(), idx.end());
  CHECK(idx == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("fps errors on empty cloud") {
  PointCloud c;
  CHECK_THROWS_AS(farthest_point_sample(c, 3), std::invalid_argument);
}

TEST_CASE("fps min-pairwise-distance is within a factor of two of any subset") {
  // Greedy farthest-point selection is a 2-approximation of the max-min
  // dispersion problem, so its pairwise spread can trail the best subset by
  // at most a factor of two.
  std::mt19937_64 rng(42);
  auto min_pairwise = [](const std::vector<Vec3>& pts,
                         const std::vector<int>& idx) {
    double best = 1e300;
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b)
        best = std::min(best, (pts[idx[a]] - pts[idx[b]]).norm());
    return best;
  };
  for (int trial = 0; trial < 20; ++trial) {
    PointCloud c;
    const int n = 8;
    for (int i = 0; i < n; ++i) c.positions.push_back(test::random_vec(rng));
    const int k = 5;
    const FpsResult res = farthest_point_sample(c, k);
    const double fps_d = min_pairwise(c.positions, res.indices);
    std::vector<int> sub(n);
    std::iota(sub.begin(), sub.end(), 0);
    for (int s = 0; s < 50; ++s) {
      std::shuffle(sub.begin(), sub.end(), rng);
      std::vector<int> pick(sub.begin(), sub.begin() + k);
      CHECK(fps_d >= 0.5 * min_pairwise(c.positions, pick) - 1e-12);
    }
  }
}
