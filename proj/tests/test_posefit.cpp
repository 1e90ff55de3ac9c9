#include <doctest.h>

#include <random>

#include "gapart/posefit.hpp"
#include "test_utils.hpp"

using namespace gapart;

TEST_CASE("umeyama identity and known transforms") {
  std::mt19937_64 rng(1);
  const auto src = test::random_npcs_cloud(rng, 30);

  SUBCASE("dst = src gives identity") {
    const auto t = umeyama(src, src);
    CHECK((t.rotation - Mat3::Identity()).norm() < 1e-12);
    CHECK(t.translation.norm() < 1e-12);
    CHECK(t.scale == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("recovers scale 2, Rz(90), t=(1,0,0)") {
    const Mat3 r = rot_z(kPi / 2.0);
    std::vector<Vec3> dst;
    for (const Vec3& p : src) dst.push_back(2.0 * (r * p) + Vec3(1, 0, 0));
    const auto t = umeyama(src, dst);
    CHECK((t.rotation - r).norm() < 1e-9);
    CHECK((t.translation - Vec3(1, 0, 0)).norm() < 1e-9);
    CHECK(t.scale == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("reflected correspondences still give det(R) = +1") {
    std::vector<Vec3> dst;
    for (const Vec3& p : src) dst.emplace_back(-p.x(), p.y(), p.z());
    const auto t = umeyama(src, dst);
    CHECK(t.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("degenerate inputs raise fit errors") {
    CHECK_THROWS_AS(umeyama({Vec3(0, 0, 0), Vec3(1, 0, 0)},
                            {Vec3(0, 0, 0), Vec3(1, 0, 0)}),
                    FitError);
    // Collinear points: rank-1 covariance.
    std::vector<Vec3> line, line_dst;
    for (int i = 0; i < 5; ++i) {
      line.emplace_back(i * 0.1, 0, 0);
      line_dst.emplace_back(i * 0.1, 0, 0);
    }
    CHECK_THROWS_AS(umeyama(line, line_dst), FitError);
  }
}

TEST_CASE("umeyama round-trip on random transforms") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uscale(0.5, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto src = test::random_npcs_cloud(rng, 50);
    const Mat3 r = test::random_rotation(rng);
    const Vec3 t = test::random_vec(rng);
    const double s = uscale(rng);
    std::vector<Vec3> dst;
    for (const Vec3& p : src) dst.push_back(s * (r * p) + t);
    const auto fit = umeyama(src, dst);
    CHECK(rotation_angle_deg(fit.rotation * r.transpose()) < 1e-7);
    CHECK((fit.translation - t).norm() < 1e-9);
    CHECK(std::abs(fit.scale - s) < 1e-9);
  }
}

TEST_CASE("ransac equals umeyama without outliers and is seeded") {
  std::mt19937_64 rng(3);
  const auto src = test::random_npcs_cloud(rng, 40);
  const Mat3 r = test::random_rotation(rng);
  std::vector<Vec3> dst;
  for (const Vec3& p : src) dst.push_back(1.5 * (r * p) + Vec3(0.2, 0, -0.1));

  RansacParams params;
  params.seed = 11;
  const auto res = ransac_umeyama(src, dst, params);
  const auto plain = umeyama(src, dst);
  CHECK((res.transform.rotation - plain.rotation).norm() < 1e-9);
  CHECK((res.transform.translation - plain.translation).norm() < 1e-9);
  CHECK(res.inlier_count == 40);

  const auto res2 = ransac_umeyama(src, dst, params);
  CHECK(res.transform.rotation == res2.transform.rotation);
  CHECK(res.inliers == res2.inliers);
}

TEST_CASE("ransac recovers the transform under 30% outliers") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  const auto src = test::random_npcs_cloud(rng, 60);
  const Mat3 r = test::random_rotation(rng);
  const Vec3 t(0.3, -0.2, 0.8);
  std::vector<Vec3> dst;
  for (const Vec3& p : src) dst.push_back(2.0 * (r * p) + t);
  for (int i = 0; i < 18; ++i)
    dst[i] = Vec3(noise(rng), noise(rng), noise(rng)) + Vec3(0, 0, 3);

  RansacParams params;
  params.seed = 5;
  const auto res = ransac_umeyama(src, dst, params);
  CHECK(rotation_angle_deg(res.transform.rotation * r.transpose()) < 0.5);
  int clean_flagged = 0;
  for (int i = 18; i < 60; ++i) clean_flagged += res.inliers[i];
  CHECK(clean_flagged >= 42 * 99 / 100);
}

TEST_CASE("ransac inlier count is monotone in the threshold") {
  std::mt19937_64 rng(6);
  const auto src = test::random_npcs_cloud(rng, 30);
  const Mat3 r = test::random_rotation(rng);
  std::vector<Vec3> dst;
  std::normal_distribution<double> jitter(0.0, 0.01);
  for (const Vec3& p : src)
    dst.push_back(r * p + Vec3(jitter(rng), jitter(rng), jitter(rng)));
  int prev = 0;
  for (double thresh : {0.005, 0.01, 0.02, 0.05, 0.1}) {
    RansacParams params;
    params.inlier_thresh = thresh;
    params.seed = 1;
    const auto res = ransac_umeyama(src, dst, params);
    CHECK(res.inlier_count >= prev);
    prev = res.inlier_count;
  }
}

TEST_CASE("ransac rejects fewer than 3 points") {
  CHECK_THROWS_AS(
      ransac_umeyama({Vec3(0, 0, 0)}, {Vec3(0, 0, 0)}, RansacParams{}),
      FitError);
}

TEST_CASE("pose_from_fit box recovery") {
  SUBCASE("full NPCS cube under identity") {
    NpcsMap npcs;
    for (double sx : {-0.5, 0.5})
      for (double sy : {-0.5, 0.5})
        for (double sz : {-0.5, 0.5}) npcs.emplace_back(sx, sy, sz);
    const auto pose = pose_from_fit(SimilarityTransform{}, npcs);
    CHECK(pose.size.isApprox(Vec3(1, 1, 1), 1e-12));
    CHECK(pose.translation.norm() < 1e-12);
  }
  SUBCASE("scale multiplies the extent") {
    // Extents (0.2, 0.4, 0.8) normalized by the space diagonal.
    const Vec3 ext = Vec3(0.2, 0.4, 0.8) / Vec3(0.2, 0.4, 0.8).norm();
    NpcsMap npcs;
    for (double sx : {-0.5, 0.5})
      for (double sy : {-0.5, 0.5})
        for (double sz : {-0.5, 0.5})
          npcs.emplace_back(sx * ext.x(), sy * ext.y(), sz * ext.z());
    SimilarityTransform t;
    t.scale = 2.0;
    const auto pose = pose_from_fit(t, npcs);
    CHECK(pose.size.isApprox(2.0 * ext, 1e-12));
  }
  SUBCASE("off-center npcs shifts translation by s*R*center") {
    NpcsMap npcs = {Vec3(0.0, -0.1, 0.0), Vec3(0.2, 0.1, 0.3)};
    SimilarityTransform t;
    t.rotation = rot_z(kPi / 2.0);
    t.scale = 3.0;
    t.translation = Vec3(1, 2, 3);
    const auto pose = pose_from_fit(t, npcs);
    const Vec3 center(0.1, 0.0, 0.15);
    CHECK(pose.translation.isApprox(t.translation + 3.0 * (t.rotation * center),
                                    1e-12));
  }
}

TEST_CASE("symmetry-aware NPCS loss") {
  std::mt19937_64 rng(8);
  const NpcsMap gt = test::random_npcs_cloud(rng, 25);

  SUBCASE("pred = gt gives zero") {
    CHECK(symmetry_aware_npcs_loss(gt, gt, PartClass::HingeDoor) == 0.0);
  }
  SUBCASE("tolerated symmetry gives zero") {
    NpcsMap pred;
    const Mat3 g = rot_z(kPi);
    for (const Vec3& p : gt) pred.push_back(g * p);
    CHECK(symmetry_aware_npcs_loss(pred, gt, PartClass::LineFixedHandle) <
          1e-15);
  }
  SUBCASE("untolerated rotation is positive and equals plain soft-L1") {
    NpcsMap pred;
    const Mat3 g = rot_z(kPi);
    for (const Vec3& p : gt) pred.push_back(g * p);
    const double loss =
        symmetry_aware_npcs_loss(pred, gt, PartClass::SliderDrawer);
    CHECK(loss > 0.0);
    // Hand-rolled soft-L1 over the one-element group.
    const double delta = 0.1;
    double expect = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const Vec3 e = pred[i] - gt[i];
      for (int k = 0; k < 3; ++k) {
        const double a = std::abs(e(k));
        expect += a < delta ? 0.5 * e(k) * e(k) / delta : a - 0.5 * delta;
      }
    }
    expect /= 3.0 * gt.size();
    CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("invariant under replacing gt by g*gt for any group element") {
    for (PartClass cls :
         {PartClass::SliderLid, PartClass::HingeKnob, PartClass::HingeLid}) {
      const NpcsMap pred = test::random_npcs_cloud(rng, 25);
      const double base = symmetry_aware_npcs_loss(pred, gt, cls);
      for (const Mat3& g : symmetry_group(cls).generators) {
        NpcsMap gt2;
        for (const Vec3& p : gt) gt2.push_back(g * p);
        CHECK(symmetry_aware_npcs_loss(pred, gt2, cls) ==
              doctest::Approx(base).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("joint_from_pose canonical cases") {
  PartPose identity;
  identity.size = Vec3(0.4, 0.3, 0.2);

  SUBCASE("slider button is prismatic along z") {
    const auto j = joint_from_pose(identity, PartClass::SliderButton);
    CHECK(j.kind == JointKind::Prismatic);
    CHECK(j.axis_direction.isApprox(Vec3(0, 0, 1), 1e-12));
  }
  SUBCASE("hinge knob revolves about z through the center") {
    const auto j = joint_from_pose(identity, PartClass::HingeKnob);
    CHECK(j.kind == JointKind::Revolute);
    CHECK(j.axis_direction.isApprox(Vec3(0, 0, 1), 1e-12));
    CHECK(j.pivot.norm() < 1e-12);
  }
  SUBCASE("hinge door axis along y at the -x face midline") {
    const auto j = joint_from_pose(identity, PartClass::HingeDoor);
    CHECK(j.kind == JointKind::Revolute);
    CHECK(j.axis_direction.isApprox(Vec3(0, 1, 0), 1e-12));
    CHECK(j.pivot.isApprox(Vec3(-0.2, 0, 0), 1e-12));
  }
  SUBCASE("rotated hinge door rotates the axis accordingly") {
    PartPose pose = identity;
    pose.rotation = rot_z(kPi / 2.0);
    const auto j = joint_from_pose(pose, PartClass::HingeDoor);
    CHECK(j.axis_direction.isApprox(pose.rotation * Vec3(0, 1, 0), 1e-12));
  }
  SUBCASE("fixed classes return a fixed joint with approach axis") {
    const auto j = joint_from_pose(identity, PartClass::LineFixedHandle);
    CHECK(j.kind == JointKind::Fixed);
    CHECK(std::abs(j.axis_direction.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("joint_from_pose is equivariant under rigid motions") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    PartPose pose;
    pose.rotation = test::random_rotation(rng);
    pose.translation = test::random_vec(rng);
    pose.size = Vec3(0.3, 0.2, 0.1);
    for (PartClass cls : {PartClass::HingeDoor, PartClass::HingeKnob,
                          PartClass::SliderDrawer}) {
      const auto j = joint_from_pose(pose, cls);
      const Mat3 r = test::random_rotation(rng);
      const Vec3 t = test::random_vec(rng);
      PartPose moved = pose;
      moved.rotation = r * pose.rotation;
      moved.translation = r * pose.translation + t;
      const auto jm = joint_from_pose(moved, cls);
      CHECK((jm.axis_direction - r * j.axis_direction).norm() < 1e-9);
      if (j.kind == JointKind::Revolute)
        CHECK((jm.pivot - (r * j.pivot + t)).norm() < 1e-9);
    }
  }
}

TEST_CASE("canonicalize_pose minimizes the z-rotation representative") {
  PartPose pose;
  pose.rotation = rot_z(deg2rad(150.0));
  pose.size = Vec3(0.1, 0.1, 0.2);
  const auto canon = canonicalize_pose(pose, PartClass::HingeKnob);
  CHECK(rotation_angle_deg(canon.rotation) <= 15.0 + 1e-9);
  // Non-symmetric class is untouched.
  const auto same = canonicalize_pose(pose, PartClass::SliderDrawer);
  CHECK(same.rotation == pose.rotation);
}
