#include <doctest.h>

#include <random>

#include "ap_oracle.hpp"
#include "gapart/metrics.hpp"
#include "gapart/posefit.hpp"
#include "test_utils.hpp"

using namespace gapart;

namespace {

Proposal make_pred(std::vector<int> idx, int label, double score) {
  Proposal p;
  std::sort(idx.begin(), idx.end());
  p.point_indices = std::move(idx);
  p.semantic_label = label;
  p.score = score;
  return p;
}

GtInstance make_gt(std::vector<int> idx, int label) {
  GtInstance g;
  std::sort(idx.begin(), idx.end());
  g.point_indices = std::move(idx);
  g.semantic_label = label;
  return g;
}

}  // namespace

TEST_CASE("instance AP basic cases") {
  SUBCASE("perfect predictions give AP 1") {
    const std::vector<GtInstance> gts = {make_gt({0, 1, 2}, 1),
                                         make_gt({5, 6, 7}, 2)};
    const std::vector<Proposal> preds = {make_pred({0, 1, 2}, 1, 0.9),
                                         make_pred({5, 6, 7}, 2, 0.8)};
    const auto res = instance_ap(preds, gts, 0.5);
    CHECK(res.mean_ap == doctest::Approx(1.0));
    for (const auto& [c, ap] : res.per_class_ap) CHECK(ap == doctest::Approx(1.0));
  }
  SUBCASE("no predictions give AP 0") {
    const std::vector<GtInstance> gts = {make_gt({0, 1, 2}, 1)};
    CHECK(instance_ap({}, gts, 0.5).mean_ap == 0.0);
  }
  SUBCASE("hand-computed 3 preds / 2 GTs case") {
    // GT A = {0..9}, GT B = {10..19}, class 1.
    const std::vector<GtInstance> gts = {make_gt({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 1),
                                         make_gt({10, 11, 12, 13, 14, 15, 16, 17, 18, 19}, 1)};
    // P1 hits A with IoU 1 (score .9), P2 misses (score .8), P3 hits B
    // with IoU 10/10 = 1 (score .7).
    const std::vector<Proposal> preds = {
        make_pred({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 1, 0.9),
        make_pred({30, 31, 32, 33, 34}, 1, 0.8),
        make_pred({10, 11, 12, 13, 14, 15, 16, 17, 18, 19}, 1, 0.7)};
    // PR points: (p=1, r=.5), (p=.5, r=.5), (p=2/3, r=1).
    // 101-pt AP: recall <= .5 -> precision 1 (51 pts); recall > .5 -> 2/3.
    const double expect = (51 * 1.0 + 50 * (2.0 / 3.0)) / 101.0;
    const auto res = instance_ap(preds, gts, 0.5);
    CHECK(res.mean_ap == doctest::Approx(expect).epsilon(1e-12));
    CHECK(res.mean_ap ==
          doctest::Approx(test::oracle_mean_ap(preds, gts, 0.5)).epsilon(1e-12));
  }
}

TEST_CASE("instance AP equals the brute-force oracle on random fixtures") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> nup(0, 4);
  std::uniform_int_distribution<int> cls(1, 3);
  std::uniform_int_distribution<int> base(0, 8);
  std::uniform_real_distribution<double> sc(0.0, 1.0);
  for (int fixture = 0; fixture < 200; ++fixture) {
    std::vector<GtInstance> gts;
    std::vector<Proposal> preds;
    const int ng = nup(rng), np = nup(rng);
    for (int i = 0; i < ng; ++i) {
      const int b = base(rng) * 6;
      gts.push_back(make_gt({b, b + 1, b + 2, b + 3}, cls(rng)));
    }
    for (int i = 0; i < np; ++i) {
      const int b = base(rng) * 6;
      const int shift = base(rng) % 3;
      preds.push_back(
          make_pred({b + shift, b + shift + 1, b + shift + 2, b + shift + 3},
                    cls(rng), sc(rng)));
    }
    for (double t : {0.5, 0.75}) {
      CHECK(instance_ap(preds, gts, t).mean_ap ==
            doctest::Approx(test::oracle_mean_ap(preds, gts, t)).epsilon(1e-12));
    }
  }
}

TEST_CASE("AP is monotone non-increasing in the IoU threshold") {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> base(0, 5);
  std::uniform_real_distribution<double> sc(0.0, 1.0);
  for (int fixture = 0; fixture < 30; ++fixture) {
    std::vector<GtInstance> gts;
    std::vector<Proposal> preds;
    for (int i = 0; i < 3; ++i) {
      const int b = base(rng) * 8;
      gts.push_back(make_gt({b, b + 1, b + 2, b + 3, b + 4}, 1));
      const int shift = base(rng) % 4;
      preds.push_back(make_pred(
          {b + shift, b + shift + 1, b + shift + 2, b + shift + 3, b + shift + 4},
          1, sc(rng)));
    }
    double prev = 2.0;
    for (int t = 50; t <= 95; t += 5) {
      const double ap = instance_ap(preds, gts, t / 100.0).mean_ap;
      CHECK(ap <= prev + 1e-12);
      prev = ap;
    }
  }
}

TEST_CASE("instance_map over thresholds") {
  SUBCASE("perfect predictions give 1") {
    const std::vector<GtInstance> gts = {make_gt({0, 1, 2}, 1)};
    const std::vector<Proposal> preds = {make_pred({0, 1, 2}, 1, 0.9)};
    CHECK(instance_map(preds, gts) == doctest::Approx(1.0));
  }
  SUBCASE("IoU exactly 0.7 counts only for thresholds <= 0.7") {
    // inter = {0..6} = 7, union = {0..9} = 10 -> IoU exactly 0.7.
    const std::vector<int> gt_idx = {0, 1, 2, 3, 4, 5, 6, 7};
    const std::vector<int> pred_idx = {0, 1, 2, 3, 4, 5, 6, 8, 9};
    const std::vector<GtInstance> gts = {make_gt(gt_idx, 1)};
    const std::vector<Proposal> preds = {make_pred(pred_idx, 1, 0.9)};
    for (int t = 50; t <= 95; t += 5) {
      const double ap = instance_ap(preds, gts, t / 100.0).mean_ap;
      if (t <= 70) CHECK(ap == doctest::Approx(1.0));
      else CHECK(ap == doctest::Approx(0.0));
    }
    CHECK(instance_map(preds, gts) == doctest::Approx(5.0 / 10.0));
  }
  SUBCASE("empty everything gives zero mean over no classes") {
    CHECK(instance_map({}, {}) == 0.0);
  }
}

TEST_CASE("box iou3d exact vs sampled and edge cases") {
  PartPose a;
  a.size = Vec3(0.4, 0.3, 0.2);

  SUBCASE("box with itself is 1") {
    CHECK(box_iou3d(a, a) == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("disjoint boxes give 0") {
    PartPose b = a;
    b.translation = Vec3(5, 0, 0);
    CHECK(box_iou3d(a, b) == 0.0);
  }
  SUBCASE("axis-aligned half overlap") {
    PartPose b = a;
    b.translation = Vec3(0.2, 0, 0);  // half the x extent
    // intersection = 0.2*0.3*0.2, each volume 0.024.
    const double inter = 0.2 * 0.3 * 0.2;
    const double expect = inter / (2 * 0.024 - inter);
    CHECK(box_iou3d(a, b) == doctest::Approx(expect).epsilon(1e-9));
  }
  SUBCASE("rotated overlap matches dense sampling") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      PartPose b;
      b.rotation = test::random_rotation(rng);
      b.translation = 0.1 * test::random_vec(rng);
      b.size = Vec3(0.35, 0.25, 0.3);
      const double exact = box_iou3d(a, b);
      const double sampled = box_iou3d_sampled(a, b, 200000, 9);
      CHECK(std::abs(exact - sampled) < 0.01);
    }
  }
}

TEST_CASE("pose_errors") {
  PartPose gt;
  gt.size = Vec3(0.3, 0.2, 0.1);
  const JointParams gt_joint = joint_from_pose(gt, PartClass::HingeDoor);

  SUBCASE("identical poses give zero errors and IoU 1") {
    const auto e =
        pose_errors(gt, gt_joint, gt, gt_joint, PartClass::HingeDoor);
    CHECK(e.rotation_deg < 1e-9);
    CHECK(e.translation_cm == 0.0);
    CHECK(e.size_cm == 0.0);
    CHECK(e.axis_angle_deg < 1e-9);
    REQUIRE(e.axis_dist_cm.has_value());
    CHECK(*e.axis_dist_cm < 1e-9);
    CHECK(e.iou3d == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("Type1 symmetry tolerated in rotation error") {
    PartPose pred;
    pred.size = Vec3(0.3, 0.1, 0.05);
    pred.rotation = rot_z(kPi);
    PartPose gt2 = pred;
    gt2.rotation = Mat3::Identity();
    const auto jp = joint_from_pose(pred, PartClass::LineFixedHandle);
    const auto jg = joint_from_pose(gt2, PartClass::LineFixedHandle);
    const auto e = pose_errors(pred, jp, gt2, jg, PartClass::LineFixedHandle);
    CHECK(e.rotation_deg < 1e-6);
  }
  SUBCASE("3 cm translation with small rotation: 5-5 vs 10-10") {
    PartPose pred = gt;
    pred.translation = Vec3(0.03, 0, 0);
    pred.rotation = rot_y(deg2rad(7.0));
    const auto jp = joint_from_pose(pred, PartClass::HingeDoor);
    const auto e = pose_errors(pred, jp, gt, gt_joint, PartClass::HingeDoor);
    CHECK(e.translation_cm == doctest::Approx(3.0));
    CHECK(e.rotation_deg == doctest::Approx(7.0).epsilon(1e-6));
    const std::vector<PoseErrors> errs = {e};
    CHECK(*pose_accuracy(errs, 5, 5) == doctest::Approx(0.0));
    CHECK(*pose_accuracy(errs, 10, 10) == doctest::Approx(100.0));
  }
  SUBCASE("symmetric-group invariance in gt") {
    std::mt19937_64 rng(33);
    PartPose pred;
    pred.rotation = test::random_rotation(rng);
    pred.translation = test::random_vec(rng);
    pred.size = Vec3(0.2, 0.2, 0.3);
    for (PartClass cls : {PartClass::HingeKnob, PartClass::HingeLid}) {
      PartPose base = pred;
      base.rotation = test::random_rotation(rng);
      const auto jb = joint_from_pose(base, cls);
      const auto jp = joint_from_pose(pred, cls);
      const auto e0 = pose_errors(pred, jp, base, jb, cls);
      for (const Mat3& g : symmetry_group(cls).generators) {
        PartPose gt2 = base;
        gt2.rotation = base.rotation * g;
        const auto e = pose_errors(pred, jp, gt2, joint_from_pose(gt2, cls), cls);
        CHECK(e.rotation_deg == doctest::Approx(e0.rotation_deg).epsilon(1e-6));
      }
    }
  }
  SUBCASE("mismatched joint kinds raise a metric error") {
    const auto jp = joint_from_pose(gt, PartClass::SliderDrawer);
    CHECK_THROWS_AS(pose_errors(gt, jp, gt, gt_joint, PartClass::HingeDoor),
                    MetricError);
  }
}

TEST_CASE("pose_accuracy") {
  PoseErrors good;
  PoseErrors bad;
  bad.rotation_deg = 20;
  bad.translation_cm = 20;
  CHECK(*pose_accuracy({good, good}, 5, 5) == doctest::Approx(100.0));
  CHECK(*pose_accuracy({good, bad}, 5, 5) == doctest::Approx(50.0));
  CHECK(!pose_accuracy({}, 5, 5).has_value());
}
