#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "gapart/metrics.hpp"

namespace gapart {

namespace {

// Convex polyhedron as a list of planar polygon faces with outward CCW
// winding. Clipping keeps faces polygonal; volume comes from the
// divergence theorem.
using Polygon = std::vector<Vec3>;
using Polyhedron = std::vector<Polygon>;

Polyhedron box_faces(const PartPose& p) {
  const Vec3 h = p.size / 2.0;
  auto corner = [&](double sx, double sy, double sz) -> Vec3 {
    return p.translation + p.rotation * Vec3(sx * h.x(), sy * h.y(), sz * h.z());
  };
  const Vec3 c000 = corner(-1, -1, -1), c001 = corner(-1, -1, 1);
  const Vec3 c010 = corner(-1, 1, -1), c011 = corner(-1, 1, 1);
  const Vec3 c100 = corner(1, -1, -1), c101 = corner(1, -1, 1);
  const Vec3 c110 = corner(1, 1, -1), c111 = corner(1, 1, 1);
  return {
      {c100, c110, c111, c101},  // +x
      {c000, c001, c011, c010},  // -x
      {c010, c011, c111, c110},  // +y
      {c000, c100, c101, c001},  // -y
      {c001, c101, c111, c011},  // +z
      {c000, c010, c110, c100},  // -z
  };
}

// Clip polygon against halfspace n.x <= d.
Polygon clip_polygon(const Polygon& poly, const Vec3& n, double d) {
  Polygon out;
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec3& a = poly[i];
    const Vec3& b = poly[(i + 1) % m];
    const double da = n.dot(a) - d;
    const double db = n.dot(b) - d;
    if (da <= 0) out.push_back(a);
    if ((da < 0 && db > 0) || (da > 0 && db < 0)) {
      const double t = da / (da - db);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

// Clip polyhedron against halfspace n.x <= d, adding the cap face formed
// by the cut.
Polyhedron clip_polyhedron(const Polyhedron& poly, const Vec3& n, double d) {
  // If nothing lies strictly outside the halfspace the solid is untouched;
  // returning early also avoids building a cap on top of a face that happens
  // to lie exactly in the clip plane.
  bool any_outside = false;
  for (const Polygon& face : poly)
    for (const Vec3& v : face)
      if (n.dot(v) - d > 0) any_outside = true;
  if (!any_outside) return poly;

  Polyhedron out;
  std::vector<Vec3> cut_points;
  for (const Polygon& face : poly) {
    Polygon clipped = clip_polygon(face, n, d);
    if (clipped.size() >= 3) out.push_back(clipped);
    // Collect vertices lying on the cut plane for the cap.
    for (const Vec3& v : clipped)
      if (std::abs(n.dot(v) - d) < 1e-12) cut_points.push_back(v);
  }
  if (cut_points.size() >= 3) {
    // Order the cap vertices by angle around their centroid in the plane.
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& v : cut_points) centroid += v;
    centroid /= static_cast<double>(cut_points.size());
    Vec3 u = Vec3::Zero();
    for (const Vec3& v : cut_points) {
      const Vec3 r = v - centroid;
      if (r.norm() > 1e-12) { u = r.normalized(); break; }
    }
    if (u.norm() > 0) {
      const Vec3 w = n.normalized().cross(u);
      std::vector<std::pair<double, Vec3>> ang;
      ang.reserve(cut_points.size());
      for (const Vec3& v : cut_points) {
        const Vec3 r = v - centroid;
        ang.emplace_back(std::atan2(w.dot(r), u.dot(r)), v);
      }
      std::sort(ang.begin(), ang.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      Polygon cap;
      for (const auto& [a, v] : ang) {
        if (!cap.empty() && (cap.back() - v).norm() < 1e-12) continue;
        cap.push_back(v);
      }
      if (cap.size() >= 3) {
        // Outward normal of the cap is +n.
        const Vec3 fn = (cap[1] - cap[0]).cross(cap[2] - cap[0]);
        if (fn.dot(n) < 0) std::reverse(cap.begin(), cap.end());
        out.push_back(cap);
      }
    }
  }
  return out;
}

double polyhedron_volume(const Polyhedron& poly) {
  double vol = 0.0;
  for (const Polygon& face : poly) {
    for (std::size_t i = 1; i + 1 < face.size(); ++i) {
      vol += face[0].dot(face[i].cross(face[i + 1]));
    }
  }
  return vol / 6.0;
}

bool point_in_box(const Vec3& p, const PartPose& box) {
  const Vec3 local = box.rotation.transpose() * (p - box.translation);
  const Vec3 h = box.size / 2.0;
  return std::abs(local.x()) <= h.x() && std::abs(local.y()) <= h.y() &&
         std::abs(local.z()) <= h.z();
}

}  // namespace

double box_iou3d_sampled(const PartPose& a, const PartPose& b, int samples,
                         std::uint64_t seed) {
  // Sample in the AABB of the union.
  Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
  for (const PartPose* box : {&a, &b})
    for (const Polygon& face : box_faces(*box))
      for (const Vec3& v : face) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
      }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  long in_a = 0, in_b = 0, in_both = 0;
  for (int i = 0; i < samples; ++i) {
    const Vec3 p(lo.x() + uni(rng) * (hi.x() - lo.x()),
                 lo.y() + uni(rng) * (hi.y() - lo.y()),
                 lo.z() + uni(rng) * (hi.z() - lo.z()));
    const bool ia = point_in_box(p, a), ib = point_in_box(p, b);
    in_a += ia;
    in_b += ib;
    in_both += ia && ib;
  }
  const long uni_count = in_a + in_b - in_both;
  return uni_count == 0 ? 0.0
                        : static_cast<double>(in_both) / static_cast<double>(uni_count);
}

double box_iou3d(const PartPose& a, const PartPose& b) {
  const double vol_a = a.size.prod();
  const double vol_b = b.size.prod();
  if (vol_a <= 0 || vol_b <= 0) throw MetricError("box with non-positive volume");

  // Clip box A by the 6 halfspaces of box B.
  Polyhedron poly = box_faces(a);
  const Vec3 hb = b.size / 2.0;
  for (int axis = 0; axis < 3 && !poly.empty(); ++axis) {
    const Vec3 n = b.rotation.col(axis);
    const double c = n.dot(b.translation);
    poly = clip_polyhedron(poly, n, c + hb(axis));
    if (poly.empty()) break;
    poly = clip_polyhedron(poly, -n, -(c - hb(axis)));
  }
  double inter = poly.empty() ? 0.0 : polyhedron_volume(poly);
  if (!std::isfinite(inter) || inter < -1e-9 * std::max(vol_a, vol_b) ||
      inter > (1.0 + 1e-6) * std::min(vol_a, vol_b)) {
    // Ill-conditioned clip; fall back to sampling (tolerance ~1e-3).
    return box_iou3d_sampled(a, b);
  }
  inter = std::clamp(inter, 0.0, std::min(vol_a, vol_b));
  const double uni = vol_a + vol_b - inter;
  return inter / uni;
}

}  // namespace gapart
