#include "gapart/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace gapart {

void PerPointPrediction::validate(std::size_t n) const {
  if (semantic_labels.size() != n)
    throw std::invalid_argument("semantic_labels size mismatch");
  if (offsets.size() != n) throw std::invalid_argument("offsets size mismatch");
  if (!foreground_prob.empty() && foreground_prob.size() != n)
    throw std::invalid_argument("foreground_prob size mismatch");
  for (const Vec3& o : offsets)
    if (!o.allFinite()) throw std::invalid_argument("non-finite offset");
}

namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator<(const VoxelKey& o) const {
    return std::tie(x, y, z) < std::tie(o.x, o.y, o.z);
  }
};

VoxelKey voxel_of(const Vec3& p, double cell) {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell)),
          static_cast<std::int64_t>(std::floor(p.y() / cell)),
          static_cast<std::int64_t>(std::floor(p.z() / cell))};
}

}  // namespace

std::vector<std::vector<int>> radius_neighbors(const std::vector<Vec3>& points,
                                               double radius) {
  const double r2 = radius * radius;
  std::map<VoxelKey, std::vector<int>> grid;
  for (std::size_t i = 0; i < points.size(); ++i)
    grid[voxel_of(points[i], radius)].push_back(static_cast<int>(i));

  std::vector<std::vector<int>> nbrs(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const VoxelKey c = voxel_of(points[i], radius);
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == grid.end()) continue;
          for (int j : it->second) {
            if (j == static_cast<int>(i)) continue;
            if ((points[i] - points[j]).squaredNorm() <= r2)
              nbrs[i].push_back(j);
          }
        }
    std::sort(nbrs[i].begin(), nbrs[i].end());
  }
  return nbrs;
}

std::vector<std::vector<int>> radius_neighbors_bruteforce(
    const std::vector<Vec3>& points, double radius) {
  const double r2 = radius * radius;
  std::vector<std::vector<int>> nbrs(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = 0; j < points.size(); ++j)
      if (i != j && (points[i] - points[j]).squaredNorm() <= r2)
        nbrs[i].push_back(static_cast<int>(j));
  return nbrs;
}

namespace {

// Flood-fill over radius neighbors restricted to same-semantic foreground
// points. Returns clusters of >= min_points points, each with its label.
std::vector<Proposal> cluster(const std::vector<Vec3>& coords,
                              const std::vector<int>& semantic,
                              const GroupingParams& params) {
  const auto nbrs = radius_neighbors(coords, params.radius);
  std::vector<Proposal> proposals;
  std::vector<char> visited(coords.size(), 0);
  for (std::size_t seed = 0; seed < coords.size(); ++seed) {
    if (visited[seed] || semantic[seed] == 0) continue;
    const int label = semantic[seed];
    std::vector<int> members;
    std::deque<int> frontier{static_cast<int>(seed)};
    visited[seed] = 1;
    while (!frontier.empty()) {
      const int i = frontier.front();
      frontier.pop_front();
      members.push_back(i);
      for (int j : nbrs[i]) {
        if (visited[j] || semantic[j] != label) continue;
        visited[j] = 1;
        frontier.push_back(j);
      }
    }
    if (static_cast<int>(members.size()) < params.min_points) continue;
    std::sort(members.begin(), members.end());
    Proposal p;
    p.point_indices = std::move(members);
    p.semantic_label = label;
    p.score = 1.0;
    proposals.push_back(std::move(p));
  }
  return proposals;
}

}  // namespace

std::vector<Proposal> dual_set_group(const PointCloud& cloud,
                                     const PerPointPrediction& pred,
                                     const GroupingParams& params) {
  pred.validate(cloud.size());

  std::vector<Proposal> raw_set =
      cluster(cloud.positions, pred.semantic_labels, params);

  std::vector<Vec3> shifted(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    shifted[i] = cloud.positions[i] + pred.offsets[i];
  std::vector<Proposal> offset_set =
      cluster(shifted, pred.semantic_labels, params);

  // Merge; drop proposals whose point set duplicates an earlier one.
  std::set<std::vector<int>> seen;
  std::vector<Proposal> merged;
  for (auto* set : {&raw_set, &offset_set})
    for (Proposal& p : *set)
      if (seen.insert(p.point_indices).second) merged.push_back(std::move(p));
  return merged;
}

double point_set_iou(const std::vector<int>& a, const std::vector<int>& b) {
  // Inputs are sorted index lists.
  std::size_t inter = 0, ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] == b[ib]) { ++inter; ++ia; ++ib; }
    else if (a[ia] < b[ib]) ++ia;
    else ++ib;
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<Proposal> filter_and_nms(std::vector<Proposal> proposals,
                                     const std::vector<double>& scores,
                                     const std::vector<double>& fg_prob,
                                     const FilterParams& params) {
  if (scores.size() != proposals.size())
    throw std::invalid_argument("scores size does not match proposals");

  std::vector<Proposal> kept;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    Proposal p = std::move(proposals[i]);
    p.score = scores[i];
    if (!fg_prob.empty()) {
      std::vector<int> fg;
      for (int idx : p.point_indices)
        if (fg_prob[idx] >= params.fg_thresh) fg.push_back(idx);
      p.point_indices = std::move(fg);
    }
    if (static_cast<int>(p.point_indices.size()) < params.min_points) continue;
    if (p.score < params.score_thresh) continue;
    kept.push_back(std::move(p));
  }

  // Greedy NMS by descending score; score ties keep the earlier proposal.
  std::stable_sort(kept.begin(), kept.end(),
                   [](const Proposal& a, const Proposal& b) { return a.score > b.score; });
  std::vector<Proposal> out;
  for (Proposal& p : kept) {
    bool suppressed = false;
    for (const Proposal& q : out)
      if (point_set_iou(p.point_indices, q.point_indices) > params.nms_iou) {
        suppressed = true;
        break;
      }
    if (!suppressed) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace gapart
