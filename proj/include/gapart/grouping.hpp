#pragma once

#include <vector>

#include "gapart/types.hpp"

namespace gapart {

struct PerPointPrediction {
  std::vector<int> semantic_labels;  // size N, 0..9
  std::vector<Vec3> offsets;         // size N, toward instance centroids
  std::vector<double> foreground_prob;  // empty or size N, in [0,1]

  void validate(std::size_t n) const;
};

struct GroupingParams {
  double radius = 0.03;
  int min_points = 5;
};

struct FilterParams {
  double fg_thresh = 0.4;
  double score_thresh = 0.09;
  double nms_iou = 0.3;
  int min_points = 5;
};

// Radius-neighbor lists (indices j != i with |p_i - p_j| <= radius).
// Voxel-hash accelerated; equals brute-force search exactly.
std::vector<std::vector<int>> radius_neighbors(const std::vector<Vec3>& points,
                                               double radius);
std::vector<std::vector<int>> radius_neighbors_bruteforce(
    const std::vector<Vec3>& points, double radius);

// Dual set grouping: flood-fill clustering over same-semantic foreground
// points, run once on raw coordinates and once on offset-shifted
// coordinates. Clusters below min_points are dropped; the two proposal
// sets are merged with exact-duplicate point sets removed.
std::vector<Proposal> dual_set_group(const PointCloud& cloud,
                                     const PerPointPrediction& pred,
                                     const GroupingParams& params = {});

double point_set_iou(const std::vector<int>& a, const std::vector<int>& b);

// Foreground filtering, score filtering, and greedy point-set-IoU NMS.
// `scores` overwrite each proposal's score; foreground probabilities come
// from pred.foreground_prob when present (all-foreground otherwise).
std::vector<Proposal> filter_and_nms(std::vector<Proposal> proposals,
                                     const std::vector<double>& scores,
                                     const std::vector<double>& fg_prob,
                                     const FilterParams& params = {});

}  // namespace gapart
