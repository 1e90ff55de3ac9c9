#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gapart/grouping.hpp"
#include "gapart/ingest.hpp"
#include "gapart/manip.hpp"
#include "gapart/metrics.hpp"
#include "gapart/types.hpp"

namespace gapart::io {

inline constexpr int kSchemaVersion = 1;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- PLY ------------------------------------------------------------------
// ASCII PLY with per-vertex properties x y z [red green blue]
// [semantic_label] [instance_label].
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_ply(const std::filesystem::path& path);

// --- PNG ------------------------------------------------------------------
// 16-bit grayscale depth (value * depth_scale -> meters) and 8-bit RGB color.
DepthImage read_depth_png(const std::filesystem::path& path,
                          double depth_scale = 1.0 / 1000.0);
ColorImage read_color_png(const std::filesystem::path& path);
void write_depth_png(const std::filesystem::path& path, const DepthImage& depth,
                     double depth_scale = 1.0 / 1000.0);
void write_color_png(const std::filesystem::path& path, const ColorImage& img);

// --- JSON schemas ---------------------------------------------------------
nlohmann::json to_json(const PartPose& pose);       // rotation row-major 9-array
PartPose pose_from_json(const nlohmann::json& j);
nlohmann::json to_json(const JointParams& joint);
JointParams joint_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Proposal& p);
Proposal proposal_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Trajectory& t);
nlohmann::json to_json(const PoseErrors& e);

PinholeIntrinsics read_intrinsics_json(const std::filesystem::path& path);

// --- prediction blobs -----------------------------------------------------
// Raw little-endian float32 arrays with a JSON sidecar describing layout:
// semantic_labels [N], offsets [N,3], optional foreground_prob [N],
// optional scores [M]. The sidecar lives at <blob path> + ".json".
struct PredictionBundle {
  PerPointPrediction prediction;
  std::vector<double> scores;  // per-proposal, may be empty
};

void write_prediction_blob(const std::filesystem::path& blob_path,
                           const PredictionBundle& bundle);
PredictionBundle read_prediction_blob(const std::filesystem::path& blob_path);

// --- misc -----------------------------------------------------------------
// Writes via a temp file in the same directory, then renames.
void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content);
void write_json_atomic(const std::filesystem::path& path,
                       const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace gapart::io
