#include <CLI11.hpp>
#include "json.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>

#include "gapart/adversarial.hpp"
#include "gapart/grouping.hpp"
#include "gapart/ingest.hpp"
#include "gapart/io.hpp"
#include "gapart/manip.hpp"
#include "gapart/metrics.hpp"
#include "gapart/posefit.hpp"
#include "gapart/types.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace gapart;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  GroupingParams grouping;
  FilterParams filter;
  RansacParams ransac;
  double s_thre = 0.09;
  double grl_lambda = 0.3;
  double gamma = 2.0;
  std::array<double, 3> layer_weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::uint64_t seed = 0;
};

const std::set<std::string> kConfigKeys = {
    "radius",     "min_points",  "fg_thresh",     "score_thresh",
    "nms_iou",    "s_thre",      "lambda",        "gamma",
    "layer_weights", "ransac_iters", "ransac_thresh", "seed"};

RunConfig load_config(const fs::path& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  const json j = io::read_json(path);
  for (const auto& [key, val] : j.items())
    if (!kConfigKeys.count(key))
      throw std::invalid_argument("unknown config key: " + key);
  if (j.contains("radius")) cfg.grouping.radius = j["radius"].get<double>();
  if (j.contains("min_points")) {
    cfg.grouping.min_points = j["min_points"].get<int>();
    cfg.filter.min_points = cfg.grouping.min_points;
  }
  if (j.contains("fg_thresh")) cfg.filter.fg_thresh = j["fg_thresh"].get<double>();
  if (j.contains("score_thresh"))
    cfg.filter.score_thresh = j["score_thresh"].get<double>();
  if (j.contains("nms_iou")) cfg.filter.nms_iou = j["nms_iou"].get<double>();
  if (j.contains("s_thre")) cfg.s_thre = j["s_thre"].get<double>();
  if (j.contains("lambda")) cfg.grl_lambda = j["lambda"].get<double>();
  if (j.contains("gamma")) cfg.gamma = j["gamma"].get<double>();
  if (j.contains("layer_weights")) {
    const auto w = j["layer_weights"].get<std::vector<double>>();
    if (w.size() != 3) throw std::invalid_argument("layer_weights needs 3 values");
    std::copy(w.begin(), w.end(), cfg.layer_weights.begin());
  }
  if (j.contains("ransac_iters")) cfg.ransac.iterations = j["ransac_iters"].get<int>();
  if (j.contains("ransac_thresh"))
    cfg.ransac.inlier_thresh = j["ransac_thresh"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  return cfg;
}

json versioned(json j) {
  j["schema_version"] = io::kSchemaVersion;
  return j;
}

int cmd_ingest(const fs::path& depth_path, const fs::path& intr_path,
               const fs::path& color_path, double depth_scale,
               const fs::path& output) {
  const PinholeIntrinsics intr = io::read_intrinsics_json(intr_path);
  const DepthImage depth = io::read_depth_png(depth_path, depth_scale);
  PointCloud cloud;
  if (!color_path.empty()) {
    const ColorImage color = io::read_color_png(color_path);
    cloud = back_project(depth, intr, &color);
  } else {
    cloud = back_project(depth, intr);
  }
  io::write_ply(output, cloud);
  std::cout << "wrote " << cloud.size() << " points to " << output << "\n";
  return 0;
}

int cmd_fps(const fs::path& input, std::size_t k, std::uint64_t seed,
            const fs::path& output, const fs::path& indices_out) {
  const PointCloud cloud = io::read_ply(input);
  const FpsResult res = farthest_point_sample(cloud, k, seed);
  io::write_ply(output, res.cloud);
  if (!indices_out.empty())
    io::write_json_atomic(indices_out, versioned(json{{"indices", res.indices}}));
  std::cout << "sampled " << res.cloud.size() << " of " << cloud.size()
            << " points\n";
  return 0;
}

int cmd_segment(const fs::path& cloud_path, const fs::path& pred_path,
                const fs::path& output, const RunConfig& cfg) {
  const PointCloud cloud = io::read_ply(cloud_path);
  const io::PredictionBundle bundle = io::read_prediction_blob(pred_path);

  std::vector<Proposal> proposals =
      dual_set_group(cloud, bundle.prediction, cfg.grouping);
  std::vector<double> scores = bundle.scores;
  if (scores.empty()) scores.assign(proposals.size(), 1.0);
  if (scores.size() != proposals.size())
    throw std::invalid_argument(
        "score count (" + std::to_string(scores.size()) +
        ") does not match proposal count (" + std::to_string(proposals.size()) + ")");
  const std::vector<Proposal> kept = filter_and_nms(
      std::move(proposals), scores, bundle.prediction.foreground_prob, cfg.filter);

  json arr = json::array();
  for (const Proposal& p : kept) arr.push_back(io::to_json(p));
  io::write_json_atomic(output, versioned(json{{"proposals", arr}}));
  std::cout << "kept " << kept.size() << " proposals\n";
  return 0;
}

int cmd_fit_pose(const fs::path& input, const fs::path& output,
                 const RunConfig& cfg) {
  const json j = io::read_json(input);
  const PartClass cls = part_class_from_string(j.at("class").get<std::string>());
  std::vector<Vec3> points, npcs;
  for (const auto& p : j.at("points"))
    points.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  for (const auto& p : j.at("npcs"))
    npcs.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  if (points.size() != npcs.size())
    throw std::invalid_argument("points and npcs counts differ");

  RansacParams rp = cfg.ransac;
  rp.seed = cfg.seed;
  const RansacResult fit = ransac_umeyama(npcs, points, rp);

  NpcsMap inlier_npcs;
  for (std::size_t i = 0; i < npcs.size(); ++i)
    if (fit.inliers[i]) inlier_npcs.push_back(npcs[i]);
  PartPose pose = pose_from_fit(fit.transform, inlier_npcs);
  pose = canonicalize_pose(pose, cls);
  const JointParams joint = joint_from_pose(pose, cls);

  io::write_json_atomic(
      output, versioned(json{{"class", to_string(cls)},
                             {"pose", io::to_json(pose)},
                             {"joint", io::to_json(joint)},
                             {"scale", fit.transform.scale},
                             {"inlier_count", fit.inlier_count}}));
  std::cout << "fit with " << fit.inlier_count << "/" << points.size()
            << " inliers\n";
  return 0;
}

int cmd_eval_seg(const fs::path& pred_path, const fs::path& gt_path,
                 const fs::path& output) {
  const json jp = io::read_json(pred_path);
  const json jg = io::read_json(gt_path);
  std::vector<Proposal> preds;
  for (const auto& p : jp.at("proposals"))
    preds.push_back(io::proposal_from_json(p));
  std::vector<GtInstance> gts;
  for (const auto& g : jg.at("instances")) {
    GtInstance inst;
    inst.point_indices = g.at("indices").get<std::vector<int>>();
    std::sort(inst.point_indices.begin(), inst.point_indices.end());
    inst.semantic_label = g.at("label").get<int>();
    gts.push_back(std::move(inst));
  }
  for (Proposal& p : preds)
    std::sort(p.point_indices.begin(), p.point_indices.end());

  const ApResult ap50 = instance_ap(preds, gts, 0.5);
  const double map = instance_map(preds, gts);
  json per_class;
  for (const auto& [cls, ap] : ap50.per_class_ap)
    per_class[to_string(part_class_from_label(cls))] = ap;
  io::write_json_atomic(output,
                        versioned(json{{"AP50", ap50.mean_ap},
                                       {"AP", map},
                                       {"AP50_per_class", per_class}}));
  std::cout << "AP50 " << ap50.mean_ap << "  AP " << map << "\n";
  return 0;
}

int cmd_eval_pose(const fs::path& pred_path, const fs::path& gt_path,
                  const fs::path& output) {
  const json jp = io::read_json(pred_path);
  const json jg = io::read_json(gt_path);

  std::map<std::string, json> pred_by_id;
  for (const auto& p : jp.at("parts"))
    pred_by_id[p.at("id").get<std::string>()] = p;

  std::vector<PoseErrors> errors;
  int total_gt = 0;
  for (const auto& g : jg.at("parts")) {
    ++total_gt;
    const std::string id = g.at("id").get<std::string>();
    const auto it = pred_by_id.find(id);
    if (it == pred_by_id.end()) continue;  // pose evaluated only when detected
    const PartClass cls = part_class_from_string(g.at("class").get<std::string>());
    try {
      errors.push_back(pose_errors(io::pose_from_json(it->second.at("pose")),
                                   io::joint_from_json(it->second.at("joint")),
                                   io::pose_from_json(g.at("pose")),
                                   io::joint_from_json(g.at("joint")), cls));
    } catch (const MetricError& e) {
      throw MetricError(std::string(e.what()) + " (part id " + id + ")");
    }
  }

  json out{{"matched", errors.size()}, {"total_gt", total_gt}};
  if (!errors.empty()) {
    double re = 0, te = 0, se = 0, th = 0, iou = 0, de = 0;
    int de_n = 0;
    for (const PoseErrors& e : errors) {
      re += e.rotation_deg;
      te += e.translation_cm;
      se += e.size_cm;
      th += e.axis_angle_deg;
      iou += e.iou3d;
      if (e.axis_dist_cm) {
        de += *e.axis_dist_cm;
        ++de_n;
      }
    }
    const double n = static_cast<double>(errors.size());
    out["R_e_deg"] = re / n;
    out["T_e_cm"] = te / n;
    out["S_e_cm"] = se / n;
    out["theta_e_deg"] = th / n;
    out["mIoU_3d"] = iou / n;
    if (de_n > 0) out["d_e_cm"] = de / de_n;
    if (auto a5 = pose_accuracy(errors, 5, 5)) out["A_5"] = *a5;
    if (auto a10 = pose_accuracy(errors, 10, 10)) out["A_10"] = *a10;
  }
  io::write_json_atomic(output, versioned(out));
  std::cout << "evaluated " << errors.size() << "/" << total_gt << " parts\n";
  return 0;
}

int cmd_plan(const fs::path& pose_path, double range, const std::string& intent,
             const fs::path& output) {
  const json j = io::read_json(pose_path);
  const PartClass cls = part_class_from_string(j.at("class").get<std::string>());
  const PartPose pose = io::pose_from_json(j.at("pose"));
  const JointParams joint = j.contains("joint")
                                ? io::joint_from_json(j.at("joint"))
                                : joint_from_pose(pose, cls);

  GraspParams gp;
  if (intent == "fetch") gp.drawer_intent = DrawerIntent::Fetch;
  else if (intent != "open")
    throw std::invalid_argument("intent must be 'open' or 'fetch'");
  const GripperPose grasp = grasp_pose(pose, cls, gp);
  const Trajectory traj = actuation_trajectory(grasp, joint, range);
  io::write_json_atomic(output, versioned(io::to_json(traj)));
  std::cout << "planned " << traj.waypoints.size() << " waypoints\n";
  return 0;
}

int cmd_adv_demo(const AdvDemoConfig& cfg, const fs::path& output) {
  const AdvDemoReport report = adv_demo_train(cfg);
  json epochs = json::array();
  for (const AdvDemoEpoch& e : report.epochs)
    epochs.push_back(json{{"qrb_loss", e.qrb_loss},
                          {"domain_acc", e.domain_acc},
                          {"task_acc", e.task_acc}});
  io::write_json_atomic(
      output, versioned(json{{"epochs", epochs},
                             {"probe_domain_acc", report.probe_domain_acc},
                             {"final_task_acc", report.final_task_acc}}));
  std::cout << "probe domain acc " << report.probe_domain_acc
            << ", task acc " << report.final_task_acc << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GAPart perception and manipulation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file")
      ->check(CLI::ExistingFile);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Back-project RGB-D to a PLY cloud");
  std::string depth, intr, color, out;
  double depth_scale = 0.001;
  ingest->add_option("--depth", depth, "16-bit depth PNG")->required();
  ingest->add_option("--intrinsics", intr, "intrinsics JSON")->required();
  ingest->add_option("--color", color, "8-bit RGB PNG");
  ingest->add_option("--depth-scale", depth_scale,
                     "meters per depth unit (default 0.001 for mm PNGs)");
  ingest->add_option("--output", out, "output PLY")->required();

  // fps
  auto* fps = app.add_subcommand("fps", "Farthest-point sample a cloud");
  std::string fps_in, fps_out, fps_idx;
  std::size_t fps_k = 20000;
  std::uint64_t seed = 0;
  fps->add_option("--input", fps_in)->required();
  fps->add_option("-k,--count", fps_k, "sample count (default 20000)");
  fps->add_option("--seed", seed);
  fps->add_option("--output", fps_out)->required();
  fps->add_option("--indices", fps_idx, "write the index map as JSON");

  // segment
  auto* segment = app.add_subcommand("segment", "Group + filter + NMS proposals");
  std::string seg_cloud, seg_pred, seg_out;
  segment->add_option("--cloud", seg_cloud, "PLY cloud")->required();
  segment->add_option("--pred", seg_pred, "float32 prediction blob")->required();
  segment->add_option("--output", seg_out)->required();

  // fit-pose
  auto* fit = app.add_subcommand("fit-pose", "RANSAC + Umeyama NPCS pose fit");
  std::string fit_in, fit_out;
  fit->add_option("--input", fit_in, "JSON {points, npcs, class}")->required();
  fit->add_option("--output", fit_out)->required();

  // eval-seg
  auto* evseg = app.add_subcommand("eval-seg", "Instance segmentation AP metrics");
  std::string es_pred, es_gt, es_out;
  evseg->add_option("--pred", es_pred)->required();
  evseg->add_option("--gt", es_gt)->required();
  evseg->add_option("--output", es_out)->required();

  // eval-pose
  auto* evpose = app.add_subcommand("eval-pose", "Part pose error metrics");
  std::string ep_pred, ep_gt, ep_out;
  evpose->add_option("--pred", ep_pred)->required();
  evpose->add_option("--gt", ep_gt)->required();
  evpose->add_option("--output", ep_out)->required();

  // plan
  auto* plan = app.add_subcommand("plan", "Grasp + actuation trajectory");
  std::string plan_pose, plan_out, plan_intent = "open";
  double plan_range = 0.0;
  plan->add_option("--pose", plan_pose, "fit-pose output JSON")->required();
  plan->add_option("--range", plan_range, "motion range (m or rad)")->required();
  plan->add_option("--intent", plan_intent, "drawer intent: open|fetch");
  plan->add_option("--output", plan_out)->required();

  // adv-demo
  auto* adv = app.add_subcommand("adv-demo", "Desk-scale adversarial training demo");
  AdvDemoConfig adv_cfg;
  std::string adv_out;
  adv->add_option("--domains", adv_cfg.num_domains);
  adv->add_option("--classes", adv_cfg.num_classes);
  adv->add_option("--lambda", adv_cfg.grl_lambda);
  adv->add_option("--gamma", adv_cfg.gamma);
  adv->add_option("--epochs", adv_cfg.epochs);
  adv->add_option("--seed", adv_cfg.seed);
  adv->add_option("--output", adv_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path);
    if (*ingest) return cmd_ingest(depth, intr, color, depth_scale, out);
    if (*fps) return cmd_fps(fps_in, fps_k, seed, fps_out, fps_idx);
    if (*segment) return cmd_segment(seg_cloud, seg_pred, seg_out, cfg);
    if (*fit) return cmd_fit_pose(fit_in, fit_out, cfg);
    if (*evseg) return cmd_eval_seg(es_pred, es_gt, es_out);
    if (*evpose) return cmd_eval_pose(ep_pred, ep_gt, ep_out);
    if (*plan) return cmd_plan(plan_pose, plan_range, plan_intent, plan_out);
    if (*adv) {
      adv_cfg.layer_weights = cfg.layer_weights;
      return cmd_adv_demo(adv_cfg, adv_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
