#include "gapart/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gapart::io {

using nlohmann::json;

// --- PLY ------------------------------------------------------------------

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  cloud.validate();
  const bool has_color = !cloud.colors.empty();
  const bool has_sem = !cloud.semantic_labels.empty();
  const bool has_inst = !cloud.instance_labels.empty();

  std::ostringstream out;
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (has_color)
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (has_sem) out << "property int semantic_label\n";
  if (has_inst) out << "property int instance_label\n";
  out << "end_header\n";

  char buf[256];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g", p.x(), p.y(), p.z());
    out << buf;
    if (has_color) {
      const Vec3& c = cloud.colors[i];
      auto q = [](double v) {
        return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      };
      out << ' ' << q(c.x()) << ' ' << q(c.y()) << ' ' << q(c.z());
    }
    if (has_sem) out << ' ' << cloud.semantic_labels[i];
    if (has_inst) out << ' ' << cloud.instance_labels[i];
    out << '\n';
  }
  atomic_write_text(path, out.str());
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open PLY file: " + path.string());

  std::string line;
  std::getline(in, line);
  if (line != "ply") throw IoError(path.string() + ": not a PLY file (line 1)");
  std::getline(in, line);
  if (line.rfind("format ascii", 0) != 0)
    throw IoError(path.string() + ": only ASCII PLY is supported (line 2)");

  std::size_t n = 0;
  std::vector<std::string> props;
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment") continue;
    if (tok == "element") {
      std::string what;
      ls >> what >> n;
      if (what != "vertex")
        throw IoError(path.string() + ": unsupported element '" + what + "'");
    } else if (tok == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    } else if (tok == "end_header") {
      break;
    } else {
      throw IoError(path.string() + ": unexpected header token '" + tok +
                    "' at line " + std::to_string(line_no));
    }
  }

  auto has = [&](const char* name) {
    return std::find(props.begin(), props.end(), name) != props.end();
  };
  if (!has("x") || !has("y") || !has("z"))
    throw IoError(path.string() + ": missing x/y/z properties");
  const bool has_color = has("red");
  const bool has_sem = has("semantic_label");
  const bool has_inst = has("instance_label");

  PointCloud cloud;
  cloud.positions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw IoError(path.string() + ": truncated vertex list at line " +
                    std::to_string(line_no + 1 + i));
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (vals.size() != props.size())
      throw IoError(path.string() + ": wrong value count at line " +
                    std::to_string(line_no + 1 + i));
    auto val = [&](const char* name) {
      return vals[std::find(props.begin(), props.end(), name) - props.begin()];
    };
    cloud.positions.emplace_back(val("x"), val("y"), val("z"));
    if (has_color)
      cloud.colors.emplace_back(val("red") / 255.0, val("green") / 255.0,
                                val("blue") / 255.0);
    if (has_sem)
      cloud.semantic_labels.push_back(static_cast<int>(val("semantic_label")));
    if (has_inst)
      cloud.instance_labels.push_back(static_cast<int>(val("instance_label")));
  }
  cloud.validate();
  return cloud;
}

// --- PNG ------------------------------------------------------------------

namespace {

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;

  explicit PngReader(const std::filesystem::path& path) {
    fp = std::fopen(path.string().c_str(), "rb");
    if (!fp) throw IoError("cannot open PNG file: " + path.string());
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) throw IoError("failed to read PNG: " + path.string());
    png_init_io(png, fp);
    png_read_info(png, info);
  }
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    if (fp) std::fclose(fp);
  }
};

}  // namespace

DepthImage read_depth_png(const std::filesystem::path& path, double depth_scale) {
  PngReader r(path);
  if (setjmp(png_jmpbuf(r.png)))
    throw IoError("failed to decode PNG: " + path.string());

  const int width = png_get_image_width(r.png, r.info);
  const int height = png_get_image_height(r.png, r.info);
  const int bit_depth = png_get_bit_depth(r.png, r.info);
  const int color_type = png_get_color_type(r.png, r.info);
  if (color_type != PNG_COLOR_TYPE_GRAY)
    throw IoError(path.string() + ": depth PNG must be grayscale");
  if (bit_depth != 16 && bit_depth != 8)
    throw IoError(path.string() + ": depth PNG must be 8- or 16-bit");
  png_read_update_info(r.png, r.info);

  const std::size_t rowbytes = png_get_rowbytes(r.png, r.info);
  std::vector<png_byte> row(rowbytes);
  DepthImage depth;
  depth.width = width;
  depth.height = height;
  depth.values.resize(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    png_read_row(r.png, row.data(), nullptr);
    for (int x = 0; x < width; ++x) {
      std::uint32_t raw;
      if (bit_depth == 16)
        raw = (static_cast<std::uint32_t>(row[2 * x]) << 8) | row[2 * x + 1];
      else
        raw = row[x];
      depth.values[static_cast<std::size_t>(y) * width + x] = raw * depth_scale;
    }
  }
  return depth;
}

ColorImage read_color_png(const std::filesystem::path& path) {
  PngReader r(path);
  if (setjmp(png_jmpbuf(r.png)))
    throw IoError("failed to decode PNG: " + path.string());

  png_set_strip_16(r.png);
  png_set_palette_to_rgb(r.png);
  png_set_expand_gray_1_2_4_to_8(r.png);
  png_set_gray_to_rgb(r.png);
  png_set_strip_alpha(r.png);
  png_read_update_info(r.png, r.info);

  const int width = png_get_image_width(r.png, r.info);
  const int height = png_get_image_height(r.png, r.info);
  const std::size_t rowbytes = png_get_rowbytes(r.png, r.info);
  std::vector<png_byte> row(rowbytes);
  ColorImage img;
  img.width = width;
  img.height = height;
  img.pixels.resize(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    png_read_row(r.png, row.data(), nullptr);
    for (int x = 0; x < width; ++x)
      img.pixels[static_cast<std::size_t>(y) * width + x] =
          Vec3(row[3 * x] / 255.0, row[3 * x + 1] / 255.0, row[3 * x + 2] / 255.0);
  }
  return img;
}

namespace {

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;

  explicit PngWriter(const std::filesystem::path& path) {
    fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw IoError("cannot write PNG file: " + path.string());
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) throw IoError("failed to write PNG: " + path.string());
    png_init_io(png, fp);
  }
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, &info);
    if (fp) std::fclose(fp);
  }
};

}  // namespace

void write_depth_png(const std::filesystem::path& path, const DepthImage& depth,
                     double depth_scale) {
  PngWriter w(path);
  if (setjmp(png_jmpbuf(w.png)))
    throw IoError("failed to encode PNG: " + path.string());
  png_set_IHDR(w.png, w.info, depth.width, depth.height, 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  std::vector<png_byte> row(static_cast<std::size_t>(depth.width) * 2);
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const double v = depth.values[static_cast<std::size_t>(y) * depth.width + x];
      std::uint32_t raw = 0;
      if (std::isfinite(v) && v > 0)
        raw = static_cast<std::uint32_t>(
            std::min<long>(65535, std::lround(v / depth_scale)));
      row[2 * x] = static_cast<png_byte>(raw >> 8);
      row[2 * x + 1] = static_cast<png_byte>(raw & 0xff);
    }
    png_write_row(w.png, row.data());
  }
  png_write_end(w.png, nullptr);
}

void write_color_png(const std::filesystem::path& path, const ColorImage& img) {
  PngWriter w(path);
  if (setjmp(png_jmpbuf(w.png)))
    throw IoError("failed to encode PNG: " + path.string());
  png_set_IHDR(w.png, w.info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  std::vector<png_byte> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Vec3& c = img.pixels[static_cast<std::size_t>(y) * img.width + x];
      for (int k = 0; k < 3; ++k)
        row[3 * x + k] = static_cast<png_byte>(
            std::lround(std::clamp(c(k), 0.0, 1.0) * 255.0));
    }
    png_write_row(w.png, row.data());
  }
  png_write_end(w.png, nullptr);
}

// --- JSON schemas ---------------------------------------------------------

namespace {

json mat_to_json(const Mat3& m) {
  json a = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  return a;
}

Mat3 mat_from_json(const json& a) {
  if (!a.is_array() || a.size() != 9)
    throw IoError("rotation must be a row-major 9-array");
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = a[3 * r + c].get<double>();
  return m;
}

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const json& a) {
  if (!a.is_array() || a.size() != 3) throw IoError("expected a 3-array");
  return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

}  // namespace

json to_json(const PartPose& pose) {
  return json{{"rotation", mat_to_json(pose.rotation)},
              {"translation", vec_to_json(pose.translation)},
              {"size", vec_to_json(pose.size)}};
}

PartPose pose_from_json(const json& j) {
  PartPose p;
  p.rotation = mat_from_json(j.at("rotation"));
  p.translation = vec_from_json(j.at("translation"));
  p.size = vec_from_json(j.at("size"));
  return p;
}

namespace {

std::string joint_kind_name(JointKind k) {
  switch (k) {
    case JointKind::Revolute: return "revolute";
    case JointKind::Prismatic: return "prismatic";
    case JointKind::Fixed: return "fixed";
  }
  throw IoError("unknown joint kind");
}

JointKind joint_kind_from_name(const std::string& s) {
  if (s == "revolute") return JointKind::Revolute;
  if (s == "prismatic") return JointKind::Prismatic;
  if (s == "fixed") return JointKind::Fixed;
  throw IoError("unknown joint kind: " + s);
}

}  // namespace

json to_json(const JointParams& joint) {
  json j{{"kind", joint_kind_name(joint.kind)},
         {"axis_direction", vec_to_json(joint.axis_direction)}};
  if (joint.kind == JointKind::Revolute) j["pivot"] = vec_to_json(joint.pivot);
  return j;
}

JointParams joint_from_json(const json& j) {
  JointParams out;
  out.kind = joint_kind_from_name(j.at("kind").get<std::string>());
  out.axis_direction = vec_from_json(j.at("axis_direction"));
  if (out.kind == JointKind::Revolute) out.pivot = vec_from_json(j.at("pivot"));
  return out;
}

json to_json(const Proposal& p) {
  json j{{"indices", p.point_indices},
         {"label", p.semantic_label},
         {"score", p.score}};
  if (p.domain_label) j["domain"] = *p.domain_label;
  return j;
}

Proposal proposal_from_json(const json& j) {
  Proposal p;
  p.point_indices = j.at("indices").get<std::vector<int>>();
  p.semantic_label = j.at("label").get<int>();
  p.score = j.at("score").get<double>();
  if (j.contains("domain")) p.domain_label = j["domain"].get<int>();
  return p;
}

json to_json(const Trajectory& t) {
  json wps = json::array();
  for (std::size_t i = 0; i < t.waypoints.size(); ++i) {
    const GripperPose& w = t.waypoints[i];
    const char* phase = "approach";
    if (t.phases[i] == TrajectoryPhase::Grasp) phase = "grasp";
    else if (t.phases[i] == TrajectoryPhase::Actuate) phase = "actuate";
    wps.push_back(json{{"position", vec_to_json(w.position)},
                       {"approach_dir", vec_to_json(w.approach_dir)},
                       {"closing_dir", vec_to_json(w.closing_dir)},
                       {"aperture", w.aperture},
                       {"phase", phase}});
  }
  return json{{"dt", t.dt}, {"waypoints", wps}};
}

json to_json(const PoseErrors& e) {
  json j{{"R_e_deg", e.rotation_deg},   {"T_e_cm", e.translation_cm},
         {"S_e_cm", e.size_cm},         {"theta_e_deg", e.axis_angle_deg},
         {"iou3d", e.iou3d}};
  if (e.axis_dist_cm) j["d_e_cm"] = *e.axis_dist_cm;
  return j;
}

PinholeIntrinsics read_intrinsics_json(const std::filesystem::path& path) {
  const json j = read_json(path);
  PinholeIntrinsics intr;
  intr.fx = j.at("fx").get<double>();
  intr.fy = j.at("fy").get<double>();
  intr.cx = j.at("cx").get<double>();
  intr.cy = j.at("cy").get<double>();
  intr.width = j.at("width").get<int>();
  intr.height = j.at("height").get<int>();
  intr.validate();
  return intr;
}

// --- prediction blobs -----------------------------------------------------

void write_prediction_blob(const std::filesystem::path& blob_path,
                           const PredictionBundle& bundle) {
  const PerPointPrediction& p = bundle.prediction;
  const std::size_t n = p.semantic_labels.size();
  p.validate(n);

  std::vector<float> data;
  json arrays = json::array();
  auto add = [&](const std::string& name, std::vector<int> shape,
                 auto&& fill) {
    json a{{"name", name}, {"shape", shape},
           {"offset", data.size() * sizeof(float)}};
    fill();
    arrays.push_back(a);
  };
  add("semantic_labels", {static_cast<int>(n)}, [&] {
    for (int v : p.semantic_labels) data.push_back(static_cast<float>(v));
  });
  add("offsets", {static_cast<int>(n), 3}, [&] {
    for (const Vec3& o : p.offsets) {
      data.push_back(static_cast<float>(o.x()));
      data.push_back(static_cast<float>(o.y()));
      data.push_back(static_cast<float>(o.z()));
    }
  });
  if (!p.foreground_prob.empty())
    add("foreground_prob", {static_cast<int>(n)}, [&] {
      for (double v : p.foreground_prob) data.push_back(static_cast<float>(v));
    });
  if (!bundle.scores.empty())
    add("scores", {static_cast<int>(bundle.scores.size())}, [&] {
      for (double v : bundle.scores) data.push_back(static_cast<float>(v));
    });

  const json sidecar{{"schema_version", kSchemaVersion},
                     {"dtype", "float32"},
                     {"byte_order", "little"},
                     {"arrays", arrays}};

  std::string bytes(reinterpret_cast<const char*>(data.data()),
                    data.size() * sizeof(float));
  atomic_write_text(blob_path, bytes);
  write_json_atomic(blob_path.string() + ".json", sidecar);
}

PredictionBundle read_prediction_blob(const std::filesystem::path& blob_path) {
  const json sidecar = read_json(blob_path.string() + ".json");
  if (sidecar.at("dtype") != "float32" || sidecar.at("byte_order") != "little")
    throw IoError("unsupported blob layout in sidecar");

  std::ifstream in(blob_path, std::ios::binary);
  if (!in) throw IoError("cannot open blob: " + blob_path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());

  auto read_array = [&](const json& a) {
    std::size_t count = 1;
    for (int d : a.at("shape").get<std::vector<int>>()) count *= d;
    const std::size_t offset = a.at("offset").get<std::size_t>();
    if (offset + count * sizeof(float) > bytes.size())
      throw IoError("blob shorter than sidecar at array '" +
                    a.at("name").get<std::string>() + "' (offset " +
                    std::to_string(offset) + ")");
    std::vector<float> vals(count);
    std::memcpy(vals.data(), bytes.data() + offset, count * sizeof(float));
    return vals;
  };

  PredictionBundle out;
  for (const json& a : sidecar.at("arrays")) {
    const std::string name = a.at("name").get<std::string>();
    const std::vector<float> vals = read_array(a);
    if (name == "semantic_labels") {
      for (float v : vals)
        out.prediction.semantic_labels.push_back(static_cast<int>(std::lround(v)));
    } else if (name == "offsets") {
      for (std::size_t i = 0; i + 2 < vals.size(); i += 3)
        out.prediction.offsets.emplace_back(vals[i], vals[i + 1], vals[i + 2]);
    } else if (name == "foreground_prob") {
      out.prediction.foreground_prob.assign(vals.begin(), vals.end());
    } else if (name == "scores") {
      out.scores.assign(vals.begin(), vals.end());
    } else {
      throw IoError("unknown array '" + name + "' in blob sidecar");
    }
  }
  return out;
}

// --- misc -----------------------------------------------------------------

void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write: " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

void write_json_atomic(const std::filesystem::path& path, const json& j) {
  atomic_write_text(path, j.dump(2) + "\n");
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace gapart::io
