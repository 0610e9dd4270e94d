#include "gplace/scene_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gplace {

void PointCloud::check_consistent() const {
  const std::size_t n = points.size();
  if (colors.size() != n || instance_labels.size() != n || semantic_labels.size() != n)
    throw Error("PointCloud: parallel arrays differ in length");
  if (!normals.empty()) {
    if (normals.size() != n) throw Error("PointCloud: normals length mismatch");
    for (const auto& nv : normals) {
      if (std::abs(nv.cast<double>().norm() - 1.0) > 1e-3)
        throw Error("PointCloud: normal is not unit length");
    }
  }
}

void AvatarModel::check_valid() const {
  cloud.check_consistent();
  if (cloud.empty()) throw EmptyCloud("AvatarModel: empty cloud");
  float min_z = cloud.points.front().z();
  for (const auto& p : cloud.points) min_z = std::min(min_z, p.z());
  if (std::abs(foot.z() - static_cast<double>(min_z)) > 1e-6)
    throw Error("AvatarModel '" + avatar_id + "': foot keypoint is not the lowest point");
  if ((gesturing_fingertip() - gesturing_shoulder()).norm() == 0.0)
    throw Error("AvatarModel '" + avatar_id + "': gesturing fingertip equals shoulder");
}

// --------------------------------------------------------------------------
// PLY
// --------------------------------------------------------------------------

namespace {

enum class PlyType { Char, UChar, Short, UShort, Int, UInt, Float, Double };

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::Char:
    case PlyType::UChar:
      return 1;
    case PlyType::Short:
    case PlyType::UShort:
      return 2;
    case PlyType::Int:
    case PlyType::UInt:
    case PlyType::Float:
      return 4;
    case PlyType::Double:
      return 8;
  }
  return 0;
}

PlyType parse_ply_type(const std::string& tok) {
  if (tok == "char" || tok == "int8") return PlyType::Char;
  if (tok == "uchar" || tok == "uint8") return PlyType::UChar;
  if (tok == "short" || tok == "int16") return PlyType::Short;
  if (tok == "ushort" || tok == "uint16") return PlyType::UShort;
  if (tok == "int" || tok == "int32") return PlyType::Int;
  if (tok == "uint" || tok == "uint32") return PlyType::UInt;
  if (tok == "float" || tok == "float32") return PlyType::Float;
  if (tok == "double" || tok == "float64") return PlyType::Double;
  throw FormatError("ply: unknown property type '" + tok + "'");
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float;
  bool is_list = false;
  PlyType count_type = PlyType::UChar;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyHeader {
  PlyEncoding encoding = PlyEncoding::Ascii;
  std::vector<PlyElement> elements;
  std::size_t body_offset = 0;
};

PlyHeader parse_ply_header(const std::string& data) {
  PlyHeader header;
  std::size_t pos = 0;
  auto next_line = [&](std::string& line) -> bool {
    if (pos >= data.size()) return false;
    std::size_t end = data.find('\n', pos);
    if (end == std::string::npos) end = data.size();
    line.assign(data, pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    return true;
  };

  std::string line;
  if (!next_line(line) || line != "ply") throw FormatError("ply: missing magic");
  bool have_format = false;
  bool have_end = false;
  while (next_line(line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii")
        header.encoding = PlyEncoding::Ascii;
      else if (fmt == "binary_little_endian")
        header.encoding = PlyEncoding::BinaryLittleEndian;
      else
        throw FormatError("ply: unsupported format '" + fmt + "'");
      have_format = true;
    } else if (kw == "element") {
      PlyElement el;
      if (!(ls >> el.name >> el.count)) throw FormatError("ply: malformed element line");
      header.elements.push_back(std::move(el));
    } else if (kw == "property") {
      if (header.elements.empty()) throw FormatError("ply: property before element");
      PlyProperty prop;
      std::string t1;
      ls >> t1;
      if (t1 == "list") {
        std::string ct, vt;
        if (!(ls >> ct >> vt >> prop.name)) throw FormatError("ply: malformed list property");
        prop.is_list = true;
        prop.count_type = parse_ply_type(ct);
        prop.type = parse_ply_type(vt);
      } else {
        prop.type = parse_ply_type(t1);
        if (!(ls >> prop.name)) throw FormatError("ply: malformed property line");
      }
      header.elements.back().properties.push_back(std::move(prop));
    } else if (kw == "end_header") {
      have_end = true;
      break;
    } else {
      throw FormatError("ply: unexpected header keyword '" + kw + "'");
    }
  }
  if (!have_format) throw FormatError("ply: missing format line");
  if (!have_end) throw FormatError("ply: missing end_header");
  header.body_offset = pos;
  return header;
}

double decode_scalar(const char* p, PlyType t) {
  switch (t) {
    case PlyType::Char: {
      std::int8_t v;
      std::memcpy(&v, p, 1);
      return v;
    }
    case PlyType::UChar: {
      std::uint8_t v;
      std::memcpy(&v, p, 1);
      return v;
    }
    case PlyType::Short: {
      std::int16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case PlyType::UShort: {
      std::uint16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case PlyType::Int: {
      std::int32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case PlyType::UInt: {
      std::uint32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case PlyType::Float: {
      float v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case PlyType::Double: {
      double v;
      std::memcpy(&v, p, 8);
      return v;
    }
  }
  return 0.0;
}

// Column indices of the vertex properties we keep; -1 = absent.
struct VertexLayout {
  int x = -1, y = -1, z = -1;
  int red = -1, green = -1, blue = -1;
  int nx = -1, ny = -1, nz = -1;

  void assign(const std::string& name, int column) {
    if (name == "x") x = column;
    else if (name == "y") y = column;
    else if (name == "z") z = column;
    else if (name == "red") red = column;
    else if (name == "green") green = column;
    else if (name == "blue") blue = column;
    else if (name == "nx") nx = column;
    else if (name == "ny") ny = column;
    else if (name == "nz") nz = column;
  }
};

class AsciiTokenizer {
 public:
  AsciiTokenizer(const std::string& data, std::size_t offset) : data_(data), pos_(offset) {}

  double next() {
    while (pos_ < data_.size() && std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    if (pos_ >= data_.size()) throw FormatError("ply: truncated ascii body");
    const char* begin = data_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) throw FormatError("ply: malformed ascii number");
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

 private:
  const std::string& data_;
  std::size_t pos_;
};

}  // namespace

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const PlyHeader header = parse_ply_header(data);
  PointCloud cloud;

  if (header.encoding == PlyEncoding::Ascii) {
    AsciiTokenizer tok(data, header.body_offset);
    for (const auto& el : header.elements) {
      const bool is_vertex = el.name == "vertex";
      VertexLayout layout;
      for (std::size_t c = 0; c < el.properties.size(); ++c)
        if (!el.properties[c].is_list) layout.assign(el.properties[c].name, static_cast<int>(c));
      if (is_vertex && (layout.x < 0 || layout.y < 0 || layout.z < 0))
        throw FormatError("ply: vertex element lacks x/y/z");
      const bool with_normals = is_vertex && layout.nx >= 0 && layout.ny >= 0 && layout.nz >= 0;
      if (is_vertex) cloud = PointCloud::with_size(el.count, with_normals);

      std::vector<double> row(el.properties.size(), 0.0);
      for (std::size_t r = 0; r < el.count; ++r) {
        for (std::size_t c = 0; c < el.properties.size(); ++c) {
          const auto& prop = el.properties[c];
          if (prop.is_list) {
            const auto n = static_cast<std::size_t>(tok.next());
            for (std::size_t t = 0; t < n; ++t) tok.next();
          } else {
            row[c] = tok.next();
          }
        }
        if (!is_vertex) continue;
        cloud.points[r] = Vec3f(static_cast<float>(row[layout.x]),
                                static_cast<float>(row[layout.y]),
                                static_cast<float>(row[layout.z]));
        if (layout.red >= 0 && layout.green >= 0 && layout.blue >= 0)
          cloud.colors[r] = Color3(static_cast<std::uint8_t>(row[layout.red]),
                                   static_cast<std::uint8_t>(row[layout.green]),
                                   static_cast<std::uint8_t>(row[layout.blue]));
        if (with_normals)
          cloud.normals[r] = Vec3f(static_cast<float>(row[layout.nx]),
                                   static_cast<float>(row[layout.ny]),
                                   static_cast<float>(row[layout.nz]));
      }
    }
  } else {
    const char* p = data.data() + header.body_offset;
    const char* end = data.data() + data.size();
    auto need = [&](std::size_t n) {
      if (p + n > end) throw FormatError("ply: truncated binary body");
    };
    for (const auto& el : header.elements) {
      const bool is_vertex = el.name == "vertex";
      VertexLayout layout;
      bool fixed_row = true;
      std::size_t row_size = 0;
      for (std::size_t c = 0; c < el.properties.size(); ++c) {
        if (el.properties[c].is_list)
          fixed_row = false;
        else
          row_size += ply_type_size(el.properties[c].type);
        layout.assign(el.properties[c].name, static_cast<int>(c));
      }
      if (is_vertex && (layout.x < 0 || layout.y < 0 || layout.z < 0))
        throw FormatError("ply: vertex element lacks x/y/z");
      const bool with_normals = is_vertex && layout.nx >= 0 && layout.ny >= 0 && layout.nz >= 0;
      if (is_vertex) cloud = PointCloud::with_size(el.count, with_normals);

      if (!is_vertex && fixed_row) {  // skip in one step
        need(row_size * el.count);
        p += row_size * el.count;
        continue;
      }
      std::vector<double> row(el.properties.size(), 0.0);
      for (std::size_t r = 0; r < el.count; ++r) {
        for (std::size_t c = 0; c < el.properties.size(); ++c) {
          const auto& prop = el.properties[c];
          if (prop.is_list) {
            need(ply_type_size(prop.count_type));
            const auto n = static_cast<std::size_t>(decode_scalar(p, prop.count_type));
            p += ply_type_size(prop.count_type);
            need(n * ply_type_size(prop.type));
            p += n * ply_type_size(prop.type);
          } else {
            need(ply_type_size(prop.type));
            row[c] = decode_scalar(p, prop.type);
            p += ply_type_size(prop.type);
          }
        }
        if (!is_vertex) continue;
        cloud.points[r] = Vec3f(static_cast<float>(row[layout.x]),
                                static_cast<float>(row[layout.y]),
                                static_cast<float>(row[layout.z]));
        if (layout.red >= 0 && layout.green >= 0 && layout.blue >= 0)
          cloud.colors[r] = Color3(static_cast<std::uint8_t>(row[layout.red]),
                                   static_cast<std::uint8_t>(row[layout.green]),
                                   static_cast<std::uint8_t>(row[layout.blue]));
        if (with_normals)
          cloud.normals[r] = Vec3f(static_cast<float>(row[layout.nx]),
                                   static_cast<float>(row[layout.ny]),
                                   static_cast<float>(row[layout.nz]));
      }
    }
  }
  cloud.check_consistent();
  return cloud;
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyEncoding encoding) {
  cloud.check_consistent();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");

  const bool with_normals = cloud.has_normals();
  out << "ply\n";
  out << (encoding == PlyEncoding::Ascii ? "format ascii 1.0\n"
                                         : "format binary_little_endian 1.0\n");
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (with_normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";

  if (encoding == PlyEncoding::Ascii) {
    char buf[256];
    for (std::size_t r = 0; r < cloud.size(); ++r) {
      const auto& p = cloud.points[r];
      int n = std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f", p.x(), p.y(), p.z());
      out.write(buf, n);
      if (with_normals) {
        const auto& nv = cloud.normals[r];
        n = std::snprintf(buf, sizeof(buf), " %.6f %.6f %.6f", nv.x(), nv.y(), nv.z());
        out.write(buf, n);
      }
      const auto& c = cloud.colors[r];
      n = std::snprintf(buf, sizeof(buf), " %d %d %d\n", int(c.x()), int(c.y()), int(c.z()));
      out.write(buf, n);
    }
  } else {
    // Assumes a little-endian host, as do the example readers.
    std::vector<char> row(with_normals ? 27 : 15);
    for (std::size_t r = 0; r < cloud.size(); ++r) {
      char* q = row.data();
      std::memcpy(q, cloud.points[r].data(), 12);
      q += 12;
      if (with_normals) {
        std::memcpy(q, cloud.normals[r].data(), 12);
        q += 12;
      }
      std::memcpy(q, cloud.colors[r].data(), 3);
      out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// --------------------------------------------------------------------------
// Segmentation / scene assembly
// --------------------------------------------------------------------------

Segmentation read_segmentation_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("segmentation '" + path.string() + "': " + e.what());
  }
  Segmentation seg;
  try {
    seg.floor_label = j.at("floor_label").get<std::string>();
    for (const auto& o : j.at("objects")) {
      SceneObject obj;
      obj.object_id = o.at("id").get<int>();
      obj.semantic_name = o.at("label").get<std::string>();
      for (const auto& idx : o.at("point_indices"))
        obj.point_indices.push_back(idx.get<std::size_t>());
      if (obj.point_indices.empty())
        throw FormatError("segmentation: object " + std::to_string(obj.object_id) + " is empty");
      seg.objects.push_back(std::move(obj));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("segmentation '" + path.string() + "': " + e.what());
  }
  return seg;
}

std::string segmentation_to_json(const Segmentation& seg) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& obj : seg.objects) {
    objects.push_back({{"id", obj.object_id},
                       {"label", obj.semantic_name},
                       {"point_indices", obj.point_indices}});
  }
  return nlohmann::json{{"objects", objects}, {"floor_label", seg.floor_label}}.dump();
}

const SceneObject& SceneData::object_by_id(int object_id) const {
  for (const auto& obj : objects)
    if (obj.object_id == object_id) return obj;
  throw NotFound("scene '" + scene_id + "': no object with id " + std::to_string(object_id));
}

SceneData assemble_scene(std::string scene_id, PointCloud cloud, const Segmentation& seg) {
  SceneData scene;
  scene.scene_id = std::move(scene_id);
  scene.cloud = std::move(cloud);
  scene.objects = seg.objects;

  // Deterministic semantic ids: distinct labels sorted lexicographically.
  std::set<std::string> names;
  for (const auto& obj : scene.objects) names.insert(obj.semantic_name);
  scene.semantic_names.assign(names.begin(), names.end());
  std::map<std::string, std::int32_t> name_to_id;
  for (std::size_t i = 0; i < scene.semantic_names.size(); ++i)
    name_to_id[scene.semantic_names[i]] = static_cast<std::int32_t>(i);

  for (const auto& obj : scene.objects) {
    const std::int32_t sem = name_to_id[obj.semantic_name];
    for (std::size_t idx : obj.point_indices) {
      if (idx >= scene.cloud.size())
        throw FormatError("segmentation: point index " + std::to_string(idx) + " out of range");
      scene.cloud.instance_labels[idx] = obj.object_id;
      scene.cloud.semantic_labels[idx] = sem;
    }
    if (obj.semantic_name == seg.floor_label)
      scene.floor_indices.insert(scene.floor_indices.end(), obj.point_indices.begin(),
                                 obj.point_indices.end());
  }
  std::sort(scene.floor_indices.begin(), scene.floor_indices.end());
  return scene;
}

SceneData load_scene(const std::filesystem::path& ply_path,
                     const std::filesystem::path& seg_path) {
  return assemble_scene(ply_path.stem().string(), read_ply(ply_path),
                        read_segmentation_json(seg_path));
}

BoundingBox3D object_bbox(const PointCloud& cloud, const SceneObject& obj) {
  if (obj.point_indices.empty()) throw Error("object_bbox: empty object");
  BoundingBox3D box;
  for (std::size_t idx : obj.point_indices) {
    if (idx >= cloud.size()) throw OutOfBounds("object_bbox: point index out of range");
    box.extend(cloud.points[idx].cast<double>());
  }
  return box;
}

PointCloud compose_scene(const PointCloud& scene, const AvatarModel& avatar,
                         const RigidTransform& transform, std::int32_t human_semantic_label) {
  const Vec3 rotated_up = transform.linear() * Vec3::UnitZ();
  if ((rotated_up - Vec3::UnitZ()).norm() > 1e-9)
    throw Error("compose_scene: transform must rotate about the vertical axis only");

  std::int32_t fresh_instance = 0;
  for (std::int32_t label : scene.instance_labels) fresh_instance = std::max(fresh_instance, label + 1);

  PointCloud out = scene;
  const bool keep_normals = scene.has_normals();
  const std::size_t n_avatar = avatar.cloud.size();
  out.points.reserve(scene.size() + n_avatar);

  const Eigen::Matrix3f rot = transform.linear().cast<float>();
  const Vec3f trans = transform.translation().cast<float>();
  for (std::size_t r = 0; r < n_avatar; ++r) {
    out.points.push_back(rot * avatar.cloud.points[r] + trans);
    out.colors.push_back(avatar.cloud.colors[r]);
    if (keep_normals)
      out.normals.push_back(avatar.cloud.has_normals() ? (rot * avatar.cloud.normals[r]).eval()
                                                       : Vec3f::UnitZ());
    out.instance_labels.push_back(fresh_instance);
    out.semantic_labels.push_back(human_semantic_label);
  }
  return out;
}

// --------------------------------------------------------------------------
// Avatars
// --------------------------------------------------------------------------

namespace {

Vec3 json_vec3(const nlohmann::json& a) {
  if (!a.is_array() || a.size() != 3) throw FormatError("avatar: keypoint is not [x,y,z]");
  return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

}  // namespace

AvatarModel read_avatar(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open '" + json_path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("avatar '" + json_path.string() + "': " + e.what());
  }
  AvatarModel av;
  try {
    av.avatar_id = j.at("avatar_id").get<std::string>();
    av.gender_tag = j.at("gender").get<std::string>();
    const std::string hand = j.at("gesturing_hand").get<std::string>();
    if (hand == "left")
      av.gesturing_hand = Hand::Left;
    else if (hand == "right")
      av.gesturing_hand = Hand::Right;
    else
      throw FormatError("avatar: gesturing_hand must be 'left' or 'right'");
    av.arm_elevation_deg = j.at("arm_elevation_deg").get<double>();
    const auto& kp = j.at("keypoints");
    av.left_shoulder = json_vec3(kp.at("left_shoulder"));
    av.right_shoulder = json_vec3(kp.at("right_shoulder"));
    av.left_fingertip = json_vec3(kp.at("left_fingertip"));
    av.right_fingertip = json_vec3(kp.at("right_fingertip"));
    av.foot = json_vec3(kp.at("foot"));
    const auto rel = j.at("ply").get<std::string>();
    av.cloud = read_ply(json_path.parent_path() / rel);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("avatar '" + json_path.string() + "': " + e.what());
  }
  av.check_valid();
  return av;
}

std::vector<AvatarModel> load_avatar_library(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  if (ec) throw IoError("cannot list '" + dir.string() + "': " + ec.message());
  std::sort(files.begin(), files.end());
  std::vector<AvatarModel> library;
  for (const auto& f : files) library.push_back(read_avatar(f));
  std::sort(library.begin(), library.end(),
            [](const AvatarModel& a, const AvatarModel& b) { return a.avatar_id < b.avatar_id; });
  if (library.empty()) throw EmptyLibrary("no avatar metadata found in '" + dir.string() + "'");
  return library;
}

}  // namespace gplace
