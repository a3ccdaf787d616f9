#include "panrec/mesh_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "binary_io.hpp"
#include "panrec/error.hpp"

namespace panrec {

namespace {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType parse_ply_type(const std::string& name) {
  static const std::map<std::string, PlyType> kTypes = {
      {"char", PlyType::Int8},     {"int8", PlyType::Int8},      {"uchar", PlyType::UInt8},
      {"uint8", PlyType::UInt8},   {"short", PlyType::Int16},    {"int16", PlyType::Int16},
      {"ushort", PlyType::UInt16}, {"uint16", PlyType::UInt16},  {"int", PlyType::Int32},
      {"int32", PlyType::Int32},   {"uint", PlyType::UInt32},    {"uint32", PlyType::UInt32},
      {"float", PlyType::Float32}, {"float32", PlyType::Float32}, {"double", PlyType::Float64},
      {"float64", PlyType::Float64}};
  auto it = kTypes.find(name);
  if (it == kTypes.end()) throw IoError("unsupported PLY type '" + name + "'");
  return it->second;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

double read_binary_value(std::istream& in, PlyType type) {
  using detail::read_pod;
  switch (type) {
    case PlyType::Int8: return read_pod<std::int8_t>(in, "PLY value");
    case PlyType::UInt8: return read_pod<std::uint8_t>(in, "PLY value");
    case PlyType::Int16: return read_pod<std::int16_t>(in, "PLY value");
    case PlyType::UInt16: return read_pod<std::uint16_t>(in, "PLY value");
    case PlyType::Int32: return read_pod<std::int32_t>(in, "PLY value");
    case PlyType::UInt32: return read_pod<std::uint32_t>(in, "PLY value");
    case PlyType::Float32: return read_pod<float>(in, "PLY value");
    case PlyType::Float64: return read_pod<double>(in, "PLY value");
  }
  return 0.0;
}

class PlyValueSource {
 public:
  PlyValueSource(std::istream& in, bool binary) : in_(in), binary_(binary) {}

  double next(PlyType type) {
    if (binary_) return read_binary_value(in_, type);
    double v = 0.0;
    if (!(in_ >> v)) throw IoError("truncated ascii PLY body");
    return v;
  }

 private:
  std::istream& in_;
  bool binary_;
};

void add_polygon(TriangleMesh& mesh, const std::vector<std::uint32_t>& poly,
                 std::optional<PanopticLabel> label) {
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    mesh.triangles.push_back({poly[0], poly[i], poly[i + 1]});
    if (label) mesh.labels.push_back(*label);
  }
}

}  // namespace

void write_ply(const std::string& path, const TriangleMesh& mesh, PlyEncoding encoding) {
  mesh.validate();
  auto out = detail::open_output(path);
  const bool labeled = mesh.has_labels();
  out << "ply\n"
      << (encoding == PlyEncoding::Ascii ? "format ascii 1.0\n"
                                         : "format binary_little_endian 1.0\n")
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar int vertex_indices\n";
  if (labeled) out << "property int category\nproperty int instance\n";
  out << "end_header\n";

  if (encoding == PlyEncoding::Ascii) {
    out.precision(17);
    for (const Vec3& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      const Triangle& tri = mesh.triangles[t];
      out << "3 " << tri[0] << ' ' << tri[1] << ' ' << tri[2];
      if (labeled) out << ' ' << mesh.labels[t].semantic << ' ' << mesh.labels[t].instance;
      out << '\n';
    }
  } else {
    using detail::write_pod;
    for (const Vec3& v : mesh.vertices) {
      write_pod(out, v.x());
      write_pod(out, v.y());
      write_pod(out, v.z());
    }
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      write_pod(out, std::uint8_t{3});
      for (auto idx : mesh.triangles[t]) write_pod(out, static_cast<std::int32_t>(idx));
      if (labeled) {
        write_pod(out, static_cast<std::int32_t>(mesh.labels[t].semantic));
        write_pod(out, static_cast<std::int32_t>(mesh.labels[t].instance));
      }
    }
  }
  detail::finish_output(out, path);
}

TriangleMesh read_ply(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw IoError(path + ": not a PLY file");

  bool binary = false;
  std::vector<PlyElement> elements;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        throw IoError(path + ": unsupported PLY format " + fmt);
      }
    } else if (keyword == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (keyword == "property") {
      if (elements.empty()) throw IoError(path + ": property before element");
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> p.name;
        p.is_list = true;
        p.count_type = parse_ply_type(count_type);
        p.type = parse_ply_type(item_type);
      } else {
        p.type = parse_ply_type(type);
        ls >> p.name;
      }
      elements.back().properties.push_back(p);
    } else if (keyword == "end_header") {
      break;
    }
  }
  if (!in) throw IoError(path + ": missing end_header");

  TriangleMesh mesh;
  bool saw_labels = false;
  PlyValueSource source(in, binary);
  for (const PlyElement& e : elements) {
    for (std::size_t n = 0; n < e.count; ++n) {
      Vec3 pos = Vec3::Zero();
      std::vector<std::uint32_t> poly;
      PanopticLabel label;
      bool has_label = false;
      for (const PlyProperty& p : e.properties) {
        if (p.is_list) {
          const auto count = static_cast<std::size_t>(source.next(p.count_type));
          std::vector<std::uint32_t> items(count);
          for (auto& item : items) item = static_cast<std::uint32_t>(source.next(p.type));
          if (p.name == "vertex_indices" || p.name == "vertex_index") poly = std::move(items);
          continue;
        }
        const double value = source.next(p.type);
        if (e.name == "vertex") {
          if (p.name == "x") pos.x() = value;
          if (p.name == "y") pos.y() = value;
          if (p.name == "z") pos.z() = value;
        } else if (e.name == "face") {
          if (p.name == "category" || p.name == "semantic") {
            label.semantic = static_cast<CategoryId>(value);
            has_label = true;
          } else if (p.name == "instance") {
            label.instance = static_cast<InstanceId>(value);
            has_label = true;
          }
        }
      }
      if (e.name == "vertex") {
        mesh.vertices.push_back(pos);
      } else if (e.name == "face") {
        saw_labels = saw_labels || has_label;
        add_polygon(mesh, poly, has_label ? std::optional(label) : std::nullopt);
      }
    }
  }
  if (saw_labels && mesh.labels.size() != mesh.triangles.size()) {
    throw IoError(path + ": only some faces carry labels");
  }
  try {
    mesh.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(path + ": " + e.what());
  }
  return mesh;
}

void write_obj(const std::string& path, const TriangleMesh& mesh) {
  mesh.validate();
  auto out = detail::open_output(path, false);
  out.precision(17);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  std::optional<PanopticLabel> current;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (mesh.has_labels() && (!current || *current != mesh.labels[t])) {
      current = mesh.labels[t];
      out << "usemtl panrec_" << current->semantic << '_' << current->instance << '\n';
    }
    const Triangle& tri = mesh.triangles[t];
    out << "f " << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1 << '\n';
  }
  detail::finish_output(out, path);
}

TriangleMesh read_obj(const std::string& path) {
  auto in = detail::open_input(path, false);
  TriangleMesh mesh;
  std::optional<PanopticLabel> label;
  bool any_label = false;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) throw IoError(path + ": malformed vertex");
      mesh.vertices.push_back(v);
    } else if (keyword == "usemtl") {
      std::string name;
      ls >> name;
      unsigned semantic = 0, instance = 0;
      if (std::sscanf(name.c_str(), "panrec_%u_%u", &semantic, &instance) == 2) {
        label = PanopticLabel{semantic, instance};
        any_label = true;
      } else {
        label.reset();
      }
    } else if (keyword == "f") {
      std::vector<std::uint32_t> poly;
      std::string token;
      while (ls >> token) {
        const long idx = std::stol(token.substr(0, token.find('/')));
        const long n = static_cast<long>(mesh.vertices.size());
        const long resolved = idx < 0 ? n + idx : idx - 1;
        if (resolved < 0 || resolved >= n) throw IoError(path + ": face index out of range");
        poly.push_back(static_cast<std::uint32_t>(resolved));
      }
      add_polygon(mesh, poly, label ? label : (any_label ? std::optional(PanopticLabel{}) : std::nullopt));
    }
  }
  if (any_label && mesh.labels.size() != mesh.triangles.size()) {
    throw IoError(path + ": faces before the first label group");
  }
  return mesh;
}

TriangleMesh read_mesh(const std::string& path) {
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".ply") return read_ply(path);
  if (ext == ".obj") return read_obj(path);
  throw IoError(path + ": unknown mesh extension");
}

void write_mesh(const std::string& path, const TriangleMesh& mesh) {
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".obj") {
    write_obj(path, mesh);
  } else {
    write_ply(path, mesh);
  }
}

}  // namespace panrec
