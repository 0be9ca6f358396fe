#include "mapfuse/ply_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mapfuse {
namespace {

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

PlyType parse_type(const std::string& s) {
  if (s == "char" || s == "int8") return PlyType::i8;
  if (s == "uchar" || s == "uint8") return PlyType::u8;
  if (s == "short" || s == "int16") return PlyType::i16;
  if (s == "ushort" || s == "uint16") return PlyType::u16;
  if (s == "int" || s == "int32") return PlyType::i32;
  if (s == "uint" || s == "uint32") return PlyType::u32;
  if (s == "float" || s == "float32") return PlyType::f32;
  if (s == "double" || s == "float64") return PlyType::f64;
  throw std::runtime_error("ply: unknown property type '" + s + "'");
}

size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::i8:
    case PlyType::u8:
      return 1;
    case PlyType::i16:
    case PlyType::u16:
      return 2;
    case PlyType::i32:
    case PlyType::u32:
    case PlyType::f32:
      return 4;
    case PlyType::f64:
      return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::f32;
  bool is_list = false;
  PlyType count_type = PlyType::u8;
};

struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct BinaryCursor {
  const char* p;
  const char* end;

  // Little-endian file on a little-endian host: memcpy suffices.
  double read(PlyType t) {
    const size_t n = type_size(t);
    if (p + n > end) throw std::runtime_error("ply: unexpected end of data");
    double v = 0;
    switch (t) {
      case PlyType::i8: {
        int8_t x;
        std::memcpy(&x, p, 1);
        v = x;
        break;
      }
      case PlyType::u8: {
        uint8_t x;
        std::memcpy(&x, p, 1);
        v = x;
        break;
      }
      case PlyType::i16: {
        int16_t x;
        std::memcpy(&x, p, 2);
        v = x;
        break;
      }
      case PlyType::u16: {
        uint16_t x;
        std::memcpy(&x, p, 2);
        v = x;
        break;
      }
      case PlyType::i32: {
        int32_t x;
        std::memcpy(&x, p, 4);
        v = x;
        break;
      }
      case PlyType::u32: {
        uint32_t x;
        std::memcpy(&x, p, 4);
        v = x;
        break;
      }
      case PlyType::f32: {
        float x;
        std::memcpy(&x, p, 4);
        v = x;
        break;
      }
      case PlyType::f64: {
        double x;
        std::memcpy(&x, p, 8);
        v = x;
        break;
      }
    }
    p += n;
    return v;
  }
};

struct AsciiCursor {
  std::istringstream in;
  explicit AsciiCursor(std::string s) : in(std::move(s)) {}

  double read(PlyType) {
    double v;
    if (!(in >> v)) throw std::runtime_error("ply: unexpected end of data");
    return v;
  }
};

bool is_label_name(const std::string& n) {
  return n == "semantic" || n == "label" || n == "class";
}

template <class Cursor>
PlyData read_body(Cursor& cur, const std::vector<PlyElement>& elements) {
  PlyData out;
  std::vector<uint8_t>& vertex_labels = out.vertex_labels;

  for (const auto& elem : elements) {
    const bool is_vertex = elem.name == "vertex";
    const bool is_face = elem.name == "face";

    if (is_vertex) {
      out.mesh.vertices.reserve(elem.count);
      for (const auto& p : elem.properties) {
        if (p.is_list) continue;
        if (is_label_name(p.name)) out.had_vertex_labels = true;
      }
    }

    for (size_t i = 0; i < elem.count; ++i) {
      Vec3 v = Vec3::Zero();
      std::vector<int> indices;
      double label = 0, conf = 0;
      bool have_conf = false, have_label = false;

      for (const auto& prop : elem.properties) {
        if (prop.is_list) {
          const size_t n = static_cast<size_t>(cur.read(prop.count_type));
          indices.clear();
          indices.reserve(n);
          for (size_t k = 0; k < n; ++k)
            indices.push_back(static_cast<int>(cur.read(prop.type)));
          if (is_face && prop.name != "vertex_indices" &&
              prop.name != "vertex_index")
            indices.clear();
        } else {
          const double val = cur.read(prop.type);
          if (is_vertex) {
            if (prop.name == "x")
              v.x() = val;
            else if (prop.name == "y")
              v.y() = val;
            else if (prop.name == "z")
              v.z() = val;
            else if (prop.name == "confidence") {
              conf = val;
              have_conf = true;
            } else if (is_label_name(prop.name)) {
              label = val;
              have_label = true;
            }
          } else if (is_face && is_label_name(prop.name)) {
            label = val;
            have_label = true;
          }
        }
      }

      if (is_vertex) {
        out.mesh.vertices.push_back(v);
        if (have_conf) out.vertex_confidence.push_back(float(conf));
        if (have_label) vertex_labels.push_back(uint8_t(label));
      } else if (is_face) {
        if (indices.size() != 3)
          throw std::runtime_error("ply: face " + std::to_string(i) +
                                   " has " + std::to_string(indices.size()) +
                                   " vertices; only triangles are supported");
        out.mesh.faces.push_back({indices[0], indices[1], indices[2]});
        if (have_label) out.mesh.face_labels.push_back(uint8_t(label));
      }
    }
  }

  // Per-vertex labels -> per-face majority; ties take the smallest id.
  if (out.mesh.face_labels.empty() && !vertex_labels.empty() &&
      !out.mesh.faces.empty()) {
    out.mesh.face_labels.reserve(out.mesh.faces.size());
    for (const auto& f : out.mesh.faces) {
      uint8_t l[3];
      for (int k = 0; k < 3; ++k) {
        const int idx = f[k];
        if (idx < 0 || size_t(idx) >= vertex_labels.size())
          throw std::runtime_error("ply: face vertex index out of range");
        l[k] = vertex_labels[idx];
      }
      uint8_t pick;
      if (l[0] == l[1] || l[0] == l[2])
        pick = l[0];
      else if (l[1] == l[2])
        pick = l[1];
      else
        pick = std::min({l[0], l[1], l[2]});
      out.mesh.face_labels.push_back(pick);
    }
  }
  if (out.mesh.face_labels.empty())
    out.mesh.face_labels.assign(out.mesh.faces.size(), 0);
  return out;
}

}  // namespace

PlyData load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const size_t eol = data.find('\n', pos);
    if (eol == std::string::npos)
      throw std::runtime_error("ply: truncated header in '" + path + "'");
    std::string line = data.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = eol + 1;
    return line;
  };

  if (next_line() != "ply")
    throw std::runtime_error("'" + path + "' is not a ply file");

  bool binary = false;
  std::vector<PlyElement> elements;
  for (;;) {
    std::istringstream ls(next_line());
    std::string tok;
    ls >> tok;
    if (tok == "end_header") break;
    if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian")
        binary = true;
      else if (fmt == "ascii")
        binary = false;
      else
        throw std::runtime_error("ply: unsupported format '" + fmt + "'");
    } else if (tok == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (tok == "property") {
      if (elements.empty())
        throw std::runtime_error("ply: property before element");
      PlyProperty p;
      std::string t;
      ls >> t;
      if (t == "list") {
        p.is_list = true;
        std::string ct, vt;
        ls >> ct >> vt >> p.name;
        p.count_type = parse_type(ct);
        p.type = parse_type(vt);
      } else {
        p.type = parse_type(t);
        ls >> p.name;
      }
      elements.back().properties.push_back(p);
    } else {
      throw std::runtime_error("ply: unknown header keyword '" + tok + "'");
    }
  }

  try {
    if (binary) {
      BinaryCursor cur{data.data() + pos, data.data() + data.size()};
      return read_body(cur, elements);
    }
    AsciiCursor cur(data.substr(pos));
    return read_body(cur, elements);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(e.what()) + " in '" + path + "'");
  }
}

TriangleMesh load_mesh_ply(const std::string& path, int class_count) {
  PlyData d = load_ply(path);
  if (d.mesh.faces.empty())
    throw std::runtime_error("'" + path + "' contains no faces");
  validate_mesh(d.mesh, class_count);
  return std::move(d.mesh);
}

void save_mesh_ply(const std::string& path, const TriangleMesh& mesh,
                   const std::vector<float>* vertex_confidence) {
  validate_mesh(mesh);
  const bool with_conf = vertex_confidence != nullptr;
  if (with_conf && vertex_confidence->size() != mesh.vertices.size())
    throw std::invalid_argument("confidence count does not match vertices");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");

  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (with_conf) out << "property float confidence\n";
  out << "element face " << mesh.faces.size() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "property uchar semantic\n";
  out << "end_header\n";

  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    float xyz[3] = {float(mesh.vertices[i].x()), float(mesh.vertices[i].y()),
                    float(mesh.vertices[i].z())};
    out.write(reinterpret_cast<const char*>(xyz), 12);
    if (with_conf) {
      const float c = (*vertex_confidence)[i];
      out.write(reinterpret_cast<const char*>(&c), 4);
    }
  }
  for (size_t i = 0; i < mesh.faces.size(); ++i) {
    const uint8_t n = 3;
    out.write(reinterpret_cast<const char*>(&n), 1);
    int32_t idx[3] = {mesh.faces[i][0], mesh.faces[i][1], mesh.faces[i][2]};
    out.write(reinterpret_cast<const char*>(idx), 12);
    const uint8_t lbl = mesh.face_labels[i];
    out.write(reinterpret_cast<const char*>(&lbl), 1);
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace mapfuse
