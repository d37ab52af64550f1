#include "spaceblender/mesh_io.hpp"

#include "spaceblender/encoding.hpp"
#include "spaceblender/image.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace spaceblender {
namespace {

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw std::runtime_error("PLY: truncated body");
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

template <typename T>
void put_bytes(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

}  // namespace

MeshFormat mesh_format_from_string(std::string_view name) {
  if (name == "ply") return MeshFormat::kPly;
  if (name == "obj") return MeshFormat::kObj;
  if (name == "gltf") return MeshFormat::kGltf;
  throw std::invalid_argument("unknown mesh format '" + std::string(name) + "' (expected ply, obj or gltf)");
}

const char* to_string(MeshFormat format) {
  switch (format) {
    case MeshFormat::kPly: return "ply";
    case MeshFormat::kObj: return "obj";
    case MeshFormat::kGltf: return "gltf";
  }
  return "ply";
}

std::string encode_ply(const TriangleMeshd& mesh) {
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n"
         << "element vertex " << mesh.vertex_count() << "\n"
         << "property double x\nproperty double y\nproperty double z\n"
         << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (mesh.has_labels()) header << "property int label\n";
  header << "element face " << mesh.face_count() << "\n"
         << "property list uchar int vertex_indices\nend_header\n";
  std::string out = header.str();
  out.reserve(out.size() + std::size_t(mesh.vertex_count()) * 31 + std::size_t(mesh.face_count()) * 13);
  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    for (int c = 0; c < 3; ++c) put<double>(out, mesh.vertices(i, c));
    for (int c = 0; c < 3; ++c) put<std::uint8_t>(out, to_byte(mesh.colors(i, c)));
    if (mesh.has_labels()) put<std::int32_t>(out, (*mesh.labels)(i));
  }
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    put<std::uint8_t>(out, 3);
    for (int c = 0; c < 3; ++c) put<std::int32_t>(out, mesh.faces(f, c));
  }
  return out;
}

TriangleMeshd decode_ply(std::string_view bytes) {
  const auto end = bytes.find("end_header\n");
  if (bytes.rfind("ply\n", 0) != 0 || end == std::string_view::npos) throw std::runtime_error("PLY: bad header");
  std::istringstream header{std::string(bytes.substr(0, end))};
  std::string line;
  long nv = -1, nf = -1;
  std::string element;
  std::vector<std::pair<std::string, std::string>> vprops;  // type, name
  bool binary_le = false;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (word == "element") {
      ls >> element;
      long n;
      ls >> n;
      (element == "vertex" ? nv : nf) = n;
    } else if (word == "property" && element == "vertex") {
      std::string type, name;
      ls >> type >> name;
      vprops.emplace_back(type, name);
    }
  }
  if (!binary_le) throw std::runtime_error("PLY: only binary_little_endian is supported");
  if (nv < 0 || nf < 0) throw std::runtime_error("PLY: missing vertex or face element");

  TriangleMeshd mesh;
  mesh.vertices.resize(nv, 3);
  mesh.colors = VertexColors::Constant(nv, 3, 1.f);
  bool has_label = false;
  for (const auto& p : vprops) has_label |= p.second == "label";
  if (has_label) mesh.labels = VertexLabels(nv);

  std::size_t pos = end + std::strlen("end_header\n");
  for (long i = 0; i < nv; ++i) {
    for (const auto& [type, name] : vprops) {
      double v;
      if (type == "double") v = take<double>(bytes, pos);
      else if (type == "float") v = take<float>(bytes, pos);
      else if (type == "uchar" || type == "uint8") v = take<std::uint8_t>(bytes, pos);
      else if (type == "int" || type == "int32") v = take<std::int32_t>(bytes, pos);
      else throw std::runtime_error("PLY: unsupported property type " + type);
      if (name == "x") mesh.vertices(i, 0) = v;
      else if (name == "y") mesh.vertices(i, 1) = v;
      else if (name == "z") mesh.vertices(i, 2) = v;
      else if (name == "red") mesh.colors(i, 0) = float(v / 255.0);
      else if (name == "green") mesh.colors(i, 1) = float(v / 255.0);
      else if (name == "blue") mesh.colors(i, 2) = float(v / 255.0);
      else if (name == "label") (*mesh.labels)(i) = static_cast<std::int32_t>(v);
    }
  }
  mesh.faces.resize(nf, 3);
  for (long f = 0; f < nf; ++f) {
    if (take<std::uint8_t>(bytes, pos) != 3) throw std::runtime_error("PLY: only triangles are supported");
    for (int c = 0; c < 3; ++c) mesh.faces(f, c) = take<std::int32_t>(bytes, pos);
  }
  if (const auto err = mesh.validation_error(); !err.empty()) throw std::runtime_error("PLY: " + err);
  return mesh;
}

std::string encode_obj(const TriangleMeshd& mesh) {
  std::string out = "# vertices " + std::to_string(mesh.vertex_count()) + ", faces " +
                    std::to_string(mesh.face_count()) + "\n";
  char buf[160];
  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g %.6g %.6g %.6g\n", mesh.vertices(i, 0), mesh.vertices(i, 1),
                  mesh.vertices(i, 2), double(mesh.colors(i, 0)), double(mesh.colors(i, 1)), double(mesh.colors(i, 2)));
    out += buf;
  }
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    std::snprintf(buf, sizeof(buf), "f %d %d %d\n", mesh.faces(f, 0) + 1, mesh.faces(f, 1) + 1, mesh.faces(f, 2) + 1);
    out += buf;
  }
  return out;
}

std::string encode_gltf(const TriangleMeshd& mesh) {
  const auto nv = static_cast<std::size_t>(mesh.vertex_count());
  const auto nf = static_cast<std::size_t>(mesh.face_count());
  std::vector<std::uint8_t> buffer;
  buffer.reserve(nv * 24 + nf * 12);
  Eigen::Vector3f lo = Eigen::Vector3f::Constant(std::numeric_limits<float>::max());
  Eigen::Vector3f hi = -lo;
  for (std::size_t i = 0; i < nv; ++i) {
    const Eigen::Vector3f p = mesh.vertices.row(Eigen::Index(i)).transpose().cast<float>();
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
    for (int c = 0; c < 3; ++c) put_bytes<float>(buffer, p(c));
  }
  const std::size_t color_offset = buffer.size();
  for (std::size_t i = 0; i < nv; ++i)
    for (int c = 0; c < 3; ++c) put_bytes<float>(buffer, std::clamp(mesh.colors(Eigen::Index(i), c), 0.f, 1.f));
  const std::size_t index_offset = buffer.size();
  for (std::size_t f = 0; f < nf; ++f)
    for (int c = 0; c < 3; ++c) put_bytes<std::uint32_t>(buffer, static_cast<std::uint32_t>(mesh.faces(Eigen::Index(f), c)));

  using nlohmann::json;
  json doc;
  doc["asset"] = {{"version", "2.0"}, {"generator", "spaceblender"}};
  doc["scene"] = 0;
  doc["scenes"] = json::array({{{"nodes", {0}}}});
  doc["nodes"] = json::array({{{"mesh", 0}}});
  json primitive = {{"attributes", {{"POSITION", 0}, {"COLOR_0", 1}}}, {"mode", 4}};
  if (nf > 0) primitive["indices"] = 2;
  doc["meshes"] = json::array({{{"primitives", json::array({primitive})}}});
  doc["buffers"] = json::array({{{"byteLength", buffer.size()},
                                 {"uri", "data:application/octet-stream;base64," + base64_encode(buffer)}}});
  json views = json::array();
  views.push_back({{"buffer", 0}, {"byteOffset", 0}, {"byteLength", color_offset}, {"target", 34962}});
  views.push_back({{"buffer", 0}, {"byteOffset", color_offset}, {"byteLength", index_offset - color_offset}, {"target", 34962}});
  views.push_back({{"buffer", 0}, {"byteOffset", index_offset}, {"byteLength", buffer.size() - index_offset}, {"target", 34963}});
  doc["bufferViews"] = views;
  json accessors = json::array();
  json position = {{"bufferView", 0}, {"componentType", 5126}, {"count", nv}, {"type", "VEC3"}};
  if (nv > 0) {
    position["min"] = {lo.x(), lo.y(), lo.z()};
    position["max"] = {hi.x(), hi.y(), hi.z()};
  }
  accessors.push_back(position);
  accessors.push_back({{"bufferView", 1}, {"componentType", 5126}, {"count", nv}, {"type", "VEC3"}});
  accessors.push_back({{"bufferView", 2}, {"componentType", 5125}, {"count", nf * 3}, {"type", "SCALAR"}});
  doc["accessors"] = accessors;
  return doc.dump();
}

void write_mesh(const std::filesystem::path& path, const TriangleMeshd& mesh, MeshFormat format) {
  std::string data;
  switch (format) {
    case MeshFormat::kPly: data = encode_ply(mesh); break;
    case MeshFormat::kObj: data = encode_obj(mesh); break;
    case MeshFormat::kGltf: data = encode_gltf(mesh); break;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

TriangleMeshd read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_ply(bytes);
}

}  // namespace spaceblender
