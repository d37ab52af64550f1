#pragma once

#include "spaceblender/core.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace spaceblender {

enum class MeshFormat { kPly, kObj, kGltf };

MeshFormat mesh_format_from_string(std::string_view name);
const char* to_string(MeshFormat format);

/// Binary little-endian PLY: double x/y/z, uchar red/green/blue, an int
/// `label` when the mesh has labels, and uchar-counted int index lists.
std::string encode_ply(const TriangleMeshd& mesh);
/// Reads the PLY subset written by encode_ply (float or double positions).
TriangleMeshd decode_ply(std::string_view bytes);

/// Wavefront OBJ with per-vertex colors appended to `v` lines.
std::string encode_obj(const TriangleMeshd& mesh);

/// glTF 2.0 JSON with one embedded base64 buffer (float positions and colors,
/// uint32 indices).
std::string encode_gltf(const TriangleMeshd& mesh);

void write_mesh(const std::filesystem::path& path, const TriangleMeshd& mesh, MeshFormat format);
TriangleMeshd read_ply(const std::filesystem::path& path);

}  // namespace spaceblender
