#pragma once

#include <filesystem>

#include "scenediff/geom.hpp"

namespace scenediff::ply {

enum class Format
{
  Ascii,
  BinaryLittleEndian,
};

// Readers accept ascii and binary_little_endian files with any scalar
// property types. Recognized vertex properties: x y z, nx ny nz,
// red green blue (uchar scaled by 1/255, float taken as-is). Faces are read
// from a "vertex_indices" or "vertex_index" list; polygons are fanned.

TriangleMesh read_mesh(const std::filesystem::path& path);
PointCloud read_cloud(const std::filesystem::path& path);

// Writers emit double coordinates and normals, uchar colors.
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh, Format format = Format::BinaryLittleEndian);
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud, Format format = Format::BinaryLittleEndian);

} // namespace scenediff::ply
