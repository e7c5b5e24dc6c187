#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "scenediff/geom.hpp"
#include "scenediff/render.hpp"

namespace scenediff::io {

/**
 * Pose file: one block per camera, blocks separated by blank lines.
 *
 *   fx fy cx cy width height
 *   r00 r01 r02 t0
 *   r10 r11 r12 t1
 *   r20 r21 r22 t2
 *
 * [R | Tr] maps world to camera coordinates. A block may also be given on a
 * single line of 18 numbers. Lines starting with '#' are ignored.
 * Throws ParseError (with the line number) and InvalidRotation.
 */
std::vector<CameraPose> parse_poses(std::istream& in);
std::vector<CameraPose> load_poses(const std::filesystem::path& path);
void write_poses(std::ostream& out, const std::vector<CameraPose>& poses);
void write_poses(const std::filesystem::path& path, const std::vector<CameraPose>& poses);

/// {"transforms": [{"rotation": [9 values, row-major], "translation": [3 values]}, ...]}
std::vector<RigidTransform> read_transforms(const std::filesystem::path& path);
void write_transforms(const std::filesystem::path& path, const std::vector<RigidTransform>& transforms);

} // namespace scenediff::io
