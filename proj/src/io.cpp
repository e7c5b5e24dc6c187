#include "scenediff/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace scenediff::io {
namespace {

std::vector<double> parse_numbers(const std::string& line, int line_no)
{
  std::vector<double> out;
  const char* p = line.data();
  const char* end = p + line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r'))
      ++p;
    if (p == end)
      break;
    double v = 0.0;
    const auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t' && *next != '\r'))
      throw ParseError("poses: malformed number in \"" + line + "\"", line_no);
    out.push_back(v);
    p = next;
  }
  return out;
}

bool is_blank(const std::string& line)
{
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

CameraPose make_pose(const std::vector<double>& v, int line_no)
{
  // v = fx fy cx cy w h, then [R | Tr] row by row.
  for (const double x : v)
    if (!std::isfinite(x))
      throw ParseError("poses: non-finite value", line_no);
  if (v[4] != std::floor(v[4]) || v[5] != std::floor(v[5]) || v[4] < 1 || v[5] < 1)
    throw ParseError("poses: width and height must be positive integers", line_no);
  CameraPose pose;
  pose.intrinsics = make_intrinsics(v[0], v[1], v[2], v[3]);
  pose.width = static_cast<int>(v[4]);
  pose.height = static_cast<int>(v[5]);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c)
      pose.rotation(r, c) = v[static_cast<std::size_t>(6 + 4 * r + c)];
    pose.translation(r) = v[static_cast<std::size_t>(6 + 4 * r + 3)];
  }
  if (!is_rotation(pose.rotation, 1e-6))
    throw InvalidRotation("poses: rotation of the block at line " + std::to_string(line_no) +
                          " is not orthonormal with determinant 1");
  return pose;
}

} // namespace

std::vector<CameraPose> parse_poses(std::istream& in)
{
  std::vector<CameraPose> out;
  std::vector<double> block;
  int block_line = 0;
  int rows = 0; // lines consumed in the current block
  std::string line;
  int line_no = 0;

  auto finish = [&](int at) {
    if (rows == 0)
      return;
    if (block.size() != 18)
      throw ParseError("poses: incomplete pose block", at);
    out.push_back(make_pose(block, block_line));
    block.clear();
    rows = 0;
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '#')
      continue;
    if (is_blank(line)) {
      finish(line_no - 1);
      continue;
    }
    const auto nums = parse_numbers(line, line_no);
    if (rows == 0) {
      block_line = line_no;
      if (nums.size() == 18) {
        block = nums;
        rows = 4;
        finish(line_no);
        continue;
      }
      if (nums.size() != 6)
        throw ParseError("poses: expected \"fx fy cx cy width height\"", line_no);
    } else if (rows >= 4) {
      throw ParseError("poses: missing blank line between blocks", line_no);
    } else if (nums.size() != 4) {
      throw ParseError("poses: expected a row of [R | Tr] with 4 values", line_no);
    }
    block.insert(block.end(), nums.begin(), nums.end());
    ++rows;
  }
  finish(line_no);
  return out;
}

std::vector<CameraPose> load_poses(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open pose file " + path.string());
  return parse_poses(in);
}

void write_poses(std::ostream& out, const std::vector<CameraPose>& poses)
{
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto& p = poses[i];
    if (i > 0)
      out << '\n';
    out << num(p.fx()) << ' ' << num(p.fy()) << ' ' << num(p.cx()) << ' ' << num(p.cy()) << ' ' << p.width << ' '
        << p.height << '\n';
    for (int r = 0; r < 3; ++r)
      out << num(p.rotation(r, 0)) << ' ' << num(p.rotation(r, 1)) << ' ' << num(p.rotation(r, 2)) << ' '
          << num(p.translation(r)) << '\n';
  }
}

void write_poses(const std::filesystem::path& path, const std::vector<CameraPose>& poses)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write pose file " + path.string());
  write_poses(out, poses);
  if (!out)
    throw IoError("failed writing " + path.string());
}

std::vector<RigidTransform> read_transforms(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    std::vector<RigidTransform> out;
    for (const auto& t : j.at("transforms")) {
      const auto& r = t.at("rotation");
      const auto& tr = t.at("translation");
      if (r.size() != 9 || tr.size() != 3)
        throw ParseError("transforms: expected 9 rotation and 3 translation values");
      RigidTransform x;
      for (int i = 0; i < 9; ++i)
        x.rotation(i / 3, i % 3) = r.at(static_cast<std::size_t>(i)).get<double>();
      for (int i = 0; i < 3; ++i)
        x.translation(i) = tr.at(static_cast<std::size_t>(i)).get<double>();
      if (!is_rotation(x.rotation, 1e-6))
        throw InvalidRotation("transforms: rotation is not orthonormal");
      out.push_back(x);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_transforms(const std::filesystem::path& path, const std::vector<RigidTransform>& transforms)
{
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : transforms) {
    nlohmann::json r = nlohmann::json::array();
    for (int i = 0; i < 9; ++i)
      r.push_back(t.rotation(i / 3, i % 3));
    arr.push_back({{"rotation", r}, {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}});
  }
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << nlohmann::json{{"transforms", arr}}.dump(2) << '\n';
}

} // namespace scenediff::io
