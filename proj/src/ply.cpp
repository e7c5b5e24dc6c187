#include "scenediff/ply.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace scenediff::ply {
namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

enum class Type
{
  Int8,
  UInt8,
  Int16,
  UInt16,
  Int32,
  UInt32,
  Float32,
  Float64,
};

std::optional<Type> parse_type(const std::string& s)
{
  if (s == "char" || s == "int8")
    return Type::Int8;
  if (s == "uchar" || s == "uint8")
    return Type::UInt8;
  if (s == "short" || s == "int16")
    return Type::Int16;
  if (s == "ushort" || s == "uint16")
    return Type::UInt16;
  if (s == "int" || s == "int32")
    return Type::Int32;
  if (s == "uint" || s == "uint32")
    return Type::UInt32;
  if (s == "float" || s == "float32")
    return Type::Float32;
  if (s == "double" || s == "float64")
    return Type::Float64;
  return std::nullopt;
}

struct Property
{
  std::string name;
  Type type = Type::Float32;
  bool is_list = false;
  Type count_type = Type::UInt8;
};

struct Element
{
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header
{
  Format format = Format::Ascii;
  std::vector<Element> elements;
};

template <typename T>
T read_pod(std::istream& in)
{
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in)
    throw ParseError("ply: unexpected end of binary data");
  return v;
}

double read_binary_scalar(std::istream& in, Type t)
{
  switch (t) {
  case Type::Int8:
    return read_pod<std::int8_t>(in);
  case Type::UInt8:
    return read_pod<std::uint8_t>(in);
  case Type::Int16:
    return read_pod<std::int16_t>(in);
  case Type::UInt16:
    return read_pod<std::uint16_t>(in);
  case Type::Int32:
    return read_pod<std::int32_t>(in);
  case Type::UInt32:
    return read_pod<std::uint32_t>(in);
  case Type::Float32:
    return read_pod<float>(in);
  case Type::Float64:
    return read_pod<double>(in);
  }
  return 0.0;
}

Header read_header(std::istream& in)
{
  std::string line;
  int line_no = 0;
  auto next = [&]() {
    if (!std::getline(in, line))
      throw ParseError("ply: truncated header", line_no);
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
  };

  next();
  if (line != "ply")
    throw ParseError("ply: missing magic", line_no);

  Header h;
  bool have_format = false;
  for (;;) {
    next();
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw == "end_header")
      break;
    if (kw.empty() || kw == "comment" || kw == "obj_info")
      continue;
    if (kw == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "ascii")
        h.format = Format::Ascii;
      else if (fmt == "binary_little_endian")
        h.format = Format::BinaryLittleEndian;
      else
        throw ParseError("ply: unsupported format " + fmt, line_no);
      have_format = true;
    } else if (kw == "element") {
      Element e;
      ss >> e.name >> e.count;
      if (!ss)
        throw ParseError("ply: malformed element line", line_no);
      h.elements.push_back(std::move(e));
    } else if (kw == "property") {
      if (h.elements.empty())
        throw ParseError("ply: property before element", line_no);
      Property p;
      std::string t;
      ss >> t;
      if (t == "list") {
        std::string ct, it;
        ss >> ct >> it >> p.name;
        auto c = parse_type(ct);
        auto i = parse_type(it);
        if (!c || !i)
          throw ParseError("ply: unknown list type", line_no);
        p.is_list = true;
        p.count_type = *c;
        p.type = *i;
      } else {
        auto pt = parse_type(t);
        if (!pt)
          throw ParseError("ply: unknown property type " + t, line_no);
        p.type = *pt;
        ss >> p.name;
      }
      if (p.name.empty())
        throw ParseError("ply: property without a name", line_no);
      h.elements.back().properties.push_back(std::move(p));
    } else {
      throw ParseError("ply: unknown header keyword " + kw, line_no);
    }
  }
  if (!have_format)
    throw ParseError("ply: missing format line");
  return h;
}

struct RawData
{
  // Per element name: rows of scalar values, lists flattened into `lists`.
  std::vector<std::vector<double>> vertex_rows;
  std::vector<std::vector<std::uint32_t>> faces;
  const Element* vertex = nullptr;
};

RawData read_body(std::istream& in, const Header& h)
{
  RawData raw;
  for (const auto& e : h.elements) {
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    if (is_vertex)
      raw.vertex = &e;
    std::string line;
    for (std::size_t r = 0; r < e.count; ++r) {
      std::vector<double> row;
      std::istringstream ss;
      if (h.format == Format::Ascii) {
        do {
          if (!std::getline(in, line))
            throw ParseError("ply: unexpected end of ascii data in element " + e.name);
        } while (line.find_first_not_of(" \t\r") == std::string::npos);
        ss.str(line);
      }
      auto scalar = [&](Type t) -> double {
        if (h.format == Format::Ascii) {
          double v = 0.0;
          if (!(ss >> v))
            throw ParseError("ply: malformed ascii value in element " + e.name);
          return v;
        }
        return read_binary_scalar(in, t);
      };
      for (const auto& p : e.properties) {
        if (p.is_list) {
          const auto n = static_cast<std::size_t>(scalar(p.count_type));
          std::vector<std::uint32_t> idx(n);
          for (std::size_t k = 0; k < n; ++k)
            idx[k] = static_cast<std::uint32_t>(scalar(p.type));
          if (is_face && (p.name == "vertex_indices" || p.name == "vertex_index"))
            raw.faces.push_back(std::move(idx));
          row.push_back(0.0);
        } else {
          row.push_back(scalar(p.type));
        }
      }
      if (is_vertex)
        raw.vertex_rows.push_back(std::move(row));
    }
  }
  return raw;
}

int find_property(const Element& e, const char* name)
{
  for (std::size_t i = 0; i < e.properties.size(); ++i)
    if (e.properties[i].name == name && !e.properties[i].is_list)
      return static_cast<int>(i);
  return -1;
}

struct Loaded
{
  std::vector<Point3> points;
  std::vector<Eigen::Vector3d> normals;
  std::vector<Color3> colors;
  std::vector<std::array<std::uint32_t, 3>> faces;
};

Loaded load(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  const Header h = read_header(in);
  const RawData raw = read_body(in, h);
  if (!raw.vertex)
    throw ParseError("ply: no vertex element in " + path.string());

  const Element& v = *raw.vertex;
  const int ix = find_property(v, "x"), iy = find_property(v, "y"), iz = find_property(v, "z");
  if (ix < 0 || iy < 0 || iz < 0)
    throw ParseError("ply: vertex element lacks x/y/z in " + path.string());
  const int inx = find_property(v, "nx"), iny = find_property(v, "ny"), inz = find_property(v, "nz");
  const int ir = find_property(v, "red"), ig = find_property(v, "green"), ib = find_property(v, "blue");
  const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;
  const bool has_colors = ir >= 0 && ig >= 0 && ib >= 0;
  const double color_scale =
      has_colors && v.properties[static_cast<std::size_t>(ir)].type == Type::UInt8 ? 1.0 / 255.0 : 1.0;

  Loaded out;
  out.points.reserve(raw.vertex_rows.size());
  for (const auto& row : raw.vertex_rows) {
    out.points.emplace_back(row[ix], row[iy], row[iz]);
    if (has_normals)
      out.normals.emplace_back(row[inx], row[iny], row[inz]);
    if (has_colors)
      out.colors.emplace_back(row[ir] * color_scale, row[ig] * color_scale, row[ib] * color_scale);
  }
  for (const auto& poly : raw.faces)
    for (std::size_t k = 2; k < poly.size(); ++k)
      out.faces.push_back({poly[0], poly[k - 1], poly[k]});
  return out;
}

std::uint8_t to_byte(double c)
{
  const double v = std::clamp(c, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::lround(v));
}

template <typename T>
void write_pod(std::ostream& out, T v)
{
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void write_impl(const std::filesystem::path& path, std::span<const Point3> points, std::span<const Eigen::Vector3d> normals,
                std::span<const Color3> colors, std::span<const std::array<std::uint32_t, 3>> faces, bool with_faces,
                Format format)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());

  const bool has_normals = !normals.empty();
  const bool has_colors = !colors.empty();
  out << "ply\n"
      << "format " << (format == Format::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
      << "element vertex " << points.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (has_normals)
    out << "property double nx\nproperty double ny\nproperty double nz\n";
  if (has_colors)
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (with_faces)
    out << "element face " << faces.size() << "\nproperty list uchar uint vertex_indices\n";
  out << "end_header\n";

  if (format == Format::Ascii) {
    out.precision(17);
    for (std::size_t i = 0; i < points.size(); ++i) {
      out << points[i].x() << ' ' << points[i].y() << ' ' << points[i].z();
      if (has_normals)
        out << ' ' << normals[i].x() << ' ' << normals[i].y() << ' ' << normals[i].z();
      if (has_colors)
        out << ' ' << int(to_byte(colors[i].x())) << ' ' << int(to_byte(colors[i].y())) << ' '
            << int(to_byte(colors[i].z()));
      out << '\n';
    }
    if (with_faces)
      for (const auto& f : faces)
        out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  } else {
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (int k = 0; k < 3; ++k)
        write_pod(out, points[i](k));
      if (has_normals)
        for (int k = 0; k < 3; ++k)
          write_pod(out, normals[i](k));
      if (has_colors)
        for (int k = 0; k < 3; ++k)
          write_pod(out, to_byte(colors[i](k)));
    }
    if (with_faces)
      for (const auto& f : faces) {
        write_pod(out, std::uint8_t{3});
        for (const auto idx : f)
          write_pod(out, idx);
      }
  }
  if (!out)
    throw IoError("write failed for " + path.string());
}

} // namespace

TriangleMesh read_mesh(const std::filesystem::path& path)
{
  Loaded l = load(path);
  TriangleMesh mesh;
  mesh.vertices = std::move(l.points);
  mesh.vertex_normals = std::move(l.normals);
  mesh.vertex_colors = std::move(l.colors);
  mesh.faces = std::move(l.faces);
  try {
    validate(mesh);
  } catch (const SpecViolation& e) {
    throw ParseError(std::string("ply: ") + e.what());
  }
  return mesh;
}

PointCloud read_cloud(const std::filesystem::path& path)
{
  Loaded l = load(path);
  PointCloud cloud;
  cloud.points = std::move(l.points);
  cloud.normals = std::move(l.normals);
  cloud.colors = std::move(l.colors);
  return cloud;
}

void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh, Format format)
{
  validate(mesh);
  write_impl(path, mesh.vertices, mesh.has_normals() ? std::span<const Eigen::Vector3d>(mesh.vertex_normals) : std::span<const Eigen::Vector3d>{},
             mesh.has_colors() ? std::span<const Color3>(mesh.vertex_colors) : std::span<const Color3>{}, mesh.faces, true,
             format);
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud, Format format)
{
  write_impl(path, cloud.points, cloud.has_normals() ? std::span<const Eigen::Vector3d>(cloud.normals) : std::span<const Eigen::Vector3d>{},
             cloud.has_colors() ? std::span<const Color3>(cloud.colors) : std::span<const Color3>{}, {}, false, format);
}

} // namespace scenediff::ply
