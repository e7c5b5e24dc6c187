#include "scenediff/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "scenediff/io.hpp"
#include "scenediff/ply.hpp"

namespace scenediff::synth {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kInsideTol = 1e-9;

Color3 clamp01(const Color3& c) { return c.cwiseMax(0.0).cwiseMin(1.0); }

// Gradient across the surface so that no two parts of an object look alike.
Color3 box_color(const Eigen::Vector3d& local, const Eigen::Vector3d& dims, const Color3& tint)
{
  const Eigen::Vector3d q(local.x() / dims.x() + 0.5, local.y() / dims.y() + 0.5, local.z() / dims.z());
  return clamp01(tint + 0.3 * (q - Eigen::Vector3d::Constant(0.5)));
}

Color3 room_color(const Eigen::Vector3d& p, const Eigen::Vector3d& room, const Color3& base)
{
  return clamp01(base + 0.15 * (p.cwiseQuotient(room) - Eigen::Vector3d::Constant(0.5)));
}

// Appends a gridded rectangle origin + s*eu + t*ev, s,t in [0,1], facing normal.
template <typename Fn>
void add_rect(TriangleMesh& mesh, const Eigen::Vector3d& origin, Eigen::Vector3d eu, Eigen::Vector3d ev,
              const Eigen::Vector3d& normal, double density, Fn&& color)
{
  if (eu.cross(ev).dot(normal) < 0.0)
    std::swap(eu, ev);
  const double step = 1.0 / std::sqrt(density);
  const int nu = std::max(1, static_cast<int>(std::ceil(eu.norm() / step - 1e-9)));
  const int nv = std::max(1, static_cast<int>(std::ceil(ev.norm() / step - 1e-9)));
  const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
  for (int j = 0; j <= nv; ++j)
    for (int i = 0; i <= nu; ++i) {
      const Eigen::Vector3d p = origin + eu * (static_cast<double>(i) / nu) + ev * (static_cast<double>(j) / nv);
      mesh.vertices.push_back(p);
      mesh.vertex_normals.push_back(normal);
      mesh.vertex_colors.push_back(color(p));
    }
  const auto row = static_cast<std::uint32_t>(nu + 1);
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nu; ++i) {
      const std::uint32_t v00 = base + static_cast<std::uint32_t>(j) * row + static_cast<std::uint32_t>(i);
      const std::uint32_t v10 = v00 + 1;
      const std::uint32_t v01 = v00 + row;
      const std::uint32_t v11 = v01 + 1;
      mesh.faces.push_back({v00, v10, v11});
      mesh.faces.push_back({v00, v11, v01});
    }
}

void append(TriangleMesh& dst, const TriangleMesh& src)
{
  const auto base = static_cast<std::uint32_t>(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
  dst.vertex_normals.insert(dst.vertex_normals.end(), src.vertex_normals.begin(), src.vertex_normals.end());
  dst.vertex_colors.insert(dst.vertex_colors.end(), src.vertex_colors.begin(), src.vertex_colors.end());
  for (const auto& f : src.faces)
    dst.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
}

TriangleMesh transformed(const TriangleMesh& mesh, const RigidTransform& t)
{
  TriangleMesh out = mesh;
  for (auto& v : out.vertices)
    v = t(v);
  for (auto& n : out.vertex_normals)
    n = t.rotation * n;
  return out;
}

std::array<Eigen::Vector3d, 8> corners(const Box& box)
{
  std::array<Eigen::Vector3d, 8> out;
  const Eigen::Vector3d h = box.dims / 2.0;
  for (int c = 0; c < 8; ++c) {
    const Eigen::Vector3d local((c & 1) ? h.x() : -h.x(), (c & 2) ? h.y() : -h.y(), (c & 4) ? box.dims.z() : 0.0);
    out[static_cast<std::size_t>(c)] = box.pose(local);
  }
  return out;
}

bool resting_on_floor(const Box& box)
{
  for (int c = 0; c < 4; ++c)
    if (std::abs(corners(box)[static_cast<std::size_t>(c)].z()) > kInsideTol)
      return false;
  return true;
}

// Box surface in world coordinates. The bottom is left out when it lies on the floor.
TriangleMesh box_mesh(const Box& box, double density)
{
  TriangleMesh local;
  const Eigen::Vector3d h = box.dims / 2.0;
  const Eigen::Vector3d center(0.0, 0.0, h.z());
  const bool skip_bottom = resting_on_floor(box);
  for (int a = 0; a < 3; ++a)
    for (const double s : {-1.0, 1.0}) {
      if (a == 2 && s < 0.0 && skip_bottom)
        continue;
      const int b = (a + 1) % 3;
      const int c = (a + 2) % 3;
      const Eigen::Vector3d ea = Eigen::Vector3d::Unit(a);
      const Eigen::Vector3d eb = Eigen::Vector3d::Unit(b);
      const Eigen::Vector3d ec = Eigen::Vector3d::Unit(c);
      const Eigen::Vector3d origin = center + s * h(a) * ea - h(b) * eb - h(c) * ec;
      add_rect(local, origin, 2.0 * h(b) * eb, 2.0 * h(c) * ec, s * ea, density,
               [&](const Eigen::Vector3d& p) { return box_color(p, box.dims, box.tint); });
    }
  return transformed(local, box.pose);
}

bool over_footprint(const Point3& p, const Box& box)
{
  const Eigen::Vector3d q = box.pose.rotation.transpose() * (p - box.pose.translation);
  return std::abs(q.x()) < box.dims.x() / 2.0 && std::abs(q.y()) < box.dims.y() / 2.0;
}

// Drops faces whose centroid passes the test, then the vertices left unused.
template <typename Pred>
TriangleMesh drop_faces(const TriangleMesh& mesh, Pred&& hidden)
{
  TriangleMesh out;
  std::vector<std::int64_t> remap(mesh.vertices.size(), -1);
  for (const auto& f : mesh.faces) {
    const Point3 c = (mesh.vertices[f[0]] + mesh.vertices[f[1]] + mesh.vertices[f[2]]) / 3.0;
    if (hidden(c))
      continue;
    std::array<std::uint32_t, 3> g{};
    for (int k = 0; k < 3; ++k) {
      const auto v = f[static_cast<std::size_t>(k)];
      if (remap[v] < 0) {
        remap[v] = static_cast<std::int64_t>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[v]);
        out.vertex_normals.push_back(mesh.vertex_normals[v]);
        out.vertex_colors.push_back(mesh.vertex_colors[v]);
      }
      g[static_cast<std::size_t>(k)] = static_cast<std::uint32_t>(remap[v]);
    }
    out.faces.push_back(g);
  }
  return out;
}

// Floor and four walls. The floor is left out under boxes standing on it,
// as a scanner never sees it there.
TriangleMesh room_mesh(const Eigen::Vector3d& room, double density, const std::vector<const Box*>& standing)
{
  const double w = room.x(), d = room.y(), hgt = room.z();
  const Color3 floor_base(0.45, 0.40, 0.35);
  const Color3 wall_base(0.75, 0.72, 0.65);
  auto floor_color = [&](const Eigen::Vector3d& p) { return room_color(p, room, floor_base); };
  auto wall_color = [&](const Eigen::Vector3d& p) { return room_color(p, room, wall_base); };
  const Eigen::Vector3d x = Eigen::Vector3d::UnitX(), y = Eigen::Vector3d::UnitY(), z = Eigen::Vector3d::UnitZ();

  TriangleMesh floor;
  add_rect(floor, Eigen::Vector3d::Zero(), w * x, d * y, z, density, floor_color);
  TriangleMesh mesh = drop_faces(floor, [&](const Point3& c) {
    return std::any_of(standing.begin(), standing.end(), [&](const Box* b) { return over_footprint(c, *b); });
  });
  add_rect(mesh, Eigen::Vector3d::Zero(), d * y, hgt * z, x, density, wall_color);
  add_rect(mesh, w * x, d * y, hgt * z, -x, density, wall_color);
  add_rect(mesh, Eigen::Vector3d::Zero(), w * x, hgt * z, y, density, wall_color);
  add_rect(mesh, d * y, w * x, hgt * z, -y, density, wall_color);
  return mesh;
}

bool inside_room(const Box& box, const Eigen::Vector3d& room)
{
  for (const auto& c : corners(box))
    if ((c.array() < -kInsideTol).any() || (c.array() > room.array() + kInsideTol).any())
      return false;
  return true;
}

Box moved(const Box& box, const RigidTransform& motion)
{
  Box out = box;
  out.pose = compose(motion, box.pose);
  return out;
}

const Edit* edit_of(const SceneSpec& spec, std::size_t object)
{
  for (const auto& e : spec.edits)
    if (e.object == object)
      return &e;
  return nullptr;
}

// Rotation about a vertical axis through `pivot`, followed by a translation.
RigidTransform turn_and_shift(const Eigen::Vector3d& pivot, double deg, const Eigen::Vector3d& shift)
{
  RigidTransform t;
  t.rotation = axis_angle(Eigen::Vector3d::UnitZ(), deg * kDeg);
  t.translation = pivot - t.rotation * pivot + shift;
  return t;
}

Box make_box(const Eigen::Vector3d& dims, double x, double y, double yaw_deg, const Color3& tint)
{
  Box b;
  b.dims = dims;
  b.pose.rotation = axis_angle(Eigen::Vector3d::UnitZ(), yaw_deg * kDeg);
  b.pose.translation = Eigen::Vector3d(x, y, 0.0);
  b.tint = tint;
  return b;
}

RigidTransform shift(const Eigen::Vector3d& d)
{
  RigidTransform t;
  t.translation = d;
  return t;
}

} // namespace

std::vector<Point3> GroundTruth::changed_points() const
{
  std::vector<Point3> out = changed_reference;
  out.insert(out.end(), changed_rescan.begin(), changed_rescan.end());
  return out;
}

void validate(const SceneSpec& spec, const GenerateOptions& options)
{
  if (!(spec.room.array() > 0.0).all())
    throw SpecViolation("synth: room extents must be positive");
  if (!(options.sample_density > 0.0))
    throw SpecViolation("synth: sample density must be positive");
  if (options.n_viewpoints < 1 || options.width < 1 || options.height < 1)
    throw SpecViolation("synth: need at least one viewpoint and a nonempty image");
  if (!(options.hfov_deg > 0.0 && options.hfov_deg < 180.0))
    throw SpecViolation("synth: horizontal field of view must lie in (0, 180) degrees");
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const Box& box = spec.objects[i];
    if (!(box.dims.array() > 0.0).all())
      throw SpecViolation("synth: box " + std::to_string(i) + " has a non-positive extent");
    if (!is_rotation(box.pose.rotation))
      throw SpecViolation("synth: box " + std::to_string(i) + " pose is not a rotation");
    if (!inside_room(box, spec.room))
      throw SpecViolation("synth: box " + std::to_string(i) + " is outside the room");
  }
  std::vector<bool> seen(spec.objects.size(), false);
  for (const auto& e : spec.edits) {
    if (e.object >= spec.objects.size())
      throw SpecViolation("synth: edit references missing object " + std::to_string(e.object));
    if (seen[e.object])
      throw SpecViolation("synth: object " + std::to_string(e.object) + " is edited twice");
    seen[e.object] = true;
    if (e.kind == EditKind::Move) {
      if (!is_rotation(e.motion.rotation))
        throw SpecViolation("synth: move of object " + std::to_string(e.object) + " is not rigid");
      if (!inside_room(moved(spec.objects[e.object], e.motion), spec.room))
        throw SpecViolation("synth: object " + std::to_string(e.object) + " is moved outside the room");
    }
  }
}

std::vector<CameraPose> ring_poses(const SceneSpec& spec, const GenerateOptions& options)
{
  const double fx = (options.width / 2.0) / std::tan(options.hfov_deg * kDeg / 2.0);
  const Eigen::Matrix3d k = make_intrinsics(fx, fx, options.width / 2.0, options.height / 2.0);
  const Eigen::Vector2d c = spec.room.head<2>() / 2.0;
  const double r = options.ring_fraction * spec.room.head<2>().minCoeff();
  const Eigen::Vector3d target = spec.room / 2.0;
  std::vector<CameraPose> poses;
  for (int i = 0; i < options.n_viewpoints; ++i) {
    const double a = 2.0 * std::numbers::pi * i / options.n_viewpoints;
    const Eigen::Vector3d eye(c.x() + r * std::cos(a), c.y() + r * std::sin(a), options.camera_height);
    poses.push_back(look_at(eye, target, k, options.width, options.height));
  }
  return poses;
}

std::vector<DetectedObject> gt_components(const std::vector<Point3>& changed)
{
  return connected_components(changed, kComponentCell, 1);
}

SyntheticScene generate(const SceneSpec& spec, const GenerateOptions& options)
{
  validate(spec, options);
  SyntheticScene out;

  // Boxes as they stand in each scan, for carving the floor.
  std::vector<Box> placed_s, placed_r;
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const Edit* edit = edit_of(spec, i);
    if (!edit || edit->kind != EditKind::Add)
      placed_s.push_back(spec.objects[i]);
    if (!edit)
      placed_r.push_back(spec.objects[i]);
    else if (edit->kind == EditKind::Move)
      placed_r.push_back(moved(spec.objects[i], edit->motion));
    else if (edit->kind == EditKind::Add)
      placed_r.push_back(spec.objects[i]);
  }
  auto standing = [](const std::vector<Box>& boxes) {
    std::vector<const Box*> out;
    for (const auto& b : boxes)
      if (resting_on_floor(b))
        out.push_back(&b);
    return out;
  };
  out.reference = room_mesh(spec.room, options.sample_density, standing(placed_s));
  out.rescan = room_mesh(spec.room, options.sample_density, standing(placed_r));

  RigidTransform misalign;
  if (options.misalign_rot_deg > 0.0 || options.misalign_trans_m > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Vector3d axis(normal(rng), normal(rng), normal(rng));
    Eigen::Vector3d dir(normal(rng), normal(rng), normal(rng));
    const Eigen::Vector3d pivot = spec.room / 2.0;
    misalign.rotation = axis_angle(axis, options.misalign_rot_deg * kDeg);
    misalign.translation = pivot - misalign.rotation * pivot + options.misalign_trans_m * dir.normalized();
  }

  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const Box& box = spec.objects[i];
    const Edit* edit = edit_of(spec, i);
    const TriangleMesh mesh = box_mesh(box, options.sample_density);
    if (!edit) {
      append(out.reference, mesh);
      append(out.rescan, mesh);
      continue;
    }
    EditedObject eo;
    eo.object = i;
    eo.kind = edit->kind;
    switch (edit->kind) {
    case EditKind::Move: {
      const TriangleMesh after = transformed(mesh, edit->motion);
      append(out.reference, mesh);
      append(out.rescan, after);
      eo.reference_points = mesh.vertices;
      eo.rescan_points = after.vertices;
      break;
    }
    case EditKind::Add:
      append(out.rescan, mesh);
      eo.rescan_points = mesh.vertices;
      break;
    case EditKind::Remove:
      append(out.reference, mesh);
      eo.reference_points = mesh.vertices;
      break;
    }
    out.truth.edited.push_back(std::move(eo));
  }

  if (options.misalign_rot_deg > 0.0 || options.misalign_trans_m > 0.0) {
    out.rescan = transformed(out.rescan, misalign);
    for (auto& eo : out.truth.edited)
      for (auto& p : eo.rescan_points)
        p = misalign(p);
  }

  // Ground truth follows edit order.
  std::vector<EditedObject> ordered;
  for (const auto& e : spec.edits)
    for (auto& eo : out.truth.edited)
      if (eo.object == e.object)
        ordered.push_back(eo);
  out.truth.edited = std::move(ordered);
  for (const auto& e : spec.edits)
    if (e.kind == EditKind::Move)
      out.truth.transforms.push_back(e.motion);
  for (const auto& eo : out.truth.edited) {
    out.truth.changed_reference.insert(out.truth.changed_reference.end(), eo.reference_points.begin(),
                                       eo.reference_points.end());
    out.truth.changed_rescan.insert(out.truth.changed_rescan.end(), eo.rescan_points.begin(), eo.rescan_points.end());
  }
  out.truth.components = gt_components(out.truth.changed_points());
  out.poses = ring_poses(spec, options);
  return out;
}

SceneSpec preset_static()
{
  SceneSpec s;
  s.seed = 1;
  s.objects.push_back(make_box({0.6, 0.6, 0.6}, 1.6, 1.5, 0.0, {0.75, 0.30, 0.25}));
  s.objects.push_back(make_box({0.8, 0.4, 0.5}, 2.5, 2.5, 20.0, {0.25, 0.35, 0.75}));
  return s;
}

SceneSpec preset_single_move()
{
  SceneSpec s;
  s.seed = 2;
  s.objects.push_back(make_box({0.6, 0.6, 0.6}, 1.55, 1.9, 0.0, {0.75, 0.30, 0.25}));
  s.objects.push_back(make_box({0.5, 0.8, 0.4}, 2.5, 2.9, 15.0, {0.25, 0.35, 0.75}));
  s.edits.push_back({0, EditKind::Move, shift({0.5, 0.0, 0.0})});
  return s;
}

SceneSpec preset_multi()
{
  SceneSpec s;
  s.seed = 3;
  s.objects.push_back(make_box({0.7, 0.5, 0.5}, 1.4, 1.5, 0.0, {0.80, 0.35, 0.20}));
  s.objects.push_back(make_box({0.4, 0.4, 0.6}, 2.7, 2.6, 0.0, {0.20, 0.70, 0.30}));
  s.objects.push_back(make_box({0.9, 0.35, 0.3}, 1.5, 2.8, 10.0, {0.30, 0.30, 0.80}));
  s.objects.push_back(make_box({0.5, 0.5, 0.5}, 2.8, 1.2, 0.0, {0.70, 0.70, 0.20}));
  s.edits.push_back({0, EditKind::Move, turn_and_shift({1.4, 1.5, 0.0}, 30.0, {0.35, 0.15, 0.0})});
  s.edits.push_back({1, EditKind::Add, {}});
  s.edits.push_back({2, EditKind::Remove, {}});
  return s;
}

SceneSpec preset_slide()
{
  SceneSpec s;
  s.seed = 4;
  s.objects.push_back(make_box({1.6, 0.4, 0.4}, 1.85, 2.0, 0.0, {0.70, 0.40, 0.25}));
  s.edits.push_back({0, EditKind::Move, shift({0.3, 0.0, 0.0})});
  return s;
}

SceneSpec preset_two_moves()
{
  SceneSpec s;
  s.seed = 5;
  s.objects.push_back(make_box({0.6, 0.6, 0.6}, 1.4, 1.5, 0.0, {0.75, 0.30, 0.25}));
  s.objects.push_back(make_box({0.5, 0.7, 0.45}, 2.5, 2.6, 0.0, {0.25, 0.40, 0.75}));
  s.edits.push_back({0, EditKind::Move, shift({0.45, 0.0, 0.0})});
  s.edits.push_back({1, EditKind::Move, turn_and_shift({2.5, 2.6, 0.0}, 25.0, {-0.2, 0.3, 0.0})});
  return s;
}

void write_layout(const std::filesystem::path& dir, const SyntheticScene& scene)
{
  std::filesystem::create_directories(dir / "gt");
  ply::write_mesh(dir / "reference.ply", scene.reference);
  ply::write_mesh(dir / "rescan.ply", scene.rescan);
  io::write_poses(dir / "poses.txt", scene.poses);
  PointCloud changed;
  changed.points = scene.truth.changed_points();
  ply::write_cloud(dir / "gt" / "gt_changed.ply", changed);
  io::write_transforms(dir / "gt" / "gt_transforms.json", scene.truth.transforms);
}

} // namespace scenediff::synth
