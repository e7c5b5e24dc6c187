#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "scenediff/discover.hpp"
#include "scenediff/geom.hpp"
#include "scenediff/render.hpp"

namespace scenediff::synth {

/// Axis-aligned box in its own frame: [-dx/2, dx/2] x [-dy/2, dy/2] x [0, dz].
/// pose maps that frame to the world, so its translation is the bottom center.
struct Box
{
  Eigen::Vector3d dims = Eigen::Vector3d::Constant(0.5);
  RigidTransform pose;
  Color3 tint = Color3(0.7, 0.3, 0.3);
};

enum class EditKind
{
  Move,
  Add,    // the object exists only in the rescan
  Remove, // the object exists only in the reference
};

struct Edit
{
  std::size_t object = 0;
  EditKind kind = EditKind::Move;
  RigidTransform motion; // world-frame motion, Move only
};

/// Room [0, W] x [0, D] x [0, H] with a floor and four walls, plus boxes.
struct SceneSpec
{
  std::uint64_t seed = 0;
  Eigen::Vector3d room = Eigen::Vector3d(4.0, 4.0, 2.5);
  std::vector<Box> objects;
  std::vector<Edit> edits;
};

struct GenerateOptions
{
  double sample_density = 900.0; // vertices per square meter
  int n_viewpoints = 12;
  int width = 320;
  int height = 240;
  double hfov_deg = 60.0;
  double camera_height = 1.5;
  /// Ring radius as a fraction of the smaller room extent.
  double ring_fraction = 0.375;
  /// Misalignment of the whole rescan: random rotation (degrees) and translation (meters).
  double misalign_rot_deg = 0.0;
  double misalign_trans_m = 0.0;
};

struct EditedObject
{
  std::size_t object = 0;
  EditKind kind = EditKind::Move;
  std::vector<Point3> reference_points;
  std::vector<Point3> rescan_points;
};

struct GroundTruth
{
  std::vector<Point3> changed_reference;
  std::vector<Point3> changed_rescan;
  std::vector<RigidTransform> transforms; // one per move edit, in edit order
  std::vector<EditedObject> edited;       // in edit order
  std::vector<DetectedObject> components; // at kComponentCell over both changed sets

  std::vector<Point3> changed_points() const;
};

struct SyntheticScene
{
  TriangleMesh reference;
  TriangleMesh rescan;
  std::vector<CameraPose> poses;
  GroundTruth truth;
};

/// Throws SpecViolation for boxes leaving the room, bad edits or bad options.
void validate(const SceneSpec& spec, const GenerateOptions& options = {});

/// Deterministic scene pair; identical specs and options give identical output.
SyntheticScene generate(const SceneSpec& spec, const GenerateOptions& options = {});

/// Ground-truth components of a changed point set (every occupied cell counts).
std::vector<DetectedObject> gt_components(const std::vector<Point3>& changed);

/// Camera ring of generate().
std::vector<CameraPose> ring_poses(const SceneSpec& spec, const GenerateOptions& options);

// Scenes used by the tests and the CLI.
SceneSpec preset_static();
SceneSpec preset_single_move();
SceneSpec preset_multi();
SceneSpec preset_slide();
SceneSpec preset_two_moves();

/// Writes reference.ply, rescan.ply, poses.txt and gt/{gt_changed.ply, gt_transforms.json}.
void write_layout(const std::filesystem::path& dir, const SyntheticScene& scene);

} // namespace scenediff::synth
