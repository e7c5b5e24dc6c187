#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scenediff/detect.hpp"
#include "scenediff/discover.hpp"
#include "scenediff/eval.hpp"
#include "scenediff/features.hpp"
#include "scenediff/motion.hpp"
#include "scenediff/optimize.hpp"
#include "scenediff/supervoxel.hpp"

namespace scenediff {

enum class Mode
{
  Full,
  BeforeOptim,    // depth-difference detection only
  TanejaBaseline, // color-smoothness graph cut instead of transform consistency
};

std::string to_string(Mode mode);
Mode parse_mode(const std::string& name);

struct PipelineConfig
{
  Mode mode = Mode::Full;
  double tau = 0.05;
  SupervoxelParams supervoxel;
  double prior_radius = 0.05;
  DescriptorParams descriptor;
  double downsample = 0.05;
  double delta_static = 0.1;
  RansacParams ransac{.threshold = 0.05, .max_iters = 2000, .k = 5, .seed = 0, .delta_static = 0.1, .min_inliers = 12};
  EnergyParams energy;
  double taneja_gamma = 1.0;
  double cell_size = kComponentCell;
  std::size_t min_component_voxels = kMinComponentVoxels;
  double eval_distance = 0.05;

  /// Throws SpecViolation on non-positive dimensional values.
  void validate() const;
};

/**
 * TOML-style configuration: "key = value" lines, optional [section] headers
 * that prefix the keys ("[ransac]" then "k = 5" sets ransac.k), '#' comments.
 * Unknown keys and malformed values raise ParseError with the line number.
 */
PipelineConfig parse_config(std::istream& in, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

struct GroundTruthData
{
  std::vector<Point3> changed_points;
  std::vector<RigidTransform> transforms;
};

struct PipelineInput
{
  TriangleMesh reference;
  TriangleMesh rescan;
  std::vector<CameraPose> poses;
  std::optional<GroundTruthData> truth;
};

/// Reads reference.ply-style meshes, a pose file and an optional gt directory
/// (gt_changed.ply, gt_transforms.json).
PipelineInput load_input(const std::filesystem::path& reference, const std::filesystem::path& rescan,
                         const std::filesystem::path& poses, const std::optional<std::filesystem::path>& gt_dir);

struct StageTiming
{
  std::string stage;
  double seconds = 0.0;
};

struct RunStats
{
  std::size_t change_points = 0;
  std::size_t supervoxels_reference = 0;
  std::size_t supervoxels_rescan = 0;
  std::size_t candidate_points = 0;
  std::size_t correspondences = 0;
  std::size_t changed_points = 0;
};

struct RunReport
{
  PipelineConfig config;
  std::vector<StageTiming> timings;
  double total_seconds = 0.0;
  std::vector<MotionHypothesis> hypotheses;
  std::vector<DetectedObject> objects;
  std::optional<EvalReport> eval;
  RunStats stats;
};

struct RunOptions
{
  std::optional<std::filesystem::path> out_dir; // report.json, timings.json, objects/
  bool dump_debug = false;                      // depth maps, masks, change points, supervoxels
};

/**
 * Detection, supervoxels and priors, matching, sequential RANSAC, per-transform
 * graph cuts fused with the prior argmax, connected components and, with
 * ground truth, evaluation. Errors leave as StageError naming the stage, with
 * the original exception nested.
 */
RunReport run(const PipelineInput& input, const PipelineConfig& config, const RunOptions& options = {});

RunReport run(const std::filesystem::path& reference, const std::filesystem::path& rescan,
              const std::filesystem::path& poses, const PipelineConfig& config,
              const std::optional<std::filesystem::path>& gt_dir = std::nullopt, const RunOptions& options = {});

/// Deterministic report document: sorted keys, reals rounded to 6 significant digits, no timings.
nlohmann::json report_json(const RunReport& report);
nlohmann::json timings_json(const RunReport& report);
void write_report(const RunReport& report, const std::filesystem::path& path);
nlohmann::json read_report(const std::filesystem::path& path);

/// Writes a JSON document the way write_report does.
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);

} // namespace scenediff
