#include "scenediff/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <tuple>
#include <unordered_map>

#include "scenediff/io.hpp"
#include "scenediff/ply.hpp"

namespace scenediff {
namespace {

using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// Configuration

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& v, int line)
{
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(x))
      throw ParseError("config: not a number: " + v, line);
    return x;
  } catch (const std::logic_error&) {
    throw ParseError("config: not a number: " + v, line);
  }
}

long long to_int(const std::string& v, int line)
{
  const double x = to_real(v, line);
  if (x != std::floor(x) || std::abs(x) > 9.0e15)
    throw ParseError("config: not an integer: " + v, line);
  return static_cast<long long>(x);
}

std::size_t to_count(const std::string& v, int line)
{
  const long long x = to_int(v, line);
  if (x < 0)
    throw ParseError("config: expected a nonnegative integer: " + v, line);
  return static_cast<std::size_t>(x);
}

bool to_bool(const std::string& v, int line)
{
  if (v == "true")
    return true;
  if (v == "false")
    return false;
  throw ParseError("config: expected true or false: " + v, line);
}

using Setter = std::function<void(PipelineConfig&, const std::string&, int)>;

const std::map<std::string, Setter>& setters()
{
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    auto real = [&m](const std::string& key, double PipelineConfig::*field) {
      m[key] = [field](PipelineConfig& c, const std::string& v, int l) { c.*field = to_real(v, l); };
    };
    real("tau", &PipelineConfig::tau);
    real("prior_radius", &PipelineConfig::prior_radius);
    real("downsample", &PipelineConfig::downsample);
    real("taneja_gamma", &PipelineConfig::taneja_gamma);
    real("cell_size", &PipelineConfig::cell_size);
    real("eval_distance", &PipelineConfig::eval_distance);
    m["delta_static"] = [](PipelineConfig& c, const std::string& v, int l) {
      c.delta_static = c.ransac.delta_static = to_real(v, l);
    };
    m["mode"] = [](PipelineConfig& c, const std::string& v, int l) {
      try {
        c.mode = parse_mode(v);
      } catch (const SpecViolation& e) {
        throw ParseError(std::string("config: ") + e.what(), l);
      }
    };
    m["min_component_voxels"] = [](PipelineConfig& c, const std::string& v, int l) {
      c.min_component_voxels = to_count(v, l);
    };

    m["supervoxel.voxel_size"] = [](PipelineConfig& c, const std::string& v, int l) { c.supervoxel.voxel_size = to_real(v, l); };
    m["supervoxel.seed_spacing"] = [](PipelineConfig& c, const std::string& v, int l) { c.supervoxel.seed_spacing = to_real(v, l); };
    m["supervoxel.w_spatial"] = [](PipelineConfig& c, const std::string& v, int l) { c.supervoxel.w_spatial = to_real(v, l); };
    m["supervoxel.w_normal"] = [](PipelineConfig& c, const std::string& v, int l) { c.supervoxel.w_normal = to_real(v, l); };
    m["supervoxel.w_color"] = [](PipelineConfig& c, const std::string& v, int l) { c.supervoxel.w_color = to_real(v, l); };
    m["supervoxel.refine_rounds"] = [](PipelineConfig& c, const std::string& v, int l) {
      c.supervoxel.refine_rounds = static_cast<int>(to_count(v, l));
    };
    m["supervoxel.flat_angle_deg"] = [](PipelineConfig& c, const std::string& v, int l) { c.supervoxel.flat_angle_deg = to_real(v, l); };

    m["descriptor.radius"] = [](PipelineConfig& c, const std::string& v, int l) { c.descriptor.radius = to_real(v, l); };
    m["descriptor.color_weight"] = [](PipelineConfig& c, const std::string& v, int l) { c.descriptor.color_weight = to_real(v, l); };

    m["ransac.t"] = m["ransac.threshold"] = [](PipelineConfig& c, const std::string& v, int l) { c.ransac.threshold = to_real(v, l); };
    m["ransac.max_iters"] = [](PipelineConfig& c, const std::string& v, int l) {
      c.ransac.max_iters = static_cast<int>(to_count(v, l));
    };
    m["ransac.k"] = [](PipelineConfig& c, const std::string& v, int l) { c.ransac.k = to_count(v, l); };
    m["ransac.seed"] = [](PipelineConfig& c, const std::string& v, int l) {
      c.ransac.seed = static_cast<std::uint64_t>(to_count(v, l));
    };
    m["ransac.min_inliers"] = [](PipelineConfig& c, const std::string& v, int l) { c.ransac.min_inliers = to_count(v, l); };

    m["lambda"] = m["energy.lambda"] = [](PipelineConfig& c, const std::string& v, int l) { c.energy.lambda = to_real(v, l); };
    m["epsilon_t"] = m["energy.epsilon_t"] = [](PipelineConfig& c, const std::string& v, int l) {
      c.energy.epsilon_t = to_real(v, l);
    };
    m["energy.convex_edges_only"] = [](PipelineConfig& c, const std::string& v, int l) {
      c.energy.convex_edges_only = to_bool(v, l);
    };
    return m;
  }();
  return table;
}

// ---------------------------------------------------------------------------
// Stage plumbing

template <typename Fn>
auto stage(RunReport& report, const char* name, Fn&& fn)
{
  const auto start = Clock::now();
  auto record = [&] {
    report.timings.push_back({name, std::chrono::duration<double>(Clock::now() - start).count()});
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record();
    } else {
      auto out = fn();
      record();
      return out;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    std::throw_with_nested(StageError(name, e.what()));
  }
}

// Per-scan optimization result: fused labels plus, per node, the transform it
// was found consistent with (or -1).
struct ScanLabels
{
  Labeling fused;
  std::vector<int> vote;
};

ScanLabels optimize_scan(const SupervoxelGraph& graph, const PointCloud& scene, const KdTree3d& other,
                         const std::vector<RigidTransform>& transforms, const EnergyParams& params)
{
  const auto n = static_cast<Eigen::Index>(graph.size());
  struct Solved
  {
    Labeling labels;
    Labeling consistent;
  };
  std::vector<std::future<Solved>> jobs;
  for (const auto& t : transforms)
    jobs.push_back(std::async(std::launch::async, [&graph, &scene, &other, &params, t] {
      Solved s;
      s.consistent = node_consistency(graph, scene, t, other, params.epsilon_t);
      s.labels = solve_labeling(graph, consistency_weights(graph, s.consistent, params.convex_edges_only), params.lambda);
      return s;
    }));

  std::vector<Labeling> labelings;
  ScanLabels out;
  out.vote.assign(graph.size(), -1);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    Solved s = jobs[j].get();
    for (Eigen::Index i = 0; i < n; ++i)
      if (out.vote[static_cast<std::size_t>(i)] < 0 && s.labels(i) && s.consistent(i))
        out.vote[static_cast<std::size_t>(i)] = static_cast<int>(j);
    labelings.push_back(std::move(s.labels));
  }
  out.fused = fuse_labelings(labelings, prior_argmax(graph));
  return out;
}

struct ChangedSet
{
  std::vector<Point3> points;
  std::vector<int> vote; // parallel to points
};

void collect(ChangedSet& set, const SupervoxelGraph& graph, const PointCloud& cloud, const ScanLabels& labels)
{
  for (std::size_t i = 0; i < graph.size(); ++i) {
    if (!labels.fused(static_cast<Eigen::Index>(i)))
      continue;
    for (const auto m : graph.nodes[i].members) {
      set.points.push_back(cloud.points[m]);
      set.vote.push_back(labels.vote[i]);
    }
  }
}

// A transform is attached when it explains a strict majority of the object's
// changed points; points no transform explains count against every candidate.
void attach_transforms(std::vector<DetectedObject>& objects, const ChangedSet& set, double cell, std::size_t n_transforms)
{
  if (n_transforms == 0)
    return;
  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> owner;
  for (std::size_t o = 0; o < objects.size(); ++o)
    for (const auto& k : objects[o].voxels)
      owner.emplace(k, o);
  std::vector<std::vector<std::size_t>> tally(objects.size(), std::vector<std::size_t>(n_transforms, 0));
  std::vector<std::size_t> total(objects.size(), 0);
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    const auto it = owner.find(voxel_key(set.points[i], cell));
    if (it == owner.end())
      continue;
    ++total[it->second];
    if (set.vote[i] >= 0)
      ++tally[it->second][static_cast<std::size_t>(set.vote[i])];
  }
  for (std::size_t o = 0; o < objects.size(); ++o) {
    const auto& t = tally[o];
    const auto best = std::max_element(t.begin(), t.end());
    if (2 * *best > total[o])
      objects[o].transform_id = static_cast<int>(best - t.begin());
  }
}

PointCloud colored(const std::vector<Point3>& points, const Color3& color)
{
  PointCloud c;
  c.points = points;
  c.colors.assign(points.size(), color);
  return c;
}

void write_mask_pgm(const std::filesystem::path& path, const ChangeMask& mask)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      out.put(mask(x, y) ? static_cast<char>(255) : static_cast<char>(0));
}

void dump_supervoxels(const std::filesystem::path& path, const SupervoxelGraph& graph, const PointCloud& cloud,
                      const Labeling* labels)
{
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<Color3> palette(graph.size());
  for (auto& c : palette)
    c = Color3(u(rng), u(rng), u(rng));
  PointCloud out = cloud;
  out.colors.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto node = static_cast<std::size_t>(graph.point_to_node[i]);
    out.colors[i] = labels ? ((*labels)(static_cast<Eigen::Index>(node)) ? Color3(1, 0, 0) : Color3(0.6, 0.6, 0.6))
                           : palette[node];
  }
  ply::write_cloud(path, out);
}

std::string two_digits(std::size_t i)
{
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

// ---------------------------------------------------------------------------
// Report

double round6(double v)
{
  if (!std::isfinite(v) || v == 0.0)
    return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::strtod(buf, nullptr);
}

nlohmann::json real(double v)
{
  if (!std::isfinite(v))
    return nullptr;
  return round6(v);
}

nlohmann::json vec3(const Eigen::Vector3d& v) { return {real(v.x()), real(v.y()), real(v.z())}; }

nlohmann::json config_json(const PipelineConfig& c)
{
  return {
      {"mode", to_string(c.mode)},
      {"tau", real(c.tau)},
      {"prior_radius", real(c.prior_radius)},
      {"downsample", real(c.downsample)},
      {"delta_static", real(c.delta_static)},
      {"taneja_gamma", real(c.taneja_gamma)},
      {"cell_size", real(c.cell_size)},
      {"min_component_voxels", c.min_component_voxels},
      {"eval_distance", real(c.eval_distance)},
      {"supervoxel",
       {{"voxel_size", real(c.supervoxel.voxel_size)},
        {"seed_spacing", real(c.supervoxel.seed_spacing)},
        {"w_spatial", real(c.supervoxel.w_spatial)},
        {"w_normal", real(c.supervoxel.w_normal)},
        {"w_color", real(c.supervoxel.w_color)},
        {"refine_rounds", c.supervoxel.refine_rounds},
        {"flat_angle_deg", real(c.supervoxel.flat_angle_deg)}}},
      {"descriptor", {{"radius", real(c.descriptor.radius)}, {"color_weight", real(c.descriptor.color_weight)}}},
      {"ransac",
       {{"t", real(c.ransac.threshold)},
        {"max_iters", c.ransac.max_iters},
        {"k", c.ransac.k},
        {"seed", c.ransac.seed},
        {"min_inliers", c.ransac.min_inliers}}},
      {"energy",
       {{"lambda", real(c.energy.lambda)},
        {"epsilon_t", real(c.energy.epsilon_t)},
        {"convex_edges_only", c.energy.convex_edges_only}}},
  };
}

nlohmann::json hypothesis_json(std::size_t id, const MotionHypothesis& h)
{
  nlohmann::json r = nlohmann::json::array();
  for (int i = 0; i < 9; ++i)
    r.push_back(real(h.transform.rotation(i / 3, i % 3)));
  return {{"id", id},
          {"rotation", r},
          {"translation", vec3(h.transform.translation)},
          {"rotation_deg", real(rotation_angle(h.transform.rotation) * 180.0 / std::numbers::pi)},
          {"inlier_count", h.inlier_count}};
}

nlohmann::json object_json(const DetectedObject& o)
{
  const Aabb box = o.bounds();
  return {{"id", o.id},
          {"voxel_count", o.voxels.size()},
          {"point_count", o.points.size()},
          {"bbox_min", vec3(box.min)},
          {"bbox_max", vec3(box.max)},
          {"transform_id", o.transform_id ? nlohmann::json(*o.transform_id) : nlohmann::json(nullptr)}};
}

nlohmann::json eval_json(const EvalReport& e)
{
  nlohmann::json matches = nlohmann::json::array();
  for (const auto& m : e.objects.matches)
    matches.push_back({{"gt_id", m.gt_id},
                       {"predicted_id", m.predicted_id >= 0 ? nlohmann::json(m.predicted_id) : nlohmann::json(nullptr)},
                       {"iou", real(m.iou)}});
  return {{"voxel_recall", real(e.voxel_recall)},
          {"mean_iou", real(e.objects.mean_iou)},
          {"discovered_count", e.objects.discovered},
          {"gt_object_count", e.objects.matches.size()},
          {"object_ious", matches},
          {"accuracy", real(e.accuracy.accuracy)},
          {"completeness", real(e.accuracy.completeness)},
          {"transform_recall_10", real(e.transforms.recall_10)},
          {"transform_recall_20", real(e.transforms.recall_20)},
          {"mre_deg", real(e.transforms.mre_deg)},
          {"mte_m", real(e.transforms.mte_m)},
          {"mean_re_deg", real(e.transforms.mean_re_deg)},
          {"mean_te_m", real(e.transforms.mean_te_m)}};
}

} // namespace

std::string to_string(Mode mode)
{
  switch (mode) {
  case Mode::Full:
    return "full";
  case Mode::BeforeOptim:
    return "before-optim";
  case Mode::TanejaBaseline:
    return "taneja-baseline";
  }
  return "full";
}

Mode parse_mode(const std::string& name)
{
  if (name == "full")
    return Mode::Full;
  if (name == "before-optim")
    return Mode::BeforeOptim;
  if (name == "taneja-baseline")
    return Mode::TanejaBaseline;
  throw SpecViolation("unknown mode \"" + name + "\" (expected full, before-optim or taneja-baseline)");
}

void PipelineConfig::validate() const
{
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw SpecViolation(std::string("config: ") + what + " must be positive");
  };
  positive(tau, "tau");
  positive(prior_radius, "prior_radius");
  positive(downsample, "downsample");
  positive(delta_static, "delta_static");
  positive(cell_size, "cell_size");
  positive(eval_distance, "eval_distance");
  positive(descriptor.radius, "descriptor.radius");
  positive(ransac.threshold, "ransac.t");
  positive(energy.epsilon_t, "energy.epsilon_t");
  positive(supervoxel.voxel_size, "supervoxel.voxel_size");
  if (!(supervoxel.seed_spacing > supervoxel.voxel_size))
    throw SpecViolation("config: supervoxel.seed_spacing must exceed supervoxel.voxel_size");
  if (ransac.max_iters < 1 || ransac.k < 1)
    throw SpecViolation("config: ransac.max_iters and ransac.k must be at least 1");
  if (!(energy.lambda >= 0.0) || !(taneja_gamma >= 0.0) || !(descriptor.color_weight >= 0.0))
    throw SpecViolation("config: lambda, taneja_gamma and descriptor.color_weight must be nonnegative");
}

PipelineConfig parse_config(std::istream& in, PipelineConfig base)
{
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError("config: malformed section header", line_no);
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config: expected key = value", line_no);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (!section.empty())
      key = section + "." + key;
    const auto it = setters().find(key);
    if (it == setters().end())
      throw ParseError("config: unknown key \"" + key + "\"", line_no);
    it->second(base, value, line_no);
  }
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config " + path.string());
  return parse_config(in, std::move(base));
}

PipelineInput load_input(const std::filesystem::path& reference, const std::filesystem::path& rescan,
                         const std::filesystem::path& poses, const std::optional<std::filesystem::path>& gt_dir)
{
  PipelineInput in;
  in.reference = ply::read_mesh(reference);
  in.rescan = ply::read_mesh(rescan);
  in.poses = io::load_poses(poses);
  if (gt_dir) {
    GroundTruthData gt;
    gt.changed_points = ply::read_cloud(*gt_dir / "gt_changed.ply").points;
    if (std::filesystem::exists(*gt_dir / "gt_transforms.json"))
      gt.transforms = io::read_transforms(*gt_dir / "gt_transforms.json");
    in.truth = std::move(gt);
  }
  return in;
}

RunReport run(const PipelineInput& input, const PipelineConfig& cfg_in, const RunOptions& options)
{
  const auto t_start = Clock::now();
  RunReport report;
  PipelineConfig cfg = cfg_in;
  cfg.ransac.delta_static = cfg.delta_static;
  cfg.validate();
  report.config = cfg;

  if (input.poses.empty())
    throw StageError("input", "no camera poses given");
  const std::filesystem::path debug_dir = options.out_dir ? *options.out_dir / "debug" : std::filesystem::path();
  const bool dump = options.dump_debug && options.out_dir;
  if (dump)
    std::filesystem::create_directories(debug_dir);

  std::vector<ViewDetection> views;
  const ChangePoints changes = stage(report, "detect", [&] {
    for (const auto& p : input.poses)
      validate(p);
    return detect_changes(input.reference, input.rescan, input.poses, cfg.tau, dump ? &views : nullptr);
  });
  report.stats.change_points = changes.size();

  ChangedSet changed;
  std::size_t n_transforms = 0;
  if (cfg.mode == Mode::BeforeOptim) {
    changed.points = changes.points;
    changed.vote.assign(changed.points.size(), -1);
  } else {
    const auto [cloud_s, cloud_r] = stage(report, "clouds", [&] {
      validate(input.reference);
      validate(input.rescan);
      auto pair = std::make_pair(mesh_to_cloud(input.reference), mesh_to_cloud(input.rescan));
      if (pair.first.empty() || pair.second.empty())
        throw EmptyScene("a scan has no vertices");
      return pair;
    });

    auto [graph_s, graph_r] = stage(report, "supervoxel", [&] {
      auto gs = std::async(std::launch::async, [&] { return segment(cloud_s, cfg.supervoxel); });
      SupervoxelGraph gr = segment(cloud_r, cfg.supervoxel);
      SupervoxelGraph g = gs.get();
      // Each scan takes the change points lifted from its own surface.
      for (auto side : {ScanSide::Reference, ScanSide::Rescan}) {
        std::vector<Point3> pts;
        std::vector<std::int64_t> src;
        for (std::size_t i = 0; i < changes.size(); ++i)
          if (changes.origin[i] == side) {
            pts.push_back(changes.points[i]);
            src.push_back(changes.source_vertex.empty() ? -1 : changes.source_vertex[i]);
          }
        const bool ref = side == ScanSide::Reference;
        assign_priors(ref ? g : gr, ref ? cloud_s : cloud_r, pts, cfg.prior_radius, PriorRule::NearestMember, src);
      }
      return std::make_pair(std::move(g), std::move(gr));
    });
    report.stats.supervoxels_reference = graph_s.size();
    report.stats.supervoxels_rescan = graph_r.size();

    const KdTree3d index_s = make_index(cloud_s.points);
    const KdTree3d index_r = make_index(cloud_r.points);

    if (cfg.mode == Mode::TanejaBaseline) {
      stage(report, "optimize", [&] {
        for (auto* pair : {&graph_s, &graph_r}) {
          const PointCloud& cloud = pair == &graph_s ? cloud_s : cloud_r;
          ScanLabels labels;
          labels.fused = solve_labeling(*pair, taneja_weights(*pair, cfg.taneja_gamma), cfg.energy.lambda);
          labels.vote.assign(pair->size(), -1);
          collect(changed, *pair, cloud, labels);
        }
      });
    } else {
      const auto [down_s, down_r, corrs] = stage(report, "features", [&] {
        const PointCloud ds = subset(cloud_s, grid_downsample(cloud_s.points, cfg.downsample));
        const PointCloud dr = subset(cloud_r, grid_downsample(cloud_r.points, cfg.downsample));
        // Rescan points the reference already explains cannot belong to a moved object.
        const std::vector<std::size_t> queries = unexplained_points(dr, index_s, cfg.delta_static);
        std::vector<std::size_t> all(ds.size());
        for (std::size_t i = 0; i < all.size(); ++i)
          all[i] = i;
        std::vector<Correspondence> matches;
        if (!queries.empty() && !ds.empty()) {
          auto desc_s = std::async(std::launch::async, [&] { return describe(ds, cfg.descriptor, all); });
          const DescriptorSet desc_r = describe(dr, cfg.descriptor, queries);
          matches = match_features(desc_s.get(), desc_r);
          for (auto& m : matches)
            m.index_r = queries[m.index_r];
        }
        report.stats.candidate_points = queries.size();
        return std::make_tuple(ds, dr, filter_static(matches, ds, dr, cfg.delta_static));
      });
      report.stats.correspondences = corrs.size();

      report.hypotheses = stage(report, "motion", [&] { return dominant_transforms(corrs, down_s, down_r, cfg.ransac); });
      n_transforms = report.hypotheses.size();

      stage(report, "optimize", [&] {
        std::vector<RigidTransform> forward, backward;
        for (const auto& h : report.hypotheses) {
          forward.push_back(h.transform);
          backward.push_back(h.transform.inverse());
        }
        auto job_r = std::async(std::launch::async, [&] {
          return optimize_scan(graph_r, cloud_r, index_s, backward, cfg.energy);
        });
        const ScanLabels labels_s = optimize_scan(graph_s, cloud_s, index_r, forward, cfg.energy);
        const ScanLabels labels_r = job_r.get();
        collect(changed, graph_s, cloud_s, labels_s);
        collect(changed, graph_r, cloud_r, labels_r);
        if (dump) {
          dump_supervoxels(debug_dir / "supervoxels_reference.ply", graph_s, cloud_s, nullptr);
          dump_supervoxels(debug_dir / "supervoxels_rescan.ply", graph_r, cloud_r, nullptr);
          dump_supervoxels(debug_dir / "labels_reference.ply", graph_s, cloud_s, &labels_s.fused);
          dump_supervoxels(debug_dir / "labels_rescan.ply", graph_r, cloud_r, &labels_r.fused);
        }
      });
    }
  }
  report.stats.changed_points = changed.points.size();

  report.objects = stage(report, "discover", [&] {
    auto objects = connected_components(changed.points, cfg.cell_size, cfg.min_component_voxels);
    attach_transforms(objects, changed, cfg.cell_size, n_transforms);
    return objects;
  });

  if (input.truth) {
    report.eval = stage(report, "eval", [&] {
      EvalReport e;
      const auto gt_objects = connected_components(input.truth->changed_points, cfg.cell_size, 1);
      const VoxelSet gt_voxels = occupied_voxels(gt_objects);
      const VoxelSet predicted = occupied_voxels(report.objects);
      e.voxel_recall = gt_voxels.empty() && !predicted.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                               : voxel_recall(predicted, gt_voxels);
      e.objects = object_iou(report.objects, gt_objects);
      std::vector<Point3> predicted_points;
      for (const auto& o : report.objects)
        predicted_points.insert(predicted_points.end(), o.points.begin(), o.points.end());
      e.accuracy = accuracy_completeness(predicted_points, input.truth->changed_points, cfg.eval_distance);
      std::vector<RigidTransform> predicted_t;
      for (const auto& h : report.hypotheses)
        predicted_t.push_back(h.transform);
      e.transforms = transform_metrics(predicted_t, input.truth->transforms);
      return e;
    });
  }

  if (options.out_dir) {
    stage(report, "write", [&] {
      std::filesystem::create_directories(*options.out_dir / "objects");
      for (const auto& o : report.objects)
        ply::write_cloud(*options.out_dir / "objects" / ("object_" + two_digits(static_cast<std::size_t>(o.id)) + ".ply"),
                         colored(o.points, Color3(1, 0, 0)));
      if (dump) {
        ply::write_cloud(debug_dir / "change_points.ply", colored(changes.points, Color3(1, 0, 0)));
        for (std::size_t v = 0; v < views.size(); ++v) {
          write_depth_pgm(debug_dir / ("depth_reference_" + two_digits(v) + ".pgm"), views[v].reference);
          write_depth_pgm(debug_dir / ("depth_rescan_" + two_digits(v) + ".pgm"), views[v].rescan);
          write_mask_pgm(debug_dir / ("mask_" + two_digits(v) + ".pgm"), views[v].mask);
        }
      }
      write_report(report, *options.out_dir / "report.json");
    });
  }

  report.total_seconds = std::chrono::duration<double>(Clock::now() - t_start).count();
  if (options.out_dir)
    write_json(timings_json(report), *options.out_dir / "timings.json");
  return report;
}

RunReport run(const std::filesystem::path& reference, const std::filesystem::path& rescan,
              const std::filesystem::path& poses, const PipelineConfig& config,
              const std::optional<std::filesystem::path>& gt_dir, const RunOptions& options)
{
  PipelineInput input;
  try {
    input = load_input(reference, rescan, poses, gt_dir);
  } catch (const std::exception& e) {
    std::throw_with_nested(StageError("input", e.what()));
  }
  return run(input, config, options);
}

nlohmann::json report_json(const RunReport& report)
{
  nlohmann::json hyps = nlohmann::json::array();
  for (std::size_t i = 0; i < report.hypotheses.size(); ++i)
    hyps.push_back(hypothesis_json(i, report.hypotheses[i]));
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : report.objects)
    objects.push_back(object_json(o));
  const auto& s = report.stats;
  return {{"config", config_json(report.config)},
          {"hypotheses", hyps},
          {"objects", objects},
          {"eval", report.eval ? eval_json(*report.eval) : nlohmann::json(nullptr)},
          {"stats",
           {{"change_points", s.change_points},
            {"supervoxels_reference", s.supervoxels_reference},
            {"supervoxels_rescan", s.supervoxels_rescan},
            {"candidate_points", s.candidate_points},
            {"correspondences", s.correspondences},
            {"changed_points", s.changed_points}}}};
}

nlohmann::json timings_json(const RunReport& report)
{
  nlohmann::json stages = nlohmann::json::object();
  for (const auto& t : report.timings)
    stages[t.stage] = real(t.seconds);
  return {{"stages", stages}, {"total", real(report.total_seconds)}};
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out)
    throw IoError("failed writing " + path.string());
}

void write_report(const RunReport& report, const std::filesystem::path& path)
{
  write_json(report_json(report), path);
}

nlohmann::json read_report(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

} // namespace scenediff
