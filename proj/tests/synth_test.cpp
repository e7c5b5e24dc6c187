#include <doctest.h>

#include "oracles.hpp"
#include "scenediff/kdtree.hpp"
#include "scenediff/synth.hpp"

using namespace scenediff;

TEST_SUITE("synth")
{
  TEST_CASE("no edits give identical scans")
  {
    const auto scene = synth::generate(synth::preset_static());
    CHECK(scene.reference.vertices == scene.rescan.vertices);
    CHECK(scene.reference.faces == scene.rescan.faces);
    CHECK(scene.truth.changed_points().empty());
    CHECK(scene.truth.transforms.empty());
    CHECK(scene.poses.size() == 12);
  }

  TEST_CASE("generation is deterministic")
  {
    const auto a = synth::generate(synth::preset_multi());
    const auto b = synth::generate(synth::preset_multi());
    CHECK(a.reference.vertices == b.reference.vertices);
    CHECK(a.rescan.vertices == b.rescan.vertices);
    CHECK(a.truth.changed_points() == b.truth.changed_points());
  }

  TEST_CASE("a move records its world motion")
  {
    const synth::SceneSpec spec = synth::preset_single_move();
    const auto scene = synth::generate(spec);
    REQUIRE(scene.truth.transforms.size() == 1);
    const RigidTransform& t = scene.truth.transforms[0];
    CHECK((t.matrix() - spec.edits[0].motion.matrix()).norm() < 1e-12);
    // Old surface points moved by the motion land on the new surface.
    const auto& edited = scene.truth.edited[0];
    const auto index = make_index(edited.rescan_points);
    for (const auto& p : edited.reference_points)
      CHECK(index.nearest(t(p)).distance < 1e-6);
  }

  TEST_CASE("add and remove edits carry no motion")
  {
    const synth::SceneSpec spec = synth::preset_multi();
    const auto scene = synth::generate(spec);
    std::size_t moves = 0;
    for (const auto& e : spec.edits)
      moves += e.kind == synth::EditKind::Move;
    CHECK(scene.truth.transforms.size() == moves);
    for (const auto& e : scene.truth.edited) {
      if (e.kind == synth::EditKind::Add) {
        CHECK(e.reference_points.empty());
        CHECK_FALSE(e.rescan_points.empty());
      }
      if (e.kind == synth::EditKind::Remove) {
        CHECK(e.rescan_points.empty());
        CHECK_FALSE(e.reference_points.empty());
      }
    }
  }

  TEST_CASE("changed points lie on exactly one scan")
  {
    const auto scene = synth::generate(synth::preset_single_move());
    const auto ref = make_index(scene.reference.vertices);
    const auto res = make_index(scene.rescan.vertices);
    for (const auto& p : scene.truth.changed_reference)
      CHECK(ref.nearest(p).distance < 1e-9);
    for (const auto& p : scene.truth.changed_rescan)
      CHECK(res.nearest(p).distance < 1e-9);
  }

  TEST_CASE("ground-truth components cover the changed points")
  {
    const auto scene = synth::generate(synth::preset_single_move());
    const auto changed = scene.truth.changed_points();
    std::size_t covered = 0;
    for (const auto& o : scene.truth.components)
      covered += o.points.size();
    CHECK(covered == changed.size());
    CHECK(occupied_voxels(scene.truth.components) == voxelize(changed, kComponentCell));
  }

  TEST_CASE("cameras see the room")
  {
    const synth::SceneSpec spec = synth::preset_single_move();
    const auto poses = synth::ring_poses(spec, {});
    REQUIRE(poses.size() == 12);
    for (const auto& p : poses) {
      validate(p);
      const Eigen::Vector3d c = project(p, spec.room / 2.0);
      CHECK(c.x() == doctest::Approx(p.cx()));
      CHECK(c.y() == doctest::Approx(p.cy()));
    }
  }

  TEST_CASE("invalid specs are rejected")
  {
    synth::SceneSpec spec = synth::preset_single_move();
    spec.objects[0].pose.translation.x() = 10.0;
    CHECK_THROWS_AS(synth::validate(spec), SpecViolation);
    spec = synth::preset_single_move();
    spec.edits.push_back({99, synth::EditKind::Remove, {}});
    CHECK_THROWS_AS(synth::validate(spec), SpecViolation);
    synth::GenerateOptions bad;
    bad.n_viewpoints = 0;
    CHECK_THROWS_AS(synth::validate(synth::preset_static(), bad), SpecViolation);
  }
}
