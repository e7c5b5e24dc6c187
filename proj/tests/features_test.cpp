#include <doctest.h>

#include <numeric>
#include <random>

#include "oracles.hpp"
#include "scenediff/features.hpp"

using namespace scenediff;

namespace {

PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double extent)
{
  std::uniform_real_distribution<double> u(0.0, extent);
  std::normal_distribution<double> g;
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    c.points.emplace_back(u(rng), u(rng), u(rng));
    c.normals.push_back(Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized());
  }
  return c;
}

PointCloud grid_plane(int n, double step)
{
  PointCloud c;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      c.points.emplace_back(i * step, j * step, 0.0);
      c.normals.push_back(Eigen::Vector3d::UnitZ());
    }
  return c;
}

} // namespace

TEST_SUITE("features")
{
  TEST_CASE("pair features agree with the frame definition")
  {
    std::mt19937_64 rng(3);
    const PointCloud c = random_cloud(rng, 200, 1.0);
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      double t0, a0, p0, t1, a1, p1;
      const bool ok = pair_features(c.points[i], c.normals[i], c.points[i + 1], c.normals[i + 1], t0, a0, p0);
      REQUIRE(ok == oracle::darboux(c.points[i], c.normals[i], c.points[i + 1], c.normals[i + 1], t1, a1, p1));
      CHECK(t0 == doctest::Approx(t1).epsilon(1e-12));
      CHECK(a0 == doctest::Approx(a1).epsilon(1e-12));
      CHECK(p0 == doctest::Approx(p1).epsilon(1e-12));
      CHECK(std::abs(t0) <= std::numbers::pi);
      CHECK(std::abs(a0) <= 1.0);
      CHECK(std::abs(p0) <= 1.0);
    }
    double t, a, p;
    CHECK_FALSE(pair_features({0, 0, 0}, Eigen::Vector3d::UnitZ(), {0, 0, 0}, Eigen::Vector3d::UnitZ(), t, a, p));
  }

  TEST_CASE("each SPFH block sums to 100")
  {
    std::mt19937_64 rng(5);
    const PointCloud c = random_cloud(rng, 150, 0.6);
    const FpfhSet s = compute_spfh(c, 0.2);
    for (Eigen::Index i = 0; i < s.cols(); ++i) {
      const double total = s.col(i).sum();
      if (total == 0.0)
        continue;
      for (int b = 0; b < 3; ++b)
        CHECK(s.col(i).segment<kFpfhBins>(b * kFpfhBins).sum() == doctest::Approx(100.0));
    }
  }

  TEST_CASE("FPFH matches the nested-loop reference")
  {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      std::mt19937_64 rng(seed);
      const PointCloud c = random_cloud(rng, 180, 0.6);
      const FpfhSet got = compute_fpfh(c, 0.15);
      const auto want = oracle::fpfh(c, 0.15);
      REQUIRE(got.cols() == static_cast<Eigen::Index>(c.size()));
      for (std::size_t i = 0; i < c.size(); ++i)
        CHECK((got.col(static_cast<Eigen::Index>(i)) - want[i]).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  TEST_CASE("query subset equals the matching columns of the full set")
  {
    std::mt19937_64 rng(11);
    const PointCloud c = random_cloud(rng, 200, 0.6);
    const FpfhSet all = compute_fpfh(c, 0.15);
    const std::vector<std::size_t> q{3, 50, 7, 199};
    const FpfhSet some = compute_fpfh(c, 0.15, q);
    for (std::size_t k = 0; k < q.size(); ++k)
      CHECK(some.col(static_cast<Eigen::Index>(k)) == all.col(static_cast<Eigen::Index>(q[k])));
  }

  TEST_CASE("interior points of a plane share one descriptor")
  {
    const PointCloud c = grid_plane(30, 0.02);
    const FpfhSet f = compute_fpfh(c, 0.05);
    const auto id = [](int i, int j) { return static_cast<Eigen::Index>(i * 30 + j); };
    const Eigen::Matrix<double, kFpfhSize, 1> ref = f.col(id(15, 15));
    CHECK(ref.sum() > 0.0);
    for (int i = 8; i < 22; ++i)
      for (int j = 8; j < 22; ++j)
        CHECK((f.col(id(i, j)) - ref).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("isolated points get the zero descriptor")
  {
    PointCloud c;
    c.points = {{0, 0, 0}, {0.01, 0, 0}, {5, 5, 5}};
    c.normals.assign(3, Eigen::Vector3d::UnitZ());
    const FpfhSet f = compute_fpfh(c, 0.05);
    CHECK(f.isZero());
  }

  TEST_CASE("descriptors are invariant to rigid motion")
  {
    std::mt19937_64 rng(17);
    const PointCloud c = random_cloud(rng, 200, 0.6);
    RigidTransform t;
    t.rotation = oracle::random_rotation(rng);
    t.translation = Eigen::Vector3d(1.0, -2.0, 0.5);
    PointCloud m = c;
    for (std::size_t i = 0; i < c.size(); ++i) {
      m.points[i] = t(c.points[i]);
      m.normals[i] = t.rotation * c.normals[i];
    }
    const FpfhSet a = compute_fpfh(c, 0.15);
    const FpfhSet b = compute_fpfh(m, 0.15);
    // A pair angle sitting on a bin edge may flip bins under rounding.
    int differing = 0;
    for (Eigen::Index i = 0; i < a.cols(); ++i)
      if ((a.col(i) - b.col(i)).cwiseAbs().maxCoeff() > 1e-6)
        ++differing;
    CHECK(differing <= 2);
  }

  TEST_CASE("color rows are appended only for colored clouds")
  {
    std::mt19937_64 rng(2);
    PointCloud c = random_cloud(rng, 100, 0.5);
    std::vector<std::size_t> q(c.size());
    std::iota(q.begin(), q.end(), std::size_t{0});
    DescriptorParams p{0.15, 10.0};
    CHECK(describe(c, p, q).rows() == kFpfhSize);
    c.colors.assign(c.size(), Color3(0.2, 0.4, 0.6));
    const DescriptorSet d = describe(c, p, q);
    REQUIRE(d.rows() == kFpfhSize + 6);
    CHECK(d(kFpfhSize, 0) == doctest::Approx(2.0));
    CHECK(d(kFpfhSize + 2, 0) == doctest::Approx(6.0));
    CHECK(d.topRows(kFpfhSize) == compute_fpfh(c, 0.15));
  }

  TEST_CASE("matching agrees with a linear scan")
  {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    DescriptorSet s(8, 300), r(8, 120);
    for (Eigen::Index i = 0; i < s.size(); ++i)
      s.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < r.size(); ++i)
      r.data()[i] = g(rng);
    const auto corrs = match_features(s, r);
    REQUIRE(corrs.size() == 120);
    std::vector<Eigen::VectorXd> cols;
    for (Eigen::Index i = 0; i < s.cols(); ++i)
      cols.emplace_back(s.col(i));
    for (std::size_t j = 0; j < corrs.size(); ++j) {
      const Eigen::VectorXd q = r.col(static_cast<Eigen::Index>(j));
      const auto hit = oracle::linear_nearest(cols, q);
      CHECK(corrs[j].index_r == j);
      CHECK(corrs[j].index_s == hit.index);
      CHECK(corrs[j].distance_feature == doctest::Approx(hit.distance));
    }
  }

  TEST_CASE("identical descriptor sets match one to one")
  {
    std::mt19937_64 rng(12);
    const PointCloud c = random_cloud(rng, 150, 0.6);
    std::vector<std::size_t> q(c.size());
    std::iota(q.begin(), q.end(), std::size_t{0});
    const DescriptorSet d = describe(c, {0.15, 0.0}, q);
    const auto corrs = match_features(d, d);
    for (const auto& m : corrs) {
      CHECK(m.distance_feature == 0.0);
      // Duplicated descriptors resolve to the lowest index.
      CHECK(m.index_s <= m.index_r);
      CHECK(d.col(static_cast<Eigen::Index>(m.index_s)) == d.col(static_cast<Eigen::Index>(m.index_r)));
    }
  }

  TEST_CASE("matching checks dimensions and emptiness")
  {
    CHECK_THROWS_AS(match_features(DescriptorSet(3, 2), DescriptorSet(4, 2)), DimensionMismatch);
    CHECK(match_features(DescriptorSet(3, 2), DescriptorSet(3, 0)).empty());
    CHECK(match_features(DescriptorSet(3, 0), DescriptorSet(3, 2)).empty());
  }

  TEST_CASE("filter_static keeps moved pairs")
  {
    PointCloud s, r;
    s.points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    r.points = {{0.01, 0, 0}, {1.5, 0, 0}, {2, 0.1, 0}};
    const std::vector<Correspondence> corrs{{0, 0, 0.0}, {1, 1, 0.0}, {2, 2, 0.0}};
    const auto kept = filter_static(corrs, s, r, 0.1);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].index_s == 1);
    CHECK(kept[1].index_s == 2); // exactly delta apart is kept
  }

  TEST_CASE("unexplained points are those far from the other scan")
  {
    PointCloud c;
    c.points = {{0, 0, 0}, {1, 0, 0}, {0, 0.2, 0}};
    const std::vector<Point3> other{{0, 0, 0.01}, {0, 0.3, 0}};
    const auto idx = make_index(other);
    const auto out = unexplained_points(c, idx, 0.05);
    CHECK(out == std::vector<std::size_t>{1, 2});
  }
}
