#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "scenediff/motion.hpp"

using namespace scenediff;

namespace {

RigidTransform random_motion(std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RigidTransform t;
  t.rotation = oracle::random_rotation(rng);
  t.translation = Eigen::Vector3d(u(rng), u(rng), u(rng));
  return t;
}

// Appends n points moved by t, paired index to index.
void add_moved(PointCloud& s, PointCloud& r, std::vector<Correspondence>& corrs, const RigidTransform& t, std::size_t n,
               std::mt19937_64& rng, const Point3& origin = Point3::Zero())
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Point3 p = origin + Point3(u(rng), u(rng), u(rng));
    corrs.push_back({s.size(), r.size(), 0.0});
    s.points.push_back(p);
    r.points.push_back(t(p));
  }
}

void add_outliers(PointCloud& s, PointCloud& r, std::vector<Correspondence>& corrs, std::size_t n, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (std::size_t i = 0; i < n; ++i) {
    corrs.push_back({s.size(), r.size(), 0.0});
    s.points.emplace_back(u(rng), u(rng), u(rng));
    r.points.emplace_back(u(rng), u(rng), u(rng));
  }
}

bool close(const RigidTransform& a, const RigidTransform& b, double tol)
{
  return (a.rotation - b.rotation).norm() < tol && (a.translation - b.translation).norm() < tol;
}

} // namespace

TEST_SUITE("motion")
{
  TEST_CASE("noiseless correspondences give the exact motion")
  {
    std::mt19937_64 rng(1);
    PointCloud s, r;
    std::vector<Correspondence> corrs;
    const RigidTransform t = random_motion(rng);
    add_moved(s, r, corrs, t, 50, rng);
    const auto h = ransac_transform(corrs, s, r, 0.05, 100, std::uint64_t{7});
    REQUIRE(h);
    CHECK(h->inlier_count == 50);
    CHECK(h->inliers.size() == 50);
    CHECK(close(h->transform, t, 1e-9));
    for (const auto& c : corrs)
      CHECK(residual(h->transform, c, s, r) < 1e-9);
  }

  TEST_CASE("too few correspondences give nothing")
  {
    std::mt19937_64 rng(2);
    PointCloud s, r;
    std::vector<Correspondence> corrs;
    add_moved(s, r, corrs, random_motion(rng), 2, rng);
    CHECK_FALSE(ransac_transform(corrs, s, r, 0.05, 100, std::uint64_t{0}));
    CHECK_THROWS_AS(ransac_transform(corrs, s, r, 0.0, 100, std::uint64_t{0}), SpecViolation);
  }

  TEST_CASE("half outliers do not disturb the fit")
  {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(seed);
      PointCloud s, r;
      std::vector<Correspondence> corrs;
      const RigidTransform t = random_motion(rng);
      add_moved(s, r, corrs, t, 30, rng);
      add_outliers(s, r, corrs, 30, rng);
      std::shuffle(corrs.begin(), corrs.end(), rng);
      const auto h = ransac_transform(corrs, s, r, 0.05, 1000, seed);
      REQUIRE(h);
      CHECK(h->inlier_count >= 30);
      CHECK(h->inlier_count <= 32);
      CHECK(close(h->transform, t, 1e-3));
    }
  }

  TEST_CASE("the same seed gives the same result")
  {
    std::mt19937_64 rng(4);
    PointCloud s, r;
    std::vector<Correspondence> corrs;
    add_moved(s, r, corrs, random_motion(rng), 20, rng);
    add_outliers(s, r, corrs, 40, rng);
    const auto a = ransac_transform(corrs, s, r, 0.05, 300, std::uint64_t{99});
    const auto b = ransac_transform(corrs, s, r, 0.05, 300, std::uint64_t{99});
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->inliers == b->inliers);
    CHECK(a->transform.matrix() == b->transform.matrix());
  }

  TEST_CASE("two motions give two hypotheses")
  {
    std::mt19937_64 rng(5);
    PointCloud s, r;
    std::vector<Correspondence> corrs;
    const RigidTransform big = random_motion(rng);
    const RigidTransform small = random_motion(rng);
    add_moved(s, r, corrs, big, 50, rng);
    add_moved(s, r, corrs, small, 35, rng, Point3(5, 0, 0));
    add_outliers(s, r, corrs, 20, rng);
    RansacParams p;
    p.max_iters = 1000;
    p.k = 5;
    const auto hs = dominant_transforms(corrs, s, r, p);
    REQUIRE(hs.size() >= 2);
    CHECK(close(hs[0].transform, big, 1e-3));
    CHECK(close(hs[1].transform, small, 1e-3));
    for (std::size_t i = 1; i < hs.size(); ++i)
      CHECK(hs[i - 1].inlier_count >= hs[i].inlier_count);
    std::set<std::size_t> used;
    for (const auto& h : hs)
      for (const auto& c : h.inliers)
        CHECK(used.insert(c.index_r).second);

    p.k = 1;
    const auto one = dominant_transforms(corrs, s, r, p);
    REQUIRE(one.size() == 1);
    CHECK(close(one[0].transform, big, 1e-3));
  }

  TEST_CASE("static correspondences give no hypothesis")
  {
    std::mt19937_64 rng(6);
    PointCloud s, r;
    std::vector<Correspondence> corrs;
    add_moved(s, r, corrs, RigidTransform::identity(), 60, rng);
    CHECK(dominant_transforms(corrs, s, r, RansacParams{}).empty());
    RansacParams bad;
    bad.k = 0;
    CHECK_THROWS_AS(dominant_transforms(corrs, s, r, bad), SpecViolation);
  }

  TEST_CASE("near-identity examples")
  {
    RigidTransform t;
    CHECK(is_near_identity(t, 0.1));
    t.translation = Eigen::Vector3d(0.05, 0, 0);
    CHECK(is_near_identity(t, 0.1));
    t.translation = Eigen::Vector3d(0.2, 0, 0);
    CHECK_FALSE(is_near_identity(t, 0.1));
    t.translation.setZero();
    t.rotation = Eigen::AngleAxisd(3.0 * std::numbers::pi / 180.0, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    CHECK_FALSE(is_near_identity(t, 0.1));
  }
}
