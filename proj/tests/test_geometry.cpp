#include "oracles.hpp"
#include "polymap/geometry.hpp"
#include "polymap/io.hpp"
#include "polymap/state_estimator.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace polymap;

namespace {

constexpr double kPi = 3.14159265358979323846;

Rotation random_rotation(std::mt19937_64& rng) {
  // Orthonormalise a random Gaussian matrix; fix the sign to get det = +1.
  std::normal_distribution<double> g;
  Mat3 m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = g(rng);
  Eigen::HouseholderQR<Mat3> qr(m);
  Mat3 q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) = -q.col(0);
  return Rotation::from_matrix(q);
}

Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-5, 5);
  return Pose{random_rotation(rng), Vec3(u(rng), u(rng), u(rng))};
}

double max_abs_diff(const Mat3& a, const Mat3& b) { return (a - b).cwiseAbs().maxCoeff(); }

CameraIntrinsics intr500() { return {500, 500, 320, 240, 640, 480}; }

}  // namespace

TEST_CASE("backproject: principal point and off-axis pixel") {
  DepthImage d(640, 480, 2.0);
  const auto p = backproject(d, intr500(), 320, 240);
  REQUIRE(p);
  CHECK(p->isApprox(Vec3(0, 0, 2.0)));

  DepthImage one(640, 480, 1.0);
  const auto q = backproject(one, intr500(), 420, 240);
  REQUIRE(q);
  CHECK(q->x() == doctest::Approx(0.2));
  CHECK(q->y() == doctest::Approx(0.0));
  CHECK(q->z() == doctest::Approx(1.0));
}

TEST_CASE("backproject: constant depth keeps z and scales linearly") {
  DepthImage d(64, 48, 1.7), d2(64, 48, 3.4);
  const CameraIntrinsics in{60, 55, 31.5, 23.5, 64, 48};
  for (int v = 0; v < 48; v += 5) {
    for (int u = 0; u < 64; u += 7) {
      const auto p = backproject(d, in, u, v);
      const auto p2 = backproject(d2, in, u, v);
      REQUIRE(p);
      CHECK(p->z() == 1.7);
      CHECK((*p2 - 2.0 * *p).norm() < 1e-12);
    }
  }
}

TEST_CASE("backproject: bad pixel throws, invalid depth is no point") {
  DepthImage d(4, 4, 0.0);
  const CameraIntrinsics in{4, 4, 2, 2, 4, 4};
  CHECK_THROWS_AS(backproject(d, in, 4, 0), std::out_of_range);
  CHECK_THROWS_AS(backproject(d, in, -1, 0), std::out_of_range);
  CHECK_FALSE(backproject(d, in, 1, 1).has_value());
}

TEST_CASE("rotation_log / rotation_exp: fixed cases") {
  CHECK(rotation_log(Rotation()).norm() == 0.0);
  const Vec3 w = rotation_log(Rotation::about_z(0.1));
  CHECK(w.isApprox(Vec3(0, 0, 0.1), 1e-12));
  CHECK(max_abs_diff(rotation_exp(Vec3::Zero()).matrix(), Mat3::Identity()) == 0.0);
  const Rotation r = rotation_exp(Vec3(0, 0, kPi / 2));
  CHECK((r * Vec3::UnitX() - Vec3::UnitY()).norm() < 1e-12);
}

TEST_CASE("rotation_exp(log(R)) = R on random rotations") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Rotation r = random_rotation(rng);
    CHECK(max_abs_diff(rotation_exp(rotation_log(r)).matrix(), r.matrix()) < 1e-9);
  }
}

TEST_CASE("rotation log/exp from quaternion sampling oracle") {
  // The matrix is built from a random unit quaternion by the explicit
  // formula; log must return angle 2 acos(w) about the quaternion axis.
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int i = 0; i < 1000; ++i) {
    Eigen::Vector4d q(g(rng), g(rng), g(rng), g(rng));
    q.normalize();
    if (q[0] < 0) q = -q;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 m;
    m << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w), 2 * (x * y + z * w),
        1 - 2 * (x * x + z * z), 2 * (y * z - x * w), 2 * (x * z - y * w), 2 * (y * z + x * w),
        1 - 2 * (x * x + y * y);
    const double angle = 2 * std::acos(std::min(1.0, w));
    if (angle > kPi - 1e-3) continue;
    const Vec3 axis = Vec3(x, y, z).normalized();
    const Vec3 lw = rotation_log(Rotation::from_matrix(m, 1e-9));
    CHECK((lw - angle * axis).norm() < 1e-9);
  }
}

TEST_CASE("exp(w) exp(-w) = I") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 500; ++i) {
    Vec3 w(u(rng), u(rng), u(rng));
    w = w.normalized() * (kPi - 1e-3) * std::abs(u(rng));
    const Mat3 p = (rotation_exp(w) * rotation_exp(-w)).matrix();
    CHECK(max_abs_diff(p, Mat3::Identity()) < 1e-12);
  }
}

TEST_CASE("rotation validation") {
  Mat3 m = Mat3::Identity();
  m(0, 1) = 1e-3;
  CHECK_THROWS_AS(Rotation::from_matrix(m), ValidationError);
  CHECK_THROWS_AS(Rotation::from_matrix(-Mat3::Identity()), ValidationError);
  CHECK_THROWS_AS(rotation_exp(Vec3(std::nan(""), 0, 0)), ValidationError);
  CHECK_THROWS_AS(Rotation::from_quaternion(Eigen::Quaterniond(0, 0, 0, 0)), ValidationError);
}

TEST_CASE("rotation_log near pi returns a valid preimage") {
  const Rotation r = Rotation::about_x(kPi);
  const Vec3 w = rotation_log(r);
  CHECK(std::abs(w.norm() - kPi) < 1e-6);
  CHECK(max_abs_diff(rotation_exp(w).matrix(), r.matrix()) < 1e-9);
}

TEST_CASE("pose group laws") {
  std::mt19937_64 rng(5);
  CHECK(invert(Pose::identity()).matrix().isApprox(Eigen::Matrix4d::Identity()));
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    const Eigen::Matrix4d l = compose(compose(a, b), c).matrix();
    const Eigen::Matrix4d r = compose(a, compose(b, c)).matrix();
    CHECK((l - r).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((compose(a, invert(a)).matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((compose(invert(a), a).matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    // Homogeneous-matrix oracle.
    CHECK((compose(a, b).matrix() - a.matrix() * b.matrix()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("lidar to base with translation-only extrinsics") {
  const Pose lidar = Pose::from_translation(Vec3(1, 2, 3));
  const Pose mount = Pose::from_translation(Vec3(0.1, 0, 0.5));
  CHECK((lio_to_base(lidar, Pose()).matrix() - lidar.matrix()).norm() == 0.0);
  const Pose base = lio_to_base(lidar, mount);
  const Eigen::Matrix4d oracle = lidar.matrix() * mount.matrix().inverse();
  CHECK((base.matrix() - oracle).norm() < 1e-12);
  CHECK(base.translation.isApprox(Vec3(0.9, 2, 2.5), 1e-12));
}

TEST_CASE("rotations stay orthonormal over a million compositions") {
  std::mt19937_64 rng(9);
  std::vector<Rotation> pool;
  for (int i = 0; i < 64; ++i) pool.push_back(random_rotation(rng));
  Rotation acc;
  double worst = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    acc = acc * pool[static_cast<std::size_t>(i) & 63];
    if ((i & 1023) == 0) worst = std::max(worst, orthonormality_error(acc.matrix()));
  }
  worst = std::max(worst, orthonormality_error(acc.matrix()));
  CHECK(worst < 1e-12);
}

TEST_CASE("convex hull matches the cubic oracle on 500 random sets") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> n_pts(3, 40), coin(0, 2);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> grid(-4, 4);
  int compared = 0;
  for (int s = 0; s < 500; ++s) {
    std::vector<Vec2> pts;
    const int n = n_pts(rng);
    const bool lattice = coin(rng) == 0;  // duplicates and collinear points
    for (int i = 0; i < n; ++i) {
      pts.emplace_back(lattice ? Vec2(grid(rng), grid(rng)) : Vec2(u(rng), u(rng)));
    }
    const std::vector<Vec2> expect = oracle::hull_vertices_cubic(pts);
    std::vector<Vec2> got = convex_hull(pts);
    if (expect.size() < 3) {
      CHECK(got.size() < 3);
      continue;
    }
    // CCW order, start at the lexicographic minimum.
    double area = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
      const Vec2& a = got[i];
      const Vec2& b = got[(i + 1) % got.size()];
      area += a.x() * b.y() - a.y() * b.x();
    }
    CHECK(area > 0.0);
    CHECK(got.front() == expect.front());
    std::sort(got.begin(), got.end(), [](const Vec2& a, const Vec2& b) {
      return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
    });
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == expect[i]);
    ++compared;
  }
  CHECK(compared > 400);
}

TEST_CASE("hull_contains is boundary inclusive") {
  const auto h = convex_hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  CHECK(hull_contains(h, {0.5, 0.5}));
  CHECK(hull_contains(h, {1.0, 0.5}));
  CHECK(hull_contains(h, {0, 0}));
  CHECK_FALSE(hull_contains(h, {1.001, 0.5}));
}

TEST_CASE("depth file roundtrip and corrupt input") {
  DepthImage d(5, 3, 0.0);
  d.at(1, 1) = 1.2344;
  d.at(4, 2) = 70.0;  // does not fit in 16-bit millimetres
  const auto bytes = encode_depth(d);
  const DepthImage back = decode_depth(bytes);
  CHECK(back.width() == 5);
  CHECK(back.at(1, 1) == doctest::Approx(1.234));
  CHECK(back.at(4, 2) == 0.0);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_depth(bad), ValidationError);
  auto short_ = bytes;
  short_.pop_back();
  CHECK_THROWS_AS(decode_depth(short_), ValidationError);
}

TEST_CASE("pose json roundtrip and frame tags") {
  std::mt19937_64 rng(2);
  const Pose p = random_pose(rng);
  const Pose q = pose_from_json(to_json(p));
  CHECK((p.matrix() - q.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(require_frame(Frame::Base, Frame::World, "cloud"), ValidationError);
  CHECK_NOTHROW(require_frame(Frame::World, Frame::World, "cloud"));
}

TEST_CASE("intrinsics validation") {
  CHECK_THROWS_AS((CameraIntrinsics{0, 1, 1, 1, 4, 4}).validate(), ValidationError);
  CHECK_THROWS_AS((CameraIntrinsics{1, 1, 5, 1, 4, 4}).validate(), ValidationError);
  CHECK_NOTHROW(intr500().validate());
}
