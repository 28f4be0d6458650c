#include <doctest.h>

#include <cmath>

#include "sparsereg/error.hpp"
#include "sparsereg/point_cloud.hpp"
#include "sparsereg/pose_math.hpp"
#include "test_util.hpp"

using namespace sparsereg;
using testutil::eigen_rot;
using testutil::random_axis;
using testutil::random_rotation;

namespace {

bool near(const UnitQuaternion& a, const UnitQuaternion& b, double tol) {
  return (a.coeffs() - b.coeffs()).cwiseAbs().maxCoeff() < tol;
}

const Vec3 kZ = Vec3::UnitZ();

}  // namespace

TEST_SUITE("pose_math") {
  TEST_CASE("compose identity, inverse and coaxial angles") {
    Rng rng(1);
    const UnitQuaternion q = random_rotation(rng);
    CHECK(near(quat_compose(UnitQuaternion::identity(), q), q, 1e-15));
    CHECK(near(quat_compose(q, quat_inverse(q)), UnitQuaternion::identity(), 1e-15));
    CHECK(near(quat_compose(eigen_rot(kZ, deg_to_rad(30)), eigen_rot(kZ, deg_to_rad(40))),
               eigen_rot(kZ, deg_to_rad(70)), 1e-15));
  }

  TEST_CASE("compose matches matrix product") {
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
      const UnitQuaternion a = random_rotation(rng), b = random_rotation(rng);
      const Mat3 expected = quat_to_matrix(a) * quat_to_matrix(b);
      CHECK((quat_to_matrix(quat_compose(a, b)) - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("inverse") {
    CHECK(quat_inverse(UnitQuaternion::identity()) == UnitQuaternion::identity());
    CHECK(near(quat_inverse(eigen_rot(kZ, deg_to_rad(30))), eigen_rot(kZ, deg_to_rad(-30)), 1e-15));
    Rng rng(3);
    const UnitQuaternion q = random_rotation(rng);
    CHECK(quat_inverse(quat_inverse(q)) == q);
  }

  TEST_CASE("rotate_point") {
    const Vec3 p(1, 2, 3);
    CHECK((rotate_point(UnitQuaternion::identity(), p) - p).norm() == 0.0);
    CHECK((rotate_point(eigen_rot(kZ, kPi / 2), Vec3(1, 0, 0)) - Vec3(0, 1, 0)).norm() < 1e-15);
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
      const Vec3 x(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50));
      CHECK(std::abs(rotate_point(random_rotation(rng), x).norm() - x.norm()) < 1e-12);
    }
  }

  TEST_CASE("axis-angle conversions") {
    CHECK(axis_angle_to_quat({0.0, Vec3(0.3, -0.2, 0.9).normalized()}) == UnitQuaternion::identity());
    const UnitQuaternion half = axis_angle_to_quat({kPi, kZ});
    CHECK(near(half, UnitQuaternion::from_components(0, 0, 0, 1), 1e-15));
    const UnitQuaternion sixty = axis_angle_to_quat({deg_to_rad(60), Vec3::UnitX()});
    CHECK(sixty.w() == doctest::Approx(0.8660254037844386).epsilon(1e-15));
    CHECK(sixty.x() == doctest::Approx(0.5).epsilon(1e-15));

    const AxisAngle null = quat_to_axis_angle(UnitQuaternion::identity());
    CHECK(null.theta == 0.0);
    CHECK(null.axis == kZ);
    const AxisAngle pi = quat_to_axis_angle(UnitQuaternion::from_components(0, 0, 0, 1));
    CHECK(pi.theta == doctest::Approx(kPi).epsilon(1e-15));
    CHECK((pi.axis - kZ).norm() < 1e-15);

    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
      const AxisAngle aa{rng.uniform(1e-3, kPi - 1e-3), random_axis(rng)};
      const AxisAngle back = quat_to_axis_angle(axis_angle_to_quat(aa));
      CHECK(back.theta == doctest::Approx(aa.theta).epsilon(1e-12));
      CHECK((back.axis - aa.axis).norm() < 1e-9);
    }
  }

  TEST_CASE("euler convention against sequential single-axis rotations") {
    CHECK(euler_to_quat({0, 0, 0}) == UnitQuaternion::identity());
    CHECK(near(euler_to_quat({30, 0, 0}), eigen_rot(kZ, deg_to_rad(30)), 1e-15));
    const Vec3 p(3, -7, 11);
    const EulerAngles e{10, 20, 30};
    // Roll about z, then pitch about x, then yaw about y.
    const Vec3 expected = Eigen::AngleAxisd(deg_to_rad(e.yaw), Vec3::UnitY()) *
                          (Eigen::AngleAxisd(deg_to_rad(e.pitch), Vec3::UnitX()) *
                           (Eigen::AngleAxisd(deg_to_rad(e.roll), kZ) * p));
    CHECK((rotate_point(euler_to_quat(e), p) - expected).norm() < 1e-12);

    Rng rng(6);
    for (int i = 0; i < 1000; ++i) {
      const EulerAngles a{rng.uniform(-170, 170), rng.uniform(-85, 85), rng.uniform(-170, 170)};
      const EulerAngles b = quat_to_euler(euler_to_quat(a));
      CHECK(b.roll == doctest::Approx(a.roll).epsilon(1e-9));
      CHECK(b.pitch == doctest::Approx(a.pitch).epsilon(1e-9));
      CHECK(b.yaw == doctest::Approx(a.yaw).epsilon(1e-9));
    }
  }

  TEST_CASE("matrix round trip") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
      const UnitQuaternion q = random_rotation(rng);
      CHECK(near(matrix_to_quat(quat_to_matrix(q)), q, 1e-12));
    }
  }

  TEST_CASE("rotation_error examples") {
    Rng rng(8);
    const UnitQuaternion q = random_rotation(rng);
    CHECK(rotation_error(q, q) == 0.0);
    CHECK(rotation_error(eigen_rot(kZ, deg_to_rad(30)), UnitQuaternion::identity()) ==
          doctest::Approx(30.0).epsilon(1e-12));
    const Vec4 c = q.coeffs();
    const UnitQuaternion flipped = UnitQuaternion::from_vector(-c);
    CHECK(rotation_error(q, flipped) == 0.0);
  }

  TEST_CASE("rotation_error equals the axis-angle of the residual") {
    Rng rng(9);
    for (int i = 0; i < 10000; ++i) {
      const UnitQuaternion a = random_rotation(rng), b = random_rotation(rng);
      const double theta = rad_to_deg(quat_to_axis_angle(quat_compose(a, quat_inverse(b))).theta);
      CHECK(std::abs(rotation_error(a, b) - theta) < 1e-9);
    }
  }

  TEST_CASE("rotation_error symmetry and triangle inequality") {
    Rng rng(10);
    for (int i = 0; i < 1000; ++i) {
      const UnitQuaternion a = random_rotation(rng), b = random_rotation(rng),
                           c = random_rotation(rng);
      CHECK(std::abs(rotation_error(a, b) - rotation_error(b, a)) < 1e-9);
      CHECK(rotation_error(a, c) <= rotation_error(a, b) + rotation_error(b, c) + 1e-6);
    }
  }

  TEST_CASE("associativity and canonical idempotence") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
      const UnitQuaternion a = random_rotation(rng), b = random_rotation(rng),
                           c = random_rotation(rng);
      CHECK(near(quat_compose(quat_compose(a, b), c), quat_compose(a, quat_compose(b, c)), 1e-9));
      const Vec4 raw(rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1));
      CHECK(canonicalize(canonicalize(raw)) == canonicalize(raw));
      CHECK(canonicalize(raw)[0] >= 0.0);
    }
    CHECK(canonicalize(Vec4(0, -1, 0, 0)) == Vec4(0, 1, 0, 0));
  }

  TEST_CASE("translation_error") {
    CHECK(translation_error(Vec3(1, 2, 3), Vec3(1, 2, 3)) == 0.0);
    CHECK(translation_error(Vec3(1, 0, 0), Vec3::Zero()) == 1.0);
    CHECK(translation_error(Vec3(3, 4, 0), Vec3::Zero()) == 5.0);
  }

  TEST_CASE("zero quaternion is rejected") {
    CHECK_THROWS_AS(UnitQuaternion::from_components(0, 0, 0, 0), Error);
  }

  TEST_CASE("apply_transform is rigid and invertible") {
    Rng rng(12);
    PointCloud cloud;
    for (int i = 0; i < 50; ++i) {
      cloud.points.emplace_back(rng.uniform(-80, 80), rng.uniform(-80, 80), rng.uniform(-40, 40));
    }
    RigidTransform t;
    t.q = random_rotation(rng);
    t.t = Vec3(4, -3, 7);
    CHECK(apply_transform(RigidTransform::identity(), cloud).points == cloud.points);
    const PointCloud moved = apply_transform(t, cloud);
    const PointCloud back = apply_transform(t.inverse(), moved);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      CHECK((back.points[i] - cloud.points[i]).norm() < 1e-9);
      for (std::size_t j = i + 1; j < cloud.size(); ++j) {
        const double d0 = (cloud.points[i] - cloud.points[j]).norm();
        const double d1 = (moved.points[i] - moved.points[j]).norm();
        CHECK(std::abs(d0 - d1) < 1e-9);
      }
    }
  }

  TEST_CASE("compose applies a then b") {
    Rng rng(13);
    RigidTransform a, b;
    a.q = random_rotation(rng);
    a.t = Vec3(1, 2, 3);
    b.q = random_rotation(rng);
    b.t = Vec3(-4, 0, 5);
    const Vec3 p(10, -20, 30);
    CHECK((compose(b, a).apply(p) - b.apply(a.apply(p))).norm() < 1e-12);
  }

  TEST_CASE("json round trip") {
    Rng rng(14);
    RigidTransform t;
    t.q = random_rotation(rng);
    t.t = Vec3(0.1, -2.5, 7.25);
    const nlohmann::json j = t;
    CHECK(j.at("q").size() == 4);
    const RigidTransform back = j.get<RigidTransform>();
    CHECK(near(back.q, t.q, 1e-15));
    CHECK(back.t == t.t);
  }
}
