#include <cstring>

#include "doctest.h"
#include "helpers.hpp"
#include "mmteleop/errors.hpp"
#include "mmteleop/wire.hpp"

using namespace mmteleop;
using testutil::random_pose;

TEST_CASE("compose_delta: identity and pure translation") {
  CHECK(compose_delta(Pose(), Pose()).is_zero());
  const DeltaPose d = compose_delta(Pose(), Pose::from_translation(0.1, 0, 0));
  CHECK(d.translation() == Eigen::Vector3d(0.1, 0, 0));
  CHECK(d.rotation() == Eigen::Vector3d::Zero());
}

TEST_CASE("compose_delta: 90 degree yaw against direct angle extraction") {
  const Pose cur({0, 0, 0}, Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ())));
  const DeltaPose d = compose_delta(Pose(), cur);
  // angle = 2 atan2(|v|, w), axis = v / |v|
  const Eigen::Quaterniond q = cur.orientation();
  const double angle = 2.0 * std::atan2(q.vec().norm(), q.w());
  const Eigen::Vector3d expected = q.vec().normalized() * angle;
  CHECK((d.rotation() - expected).norm() < 1e-9);
  CHECK((d.rotation() - Eigen::Vector3d(0, 0, M_PI / 2)).norm() < 1e-9);
}

TEST_CASE("apply_delta: zero delta and translation") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const Pose p = random_pose(rng);
    CHECK(apply_delta(p, DeltaPose::zero()) == p);
  }
  CHECK(apply_delta(Pose(), DeltaPose({1, 2, 3}, {0, 0, 0})).position() == Eigen::Vector3d(1, 2, 3));
}

TEST_CASE("compose/apply round trip over random pose pairs") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Pose a = random_pose(rng);
    const Pose b(testutil::random_vec(rng, 2.0), testutil::random_rotation(rng, M_PI - 0.1) * a.orientation());
    const Pose r = apply_delta(a, compose_delta(a, b));
    REQUIRE((r.position() - b.position()).norm() < 1e-9);
    REQUIRE(quaternion_distance(r.orientation(), b.orientation()) < 1e-9);
  }
}

TEST_CASE("quaternion stays normalized over 1e6 chained operations") {
  std::mt19937_64 rng(3);
  Pose p;
  const DeltaPose step(testutil::random_vec(rng, 1e-3), testutil::random_vec(rng, 0.05));
  const DeltaPose back(Eigen::Vector3d::Zero(), testutil::random_vec(rng, 0.05));
  for (int i = 0; i < 1000000; ++i) {
    p = apply_delta(p, (i % 2) ? step : back);
    if (i % 3 == 0) p = apply_delta(p, compose_delta(p, p * Pose(Eigen::Vector3d::Zero(), Eigen::Quaterniond(Eigen::AngleAxisd(1e-3, Eigen::Vector3d::UnitX())))));
  }
  CHECK(std::abs(p.orientation().norm() - 1.0) < 1e-6);
}

TEST_CASE("log/exp maps are inverse below pi") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector3d r = testutil::random_unit(rng) * testutil::uniform(rng, 0.0, M_PI - 1e-3);
    CHECK((quaternion_log(quaternion_exp(r)) - r).norm() < 1e-9);
  }
}

TEST_CASE("DeltaPose wraps rotation magnitude below pi") {
  const DeltaPose d({0, 0, 0}, {0, 0, 1.5 * M_PI});
  CHECK(d.rotation().z() == doctest::Approx(-0.5 * M_PI));
  CHECK(wrap_angle(3 * M_PI / 2) == doctest::Approx(-M_PI / 2));
}

TEST_CASE("chain_deltas equals sequential application") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Pose p = random_pose(rng);
    const DeltaPose a(testutil::random_vec(rng, 0.1), testutil::random_vec(rng, 0.8));
    const DeltaPose b(testutil::random_vec(rng, 0.1), testutil::random_vec(rng, 0.8));
    const Pose seq = apply_delta(apply_delta(p, a), b);
    const Pose once = apply_delta(p, chain_deltas(a, b));
    CHECK((seq.position() - once.position()).norm() < 1e-12);
    CHECK(quaternion_distance(seq.orientation(), once.orientation()) < 1e-9);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("flatten: empty command and base-only layout") {
  const ActionVector17 z = flatten(ActionCommand{});
  for (float x : z) CHECK(x == 0.0f);

  ActionCommand c;
  c.base = Sourced<BaseVelocity>{{0.5, 0, 0.2}, "kb"};
  const ActionVector17 v = flatten(c);
  for (std::size_t i = 0; i < 17; ++i) {
    if (i == 14) CHECK(v[i] == 0.5f);
    else if (i == 16) CHECK(v[i] == 0.2f);
    else CHECK(v[i] == 0.0f);
  }
}

TEST_CASE("unflatten: zeros and single slot") {
  ActionVector17 v{};
  const ActionCommand c = unflatten(v);
  REQUIRE(c.left_arm);
  CHECK(c.left_arm->value.is_zero());
  CHECK(c.right_arm->value.is_zero());
  CHECK(c.left_gripper->value == 0.0);
  CHECK(c.right_gripper->value == 0.0);
  CHECK(c.base->value == BaseVelocity{});
  CHECK(c.left_arm->source == kVectorSource);
  v[16] = 1.5f;
  CHECK(unflatten(v).base->value.wz == 1.5);
  const std::vector<float> short_v(16, 0.0f);
  CHECK_THROWS_AS(unflatten(short_v), DimensionError);
}

TEST_CASE("flatten/unflatten are mutual inverses on the numeric payload") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 1000; ++i) {
    // commands carried at f32 precision, as on the wire
    const ActionCommand q = quantize(testutil::random_command(rng));
    const ActionCommand back = unflatten(flatten(q));
    REQUIRE(back.left_arm->value == q.left_arm->value);
    REQUIRE(back.right_arm->value == q.right_arm->value);
    REQUIRE(back.left_gripper->value == q.left_gripper->value);
    REQUIRE(back.right_gripper->value == q.right_gripper->value);
    REQUIRE(back.base->value == q.base->value);

    ActionVector17 v;
    for (float& x : v) x = static_cast<float>(testutil::uniform(rng, -0.5, 0.5));
    const ActionVector17 w = flatten(unflatten(v));
    REQUIRE(std::memcmp(v.data(), w.data(), sizeof v) == 0);
  }
}

TEST_CASE("17-slot layout matches frozen golden bytes") {
  ActionCommand c;
  c.left_arm = Sourced<DeltaPose>{DeltaPose({0.1, 0.2, 0.3}, {0, 0, 0.5}), "a"};
  c.left_gripper = Sourced<double>{1.0, "a"};
  c.right_arm = Sourced<DeltaPose>{DeltaPose({-0.1, 0, 0.05}, {0, 0, 0}), "a"};
  c.right_gripper = Sourced<double>{0.25, "a"};
  c.base = Sourced<BaseVelocity>{{0.5, 0, 0.2}, "a"};
  Bytes out;
  ByteWriter w(out);
  write_action_vector(w, flatten(c));
  CHECK(out == testutil::from_hex(
                   "cdcccc3dcdcc4c3e9a99993e00000000000000000000003f0000803fcdccccbd00000000cdcc4c3d00000000"
                   "00000000000000000000803e0000003f00000000cdcc4c3e"));
  ByteReader r(out);
  CHECK(read_action_vector(r) == flatten(c));
}

TEST_CASE("body part names round trip") {
  for (BodyPart p : kAllBodyParts) CHECK(parse_body_part(to_string(p)) == p);
  CHECK_THROWS_AS(parse_body_part("tail"), ConfigError);
}
