#include "doctest.h"
#include "helpers.hpp"
#include "mmteleop/compositor.hpp"
#include "mmteleop/errors.hpp"
#include "mmteleop/parsers.hpp"

using namespace mmteleop;

namespace {

constexpr TimestampUs kTick = 50000;

KeyboardParser make_keyboard() {
  ParserConfig cfg;
  cfg.base_linear_gain = 0.3;
  cfg.base_angular_gain = 0.5;
  cfg.translation_gain = 0.01;
  return KeyboardParser("kb", cfg,
                        make_keymap({{"w", {BodyPart::base, 0, 1}},
                                     {"a", {BodyPart::base, 2, 1}},
                                     {"i", {BodyPart::right_arm, 0, 1}},
                                     {"g", {BodyPart::right_gripper, 0, 1}},
                                     {"t", {BodyPart::torso, 0, 1}}}));
}

KeypointFrame standing(double x, double hip_height = 1.0) {
  KeypointFrame f;
  f.hip_center = {x, 0, hip_height};
  f.left_ankle = {x, 0.1, 0};
  f.right_ankle = {x, -0.1, 0};
  f.left_palm = Pose::from_translation(x + 0.3, 0.2, 1.1);
  f.right_palm = Pose::from_translation(x + 0.3, -0.2, 1.1);
  return f;
}

}  // namespace

TEST_CASE("keyboard: held keys map to independent DoFs") {
  KeyboardParser kb = make_keyboard();
  CHECK(kb.tick(0).empty());

  kb.consume(InputEvent::key("kb", 10, "w", true));
  PartialCommand p = kb.tick(kTick);
  REQUIRE(p.base);
  CHECK(p.base->value == BaseVelocity{0.3, 0, 0});
  CHECK(p.base->source == "kb");

  kb.consume(InputEvent::key("kb", kTick + 10, "a", true));
  p = kb.tick(2 * kTick);
  CHECK(p.base->value == BaseVelocity{0.3, 0, 0.5});

  kb.consume(InputEvent::key("kb", 2 * kTick + 10, "w", false));
  kb.consume(InputEvent::key("kb", 2 * kTick + 20, "a", false));
  CHECK(kb.tick(3 * kTick).empty());
}

TEST_CASE("keyboard: tap between ticks counts once, events of other devices ignored") {
  KeyboardParser kb = make_keyboard();
  kb.consume(InputEvent::key("kb", 5, "i", true));
  kb.consume(InputEvent::key("kb", 6, "i", false));
  kb.consume(InputEvent::key("other", 7, "w", true));
  const PartialCommand p = kb.tick(kTick);
  REQUIRE(p.right_arm);
  CHECK(p.right_arm->value.translation() == Eigen::Vector3d(0.01, 0, 0));
  CHECK_FALSE(p.base);
  CHECK(kb.tick(2 * kTick).empty());
}

TEST_CASE("keyboard: capabilities follow the keymap; duplicates rejected") {
  KeyboardParser kb = make_keyboard();
  CHECK(kb.capabilities() == std::set<BodyPart>{BodyPart::base, BodyPart::right_arm, BodyPart::right_gripper, BodyPart::torso});
  CHECK_THROWS_AS(make_keymap({{"w", {BodyPart::base, 0, 1}}, {"w", {BodyPart::base, 2, 1}}}), ConfigError);
  CHECK_THROWS_AS(make_keymap({{"w", {BodyPart::base, 3, 1}}}), ConfigError);
}

TEST_CASE("six-dof: base mode, deadband, mode cycle") {
  ParserConfig cfg;
  cfg.base_linear_gain = 0.4;
  SixDofParser puck("puck", cfg);
  CHECK(puck.mode() == SixDofMode::left_arm);

  // all axes zero in arm mode: no delta
  CHECK_FALSE(puck.tick(0).left_arm);
  // below the deadband: still nothing
  puck.consume(InputEvent::axis("puck", 1, 0, 0.04));
  CHECK_FALSE(puck.tick(kTick).left_arm);

  for (int i = 0; i < 2; ++i) {
    puck.consume(InputEvent::button("puck", 10 + 2 * i, 0, true));
    puck.consume(InputEvent::button("puck", 11 + 2 * i, 0, false));
  }
  CHECK(puck.mode() == SixDofMode::base);
  puck.consume(InputEvent::axis("puck", 20, 0, 1.0));
  const PartialCommand p = puck.tick(2 * kTick);
  REQUIRE(p.base);
  CHECK(p.base->value == BaseVelocity{0.4, 0, 0});

  for (int i = 0; i < 2; ++i) {
    puck.consume(InputEvent::button("puck", 30 + 2 * i, 0, true));
    puck.consume(InputEvent::button("puck", 31 + 2 * i, 0, false));
  }
  CHECK(puck.mode() == SixDofMode::left_arm);
}

TEST_CASE("six-dof: mode button cycle has length 4") {
  SixDofParser puck("puck", ParserConfig{});
  for (int i = 0; i < 4; ++i) {
    puck.consume(InputEvent::button("puck", 2 * i, 0, true));
    puck.consume(InputEvent::button("puck", 2 * i + 1, 0, false));
  }
  CHECK(puck.mode() == SixDofMode::left_arm);
}

TEST_CASE("vr: stationary hand gives zero delta, 2 cm motion gives 2 cm") {
  VrParser vr("vr", ParserConfig{});
  const Pose p0 = Pose::from_translation(0.3, 0.2, 1.0);
  vr.consume(InputEvent::tracked_pose("vr", 1, Hand::left, p0));
  CHECK_FALSE(vr.tick(kTick).left_arm);  // first sample anchors
  vr.consume(InputEvent::tracked_pose("vr", kTick + 1, Hand::left, p0));
  PartialCommand p = vr.tick(2 * kTick);
  REQUIRE(p.left_arm);
  CHECK(p.left_arm->value.is_zero());
  vr.consume(InputEvent::tracked_pose("vr", 2 * kTick + 1, Hand::left, Pose::from_translation(0.32, 0.2, 1.0)));
  p = vr.tick(3 * kTick);
  CHECK((p.left_arm->value.translation() - Eigen::Vector3d(0.02, 0, 0)).norm() < 1e-12);
  CHECK(p.left_arm->value.rotation().norm() < 1e-12);
}

TEST_CASE("vr: 18 ticks of 5 degree yaw accumulate to 90 degrees") {
  VrParser vr("vr", ParserConfig{});
  Pose applied;  // robot-side accumulation of the emitted deltas
  for (int k = 0; k <= 18; ++k) {
    const Eigen::Quaterniond q(Eigen::AngleAxisd(k * 5.0 * M_PI / 180.0, Eigen::Vector3d::UnitZ()));
    vr.consume(InputEvent::tracked_pose("vr", k * kTick + 1, Hand::right, Pose({0.3, -0.2, 1.0}, q)));
    const PartialCommand p = vr.tick((k + 1) * kTick);
    if (p.right_arm) applied = apply_delta(applied, p.right_arm->value);
  }
  const Eigen::Quaterniond expected(Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ()));
  CHECK(quaternion_distance(applied.orientation(), expected) < 1e-6);
}

TEST_CASE("vr: clutch suppresses hand deltas until engaged") {
  ParserConfig cfg;
  cfg.clutch_button = 3;
  VrParser vr("vr", cfg);
  vr.consume(InputEvent::tracked_pose("vr", 1, Hand::left, Pose()));
  vr.tick(kTick);
  vr.consume(InputEvent::tracked_pose("vr", kTick + 1, Hand::left, Pose::from_translation(0.1, 0, 0)));
  CHECK_FALSE(vr.tick(2 * kTick).left_arm);
  vr.consume(InputEvent::button("vr", 2 * kTick + 1, 3, true));
  vr.consume(InputEvent::tracked_pose("vr", 2 * kTick + 2, Hand::left, Pose::from_translation(0.15, 0, 0)));
  const PartialCommand p = vr.tick(3 * kTick);
  REQUIRE(p.left_arm);
  CHECK(p.left_arm->value.translation().x() == doctest::Approx(0.05));
}

TEST_CASE("vision: hips at 0.5 m/s forward give vx within 2% of gain x 0.5") {
  ParserConfig cfg;
  cfg.smoothing = 1.0;
  cfg.base_linear_gain = 1.0;
  VisionParser vision("cam", cfg, TorsoCalibration{0.6, 1.0});
  const double fps = 30.0;
  const TimestampUs frame_dt = static_cast<TimestampUs>(1e6 / fps);
  std::vector<double> vx;
  TimestampUs t = 0;
  for (int tick = 1; tick <= 40; ++tick) {
    for (; t <= tick * kTick; t += frame_dt) vision.consume(InputEvent::keypoints("cam", t, standing(0.5 * t * 1e-6)));
    const PartialCommand p = vision.tick(tick * kTick);
    if (p.base) vx.push_back(p.base->value.vx);
  }
  REQUIRE(vx.size() > 30);
  for (double v : vx) CHECK(std::abs(v - 0.5) <= 0.02 * 0.5);
}

TEST_CASE("vision: hip-ankle boundaries map to torso 0 and 1 exactly") {
  ParserConfig cfg;
  cfg.smoothing = 1.0;
  VisionParser vision("cam", cfg, TorsoCalibration{0.6, 1.0});
  vision.consume(InputEvent::keypoints("cam", 0, standing(0, 1.0)));
  PartialCommand p = vision.tick(kTick);
  REQUIRE(p.torso);
  CHECK(p.torso->value == 1.0);
  vision.consume(InputEvent::keypoints("cam", kTick + 1, standing(0, 0.6)));
  p = vision.tick(2 * kTick);
  CHECK(p.torso->value == 0.0);
  vision.consume(InputEvent::keypoints("cam", 2 * kTick + 1, standing(0, 0.8)));
  CHECK(vision.tick(3 * kTick).torso->value == doctest::Approx(0.5));
}

TEST_CASE("vision: sub-threshold confidence frames emit no fields") {
  ParserConfig cfg;
  cfg.smoothing = 1.0;
  cfg.confidence_threshold = 0.5;
  VisionParser vision("cam", cfg, TorsoCalibration{0.6, 1.0});
  vision.consume(InputEvent::keypoints("cam", 0, standing(0)));
  vision.tick(kTick);
  KeypointFrame low = standing(0.1);
  low.confidence = {0.2, 0.2, 0.2, 0.2, 0.2};
  vision.consume(InputEvent::keypoints("cam", kTick + 1, low));
  CHECK(vision.tick(2 * kTick).empty());
}

TEST_CASE("vision: still operator gives zero base; auto-calibration uses standing pose") {
  ParserConfig cfg;
  cfg.smoothing = 1.0;
  cfg.calibration_duration_s = 0.5;
  cfg.torso_travel = 0.4;
  VisionParser vision("cam", cfg);
  for (int k = 0; k < 30; ++k) {
    vision.consume(InputEvent::keypoints("cam", k * kTick, standing(0)));
    const PartialCommand p = vision.tick(k * kTick + 1);
    if (p.base) CHECK(p.base->value == BaseVelocity{});
    if (p.left_arm) CHECK(p.left_arm->value.is_zero());
  }
  REQUIRE(vision.calibration());
  CHECK(vision.calibration()->hip_ankle_max == doctest::Approx(1.0));
  CHECK(vision.calibration()->hip_ankle_min == doctest::Approx(0.6));
}

TEST_CASE("vision: smoothing alpha 0 holds the first frame") {
  ParserConfig cfg;
  cfg.smoothing = 0.0;
  VisionParser vision("cam", cfg, TorsoCalibration{0.6, 1.0});
  for (int k = 0; k < 10; ++k) {
    vision.consume(InputEvent::keypoints("cam", k * kTick, standing(0.1 * k, 1.0 - 0.02 * k)));
    const PartialCommand p = vision.tick(k * kTick + 1);
    if (p.base) CHECK(p.base->value == BaseVelocity{});
    if (p.torso) CHECK(p.torso->value == 1.0);
  }
}

TEST_CASE("parsers are pure functions of the event sequence") {
  std::mt19937_64 rng(11);
  std::vector<InputEvent> events;
  for (int i = 0; i < 200; ++i) {
    const TimestampUs t = i * 7000;
    events.push_back(InputEvent::axis("puck", t, static_cast<int>(rng() % 6), testutil::uniform(rng, -1, 1)));
    if (i % 17 == 0) events.push_back(InputEvent::button("puck", t + 1, 0, (i / 17) % 2 == 0));
  }
  auto run = [&] {
    SixDofParser p("puck", ParserConfig{});
    std::vector<PartialCommand> out;
    std::size_t next = 0;
    for (int k = 0; k < 40; ++k) {
      for (; next < events.size() && events[next].timestamp_us <= k * kTick; ++next) p.consume(events[next]);
      out.push_back(p.tick(k * kTick));
    }
    return out;
  };
  CHECK(run() == run());
}

// ---------------------------------------------------------------------------

TEST_CASE("composite: VR arms with vision base and torso") {
  PartialCommand vr;
  vr.left_arm = Sourced<DeltaPose>{DeltaPose({0.01, 0, 0}, {0, 0, 0}), "vr"};
  vr.right_arm = Sourced<DeltaPose>{DeltaPose({0, 0.01, 0}, {0, 0, 0}), "vr"};
  vr.base = Sourced<BaseVelocity>{{0.9, 0, 0}, "vr"};
  PartialCommand vision;
  vision.base = Sourced<BaseVelocity>{{0.2, 0, 0.1}, "cam"};
  vision.torso = Sourced<double>{0.7, "cam"};

  Assignment a;
  a.assign(BodyPart::left_arm, "vr");
  a.assign(BodyPart::right_arm, "vr");
  a.assign(BodyPart::base, "cam");
  a.assign(BodyPart::torso, "cam");
  const ActionCommand out = composite_merge({vr, vision}, a, 123);
  CHECK(out.left_arm == vr.left_arm);
  CHECK(out.right_arm == vr.right_arm);
  CHECK(out.base == vision.base);
  CHECK(out.torso == vision.torso);
  CHECK_FALSE(out.left_gripper);
  CHECK(out.timestamp_us == 123);
}

TEST_CASE("composite: single device pass-through and silent owner") {
  std::mt19937_64 rng(12);
  const ActionCommand c = testutil::random_command(rng, "kb");
  ActionCommand merged = composite_merge({c}, Assignment::all_to("kb"), c.timestamp_us);
  CHECK(merged == c);

  PartialCommand silent;
  merged = composite_merge({silent}, Assignment::all_to("kb"), 0);
  CHECK(merged.empty());
}

TEST_CASE("composite never emits a field from an unassigned device") {
  std::mt19937_64 rng(13);
  const std::vector<std::string> devices = {"a", "b", "c"};
  for (int trial = 0; trial < 200; ++trial) {
    Assignment asg;
    for (BodyPart p : kAllBodyParts) {
      if (rng() % 4 != 0) asg.assign(p, devices[rng() % 3]);
    }
    std::vector<PartialCommand> partials;
    for (const auto& d : devices) partials.push_back(testutil::random_command(rng, d));
    const ActionCommand out = composite_merge(partials, asg, 0);
    for (BodyPart p : kAllBodyParts) {
      const std::string* owner = asg.owner(p);
      const std::string* src = part_source(out, p);
      if (owner == nullptr) {
        CHECK(src == nullptr);
      } else {
        REQUIRE(src != nullptr);
        CHECK(*src == *owner);
      }
    }
  }
}

TEST_CASE("assignment resolution") {
  using S = std::set<BodyPart>;
  const S all(kAllBodyParts.begin(), kAllBodyParts.end());
  SUBCASE("two explicit claims on base") {
    CHECK_THROWS_AS(resolve_assignment({{"kb", all, {BodyPart::base}, 3}, {"puck", all, {BodyPart::base}, 9}}),
                    ConfigError);
    try {
      resolve_assignment({{"kb", all, {BodyPart::base}, 3}, {"puck", all, {BodyPart::base}, 9}});
    } catch (const ConfigError& e) {
      CHECK(e.line() == 9);
    }
  }
  SUBCASE("explicit request wins over implicit") {
    const Assignment a = resolve_assignment({{"vr", all, {}, 1}, {"cam", all, {BodyPart::base, BodyPart::torso}, 2}});
    CHECK(*a.owner(BodyPart::base) == "cam");
    CHECK(*a.owner(BodyPart::left_arm) == "vr");
  }
  SUBCASE("request outside capabilities") {
    CHECK_THROWS_AS(resolve_assignment({{"kb", S{BodyPart::base}, S{BodyPart::torso}, 1}}), ConfigError);
  }
  SUBCASE("ambiguous implicit claims") {
    CHECK_THROWS_AS(resolve_assignment({{"a", all, {}, 1}, {"b", all, {}, 2}}), ConfigError);
  }
}
