#include <cmath>

#include "doctest.h"
#include "loco/nn/rng.hpp"
#include "loco/sim/engine.hpp"
#include "loco/sim/math3d.hpp"
#include "loco/sim/terrain.hpp"

using namespace loco::sim;
using loco::nn::Rng;

namespace {

TerrainMap flat_terrain() { return terrain_generate(TerrainKind::Smooth, 0, 1); }

bool states_equal(const SimState& a, const SimState& b) {
  if (a.time != b.time) return false;
  for (int i = 0; i < 3; ++i) {
    if (a.base_position[i] != b.base_position[i]) return false;
    if (a.linear_velocity[i] != b.linear_velocity[i]) return false;
    if (a.angular_velocity[i] != b.angular_velocity[i]) return false;
  }
  for (int i = 0; i < 4; ++i)
    if (a.base_orientation[i] != b.base_orientation[i]) return false;
  for (int i = 0; i < kNumJoints; ++i) {
    if (a.joint_positions[i] != b.joint_positions[i]) return false;
    if (a.joint_velocities[i] != b.joint_velocities[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("terrain: level-0 smooth is exactly flat") {
  const TerrainMap t = flat_terrain();
  CHECK(t.max_abs_height() == 0.0);
  CHECK(t.height_at(1.3, -2.7) == 0.0);
}

TEST_CASE("terrain: level-9 smooth inclines at 22 degrees") {
  const TerrainMap t = terrain_generate(TerrainKind::Smooth, 9, 1);
  const double slope = (t.height_at(1.0, 0.0) - t.height_at(0.0, 0.0)) / 1.0;
  CHECK(slope == doctest::Approx(std::tan(22.0 * M_PI / 180.0)).epsilon(1e-9));
}

TEST_CASE("terrain: identical kind/level/seed reproduces the grid bitwise") {
  const TerrainMap a = terrain_generate(TerrainKind::Stairs, 5, 77);
  const TerrainMap b = terrain_generate(TerrainKind::Stairs, 5, 77);
  CHECK(a.heights == b.heights);
  const TerrainMap c = terrain_generate(TerrainKind::Rough, 5, 78);
  const TerrainMap d2 = terrain_generate(TerrainKind::Rough, 5, 79);
  CHECK(c.heights != d2.heights);
}

TEST_CASE("terrain: level out of range is a configuration error") {
  CHECK_THROWS_AS(terrain_generate(TerrainKind::Rough, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(terrain_generate(TerrainKind::Rough, -1, 1), std::invalid_argument);
}

TEST_CASE("pd torque law") {
  PdConfig pd;
  DomainParams dom;
  Vec12 q{}, dq{};
  SUBCASE("zero error, zero rate -> zero torque") {
    const Vec12 tau = pd_torque(q, q, dq, pd, dom, 33.5);
    for (double t : tau) CHECK(t == 0.0);
  }
  SUBCASE("0.1 rad error at Kp=28 -> 2.8 Nm") {
    Vec12 qd = q;
    qd[3] += 0.1;
    const Vec12 tau = pd_torque(qd, q, dq, pd, dom, 33.5);
    CHECK(tau[3] == doctest::Approx(2.8).epsilon(1e-12));
  }
  SUBCASE("huge error clamps at the torque limit") {
    Vec12 qd = q;
    qd[0] = 100.0;
    const Vec12 tau = pd_torque(qd, q, dq, pd, dom, 33.5);
    CHECK(tau[0] == 33.5);
  }
  SUBCASE("domain factors scale gains and output") {
    dom.kp_factor = 1.1;
    dom.motor_strength = 0.9;
    Vec12 qd = q;
    qd[1] += 0.1;
    const Vec12 tau = pd_torque(qd, q, dq, pd, dom, 33.5);
    CHECK(tau[1] == doctest::Approx(0.9 * 28.0 * 1.1 * 0.1).epsilon(1e-12));
  }
}

TEST_CASE("foot contact force") {
  const TerrainMap t = flat_terrain();
  ContactConfig c;
  std::array<double, 2> anchor{};
  bool anchored = false;
  SUBCASE("above the surface -> zero force") {
    const Vec3 f = foot_contact_force({0.0, 0.0, 0.05}, {0.0, 0.0, 0.0}, t, c, anchor, anchored);
    CHECK(f == Vec3{0.0, 0.0, 0.0});
    CHECK_FALSE(anchored);
  }
  SUBCASE("static penetration gives k_n * depth") {
    const Vec3 f = foot_contact_force({0.0, 0.0, -0.002}, {0.0, 0.0, 0.0}, t, c, anchor, anchored);
    CHECK(f[2] == doctest::Approx(c.normal_stiffness * 0.002).epsilon(1e-12));
    CHECK(f[0] == 0.0);
    CHECK(anchored);
  }
  SUBCASE("sliding saturates exactly on the friction cone") {
    // large slip velocity so the unclamped demand exceeds the cone
    const Vec3 f = foot_contact_force({0.1, 0.0, -0.002}, {2.0, 0.0, 0.0}, t, c, anchor, anchored);
    const double cone = t.friction * f[2];
    CHECK(std::hypot(f[0], f[1]) == doctest::Approx(cone).epsilon(1e-12));
    CHECK(f[0] < 0.0);  // opposes the slip
  }
}

TEST_CASE("env_reset settles at the stand pose on flat ground") {
  RobotConfig robot;
  PdConfig pd;
  ContactConfig contact;
  const TerrainMap t = flat_terrain();
  const SimState s = env_reset(robot, t, {}, pd, contact);
  CHECK(s.time == 0.0);
  for (int i = 0; i < kNumJoints; ++i) CHECK(s.joint_positions[i] == robot.stand_pose[i]);
  CHECK(norm(s.linear_velocity) == 0.0);
  CHECK(std::fabs(base_height_above_ground(s, t) - robot.body_height_target) < 0.02);
  // penetration at rest stays under a centimeter
  for (const auto& foot : s.feet) {
    CHECK(foot.position_world[2] > -0.01);
    CHECK(foot.in_contact);
  }
  // deterministic: a second reset is identical
  const SimState s2 = env_reset(robot, t, {}, pd, contact);
  CHECK(states_equal(s, s2));
}

TEST_CASE("free body: compensated gravity keeps the twist constant") {
  RobotConfig robot;
  PdConfig pd;
  ContactConfig contact;
  const TerrainMap t = flat_terrain();
  SimState s;
  s.base_position = {0.0, 0.0, 5.0};
  s.linear_velocity = {0.3, -0.2, 0.1};
  s.disturbance = {0.0, 0.0, robot.base_mass * kGravity};  // cancels gravity exactly
  update_foot_kinematics(s, robot);
  const Vec3 v0 = s.linear_velocity;
  for (int i = 0; i < 50; ++i) physics_substep(s, Vec12{}, robot, pd, contact, {}, t);
  for (int i = 0; i < 3; ++i) CHECK(s.linear_velocity[i] == doctest::Approx(v0[i]).epsilon(1e-12));
  CHECK(norm(s.angular_velocity) == 0.0);
}

TEST_CASE("free fall reaches -9.81 m/s after one second") {
  RobotConfig robot;
  PdConfig pd;
  ContactConfig contact;
  const TerrainMap t = flat_terrain();
  SimState s;
  s.base_position = {0.0, 0.0, 50.0};
  update_foot_kinematics(s, robot);
  for (int i = 0; i < 200; ++i) physics_substep(s, Vec12{}, robot, pd, contact, {}, t);
  CHECK(std::fabs(quat_rotate(s.base_orientation, s.linear_velocity)[2] + kGravity) < 1e-6);
}

TEST_CASE("env_step is bitwise deterministic") {
  RobotConfig robot;
  PdConfig pd;
  ContactConfig contact;
  const TerrainMap t = terrain_generate(TerrainKind::Rough, 3, 5);
  auto run = [&]() {
    SimState s = env_reset(robot, t, {}, pd, contact);
    Vec12 q_des = robot.stand_pose;
    for (int i = 0; i < 100; ++i) {
      q_des[1] = robot.stand_pose[1] + 0.2 * std::sin(0.05 * i);
      env_step(s, q_des, robot, pd, contact, {}, t);
    }
    return s;
  };
  const SimState a = run();
  const SimState b = run();
  CHECK(states_equal(a, b));
}

TEST_CASE("static rest on flat ground for ten seconds") {
  RobotConfig robot;
  PdConfig pd;
  ContactConfig contact;
  const TerrainMap t = flat_terrain();
  SimState s = env_reset(robot, t, {}, pd, contact);
  const double h0 = s.base_position[2];
  double max_drift = 0.0, max_speed = 0.0;
  for (int i = 0; i < 500; ++i) {
    env_step(s, robot.stand_pose, robot, pd, contact, {}, t);
    max_drift = std::max(max_drift, std::fabs(s.base_position[2] - h0));
    max_speed = std::max(max_speed, norm(s.linear_velocity));
  }
  CHECK(max_drift < 0.005);
  CHECK(max_speed < 0.02);
  for (const auto& foot : s.feet) CHECK(foot.position_world[2] > -0.01);
}

TEST_CASE("friction cone holds at every substep of a perturbed run") {
  RobotConfig robot;
  PdConfig pd;
  ContactConfig contact;
  const TerrainMap t = terrain_generate(TerrainKind::Smooth, 4, 9);
  SimState s = env_reset(robot, t, {}, pd, contact);
  s.disturbance = {15.0, -10.0, 0.0};  // constant shove so feet work near the cone
  Vec12 q_des = robot.stand_pose;
  for (int i = 0; i < 2000; ++i) {
    const Vec12 tau =
        pd_torque(q_des, s.joint_positions, s.joint_velocities, pd, {}, robot.torque_limit);
    physics_substep(s, tau, robot, pd, contact, {}, t);
    for (const auto& foot : s.feet) {
      const double tangential = std::hypot(foot.force_world[0], foot.force_world[1]);
      CHECK(tangential <= t.friction * foot.force_world[2] + 1e-9);
    }
  }
}

TEST_CASE("quaternion norm stays near one over a long roll") {
  RobotConfig robot;
  PdConfig pd;
  ContactConfig contact;
  const TerrainMap t = flat_terrain();
  SimState s;
  s.base_position = {0.0, 0.0, 1e7};  // far from the ground: pure tumbling
  s.angular_velocity = {0.7, -0.4, 0.9};
  update_foot_kinematics(s, robot);
  for (int i = 0; i < 100000; ++i) {
    physics_substep(s, Vec12{}, robot, pd, contact, {}, t);
    if (i % 10000 == 0) CHECK(std::fabs(quat_norm(s.base_orientation) - 1.0) < 1e-6);
  }
  CHECK(std::fabs(quat_norm(s.base_orientation) - 1.0) < 1e-6);
}

TEST_CASE("mechanical energy drifts under one percent in free flight") {
  RobotConfig robot;
  PdConfig pd;
  ContactConfig contact;
  const TerrainMap t = flat_terrain();
  SimState s;
  s.base_position = {0.0, 0.0, 40.0};
  s.linear_velocity = {0.4, -0.2, 0.5};
  s.angular_velocity = {0.5, 0.3, -0.4};
  update_foot_kinematics(s, robot);
  auto energy = [&](const SimState& st) {
    const Vec3 v_w = quat_rotate(st.base_orientation, st.linear_velocity);
    const Vec3& w = st.angular_velocity;
    const Vec3& inertia = robot.base_inertia;
    const double kin = 0.5 * robot.base_mass * dot(v_w, v_w);
    const double rot =
        0.5 * (inertia[0] * w[0] * w[0] + inertia[1] * w[1] * w[1] + inertia[2] * w[2] * w[2]);
    return kin + rot + robot.base_mass * kGravity * st.base_position[2];
  };
  const double e0 = energy(s);
  for (int i = 0; i < 200; ++i) physics_substep(s, Vec12{}, robot, pd, contact, {}, t);
  CHECK(std::fabs(energy(s) - e0) / std::fabs(e0) < 0.01);
}

TEST_CASE("apply_push adds velocity instantaneously") {
  RobotConfig robot;
  PdConfig pd;
  ContactConfig contact;
  const TerrainMap t = flat_terrain();
  SimState s = env_reset(robot, t, {}, pd, contact);
  const SimState before = s;
  apply_push(s, {0.0, 0.0, 0.0});
  CHECK(states_equal(before, s));
  apply_push(s, {1.0, 0.0, 0.0});
  CHECK(s.linear_velocity[0] == 1.0);
}

TEST_CASE("height scan") {
  RobotConfig robot;
  SUBCASE("flat terrain reads a constant -height") {
    const TerrainMap t = flat_terrain();
    SimState s;
    s.base_position = {0.0, 0.0, robot.body_height_target};
    const auto scan = height_scan(s, t);
    for (double h : scan) CHECK(h == doctest::Approx(-robot.body_height_target).epsilon(1e-12));
  }
  SUBCASE("a single step shows two plateaus 0.1 m apart") {
    TerrainMap t;
    t.resolution = 0.05;
    t.cells = 81;
    t.origin = -2.0;
    t.heights.assign(81 * 81, 0.0);
    for (int ix = 0; ix < 81; ++ix) {
      const double x = t.origin + ix * t.resolution;
      if (x > 0.025)
        for (int iy = 0; iy < 81; ++iy) t.heights[ix * 81 + iy] = 0.1;
    }
    SimState s;
    s.base_position = {0.025, 0.0, 0.3};
    const auto scan = height_scan(s, t);
    // forward half sits on the raised plateau, rear half on the low one
    CHECK(scan[0 * 11 + 5] == doctest::Approx(-0.3).epsilon(1e-9));
    CHECK(scan[10 * 11 + 5] == doctest::Approx(-0.3 + 0.1).epsilon(1e-9));
    CHECK(scan[10 * 11 + 5] - scan[0 * 11 + 5] == doctest::Approx(0.1).epsilon(1e-9));
  }
  SUBCASE("the grid rotates with yaw") {
    TerrainMap t;
    t.resolution = 0.05;
    t.cells = 81;
    t.origin = -2.0;
    t.heights.assign(81 * 81, 0.0);
    Rng rng(4);
    for (double& h : t.heights) h = rng.uniform(0.0, 0.2);
    SimState s0;
    s0.base_position = {0.1, -0.2, 0.4};
    SimState s90 = s0;
    s90.base_orientation = quat_from_yaw(M_PI / 2.0);
    const auto a = height_scan(s0, t);
    const auto b = height_scan(s90, t);
    // +90 deg yaw: body x points along world y; rotated scan(i,j) samples the
    // point the unrotated scan saw at (10 - j, i)
    for (int i = 0; i < 11; ++i)
      for (int j = 0; j < 11; ++j)
        CHECK(b[i * 11 + j] == doctest::Approx(a[(10 - j) * 11 + i]).epsilon(1e-6));
  }
}

TEST_CASE("domain randomization respects the configured ranges") {
  Rng rng(123);
  DomainRandomizationConfig cfg;
  double payload_min = 1e9, payload_max = -1e9;
  for (int i = 0; i < 10000; ++i) {
    const DomainParams d = randomize_domain(rng, cfg);
    payload_min = std::min(payload_min, d.payload);
    payload_max = std::max(payload_max, d.payload);
    CHECK(d.payload >= -1.0);
    CHECK(d.payload <= 2.0);
    CHECK(d.kp_factor >= 0.9);
    CHECK(d.kp_factor <= 1.1);
    CHECK(d.kd_factor >= 0.9);
    CHECK(d.kd_factor <= 1.1);
    CHECK(d.motor_strength >= 0.9);
    CHECK(d.motor_strength <= 1.1);
    for (double c : d.com_shift) {
      CHECK(c >= -0.05);
      CHECK(c <= 0.05);
    }
  }
  CHECK(payload_min < -0.9);  // the sampler actually covers the range
  CHECK(payload_max > 1.9);
  Rng r1(7), r2(7);
  const DomainParams a = randomize_domain(r1, cfg);
  const DomainParams b = randomize_domain(r2, cfg);
  CHECK(a.payload == b.payload);
  CHECK(a.com_shift == b.com_shift);
}

TEST_CASE("disturbance schedule") {
  SUBCASE("zero magnitude stays zero") {
    DisturbanceSchedule sched;
    sched.max_force = 0.0;
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
      sched.update(rng, i * 0.02);
      CHECK(sched.current == Vec3{0.0, 0.0, 0.0});
    }
  }
  SUBCASE("bounded and resampled exactly on the interval") {
    DisturbanceSchedule sched;
    sched.max_force = 25.0;
    sched.resample_interval = 3.0;
    Rng rng(2);
    Vec3 last = {1e9, 1e9, 1e9};
    int changes = 0;
    const double dt = 0.02;
    for (int i = 0; i <= 500; ++i) {  // 10 s
      sched.update(rng, i * dt);
      for (double c : sched.current) CHECK(std::fabs(c) <= 25.0);
      if (sched.current != last) {
        ++changes;
        const double t = i * dt;
        const double mod = std::fmod(t, 3.0);
        CHECK((mod < 1e-9 || 3.0 - mod < 1e-9));
        last = sched.current;
      }
    }
    CHECK(changes == 4);  // t = 0, 3, 6, 9
  }
}
