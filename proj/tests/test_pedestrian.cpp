#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include "oracle/formula_suite.hpp"
#include "oracle/pedestrian_oracle.hpp"
#include "svo/pedestrian/model.hpp"

using namespace svo;
using namespace svo::ped;

namespace {

const PedParams kParams{};

VehiclePose pose_at(double x, double y, double v, double a = 0.0) {
  VehiclePose pose;
  pose.x = x;
  pose.y = y;
  pose.speed = v;
  pose.accel = a;
  return pose;
}

PedestrianState crossing_state(Vec2 p, Vec2 g, double motivation = 0.0) {
  PedestrianState s;
  s.position = p;
  s.spawn = p;
  s.goal = g;
  s.motivation = motivation;
  s.side = p.y() < 0 ? Side::Near : Side::Far;
  return s;
}

}  // namespace

TEST(LinearDecay, ReferenceValues) {
  EXPECT_DOUBLE_EQ(linear_decay(2.0, 800.0, 4.0, 0.0), 400.0);
  EXPECT_DOUBLE_EQ(linear_decay(0.0, 800.0, 4.0, 0.0), 800.0);
  EXPECT_DOUBLE_EQ(linear_decay(6.0, 800.0, 4.0, 0.0), 0.0);
  EXPECT_NEAR(linear_decay(0.0, 800.0, 4.0, 1e-12), 800.0, 1e-9);
}

TEST(LinearDecay, MonotoneContinuousAndSlopeBounded) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.0, 20.0);
  const double eps = 1e-6;
  for (int i = 0; i < 20000; ++i) {
    const double x = d(rng);
    for (const DecayField& f : {kParams.shape, kParams.flow}) {
      const double lo = linear_decay(x, f);
      const double hi = linear_decay(x + eps, f);
      EXPECT_LE(hi, lo);
      EXPECT_GE(lo, 0.0);
      const double slope = (hi - lo) / eps;
      EXPECT_GE(slope, -f.gain / f.range * (1.0 + 1e-3));
    }
  }
}

TEST(EllipticalDistance, ReferenceValues) {
  EXPECT_DOUBLE_EQ(elliptical_distance({2.4, 0.0}, 2.4, 0.9), 1.0);
  EXPECT_DOUBLE_EQ(elliptical_distance({0.0, 1.8}, 2.4, 0.9), 2.0);
  EXPECT_DOUBLE_EQ(elliptical_distance({0.0, 0.0}, 2.4, 0.9), 0.0);
}

TEST(AdvantageTime, ReferenceValues) {
  EXPECT_NEAR(advantage_time(30.0, 10.0, 1, 3.0, kParams), 1.45, 1e-12);
  EXPECT_NEAR(advantage_time(0.0, 10.0, 2, 3.0, kParams), -3.05, 1e-12);
  EXPECT_NEAR(advantage_time(30.0, 0.0, 1, 3.0, kParams), 100.0 - 1.5 - 0.05, 1e-12);
  EXPECT_NEAR(advantage_time(30.0, 0.0, 2, 3.0, kParams), 100.0 - 3.0 - 0.05, 1e-12);
}

TEST(AdvantageTime, PassedVehicleUsesCap) {
  const VehiclePose pose = pose_at(10.0, -1.5, 12.0);
  EXPECT_TRUE(std::isinf(bumper_gap({1.0, 2.0}, pose)));
  EXPECT_DOUBLE_EQ(time_to_collision(bumper_gap({1.0, 2.0}, pose), 12.0), kTtcCap);
  EXPECT_DOUBLE_EQ(time_to_collision(1e6, 1.0), kTtcCap);
}

TEST(Motivation, InnovationReferenceValues) {
  EXPECT_NEAR(motivation_innovation(1.45, 0.0, kParams), 0.8957, 5e-5);
  EXPECT_NEAR(motivation_innovation(-0.55, 0.0, kParams), 0.0208, 5e-5);
  EXPECT_DOUBLE_EQ(motivation_innovation(1e3, 0.0, kParams), 1.0);
}

TEST(Motivation, UpdateReferenceValues) {
  EXPECT_NEAR(motivation_update(0.5, 0.8957, kParams), 0.57914, 1e-12);
  EXPECT_DOUBLE_EQ(motivation_update(0.37, 0.37, kParams), 0.37);
  double m = 0.0;
  for (int i = 0; i < 400; ++i) m = motivation_update(m, 1.0, kParams);
  EXPECT_NEAR(m, 1.0, 1e-12);
}

TEST(Motivation, FilterIsConvexCombination) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1'000'000; ++i) {
    const double prev = u(rng);
    const double hat = u(rng);
    const double next = motivation_update(prev, hat, kParams);
    ASSERT_GE(next, std::min(prev, hat) - 1e-15);
    ASSERT_LE(next, std::max(prev, hat) + 1e-15);
    ASSERT_GE(next, 0.0);
    ASSERT_LE(next, 1.0);
  }
}

TEST(Motivation, InnovationMonotonicity) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> t(-20.0, 20.0);
  std::uniform_real_distribution<double> a(-3.0, 3.0);
  for (int i = 0; i < 100000; ++i) {
    const double t1 = t(rng), t2 = t(rng), acc = a(rng);
    const double lo = std::min(t1, t2), hi = std::max(t1, t2);
    EXPECT_LE(motivation_innovation(lo, acc, kParams), motivation_innovation(hi, acc, kParams));
    const double a1 = a(rng), a2 = a(rng), tt = t(rng);
    EXPECT_GE(motivation_innovation(tt, std::min(a1, a2), kParams),
              motivation_innovation(tt, std::max(a1, a2), kParams));
  }
}

TEST(NavigationalForce, ReferenceValues) {
  PedestrianState at_goal = crossing_state({1.0, 2.0}, {1.0, 2.0}, 1.0);
  EXPECT_EQ(navigational_force(at_goal, kParams), Vec2::Zero());

  PedestrianState gated = crossing_state({0.0, 0.0}, {0.0, 10.0}, 0.2);
  EXPECT_EQ(navigational_force(gated, kParams), Vec2::Zero());

  PedestrianState walking = crossing_state({0.0, 0.0}, {0.0, 10.0}, 1.0);
  const Vec2 f = navigational_force(walking, kParams);
  EXPECT_DOUBLE_EQ(f.x(), 0.0);
  EXPECT_NEAR(f.y(), 400.0 * 10.0 / std::sqrt(100.09), 1e-10);
  EXPECT_NEAR(f.y(), 400.0, 0.2);
}

TEST(ShapeForce, ReferenceValues) {
  const VehiclePose pose = pose_at(0.0, 0.0, 0.0);
  const Vec2 lateral = shape_force({0.0, 1.3}, pose, kParams);
  EXPECT_DOUBLE_EQ(lateral.x(), 0.0);
  EXPECT_GT(lateral.y(), 0.0);

  // A point on the ellipse: d = 1.
  const double angle = 0.7;
  const Vec2 on_ellipse(2.4 * std::cos(angle), 0.9 * std::sin(angle));
  EXPECT_NEAR(shape_force(on_ellipse, pose, kParams).norm(), 100.0 * (3.0 + std::sqrt(9.1)), 1e-9);
  EXPECT_NEAR(shape_force(on_ellipse, pose, kParams).norm(), 601.662, 1e-3);

  EXPECT_LT(shape_force({500.0, 0.0}, pose, kParams).norm(), 0.05);
  EXPECT_EQ(shape_force({0.0, 0.0}, pose, kParams), Vec2::Zero());
}

TEST(ShapeForce, AlwaysPushesOutward) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> c(-15.0, 15.0);
  const VehiclePose pose = pose_at(0.0, 0.0, 0.0);
  for (int i = 0; i < 100000; ++i) {
    const Vec2 p(c(rng), c(rng));
    const Vec2 outward(p.x() / (2.4 * 2.4), p.y() / (0.9 * 0.9));
    EXPECT_GE(shape_force(p, pose, kParams).dot(outward), 0.0);
  }
}

TEST(FlowForce, WeightCases) {
  const Vec2 p0(0.0, -3.5), g(0.0, 3.5);
  EXPECT_DOUBLE_EQ(flow_weight({0.0, -4.0}, p0, g), 1.0);     // P < 0
  EXPECT_DOUBLE_EQ(flow_weight({0.0, 0.0}, p0, g), 0.5);      // midpoint
  EXPECT_DOUBLE_EQ(flow_weight({0.0, 3.5}, p0, g), 0.0);      // at goal
  EXPECT_DOUBLE_EQ(flow_weight({0.3, 5.0}, p0, g), 0.0);      // past goal

  const VehiclePose pose = pose_at(0.0, 1.0, 0.0);
  EXPECT_EQ(flow_force({0.2, 4.0}, p0, g, pose, kParams), Vec2::Zero());
  EXPECT_EQ(flow_force({0.0, 1.0}, p0, g, pose, kParams), Vec2::Zero());
}

TEST(FlowForce, CirculatesTowardsShorterSide) {
  const VehiclePose pose = pose_at(0.0, -1.5, 0.0);
  // Below the car, goal above and to the right: counterclockwise moves +x.
  const Vec2 p0(0.5, -3.5);
  const Vec2 f = flow_force(p0, p0, {3.0, 3.5}, pose, kParams);
  EXPECT_GT(f.x(), 0.0);
  // Goal above and to the left: clockwise moves -x.
  const Vec2 h = flow_force(p0, p0, {-3.0, 3.5}, pose, kParams);
  EXPECT_LT(h.x(), 0.0);
  // Exact tie (symmetric) breaks counterclockwise.
  EXPECT_EQ(flow_orientation({0.0, -2.0}, {0.0, 5.0}, pose), 1.0);
}

TEST(SpeedForce, ReferenceValues) {
  VehiclePose pose = pose_at(0.0, 0.0, 10.0);
  EXPECT_EQ(speed_force({5.0, 0.0}, pose, kParams, 3.0), Vec2::Zero());
  const Vec2 f = speed_force({2.4, 0.6}, pose, kParams, 3.0);
  EXPECT_DOUBLE_EQ(f.x(), 0.0);
  EXPECT_NEAR(f.y(), 400.0 * std::exp(-0.5), 1e-10);
  EXPECT_NEAR(f.y(), 242.6, 0.05);
  EXPECT_LT(speed_force({2.4, -0.6}, pose, kParams, 3.0).y(), 0.0);
  // Beside the vehicle the longitudinal factor is clamped to one.
  EXPECT_NEAR(speed_force({-1.0, 0.6}, pose, kParams, 3.0).y(), 400.0 * std::exp(-0.5), 1e-10);
  pose.speed = 0.0;
  EXPECT_EQ(speed_force({2.4, 0.6}, pose, kParams, 3.0), Vec2::Zero());
}

TEST(VehicleForce, BlendCoefficient) {
  EXPECT_DOUBLE_EQ(velocity_blend(0.0, kParams), 1.0);
  EXPECT_NEAR(velocity_blend(3.0, kParams), 0.5263157894736842, 1e-15);
  EXPECT_LT(velocity_blend(1e4, kParams), 1e-6);

  PedestrianState s = crossing_state({1.0, -3.5}, {1.5, 3.5});
  const VehiclePose stopped = pose_at(0.0, -1.5, 0.0);
  const Vec2 local = stopped.to_local(s.position);
  const Vec2 expect = shape_force(local, stopped, kParams) +
                      flow_force(s.position, s.spawn, s.goal, stopped, kParams);
  EXPECT_EQ(vehicle_force(s.position, s, stopped, kParams), expect);

  const VehiclePose fast = pose_at(-6.0, -1.5, 1e5);
  const Vec2 local_fast = fast.to_local(s.position);
  const Vec2 lim = shape_force(local_fast, fast, kParams) + speed_force(local_fast, fast, kParams, 3.0);
  EXPECT_NEAR((vehicle_force(s.position, s, fast, kParams) - lim).norm(), 0.0, 1e-4);
}

TEST(PedestrianStep, ForceFreeDrift) {
  PedestrianState s = crossing_state({0.0, -3.5}, {0.0, 3.5}, 1.0);
  s.velocity = desired_velocity(s, kParams);
  const VehiclePose far = pose_at(-1e6, -1.5, 0.0);
  const PedestrianState next =
      pedestrian_step(s, far, kParams, 0.1, Behavior{false, false});
  EXPECT_EQ(next.velocity, s.velocity);
  EXPECT_EQ(next.motivation, 1.0);
  EXPECT_EQ(next.position, s.position + s.velocity * 0.1);
}

TEST(PedestrianStep, AccelerationClampedToLimit) {
  PedestrianState s = crossing_state({0.0, -3.5}, {0.0, 3.5}, 1.0);
  s.velocity = {0.0, -1.0};  // nav force ~ 200 * 3 = 600 N -> 8 m/s^2
  const VehiclePose far = pose_at(-1e6, -1.5, 0.0);
  StepTrace trace;
  pedestrian_step(s, far, kParams, 0.1, Behavior{false, false}, &trace);
  EXPECT_GT((trace.nav / kParams.mass).norm(), 3.0);
  EXPECT_NEAR(trace.accel.norm(), 3.0, 1e-12);
}

TEST(PedestrianStep, MotivationAfterOneStep) {
  // Stationary pedestrian, vehicle front 30 m away at 10 m/s, near side.
  PedestrianState s = crossing_state({32.4, -3.5}, {32.4, 3.5}, 0.0);
  const VehiclePose pose = pose_at(0.0, -1.5, 10.0);
  const PedestrianState next = pedestrian_step(s, pose, kParams, 0.1);
  EXPECT_NEAR(next.motivation, 0.2 * 0.8956687768809987, 1e-12);
  EXPECT_NEAR(next.motivation, 0.1791, 1e-4);
}

TEST(PedestrianStep, SpeedAndAccelerationLimitsHold) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    PedestrianState s = crossing_state({20.0 * u(rng), 4.0 * u(rng)}, {20.0 * u(rng), 4.0 * u(rng)},
                                       0.5 + 0.5 * u(rng));
    s.velocity = {4.0 * u(rng), 4.0 * u(rng)};
    if (s.velocity.norm() > 4.0) s.velocity *= 4.0 / s.velocity.norm();
    const VehiclePose pose = pose_at(10.0 * u(rng), -1.5, 10.0 + 10.0 * u(rng), 3.0 * u(rng));
    StepTrace tr;
    const PedestrianState next = pedestrian_step(s, pose, kParams, 0.1, {}, &tr);
    ASSERT_LE(next.velocity.norm(), kParams.max_speed + 1e-12);
    ASSERT_LE(tr.accel.norm(), kParams.max_accel + 1e-12);
    ASSERT_GE(next.motivation, 0.0);
    ASSERT_LE(next.motivation, 1.0);
  }
}

TEST(PedestrianStep, MatchesScalarOracle) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const oracle::Params P;
  int checked = 0;
  for (int i = 0; i < 20000; ++i) {
    const Vec2 p(30.0 * u(rng), 5.0 * u(rng));
    const Vec2 g(30.0 * u(rng), 5.0 * u(rng));
    const Vec2 p0(30.0 * u(rng), 5.0 * u(rng));
    PedestrianState s;
    s.position = p;
    s.goal = g;
    s.spawn = p0;
    s.velocity = {2.0 * u(rng), 2.0 * u(rng)};
    s.motivation = 0.5 + 0.5 * u(rng);
    s.side = u(rng) > 0 ? Side::Near : Side::Far;
    const VehiclePose pose = pose_at(10.0 * u(rng), -1.5, 8.0 + 8.0 * u(rng), 2.9 * u(rng));
    double margin = 1.0;
    const auto ref = oracle::step({p.x(), p.y()}, {s.velocity.x(), s.velocity.y()}, s.motivation,
                                  {p0.x(), p0.y()}, {g.x(), g.y()}, s.side == Side::Near ? 1.0 : 2.0,
                                  {pose.x, pose.y}, pose.speed, pose.accel, 2.4, 0.9, 0.1, P, &margin);
    if (margin < 1e-6) continue;
    const PedestrianState next = pedestrian_step(s, pose, kParams, 0.1);
    ++checked;
    ASSERT_NEAR(next.position.x(), ref.p.x, 1e-9 * std::max(1.0, std::abs(ref.p.x)));
    ASSERT_NEAR(next.position.y(), ref.p.y, 1e-9 * std::max(1.0, std::abs(ref.p.y)));
    ASSERT_NEAR(next.velocity.x(), ref.v.x, 1e-9 * std::max(1.0, std::abs(ref.v.x)));
    ASSERT_NEAR(next.velocity.y(), ref.v.y, 1e-9 * std::max(1.0, std::abs(ref.v.y)));
    ASSERT_NEAR(next.motivation, ref.M, 1e-12);
  }
  EXPECT_GT(checked, 19000);
}

TEST(PedestrianStep, ConvergesToGoalWithoutVehicle) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> x(0.0, 60.0);
  std::uniform_real_distribution<double> y(-3.5, 3.5);
  const VehiclePose far = pose_at(1e6, -1.5, 0.0);
  for (int trial = 0; trial < 200; ++trial) {
    PedestrianState s = crossing_state({x(rng), y(rng)}, {x(rng), y(rng)}, 1.0);
    bool reached = false;
    for (int k = 0; k < 600 && !reached; ++k) {
      s = pedestrian_step(s, far, kParams, 0.1, Behavior{true, true});
      reached = (s.position - s.goal).norm() < 0.2;
    }
    EXPECT_TRUE(reached) << "trial " << trial;
  }
}

TEST(PedestrianStep, OvercomesStaticVehicle) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> offset(-2.0, 2.0);
  const VehiclePose parked = pose_at(30.0, -1.5, 0.0);
  int reached_count = 0;
  for (int trial = 0; trial < 100; ++trial) {
    // Bottom pavement to top pavement with the parked car in the near lane.
    PedestrianState s = crossing_state({30.0 + offset(rng), -3.5}, {30.0 + offset(rng), 3.5});
    bool reached = false;
    for (int k = 0; k < 600 && !reached; ++k) {
      s = pedestrian_step(s, parked, kParams, 0.1);
      reached = (s.position - s.goal).norm() < 0.2;
    }
    reached_count += reached;
  }
  EXPECT_EQ(reached_count, 100);
}

TEST(PedestrianStep, Deterministic) {
  PedestrianState s = crossing_state({20.0, -3.5}, {21.0, 3.5});
  const VehiclePose pose = pose_at(5.0, -1.5, 6.0, -1.0);
  PedestrianState a = s, b = s;
  for (int k = 0; k < 200; ++k) {
    a = pedestrian_step(a, pose, kParams, 0.1);
    b = pedestrian_step(b, pose, kParams, 0.1);
  }
  EXPECT_EQ(a.position, b.position);
  EXPECT_EQ(a.velocity, b.velocity);
  EXPECT_EQ(a.motivation, b.motivation);
}

TEST(PedestrianStep, MedianCostBelowBudget) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> samples;
  samples.reserve(20000);
  double sink = 0.0;
  for (int i = 0; i < 20000; ++i) {
    PedestrianState s = crossing_state({30.0 + 10 * u(rng), 3.5 * u(rng)}, {30.0, 3.5}, 0.6);
    const VehiclePose pose = pose_at(20.0 + 10 * u(rng), -1.5, 8.0 + 7.0 * u(rng));
    const auto t0 = std::chrono::steady_clock::now();
    const PedestrianState n = pedestrian_step(s, pose, kParams, 0.1);
    const auto t1 = std::chrono::steady_clock::now();
    sink += n.position.x();
    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
  EXPECT_LT(samples[samples.size() / 2], 0.36);
  EXPECT_TRUE(std::isfinite(sink));
}

TEST(FormulaSuite, EveryOperationMatchesScalarOracle) {
  for (const oracle::OpResult& r : oracle::run_formula_suite(10000, 31)) {
    EXPECT_LE(r.max_rel_error, 1e-9) << r.name;
    EXPECT_GE(r.checked, 9900) << r.name;
  }
}
