#include <doctest.h>

#include <chrono>
#include <cmath>

#include "gapflight/perception.hpp"
#include "test_helpers.hpp"

using namespace gapflight;
using gapflight::testing::TestRng;

namespace {

const Vec3 kGravity(0.0, 0.0, -9.81);

// Best cone direction by brute-force sweep: rotate a seed vector on the
// cone <x, z_b> = k through n azimuth steps.
double sweep_best_dot(const Vec3& z_b, double k, const Vec3& d, int n) {
  Vec3 u = z_b.cross(Vec3::UnitX());
  if (u.norm() < 1e-6) u = z_b.cross(Vec3::UnitY());
  u.normalize();
  const Vec3 v = z_b.cross(u);
  const double s = std::sqrt(std::max(0.0, 1.0 - k * k));
  double best = -2.0;
  for (int i = 0; i < n; ++i) {
    const double phi = 2.0 * M_PI * i / n;
    const Vec3 x = s * (std::cos(phi) * u + std::sin(phi) * v) + k * z_b;
    best = std::max(best, x.dot(d.normalized()));
  }
  return best;
}

GapSpec gap_at(double roll_deg, double pitch_deg,
               const Vec3& center = Vec3(0.0, 0.0, 1.5)) {
  GapSpec gap;
  gap.center = center;
  gap.orientation =
      gap_orientation(roll_deg * M_PI / 180.0, pitch_deg * M_PI / 180.0);
  return gap;
}

}  // namespace

TEST_CASE("aligned bearing returns the bearing itself with zero angle") {
  TestRng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Vec3 z_b = rng.unit_vec3();
    const double k = rng.uniform(-0.9, 0.9);
    // build a target whose bearing sits exactly on the mount cone
    Vec3 u = z_b.cross(Vec3::UnitX());
    if (u.norm() < 1e-6) u = z_b.cross(Vec3::UnitY());
    u.normalize();
    const Vec3 p_c = rng.vec3(-2.0, 2.0);
    const double dist = rng.uniform(0.5, 5.0);
    const Vec3 bearing_dir =
        std::sqrt(1.0 - k * k) * u + k * z_b;
    const Vec3 target = p_c + dist * bearing_dir;

    const Vec3 r3 = ideal_optical_axis(p_c, z_b, target, k);
    CHECK((r3 - bearing_dir).norm() < 1e-9);
    CHECK(min_view_angle(p_c, z_b, target, k) == 0.0);  // exactly zero
  }
}

TEST_CASE("horizontal camera, horizontal diagonal bearing") {
  const Vec3 r3 =
      ideal_optical_axis(Vec3::Zero(), Vec3::UnitZ(), Vec3(1, 1, 0), 0.0);
  CHECK((r3 - Vec3(1, 1, 0).normalized()).norm() < 1e-12);
}

TEST_CASE("45-degree offset bearing with a level camera") {
  // bearing at 45 degrees from the body z-axis, k = 0
  const double theta =
      min_view_angle(Vec3::Zero(), Vec3::UnitZ(), Vec3(1, 0, 1), 0.0);
  CHECK(theta == doctest::Approx(M_PI / 4).epsilon(1e-12));
}

TEST_CASE("cone sweep never beats the closed form") {
  TestRng rng(13);
  for (int i = 0; i < 200; ++i) {
    const Vec3 z_b = rng.unit_vec3();
    const double k = rng.uniform(-0.95, 0.95);
    const Vec3 p_c = rng.vec3(-3.0, 3.0);
    Vec3 target = p_c + rng.uniform(0.3, 6.0) * rng.unit_vec3();
    // stay away from the degenerate bearing-along-z case
    const Vec3 d = target - p_c;
    if ((d - d.dot(z_b) * z_b).norm() < 1e-3) {
      target += 0.5 * z_b.cross(Vec3::UnitX()).normalized();
    }

    const Vec3 r3 = ideal_optical_axis(p_c, z_b, target, k);
    CHECK(std::abs(r3.norm() - 1.0) < 1e-12);
    CHECK(r3.dot(z_b) == doctest::Approx(k).epsilon(1e-12));

    const Vec3 dn = (target - p_c).normalized();
    const double swept = sweep_best_dot(z_b, k, target - p_c, 3600);
    CHECK(r3.dot(dn) >= swept - 1e-6);

    // the reported minimum angle equals the achieved one
    const double theta = min_view_angle(p_c, z_b, target, k);
    const double achieved =
        std::atan2(r3.cross(dn).norm(), r3.dot(dn));
    CHECK(std::abs(theta - achieved) < 1e-9);
  }
}

TEST_CASE("degenerate bearings are rejected") {
  CHECK_THROWS_AS(
      ideal_optical_axis(Vec3::Zero(), Vec3::UnitZ(), Vec3(0, 0, 2), 0.0),
      DegenerateBearing);
  CHECK_THROWS_AS(
      min_view_angle(Vec3::Zero(), Vec3::UnitZ(), Vec3(0, 0, 2), 0.0),
      DegenerateBearing);
}

TEST_CASE("yaw anchors and unwrapping") {
  CHECK(yaw_from_axis(Vec3(1, 0, 0)) == doctest::Approx(0.0));
  CHECK(yaw_from_axis(Vec3(0, 1, 0)) == doctest::Approx(M_PI / 2));
  CHECK_THROWS_AS(yaw_from_axis(Vec3(0, 0, 1)), DegenerateHeading);

  // a heading sequence crossing the +-pi seam stays continuous
  double prev = 3.0;
  double max_jump = 0.0;
  for (double raw : {3.1, -3.1, -3.0, 3.05, 3.14, -3.13}) {
    const double unwrapped = unwrap_yaw(raw, prev);
    max_jump = std::max(max_jump, std::abs(unwrapped - prev));
    prev = unwrapped;
  }
  CHECK(max_jump < M_PI);
}

TEST_CASE("zero-angle candidate costs only its start distance") {
  // constant-velocity level flight straight at the gap: the minimum-jerk
  // interpolant of matched constant-velocity boundaries is that line
  const GapSpec gap = gap_at(0.0, 0.0, Vec3(0.0, 0.0, 1.5));
  const Vec3 v(0.5, 0.0, 0.0);
  FlatState s0, s1;
  s0.p = Vec3(-4.0, 0.0, 1.5);
  s0.v = v;
  s1.p = Vec3(-2.0, 0.0, 1.5);
  s1.v = v;
  const MotionPrimitive prim = min_jerk_primitive(s0, s1, 4.0);

  SamplingConfig cfg;
  cfg.box_lo = Vec3(-5, -1, 1);
  cfg.box_hi = Vec3(-3, 1, 2);
  const CostBreakdown cost =
      candidate_cost(prim, gap, CameraMount{}, cfg, kGravity, 20);
  CHECK(cost.theta_rms == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cost.cost == doctest::Approx(cost.start_distance / cfg.dist_norm));
  CHECK(cost.start_distance == doctest::Approx(4.0));

  // doubling the start distance doubles the distance term exactly
  FlatState far0 = s0, far1 = s1;
  far0.p.x() = -8.0;
  far1.p.x() = -6.0;
  const MotionPrimitive prim2 = min_jerk_primitive(far0, far1, 4.0);
  const CostBreakdown cost2 =
      candidate_cost(prim2, gap, CameraMount{}, cfg, kGravity, 20);
  CHECK(cost2.cost == doctest::Approx(2.0 * cost.cost).epsilon(1e-12));
}

TEST_CASE("two-pass cost recomputation matches") {
  TestRng rng(29);
  const GapSpec gap = gap_at(30.0, 10.0);
  const PlaneBasis basis = plane_basis(gap, kGravity, +1);
  FlatState s0;
  s0.p = gap.center - 3.0 * basis.axis2 + Vec3(0.3, -0.2, 0.1);
  TraverseParams tp;
  tp.gamma = 0.2;
  tp.d = 0.3;
  const TraverseTrajectory traverse =
      traverse_closed_form(gap, basis, tp, kGravity);
  const MotionPrimitive prim = min_jerk_primitive(
      s0,
      FlatState{traverse.start_position, traverse.start_velocity,
                traverse.accel},
      2.5);

  SamplingConfig cfg;
  const int n = 20;
  const CostBreakdown cost =
      candidate_cost(prim, gap, CameraMount{}, cfg, kGravity, n);

  // independent pass: gather angles first, then reduce
  std::vector<double> angles;
  for (int i = 0; i < n; ++i) {
    const double t = prim.duration * i / (n - 1.0);
    const PrimitiveSample s = sample_primitive(prim, t);
    const Vec3 z_b = (s.a - kGravity).normalized();
    angles.push_back(min_view_angle(s.p, z_b, gap.center, 0.0));
  }
  double sum_sq = 0.0;
  for (double a : angles) sum_sq += a * a;
  const double rms = std::sqrt(sum_sq / angles.size());
  const double J =
      rms / cfg.theta_norm + (s0.p - gap.center).norm() / cfg.dist_norm;
  CHECK(cost.theta_rms == doctest::Approx(rms).epsilon(1e-12));
  CHECK(cost.cost == doctest::Approx(J).epsilon(1e-12));
}

namespace {

struct Setup {
  GapSpec gap;
  PlaneBasis basis;
  TraverseTrajectory traverse;
};

Setup make_setup(double roll_deg, double pitch_deg) {
  Setup s;
  s.gap = gap_at(roll_deg, pitch_deg);
  s.basis = plane_basis(s.gap, kGravity, +1);
  auto planned = optimize_traverse(s.gap, s.basis, 3.0, 0.25, kGravity);
  s.traverse = planned.second;
  return s;
}

SamplingConfig small_grid(const Setup& s, int nx, int ny, int nz, int nt) {
  SamplingConfig cfg;
  const Vec3 center = s.gap.center - 3.5 * s.basis.axis2;
  cfg.box_lo = center - Vec3(1.0, 1.0, 0.5);
  cfg.box_hi = center + Vec3(1.0, 1.0, 0.5);
  cfg.position_counts = {nx, ny, nz};
  cfg.time_count = nt;
  return cfg;
}

}  // namespace

TEST_CASE("singleton grid returns its only candidate") {
  const Setup s = make_setup(45.0, 0.0);
  SamplingConfig cfg = small_grid(s, 1, 1, 1, 1);
  cfg.time_lo = cfg.time_hi = 2.5;
  const CandidateTrajectory cand = plan_approach(
      cfg, s.traverse, s.gap, CameraMount{}, InputLimits{}, kGravity);
  CHECK(cand.primitive.duration == doctest::Approx(2.5));
  CHECK((cand.primitive.start.p - 0.5 * (cfg.box_lo + cfg.box_hi)).norm() <
        1e-12);
  CHECK(cand.primitive.start.v.norm() == 0.0);
}

TEST_CASE("selection matches exhaustive enumeration") {
  const Setup s = make_setup(30.0, 15.0);
  const SamplingConfig cfg = small_grid(s, 4, 4, 3, 5);  // 240 candidates
  const CameraMount mount;
  const InputLimits limits;
  const CandidateTrajectory cand =
      plan_approach(cfg, s.traverse, s.gap, mount, limits, kGravity);

  // exhaustive re-enumeration
  const FlatState goal{s.traverse.start_position, s.traverse.start_velocity,
                       s.traverse.accel};
  double best = std::numeric_limits<double>::infinity();
  int feasible_count = 0;
  for (int ix = 0; ix < 4; ++ix) {
    for (int iy = 0; iy < 4; ++iy) {
      for (int iz = 0; iz < 3; ++iz) {
        for (int it = 0; it < 5; ++it) {
          FlatState start;
          start.p = Vec3(
              cfg.box_lo.x() + (cfg.box_hi.x() - cfg.box_lo.x()) * ix / 3.0,
              cfg.box_lo.y() + (cfg.box_hi.y() - cfg.box_lo.y()) * iy / 3.0,
              cfg.box_lo.z() + (cfg.box_hi.z() - cfg.box_lo.z()) * iz / 2.0);
          const double T =
              cfg.time_lo + (cfg.time_hi - cfg.time_lo) * it / 4.0;
          const MotionPrimitive prim = min_jerk_primitive(start, goal, T);
          if (!check_feasibility(prim, limits, kGravity).feasible()) continue;
          ++feasible_count;
          best = std::min(
              best,
              candidate_cost(prim, s.gap, mount, cfg, kGravity, 20).cost);
        }
      }
    }
  }
  REQUIRE(feasible_count > 0);
  CHECK(cand.cost == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("scaling both normalizers rescales the cost, not the argmin") {
  const Setup s = make_setup(20.0, 0.0);
  SamplingConfig cfg = small_grid(s, 3, 3, 2, 3);
  const CandidateTrajectory a = plan_approach(
      cfg, s.traverse, s.gap, CameraMount{}, InputLimits{}, kGravity);
  cfg.theta_norm *= 2.5;
  cfg.dist_norm *= 2.5;
  const CandidateTrajectory b = plan_approach(
      cfg, s.traverse, s.gap, CameraMount{}, InputLimits{}, kGravity);
  CHECK((a.primitive.start.p - b.primitive.start.p).norm() < 1e-12);
  CHECK(a.primitive.duration == doctest::Approx(b.primitive.duration));
  CHECK(b.cost == doctest::Approx(a.cost / 2.5).epsilon(1e-12));
}

TEST_CASE("hopeless grids raise NoFeasibleCandidate") {
  const Setup s = make_setup(45.0, 0.0);
  SamplingConfig cfg = small_grid(s, 2, 2, 1, 2);
  cfg.time_lo = 0.05;  // far too short for multi-meter moves
  cfg.time_hi = 0.06;
  CHECK_THROWS_AS(plan_approach(cfg, s.traverse, s.gap, CameraMount{},
                                InputLimits{}, kGravity),
                  NoFeasibleCandidate);
}

TEST_CASE("replanning from a state on the plan reproduces the remainder") {
  const Setup s = make_setup(45.0, 0.0);
  const SamplingConfig cfg = small_grid(s, 2, 2, 2, 3);
  const CandidateTrajectory cand = plan_approach(
      cfg, s.traverse, s.gap, CameraMount{}, InputLimits{}, kGravity);

  const double tau = 0.8;
  const PrimitiveSample mid = sample_primitive(cand.primitive, tau);
  const ReplanResult res =
      replan(FlatState{mid.p, mid.v, mid.a}, s.traverse,
             cand.primitive.duration - tau, InputLimits{}, kGravity);
  REQUIRE(res.replanned());
  for (double f : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double rest = (cand.primitive.duration - tau) * f;
    const PrimitiveSample a = sample_primitive(*res.primitive, rest);
    const PrimitiveSample b = sample_primitive(cand.primitive, tau + rest);
    CHECK((a.p - b.p).norm() < 1e-6);
    CHECK((a.v - b.v).norm() < 1e-6);
  }
}

TEST_CASE("hopeless replans keep the last trajectory") {
  const Setup s = make_setup(45.0, 0.0);
  // 20 ms is long enough to attempt verification but the 2 m offset makes
  // the move wildly infeasible
  FlatState current;
  current.p = s.traverse.start_position + Vec3(2.0, 0.0, 0.0);
  const ReplanResult res =
      replan(current, s.traverse, 0.02, InputLimits{}, kGravity);
  CHECK(!res.replanned());
  CHECK(res.verdict.kind != Feasibility::kFeasible);
}

TEST_CASE("replanning stays under a tenth of a millisecond") {
  const Setup s = make_setup(45.0, 0.0);
  TestRng rng(17);
  const auto start = std::chrono::steady_clock::now();
  int n = 0;
  double sink = 0.0;
  for (int i = 0; i < 500; ++i, ++n) {
    FlatState current;
    current.p = s.traverse.start_position - 2.0 * s.basis.axis2 +
                rng.vec3(-0.2, 0.2);
    current.v = rng.vec3(-0.5, 0.5);
    const ReplanResult res =
        replan(current, s.traverse, rng.uniform(0.5, 2.0), InputLimits{},
               kGravity);
    sink += res.replanned() ? 1.0 : 0.0;
  }
  const double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  CHECK(ms / n <= 0.1);
  (void)sink;
}
