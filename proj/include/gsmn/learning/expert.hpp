#pragma once

#include "gsmn/simulator.hpp"

namespace gsmn::learn {

struct ExpertConfig {
  double lookahead = 1.5;     // carrot arc-length past the closest path point, m
  double bearing_gain = 2.0;  // rad/s per rad of bearing error
  double stop_radius = 1.0;   // STOP once within this distance of the path end
  double v_max = 1.6;
  double omega_max = 2.44;
};

namespace detail {

// Closest point on the polyline and its arc-length coordinate.
inline std::pair<double, Vec2> project_on_path(const std::vector<Pose>& path, const Vec2& p) {
  double best_d2 = 1e300, best_s = 0.0;
  Vec2 best_pt = path.front().p;
  double s = 0.0;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec2 a = path[i].p, b = path[i + 1].p;
    const Vec2 ab = b - a;
    const double len2 = ab.squared_norm();
    double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const Vec2 q = a + ab * t;
    const double d2 = (p - q).squared_norm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best_pt = q;
      best_s = s + std::sqrt(len2) * t;
    }
    s += std::sqrt(len2);
  }
  if (path.size() == 1 || best_d2 == 1e300) best_s = 0.0;
  return {best_s, best_pt};
}

inline Vec2 point_at_arclength(const std::vector<Pose>& path, double s) {
  double acc = 0.0;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const double seg = (path[i + 1].p - path[i].p).norm();
    if (acc + seg >= s && seg > 0) {
      const double t = (s - acc) / seg;
      return path[i].p + (path[i + 1].p - path[i].p) * t;
    }
    acc += seg;
  }
  return path.back().p;
}

}  // namespace detail

// Path-following carrot planner: steer toward a lookahead point on the
// demonstration, slow with the cosine of the bearing error, stop at the end.
inline sim::Action expert_action(const Pose& pose, const world::DemoTrajectory& demo,
                                 const ExpertConfig& cfg = {}) {
  require(!demo.poses.empty(), "expert_action: empty demonstration");
  sim::Action a;
  if (distance(pose.p, demo.poses.back().p) <= cfg.stop_radius) {
    a.p_stop = 1.0;
    return a;
  }
  const auto [s, closest] = detail::project_on_path(demo.poses, pose.p);
  const Vec2 carrot = detail::point_at_arclength(demo.poses, s + cfg.lookahead);
  const double bearing = std::atan2(carrot.y - pose.p.y, carrot.x - pose.p.x);
  const double err = wrap_angle(bearing - pose.yaw);
  a.omega = std::clamp(cfg.bearing_gain * err, -cfg.omega_max, cfg.omega_max);
  a.v = cfg.v_max * std::max(0.0, std::cos(err));
  a.p_stop = 0.0;
  return a;
}

// The expert as an executable policy (uses the pose from the agent context,
// which equals the true pose unless observation noise is enabled).
class ExpertPolicy : public sim::Policy {
 public:
  ExpertPolicy(const world::DemoTrajectory& demo, const ExpertConfig& cfg = {}) : demo_(demo), cfg_(cfg) {}

  void reset(const std::vector<int>&) override {}
  sim::Action act(const sim::AgentContext& ctx) override { return expert_action(ctx.pose, demo_, cfg_); }
  bool wants_images() const override { return false; }

 private:
  world::DemoTrajectory demo_;
  ExpertConfig cfg_;
};

}  // namespace gsmn::learn
