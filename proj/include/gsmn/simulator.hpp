#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "gsmn/world.hpp"

namespace gsmn::sim {

// Velocity setpoint limits and the first-order response of the flight
// controller. tau = 0 makes setpoints take effect instantly.
struct AgentConfig {
  double v_max = 1.6;
  double omega_max = 2.44;
  double lag_tau = 0.3;

  double clamp_v(double v) const { return std::clamp(v, -v_max, v_max); }
  double clamp_omega(double w) const { return std::clamp(w, -omega_max, omega_max); }
};

struct Action {
  double v = 0.0;       // forward velocity setpoint, m/s
  double omega = 0.0;   // yaw rate setpoint, rad/s
  double p_stop = 0.0;  // in [0, 1]; STOP is taken iff p_stop > 0.5

  bool stop() const { return p_stop > 0.5; }
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;  // HWC, 3 bytes per pixel

  bool empty() const { return rgb.empty(); }
  uint8_t* pixel(int y, int x) { return rgb.data() + (size_t(y) * size_t(width) + size_t(x)) * 3; }
  const uint8_t* pixel(int y, int x) const { return rgb.data() + (size_t(y) * size_t(width) + size_t(x)) * 3; }
};

// What the policy sees: instruction tokens, camera frame, pose estimate.
// The pose is the true pose unless observation noise is enabled.
struct AgentContext {
  std::vector<int> tokens;
  Image image;
  Pose pose;
};

struct WorldState {
  const world::EnvironmentSpec* env = nullptr;
  Pose pose;
  AgentConfig config;
  double v_real = 0.0;
  double omega_real = 0.0;
  int t = 0;
};

// Unicycle kinematics at the control rate. Setpoints are clamped, realized
// velocities lag exponentially, position is clipped to field bounds + margin.
inline WorldState step(const WorldState& state, const Action& action, double dt) {
  WorldState next = state;
  const double v_set = state.config.clamp_v(action.v);
  const double w_set = state.config.clamp_omega(action.omega);
  const double alpha = state.config.lag_tau > 0.0 ? 1.0 - std::exp(-dt / state.config.lag_tau) : 1.0;
  next.v_real = state.v_real + alpha * (v_set - state.v_real);
  next.omega_real = state.omega_real + alpha * (w_set - state.omega_real);
  next.pose.p.x += next.v_real * std::cos(state.pose.yaw) * dt;
  next.pose.p.y += next.v_real * std::sin(state.pose.yaw) * dt;
  next.pose.yaw = wrap_angle(state.pose.yaw + next.omega_real * dt);
  if (state.env) {
    const double margin = 2.0;
    next.pose.p.x = std::clamp(next.pose.p.x, -margin, state.env->field_size + margin);
    next.pose.p.y = std::clamp(next.pose.p.y, -margin, state.env->field_size + margin);
  }
  next.t = state.t + 1;
  return next;
}

struct RenderPalette {
  std::array<uint8_t, 3> field{58, 120, 60};
  std::array<uint8_t, 3> sky{150, 190, 235};
};

// Analytic first-person renderer: one ground raycast per pixel, exactly
// inverse to the projection model in geo (shared camera, zero modeling gap).
inline Image render(const world::EnvironmentSpec& env, const world::LandmarkPool& pool, const Pose& pose,
                    const geo::CameraModel& cam, const RenderPalette& palette = {}) {
  Image img;
  img.width = cam.width;
  img.height = cam.height;
  img.rgb.assign(size_t(cam.width) * size_t(cam.height) * 3, 0);
  const geo::CameraToWorld T = geo::camera_to_world(pose, cam);

  // Ray direction = dir0 + px*dx + py*dy, precomputed from K^-1 columns.
  const Eigen::Vector3d dx = T.rotation.col(0) / cam.fx();
  const Eigen::Vector3d dy = T.rotation.col(1) / cam.fy();
  const Eigen::Vector3d dir0 =
      T.rotation.col(2) - dx * cam.cx() - dy * cam.cy();

  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Eigen::Vector3d d = dir0 + dx * (x + 0.5) + dy * (y + 0.5);
      uint8_t* px = img.pixel(y, x);
      if (d.z() >= -1e-9) {
        px[0] = palette.sky[0];
        px[1] = palette.sky[1];
        px[2] = palette.sky[2];
        continue;
      }
      const double t = -T.translation.z() / d.z();
      const Vec2 g{T.translation.x() + t * d.x(), T.translation.y() + t * d.y()};
      const std::array<uint8_t, 3>* color = &palette.field;
      for (const world::Landmark& lm : env.landmarks) {
        const double r = pool.classes[size_t(lm.class_id)].radius;
        if ((g - lm.position).squared_norm() <= r * r) {
          color = &pool.classes[size_t(lm.class_id)].color;
          break;
        }
      }
      px[0] = (*color)[0];
      px[1] = (*color)[1];
      px[2] = (*color)[2];
    }
  }
  return img;
}

// A policy carries per-episode internal state: reset() then act() per step.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void reset(const std::vector<int>& tokens) = 0;
  virtual Action act(const AgentContext& ctx) = 0;
  virtual bool wants_images() const { return true; }
};

struct EpisodeStep {
  Pose true_pose;
  Pose observed_pose;
  Action taken;
  Action expert;
  Image image;  // empty when rendering was off or frames were not kept
};

struct EpisodeRecord {
  std::vector<int> tokens;
  std::vector<std::string> instruction;
  std::vector<EpisodeStep> steps;
  bool stopped = false;  // false iff the step cap ended the episode
  int task_index = -1;   // position within its split, when known
};

struct EpisodeOptions {
  double control_dt = 0.2;
  int step_cap = 120;
  bool render = true;
  bool keep_images = true;
  double pose_noise_var = 0.0;  // m^2, position axes only
  uint64_t noise_seed = 0;
};

using ExpertLabeler = std::function<Action(const Pose&)>;

// Observe -> act -> step at the control rate until STOP or the step cap.
// Expert labels, when a labeler is given, are computed from the true pose.
inline EpisodeRecord run_episode(Policy& policy, const world::EnvironmentSpec& env,
                                 const world::LandmarkPool& pool, const world::TaskSpec& task,
                                 const std::vector<int>& tokens, const geo::CameraModel& cam,
                                 const AgentConfig& agent, const ExpertLabeler& labeler,
                                 const EpisodeOptions& opt) {
  EpisodeRecord rec;
  rec.tokens = tokens;
  rec.instruction = task.instruction;
  WorldState state;
  state.env = &env;
  state.pose = task.start;
  state.config = agent;
  policy.reset(tokens);
  Rng noise_rng(derive_seed(opt.noise_seed, "pose_noise"));
  const double noise_std = std::sqrt(std::max(0.0, opt.pose_noise_var));

  for (int t = 0; t < opt.step_cap; ++t) {
    AgentContext ctx;
    ctx.tokens = tokens;
    ctx.pose = state.pose;
    if (opt.pose_noise_var > 0.0) {
      // Three axes drawn to keep the stream layout fixed; altitude noise is
      // drawn but ignored by the planar pipeline.
      const double nx = noise_rng.normal(0.0, noise_std);
      const double ny = noise_rng.normal(0.0, noise_std);
      (void)noise_rng.normal(0.0, noise_std);
      ctx.pose.p.x += nx;
      ctx.pose.p.y += ny;
    }
    if (opt.render && (policy.wants_images() || opt.keep_images))
      ctx.image = render(env, pool, state.pose, cam);

    EpisodeStep step_rec;
    step_rec.true_pose = state.pose;
    step_rec.observed_pose = ctx.pose;
    step_rec.taken = policy.act(ctx);
    if (labeler) step_rec.expert = labeler(state.pose);
    if (opt.keep_images) step_rec.image = ctx.image;
    rec.steps.push_back(std::move(step_rec));

    if (rec.steps.back().taken.stop()) {
      rec.stopped = true;
      break;
    }
    state = step(state, rec.steps.back().taken, opt.control_dt);
  }
  return rec;
}

}  // namespace gsmn::sim
