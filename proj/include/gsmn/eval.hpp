#pragma once

#include <algorithm>
#include <memory>
#include <numeric>

#include "gsmn/dataset.hpp"
#include "gsmn/learning/expert.hpp"
#include "gsmn/model/vocab.hpp"

namespace gsmn::evaluation {

// Quadrant of a point around the landmark, with respect to the start
// position. Ties (measure zero) resolve toward front, then left.
inline world::Side quadrant_of(const Vec2& point, const Vec2& landmark, const Vec2& start) {
  const Vec2 to_lm = landmark - start;
  const Vec2 off = point - landmark;
  if (to_lm.norm() < 1e-12 || off.norm() < 1e-12)
    throw DataError("quadrant_of: degenerate geometry");
  const Vec2 dhat = to_lm.normalized();
  world::Side best = world::Side::front;
  double best_dot = -1e300;
  for (world::Side s : {world::Side::front, world::Side::left, world::Side::right, world::Side::back}) {
    const double d = off.dot(world::side_direction(s, dhat));
    if (d > best_dot) {
      best_dot = d;
      best = s;
    }
  }
  return best;
}

struct SuccessResult {
  bool overall = false;     // stopped in the correct quadrant within D_stop
  bool landmark = false;    // stopped within D_stop on any side
  bool goal_radius = false; // stopped within D_T of the goal position
  double dist = 0.0;        // final distance to the goal position
};

inline SuccessResult success(const sim::EpisodeRecord& episode, const world::TaskSpec& task,
                             const Vec2& landmark_pos, double d_t = 3.0) {
  require(!episode.steps.empty(), "success: empty episode");
  SuccessResult r;
  const Vec2 p_m = episode.steps.back().true_pose.p;
  r.dist = distance(p_m, task.goal);
  const bool stopped = episode.stopped;
  const bool in_region = distance(p_m, landmark_pos) < task.d_stop;
  r.landmark = stopped && in_region;
  r.overall = r.landmark && distance(p_m, landmark_pos) > 1e-12 &&
              quadrant_of(p_m, landmark_pos, task.start.p) == task.side;
  r.goal_radius = stopped && r.dist < d_t;
  return r;
}

struct NoiseSpec {
  double position_variance = 0.5;  // m^2, per axis, drawn independently per step
};

struct EpisodeRow {
  int task_index = 0;
  int steps = 0;
  bool stopped = false;
  bool overall = false;
  bool landmark = false;
  bool goal_radius = false;
  double dist = 0.0;
  bool ambiguous = false;
};

struct EvalResult {
  double overall_success = 0.0;
  double landmark_success = 0.0;
  double goal_radius_success = 0.0;
  double mean_dist = 0.0;
  double median_dist = 0.0;
  double pruned_overall = 0.0;
  double pruned_landmark = 0.0;
  double pruned_mean = 0.0;
  double pruned_median = 0.0;
  std::vector<EpisodeRow> rows;
};

struct EvalOptions {
  std::optional<NoiseSpec> noise;
  sim::EpisodeOptions episode;
  learn::ExpertConfig expert;  // for the expert labels recorded in episodes
  sim::AgentConfig agent;
  geo::CameraModel camera;
  double d_t = 3.0;
  uint64_t seed = 0;
  bool render = true;
};

// A fresh policy per task; the factory sees the task record so oracle-style
// policies (expert, targeted baselines) can be built, while learned policies
// ignore everything but the instruction.
using PolicyFactory = std::function<std::unique_ptr<sim::Policy>(const world::TaskRecord&, Rng&)>;

namespace detail {
inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace detail

inline EvalResult evaluate(const PolicyFactory& factory, const std::vector<world::TaskRecord>& split,
                           const world::LandmarkPool& pool, const EvalOptions& opt) {
  require(!split.empty(), "evaluate: empty split");
  const model::Vocab vocab = model::Vocab::build(pool);
  EvalResult out;
  std::vector<double> dists, pruned_dists;
  int n_overall = 0, n_landmark = 0, n_goal = 0;
  int pruned_n = 0, pruned_overall = 0, pruned_landmark = 0;

  for (size_t i = 0; i < split.size(); ++i) {
    const world::TaskRecord& rec = split[i];
    Rng policy_rng(derive_seed(opt.seed, "eval_policy", i));
    auto policy = factory(rec, policy_rng);

    sim::EpisodeOptions ep_opt = opt.episode;
    ep_opt.render = opt.render;
    ep_opt.keep_images = false;
    ep_opt.noise_seed = derive_seed(opt.seed, "eval_noise", i);
    ep_opt.pose_noise_var = opt.noise ? opt.noise->position_variance : 0.0;

    const std::vector<int> tokens = vocab.encode(rec.task.instruction);
    sim::ExpertLabeler labeler = [&](const Pose& pose) {
      return learn::expert_action(pose, rec.demo, opt.expert);
    };
    const sim::EpisodeRecord episode = sim::run_episode(*policy, rec.env, pool, rec.task, tokens,
                                                        opt.camera, opt.agent, labeler, ep_opt);
    const world::Landmark* target = world::find_target(rec.env, rec.task);
    require(target != nullptr, "evaluate: task target missing from environment");
    const SuccessResult s = success(episode, rec.task, target->position, opt.d_t);

    EpisodeRow row;
    row.task_index = int(i);
    row.steps = int(episode.steps.size());
    row.stopped = episode.stopped;
    row.overall = s.overall;
    row.landmark = s.landmark;
    row.goal_radius = s.goal_radius;
    row.dist = s.dist;
    row.ambiguous = rec.task.ambiguous;
    out.rows.push_back(row);

    dists.push_back(s.dist);
    n_overall += s.overall;
    n_landmark += s.landmark;
    n_goal += s.goal_radius;
    if (!rec.task.ambiguous) {
      ++pruned_n;
      pruned_overall += s.overall;
      pruned_landmark += s.landmark;
      pruned_dists.push_back(s.dist);
    }
  }

  const double n = double(split.size());
  out.overall_success = n_overall / n;
  out.landmark_success = n_landmark / n;
  out.goal_radius_success = n_goal / n;
  out.mean_dist = std::accumulate(dists.begin(), dists.end(), 0.0) / n;
  out.median_dist = detail::median(dists);
  if (pruned_n > 0) {
    out.pruned_overall = pruned_overall / double(pruned_n);
    out.pruned_landmark = pruned_landmark / double(pruned_n);
    out.pruned_mean = std::accumulate(pruned_dists.begin(), pruned_dists.end(), 0.0) / double(pruned_n);
    out.pruned_median = detail::median(pruned_dists);
  }
  return out;
}

// ---- trivial baselines ----

// (a) the average action for the average number of steps, then stop.
class AvgStepsFwdPolicy : public sim::Policy {
 public:
  AvgStepsFwdPolicy(double v_bar, double omega_bar, int steps) : v_(v_bar), w_(omega_bar), steps_(steps) {}
  void reset(const std::vector<int>&) override { t_ = 0; }
  sim::Action act(const sim::AgentContext&) override {
    sim::Action a;
    if (t_++ >= steps_) {
      a.p_stop = 1.0;
      return a;
    }
    a.v = v_;
    a.omega = w_;
    return a;
  }
  bool wants_images() const override { return false; }

 private:
  double v_, w_;
  int steps_, t_ = 0;
};

// Average expert action over a set of demonstrations (used to parameterize
// the avg-steps-forward baseline).
inline std::pair<double, double> average_demo_action(const std::vector<world::TaskRecord>& split,
                                                     const learn::ExpertConfig& expert) {
  double sv = 0.0, sw = 0.0;
  size_t n = 0;
  for (const world::TaskRecord& rec : split)
    for (const Pose& p : rec.demo.poses) {
      const sim::Action a = learn::expert_action(p, rec.demo, expert);
      sv += a.v;
      sw += a.omega;
      ++n;
    }
  return {n ? sv / double(n) : 0.0, n ? sw / double(n) : 0.0};
}

// Navigate to a synthetic goal with the expert planner over a synthesized
// avoidance path; stops on arrival like the expert.
inline std::unique_ptr<sim::Policy> planner_to_point(const world::TaskRecord& rec,
                                                     const world::LandmarkPool& pool, const Vec2& target,
                                                     const learn::ExpertConfig& expert,
                                                     const world::DemoConfig& demo_cfg) {
  world::TaskSpec fake = rec.task;
  fake.goal = target;
  auto demo = world::synthesize_demo(rec.env, pool, fake, demo_cfg);
  if (!demo) {
    // Unreachable under the potential field: fall back to the straight segment.
    world::DemoTrajectory straight;
    straight.dt = demo_cfg.dt;
    straight.poses = {rec.task.start, rec.task.start};
    straight.poses.back().p = target;
    demo = straight;
  }
  return std::make_unique<learn::ExpertPolicy>(*demo, expert);
}

struct BaselineSuite {
  PolicyFactory expert;
  PolicyFactory avg_steps_fwd;
  PolicyFactory random_point;
  PolicyFactory random_landmark;
};

inline BaselineSuite trivial_baselines(const world::LandmarkPool& pool, const learn::ExpertConfig& expert,
                                       const world::DemoConfig& demo_cfg, const world::TaskConfig& task_cfg,
                                       double avg_v, double avg_omega, int avg_steps = 30) {
  BaselineSuite suite;
  suite.expert = [expert](const world::TaskRecord& rec, Rng&) -> std::unique_ptr<sim::Policy> {
    return std::make_unique<learn::ExpertPolicy>(rec.demo, expert);
  };
  suite.avg_steps_fwd = [avg_v, avg_omega, avg_steps](const world::TaskRecord&,
                                                      Rng&) -> std::unique_ptr<sim::Policy> {
    return std::make_unique<AvgStepsFwdPolicy>(avg_v, avg_omega, avg_steps);
  };
  suite.random_point = [pool, expert, demo_cfg](const world::TaskRecord& rec,
                                                 Rng& rng) -> std::unique_ptr<sim::Policy> {
    const Vec2 target{rng.uniform(0.0, rec.env.field_size), rng.uniform(0.0, rec.env.field_size)};
    return planner_to_point(rec, pool, target, expert, demo_cfg);
  };
  suite.random_landmark = [pool, expert, demo_cfg, task_cfg](const world::TaskRecord& rec,
                                                              Rng& rng) -> std::unique_ptr<sim::Policy> {
    const world::Landmark& lm = rec.env.landmarks[rng.uniform_int(rec.env.landmarks.size())];
    const Vec2 dhat = (lm.position - rec.task.start.p).normalized();
    const double d = world::goal_distance(pool.classes[size_t(lm.class_id)].radius, task_cfg);
    const Vec2 target = lm.position + world::side_direction(rec.task.side, dhat) * d;
    return planner_to_point(rec, pool, target, expert, demo_cfg);
  };
  return suite;
}

}  // namespace gsmn::evaluation
