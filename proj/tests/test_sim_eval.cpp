#include <catch2/catch_amalgamated.hpp>

#include "gsmn/eval.hpp"

using namespace gsmn;

namespace {

class ImmediateStopPolicy : public sim::Policy {
 public:
  void reset(const std::vector<int>&) override {}
  sim::Action act(const sim::AgentContext&) override { return {0.0, 0.0, 1.0}; }
  bool wants_images() const override { return false; }
};

class ConstantPolicy : public sim::Policy {
 public:
  explicit ConstantPolicy(sim::Action a) : a_(a) {}
  void reset(const std::vector<int>&) override {}
  sim::Action act(const sim::AgentContext&) override { return a_; }
  bool wants_images() const override { return false; }

 private:
  sim::Action a_;
};

world::Dataset small_dataset(int train, int dev, int test, uint64_t seed = 1) {
  world::SplitConfig cfg;
  cfg.train = train;
  cfg.dev = dev;
  cfg.test = test;
  cfg.seed = seed;
  cfg.gen.count_max = 10;
  return world::build_splits(cfg);
}

}  // namespace

TEST_CASE("kinematic step") {
  world::EnvironmentSpec env;
  env.field_size = 30.0;
  sim::WorldState s;
  s.env = &env;
  s.pose.p = {5.0, 5.0};
  s.pose.yaw = 0.0;

  SECTION("straight-line integration with lag disabled") {
    s.config.lag_tau = 0.0;
    const auto next = sim::step(s, {1.0, 0.0, 0.0}, 0.2);
    REQUIRE(next.pose.p.x == Catch::Approx(5.2));
    REQUIRE(next.pose.p.y == Catch::Approx(5.0));
    REQUIRE(next.pose.yaw == Catch::Approx(0.0));
  }

  SECTION("pure rotation leaves position unchanged") {
    s.config.lag_tau = 0.0;
    s.config.omega_max = 4.0;  // pi rad/s would otherwise hit the clamp
    const auto next = sim::step(s, {0.0, kPi, 0.0}, 0.2);
    REQUIRE(next.pose.p.x == Catch::Approx(5.0));
    REQUIRE(next.pose.yaw == Catch::Approx(0.2 * kPi));
  }

  SECTION("commanded 3.0 m/s realizes at most the 1.6 m/s clamp") {
    s.config.lag_tau = 0.0;
    const auto next = sim::step(s, {3.0, 0.0, 0.0}, 0.2);
    REQUIRE(next.v_real == Catch::Approx(1.6));
    s.config.lag_tau = 0.3;
    sim::WorldState cur = s;
    for (int i = 0; i < 100; ++i) {
      cur = sim::step(cur, {3.0, 5.0, 0.0}, 0.2);
      REQUIRE(cur.v_real <= 1.6 + 1e-12);
      REQUIRE(std::abs(cur.omega_real) <= 2.44 + 1e-12);
    }
    REQUIRE(cur.v_real == Catch::Approx(1.6).epsilon(1e-6));
  }
}

TEST_CASE("renderer") {
  const world::LandmarkPool pool = world::make_pool(4, 4, 2);
  geo::CameraModel cam;
  cam.width = 128;
  cam.height = 72;

  SECTION("nadir view centers the disc under the camera") {
    cam.pitch_rad = deg2rad(-90.0);
    world::EnvironmentSpec env;
    env.field_size = 30.0;
    env.landmarks.push_back({1, {10.0, 10.0}});
    Pose pose;
    pose.p = {10.0, 10.0};
    pose.altitude = 5.0;
    const sim::Image img = sim::render(env, pool, pose, cam);
    const uint8_t* center = img.pixel(36, 64);
    const auto& color = pool.classes[1].color;
    REQUIRE(int(center[0]) == int(color[0]));
    REQUIRE(int(center[1]) == int(color[1]));
    REQUIRE(int(center[2]) == int(color[2]));
  }

  SECTION("empty field: field color below the horizon, sky above") {
    cam.pitch_rad = deg2rad(-10.0);  // horizon inside the frame
    world::EnvironmentSpec env;
    env.field_size = 30.0;
    Pose pose;
    pose.p = {15.0, 15.0};
    pose.altitude = 5.0;
    const sim::Image img = sim::render(env, pool, pose, cam);
    const sim::RenderPalette pal;
    const uint8_t* top = img.pixel(0, 64);
    REQUIRE(int(top[0]) == int(pal.sky[0]));
    const uint8_t* bottom = img.pixel(71, 64);
    REQUIRE(int(bottom[0]) == int(pal.field[0]));
    REQUIRE(int(bottom[1]) == int(pal.field[1]));
  }

  SECTION("every landmark-colored pixel re-projects inside the same disc") {
    cam.pitch_rad = deg2rad(-30.0);
    world::EnvironmentSpec env;
    env.field_size = 30.0;
    env.landmarks.push_back({0, {12.0, 9.0}});
    env.landmarks.push_back({2, {18.0, 16.0}});
    Pose pose;
    pose.p = {2.0, 2.0};
    pose.altitude = 5.0;
    pose.yaw = kPi / 4;
    const sim::Image img = sim::render(env, pool, pose, cam);
    const auto T = geo::camera_to_world(pose, cam);
    int landmark_pixels = 0;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const uint8_t* px = img.pixel(y, x);
        for (const auto& lm : env.landmarks) {
          const auto& color = pool.classes[size_t(lm.class_id)].color;
          if (px[0] != color[0] || px[1] != color[1] || px[2] != color[2]) continue;
          ++landmark_pixels;
          const auto hit = geo::raycast_ground(x + 0.5, y + 0.5, cam, T);
          REQUIRE(hit.has_value());
          const double r = pool.classes[size_t(lm.class_id)].radius;
          REQUIRE(distance(*hit, lm.position) <= r + 1e-9);
        }
      }
    REQUIRE(landmark_pixels > 0);
  }
}

TEST_CASE("episode loop") {
  const world::Dataset ds = small_dataset(3, 0, 0);
  const world::TaskRecord& rec = ds.train[0];
  const model::Vocab vocab = model::Vocab::build(ds.pool);
  const std::vector<int> tokens = vocab.encode(rec.task.instruction);
  geo::CameraModel cam;
  sim::AgentConfig agent;
  learn::ExpertConfig expert_cfg;
  sim::ExpertLabeler labeler = [&](const Pose& p) { return learn::expert_action(p, rec.demo, expert_cfg); };
  sim::EpisodeOptions opt;
  opt.render = false;
  opt.keep_images = false;

  SECTION("immediate stop yields a one-step episode at the start pose") {
    ImmediateStopPolicy p;
    const auto ep = sim::run_episode(p, rec.env, ds.pool, rec.task, tokens, cam, agent, labeler, opt);
    REQUIRE(ep.steps.size() == 1);
    REQUIRE(ep.stopped);
    REQUIRE(ep.steps[0].true_pose.p.x == rec.task.start.p.x);
  }

  SECTION("constant forward policy runs to the step cap and is marked not-stopped") {
    ConstantPolicy p({1.0, 0.0, 0.0});
    opt.step_cap = 30;
    const auto ep = sim::run_episode(p, rec.env, ds.pool, rec.task, tokens, cam, agent, labeler, opt);
    REQUIRE(ep.steps.size() == 30);
    REQUIRE_FALSE(ep.stopped);
  }

  SECTION("expert rollouts are bit-reproducible") {
    learn::ExpertPolicy a(rec.demo, expert_cfg), b(rec.demo, expert_cfg);
    const auto ea = sim::run_episode(a, rec.env, ds.pool, rec.task, tokens, cam, agent, labeler, opt);
    const auto eb = sim::run_episode(b, rec.env, ds.pool, rec.task, tokens, cam, agent, labeler, opt);
    REQUIRE(ea.steps.size() == eb.steps.size());
    for (size_t i = 0; i < ea.steps.size(); ++i) {
      REQUIRE(ea.steps[i].true_pose.p.x == eb.steps[i].true_pose.p.x);
      REQUIRE(ea.steps[i].true_pose.yaw == eb.steps[i].true_pose.yaw);
      REQUIRE(ea.steps[i].taken.v == eb.steps[i].taken.v);
      REQUIRE(ea.steps[i].expert.v == eb.steps[i].expert.v);
    }
  }

  SECTION("expert labels equal the recomputed carrot-planner action bit-exactly") {
    learn::ExpertPolicy p(rec.demo, expert_cfg);
    const auto ep = sim::run_episode(p, rec.env, ds.pool, rec.task, tokens, cam, agent, labeler, opt);
    for (const auto& step : ep.steps) {
      const sim::Action again = learn::expert_action(step.true_pose, rec.demo, expert_cfg);
      REQUIRE(step.expert.v == again.v);
      REQUIRE(step.expert.omega == again.omega);
      REQUIRE(step.expert.p_stop == again.p_stop);
      REQUIRE(step.taken.v == again.v);  // the acting policy is the same planner
    }
  }
}

TEST_CASE("expert action geometry") {
  world::DemoTrajectory demo;
  demo.dt = 0.2;
  for (int i = 0; i <= 50; ++i) {
    Pose p;
    p.p = {i * 0.3, 0.0};
    demo.poses.push_back(p);
  }
  learn::ExpertConfig cfg;

  SECTION("carrot directly ahead: full speed, no turn") {
    Pose pose;
    pose.p = {1.0, 0.0};
    pose.yaw = 0.0;
    const auto a = learn::expert_action(pose, demo, cfg);
    REQUIRE(a.omega == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(a.v == Catch::Approx(1.6));
    REQUIRE(a.p_stop == 0.0);
  }

  SECTION("carrot 90 degrees left: zero forward speed, positive turn rate") {
    Pose pose;
    pose.p = {1.0, 0.0};
    pose.yaw = -kPi / 2;  // path continues to +x, agent faces -y
    const auto a = learn::expert_action(pose, demo, cfg);
    REQUIRE(a.v == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(a.omega > 0.0);
  }

  SECTION("stop inside the stop radius of the endpoint") {
    Pose pose;
    pose.p = {15.0 - 0.5, 0.0};
    const auto a = learn::expert_action(pose, demo, cfg);
    REQUIRE(a.p_stop == 1.0);
  }
}

TEST_CASE("quadrant classification") {
  const Vec2 start{0.0, 0.0};
  const Vec2 lm{10.0, 0.0};

  SECTION("point between start and landmark is front") {
    REQUIRE(evaluation::quadrant_of({7.0, 0.0}, lm, start) == world::Side::front);
  }
  SECTION("diametrically opposite point is back") {
    REQUIRE(evaluation::quadrant_of({13.0, 0.0}, lm, start) == world::Side::back);
  }
  SECTION("degenerate geometry raises") {
    REQUIRE_THROWS_AS(evaluation::quadrant_of(lm, lm, start), DataError);
    REQUIRE_THROWS_AS(evaluation::quadrant_of({1.0, 1.0}, lm, lm), DataError);
  }

  SECTION("agrees with an atan2 sector oracle on 10^4 random points") {
    Rng rng(21);
    for (int i = 0; i < 10000; ++i) {
      const Vec2 s{rng.uniform(-20, 20), rng.uniform(-20, 20)};
      const Vec2 c{rng.uniform(-20, 20), rng.uniform(-20, 20)};
      if (distance(s, c) < 0.5) continue;
      const Vec2 p{rng.uniform(-25, 25), rng.uniform(-25, 25)};
      if (distance(p, c) < 1e-6) continue;
      const Vec2 dhat = (c - s).normalized();
      const Vec2 front = world::side_direction(world::Side::front, dhat);
      const double rel = wrap_angle(std::atan2(p.y - c.y, p.x - c.x) - std::atan2(front.y, front.x));
      world::Side want;
      if (std::abs(rel) <= kPi / 4)
        want = world::Side::front;
      else if (rel > kPi / 4 && rel < 3 * kPi / 4)
        want = world::Side::right;  // right is the CCW quarter-turn of "front"
      else if (rel < -kPi / 4 && rel > -3 * kPi / 4)
        want = world::Side::left;
      else
        want = world::Side::back;
      REQUIRE(evaluation::quadrant_of(p, c, s) == want);
    }
  }
}

TEST_CASE("success predicate") {
  world::TaskSpec task;
  task.start.p = {0.0, 0.0};
  task.side = world::Side::front;
  task.d_stop = 6.0;
  const Vec2 lm{10.0, 0.0};
  task.goal = {7.0, 0.0};

  auto make_episode = [&](Vec2 final_pos, bool stopped) {
    sim::EpisodeRecord ep;
    sim::EpisodeStep step;
    step.true_pose.p = final_pos;
    step.taken.p_stop = stopped ? 1.0 : 0.0;
    ep.steps.push_back(step);
    ep.stopped = stopped;
    return ep;
  };

  SECTION("stop 5m away in the correct quadrant is an overall success") {
    const auto s = evaluation::success(make_episode({5.5, 1.0}, true), task, lm);
    REQUIRE(s.overall);
    REQUIRE(s.landmark);
  }
  SECTION("stop 5m away in the wrong quadrant is landmark-only") {
    const auto s = evaluation::success(make_episode({14.0, 1.0}, true), task, lm);
    REQUIRE_FALSE(s.overall);
    REQUIRE(s.landmark);
  }
  SECTION("never stopping fails even at the goal") {
    const auto s = evaluation::success(make_episode({7.0, 0.0}, false), task, lm);
    REQUIRE_FALSE(s.overall);
    REQUIRE_FALSE(s.landmark);
    REQUIRE(s.dist == Catch::Approx(0.0));
  }

  SECTION("success is invariant to rigid translation of the whole scene") {
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
      const Vec2 shift{rng.uniform(-50, 50), rng.uniform(-50, 50)};
      const Vec2 stop_at{rng.uniform(0, 15), rng.uniform(-8, 8)};
      const auto base = evaluation::success(make_episode(stop_at, true), task, lm);
      world::TaskSpec moved = task;
      moved.start.p = task.start.p + shift;
      moved.goal = task.goal + shift;
      const auto shifted = evaluation::success(make_episode(stop_at + shift, true), moved, lm + shift);
      REQUIRE(base.overall == shifted.overall);
      REQUIRE(base.landmark == shifted.landmark);
      REQUIRE(base.dist == Catch::Approx(shifted.dist).margin(1e-9));
    }
  }
}

TEST_CASE("evaluate over a split") {
  const world::Dataset ds = small_dataset(0, 0, 30, 5);
  learn::ExpertConfig expert_cfg;
  world::DemoConfig demo_cfg;
  world::TaskConfig task_cfg;
  evaluation::EvalOptions opt;
  opt.render = false;
  opt.episode.keep_images = false;
  const auto suite = evaluation::trivial_baselines(ds.pool, expert_cfg, demo_cfg, task_cfg, 1.3, 0.0);

  SECTION("expert succeeds on most tasks; landmark >= overall") {
    const auto r = evaluation::evaluate(suite.expert, ds.test, ds.pool, opt);
    REQUIRE(r.landmark_success >= r.overall_success);
    REQUIRE(r.overall_success >= 0.85);
    REQUIRE(r.mean_dist < 2.5);
  }

  SECTION("avg-steps-forward stops after exactly 30 steps") {
    const auto r = evaluation::evaluate(suite.avg_steps_fwd, ds.test, ds.pool, opt);
    for (const auto& row : r.rows) {
      REQUIRE(row.steps == 31);  // 30 forward actions, then the stop action
      REQUIRE(row.stopped);
    }
  }

  SECTION("noiseless evaluation is bit-reproducible; zero variance matches omitted noise") {
    const auto a = evaluation::evaluate(suite.expert, ds.test, ds.pool, opt);
    const auto b = evaluation::evaluate(suite.expert, ds.test, ds.pool, opt);
    evaluation::EvalOptions zero = opt;
    zero.noise = evaluation::NoiseSpec{0.0};
    const auto c = evaluation::evaluate(suite.expert, ds.test, ds.pool, zero);
    for (size_t i = 0; i < a.rows.size(); ++i) {
      REQUIRE(a.rows[i].dist == b.rows[i].dist);
      REQUIRE(a.rows[i].dist == c.rows[i].dist);
      REQUIRE(a.rows[i].steps == c.rows[i].steps);
    }
  }
}
