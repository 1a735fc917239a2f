#include <catch2/catch_amalgamated.hpp>
#include <set>

#include "gsmn/dataset.hpp"

using namespace gsmn;
using namespace gsmn::world;

TEST_CASE("landmark pool construction") {
  const LandmarkPool pool = make_pool(12, 10, 42);
  REQUIRE(pool.classes.size() == 12);
  REQUIRE(pool.phrases.size() == 10);
  std::set<int> ids;
  for (const auto& c : pool.classes) {
    ids.insert(c.class_id);
    REQUIRE(c.radius >= 0.8);
    REQUIRE(c.radius <= 1.5);
    REQUIRE(c.phrase_id >= 0);
    REQUIRE(c.phrase_id < 10);
  }
  REQUIRE(ids.size() == 12);
  // The two overflow classes reuse the first phrases (controlled ambiguity).
  REQUIRE(pool.classes[10].phrase_id == 0);
  REQUIRE(pool.classes[11].phrase_id == 1);
}

TEST_CASE("environment generation") {
  const LandmarkPool pool = make_pool(63, 45, 7);
  GenConfig cfg;  // paper-shaped defaults

  SECTION("constraints hold over 1000 seeds (brute-force scan)") {
    for (uint64_t seed = 0; seed < 1000; ++seed) {
      const EnvironmentSpec env = generate_environment(pool, seed, cfg);
      REQUIRE(env.landmarks.size() >= 6);
      REQUIRE(env.landmarks.size() <= 13);
      std::set<int> classes;
      for (size_t i = 0; i < env.landmarks.size(); ++i) {
        const auto& l = env.landmarks[i];
        classes.insert(l.class_id);
        REQUIRE(l.position.x >= 2.7);
        REQUIRE(l.position.y >= 2.7);
        REQUIRE(l.position.x <= 30.0 - 2.7);
        REQUIRE(l.position.y <= 30.0 - 2.7);
        for (size_t j = i + 1; j < env.landmarks.size(); ++j)
          REQUIRE(distance(l.position, env.landmarks[j].position) >= 1.8);
      }
      REQUIRE(classes.size() == env.landmarks.size());
    }
  }

  SECTION("deterministic for a fixed seed") {
    const EnvironmentSpec a = generate_environment(pool, 55, cfg);
    const EnvironmentSpec b = generate_environment(pool, 55, cfg);
    REQUIRE(a.landmarks.size() == b.landmarks.size());
    for (size_t i = 0; i < a.landmarks.size(); ++i) {
      REQUIRE(a.landmarks[i].class_id == b.landmarks[i].class_id);
      REQUIRE(a.landmarks[i].position.x == b.landmarks[i].position.x);
      REQUIRE(a.landmarks[i].position.y == b.landmarks[i].position.y);
    }
  }

  SECTION("degenerate single-landmark config") {
    const LandmarkPool tiny = make_pool(1, 1, 3);
    GenConfig one;
    one.count_min = one.count_max = 1;
    const EnvironmentSpec env = generate_environment(tiny, 9, one);
    REQUIRE(env.landmarks.size() == 1);
  }

  SECTION("over-constrained config fails loudly") {
    GenConfig bad;
    bad.count_min = bad.count_max = 13;
    bad.min_separation = 40.0;  // cannot fit 13 landmarks this far apart
    bad.max_attempts = 200;
    REQUIRE_THROWS_AS(generate_environment(pool, 1, bad), DataError);
  }
}

TEST_CASE("task generation") {
  const LandmarkPool pool = make_pool(12, 10, 42);
  GenConfig gcfg;
  gcfg.count_max = 12;
  TaskConfig tcfg;

  SECTION("goal sits on the requested side axis at a radius-scaled distance") {
    for (uint64_t seed = 0; seed < 500; ++seed) {
      const EnvironmentSpec env = generate_environment(pool, seed, gcfg);
      const TaskSpec task = generate_task(env, pool, seed, tcfg);
      const Landmark* target = find_target(env, task);
      REQUIRE(target != nullptr);
      const double dist = distance(task.goal, target->position);
      REQUIRE(dist >= 2.25 - 1e-9);
      REQUIRE(dist <= 3.75 + 1e-9);
      const Vec2 dhat = (target->position - task.start.p).normalized();
      const Vec2 expected_dir = side_direction(task.side, dhat);
      const Vec2 actual_dir = (task.goal - target->position).normalized();
      REQUIRE(actual_dir.dot(expected_dir) == Catch::Approx(1.0).margin(1e-9));
      REQUIRE(task.instruction.size() == 7);
      REQUIRE(task.instruction[3] == side_name(task.side));
      REQUIRE(task.instruction[6] == pool.phrase_of(task.target_class));
    }
  }

  SECTION("back goal mirrors the front goal through the landmark") {
    EnvironmentSpec env;
    env.field_size = 30.0;
    env.landmarks.push_back({0, {15.0, 15.0}});
    TaskSpec base = generate_task(env, pool, 1, tcfg);
    const Vec2 dhat = (env.landmarks[0].position - base.start.p).normalized();
    const double d = goal_distance(pool.classes[0].radius, tcfg);
    const Vec2 front = env.landmarks[0].position + side_direction(Side::front, dhat) * d;
    const Vec2 back = env.landmarks[0].position + side_direction(Side::back, dhat) * d;
    const Vec2 mirrored = env.landmarks[0].position * 2.0 - front;
    REQUIRE(back.x == Catch::Approx(mirrored.x).margin(1e-12));
    REQUIRE(back.y == Catch::Approx(mirrored.y).margin(1e-12));
  }

  SECTION("shared phrase marks tasks ambiguous") {
    EnvironmentSpec env;
    env.field_size = 30.0;
    env.landmarks.push_back({0, {10.0, 10.0}});   // phrase 0
    env.landmarks.push_back({10, {20.0, 20.0}});  // also phrase 0
    bool saw_ambiguous = false;
    for (uint64_t s = 0; s < 16; ++s) {
      const TaskSpec t = generate_task(env, pool, s, tcfg);
      REQUIRE(t.ambiguous);  // both landmarks share phrase 0 whichever is chosen
      saw_ambiguous = true;
    }
    REQUIRE(saw_ambiguous);
  }
}

TEST_CASE("demonstration synthesis") {
  const LandmarkPool pool = make_pool(12, 10, 42);
  TaskConfig tcfg;
  DemoConfig dcfg;

  SECTION("clear line of sight gives a near-straight, monotone path") {
    EnvironmentSpec env;
    env.field_size = 30.0;
    env.landmarks.push_back({0, {25.0, 3.0}});  // far from the start->goal line
    TaskSpec task;
    task.start.p = {0.0, 0.0};
    task.start.yaw = kPi / 4;
    task.goal = {14.0, 14.0};
    const auto demo = synthesize_demo(env, pool, task, dcfg);
    REQUIRE(demo.has_value());
    double prev = 1e18;
    for (const Pose& p : demo->poses) {
      const double d = distance(p.p, task.goal);
      REQUIRE(d < prev + 1e-9);
      prev = d;
      // Near-straight: stay close to the diagonal.
      REQUIRE(std::abs(p.p.x - p.p.y) < 0.5);
    }
    REQUIRE(distance(demo->poses.back().p, task.goal) <= 0.5);
  }

  SECTION("landmark on the straight line forces a clearance-respecting detour") {
    EnvironmentSpec env;
    env.field_size = 30.0;
    env.landmarks.push_back({0, {10.0, 10.0}});
    TaskSpec task;
    task.start.p = {2.0, 2.0};
    task.goal = {18.0, 18.0};
    const auto demo = synthesize_demo(env, pool, task, dcfg);
    REQUIRE(demo.has_value());
    const double keep_out = pool.classes[0].radius + dcfg.clearance;
    double min_clear = 1e18;
    for (size_t i = 0; i + 1 < demo->poses.size(); ++i) {
      // Dense sampling along each segment.
      for (int k = 0; k <= 10; ++k) {
        const Vec2 p = demo->poses[i].p + (demo->poses[i + 1].p - demo->poses[i].p) * (k / 10.0);
        min_clear = std::min(min_clear, distance(p, env.landmarks[0].position));
      }
    }
    REQUIRE(min_clear >= keep_out - 0.06);  // segment chords may cut slightly inside
  }

  SECTION("batch reachability: at least 99% of 1000 tasks reach the goal") {
    GenConfig gcfg;
    gcfg.count_max = 12;
    int reached = 0;
    const int total = 1000;
    for (uint64_t seed = 0; seed < total; ++seed) {
      const EnvironmentSpec env = generate_environment(pool, seed, gcfg);
      const TaskSpec task = generate_task(env, pool, seed, tcfg);
      const auto demo = synthesize_demo(env, pool, task, dcfg);
      if (!demo) continue;
      REQUIRE(demo->poses.front().p.x == task.start.p.x);
      REQUIRE(demo->poses.front().p.y == task.start.p.y);
      if (distance(demo->poses.back().p, task.goal) <= dcfg.eps_goal) ++reached;
    }
    REQUIRE(reached >= 990);
  }
}

TEST_CASE("split building and manifest round-trip") {
  SplitConfig cfg;
  cfg.train = 12;
  cfg.dev = 5;
  cfg.test = 5;
  cfg.gen.count_min = 5;
  cfg.gen.count_max = 9;
  const Dataset ds = build_splits(cfg);
  REQUIRE(ds.train.size() == 12);
  REQUIRE(ds.dev.size() == 5);
  REQUIRE(ds.test.size() == 5);

  std::set<uint64_t> seeds;
  for (const auto* split : {&ds.train, &ds.dev, &ds.test})
    for (const TaskRecord& r : *split) seeds.insert(r.env_seed);
  REQUIRE(seeds.size() == 22);  // split disjointness

  const auto dir = std::filesystem::temp_directory_path() / "gsmn_test_ds";
  std::filesystem::remove_all(dir);
  world::io::save_dataset(ds, dir);
  const Dataset loaded = world::io::load_dataset(dir);
  REQUIRE(loaded.train.size() == ds.train.size());
  REQUIRE(loaded.pool.classes.size() == ds.pool.classes.size());
  REQUIRE(loaded.train[3].task.instruction == ds.train[3].task.instruction);
  REQUIRE(loaded.train[3].demo.poses.size() == ds.train[3].demo.poses.size());
  REQUIRE(loaded.train[3].demo.poses.back().p.x == ds.train[3].demo.poses.back().p.x);

  // Saving the same dataset twice is byte-identical.
  const auto dir2 = std::filesystem::temp_directory_path() / "gsmn_test_ds2";
  std::filesystem::remove_all(dir2);
  world::io::save_dataset(build_splits(cfg), dir2);
  for (const char* f : {"pool.json", "train.jsonl", "dev.jsonl", "test.jsonl"}) {
    std::ifstream a(dir / f, std::ios::binary), b(dir2 / f, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    REQUIRE(sa == sb);
  }
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}
