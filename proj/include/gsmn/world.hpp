#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "gsmn/geometry.hpp"
#include "gsmn/rng.hpp"

namespace gsmn::world {

struct LandmarkClass {
  int class_id = 0;
  int phrase_id = 0;  // several classes may share one noun phrase
  double radius = 1.0;
  std::array<uint8_t, 3> color{255, 255, 255};
};

struct LandmarkPool {
  std::vector<LandmarkClass> classes;
  std::vector<std::string> phrases;

  const std::string& phrase_of(int class_id) const { return phrases[size_t(classes[size_t(class_id)].phrase_id)]; }
};

namespace detail {
inline const std::vector<std::string>& noun_bank() {
  static const std::vector<std::string> bank = {
      "cone",   "barrel", "rock",   "tree",   "house",  "box",    "pole",   "statue", "bench",  "fountain",
      "tower",  "crate",  "lamp",   "well",   "sign",   "arch",   "tent",   "cart",   "drum",   "pillar",
      "gate",   "shed",   "silo",   "kiosk",  "booth",  "mast",   "buoy",   "anvil",  "urn",    "obelisk",
      "cairn",  "trough", "bin",    "pump",   "hut",    "post",   "rack",   "tub",    "stump",  "slab",
      "dome",   "vane",   "ladder", "wheel",  "chair",  "table",  "barrow", "keg",    "planter", "flag",
      "beacon", "crane",  "spool",  "pylon",  "mill",   "forge",  "vat",    "cradle", "sled",   "plow",
      "hive",   "coop",   "trellis"};
  return bank;
}

inline std::array<uint8_t, 3> hsv_color(double h_deg, double s, double v) {
  const double c = v * s;
  const double hp = h_deg / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = x;
  else if (hp < 2) r = x, g = c;
  else if (hp < 3) g = c, b = x;
  else if (hp < 4) g = x, b = c;
  else if (hp < 5) r = x, b = c;
  else r = c, b = x;
  const double m = v - c;
  return {uint8_t((r + m) * 255.0), uint8_t((g + m) * 255.0), uint8_t((b + m) * 255.0)};
}
}  // namespace detail

// Landmark class table: radii drawn once at pool creation, colors spread over
// the hue wheel, noun phrases assigned so the last (n_classes - n_phrases)
// classes reuse early phrases (the controlled-ambiguity pairs).
inline LandmarkPool make_pool(int n_classes, int n_phrases, uint64_t seed) {
  require(n_phrases <= n_classes, "pool: more phrases than classes");
  require(n_phrases <= int(detail::noun_bank().size()), "pool: noun bank too small");
  LandmarkPool pool;
  Rng rng(derive_seed(seed, "pool"));
  for (int i = 0; i < n_phrases; ++i) pool.phrases.push_back(detail::noun_bank()[size_t(i)]);
  for (int i = 0; i < n_classes; ++i) {
    LandmarkClass c;
    c.class_id = i;
    c.phrase_id = i < n_phrases ? i : i - n_phrases;
    c.radius = rng.uniform(0.8, 1.5);
    c.color = detail::hsv_color(std::fmod(i * 360.0 / n_classes + 15.0, 360.0), 0.8, 0.95);
    pool.classes.push_back(c);
  }
  return pool;
}

struct Landmark {
  int class_id = 0;
  Vec2 position;
};

struct EnvironmentSpec {
  double field_size = 30.0;
  std::vector<Landmark> landmarks;
  uint64_t seed = 0;
};

struct GenConfig {
  double field_size = 30.0;
  int count_min = 6;
  int count_max = 13;
  double edge_margin = 2.7;
  double min_separation = 1.8;
  int max_attempts = 4000;
};

inline EnvironmentSpec generate_environment(const LandmarkPool& pool, uint64_t seed, const GenConfig& cfg) {
  require(cfg.count_max <= int(pool.classes.size()),
          "generate_environment: count_max exceeds pool (classes drawn without replacement)");
  require(cfg.count_min >= 1 && cfg.count_min <= cfg.count_max, "generate_environment: bad count range");
  Rng rng(derive_seed(seed, "environment"));
  EnvironmentSpec env;
  env.field_size = cfg.field_size;
  env.seed = seed;
  const int count = cfg.count_min + int(rng.uniform_int(uint64_t(cfg.count_max - cfg.count_min + 1)));

  // Classes without replacement: partial Fisher-Yates over the pool.
  std::vector<int> ids(pool.classes.size());
  for (size_t i = 0; i < ids.size(); ++i) ids[i] = int(i);
  for (int i = 0; i < count; ++i) {
    const size_t j = size_t(i) + rng.uniform_int(ids.size() - size_t(i));
    std::swap(ids[size_t(i)], ids[j]);
  }

  const double lo = cfg.edge_margin, hi = cfg.field_size - cfg.edge_margin;
  require(hi > lo, "generate_environment: field too small for edge margin");
  int attempts = 0;
  for (int i = 0; i < count; ++i) {
    while (true) {
      if (++attempts > cfg.max_attempts)
        throw DataError("generate_environment: placement rejection budget exhausted (over-constrained config)");
      Vec2 pos{rng.uniform(lo, hi), rng.uniform(lo, hi)};
      bool ok = true;
      for (const Landmark& l : env.landmarks)
        if (distance(l.position, pos) < cfg.min_separation) {
          ok = false;
          break;
        }
      if (ok) {
        env.landmarks.push_back({ids[size_t(i)], pos});
        break;
      }
    }
  }
  return env;
}

enum class Side : int { left = 0, right = 1, front = 2, back = 3 };

inline const char* side_name(Side s) {
  switch (s) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::front: return "front";
    case Side::back: return "back";
  }
  return "?";
}

inline std::optional<Side> side_from_name(const std::string& s) {
  for (Side v : {Side::left, Side::right, Side::front, Side::back})
    if (s == side_name(v)) return v;
  return std::nullopt;
}

// Unit direction of a side, with dhat the unit vector from the start position
// to the landmark center. "front" faces the start; "left" is the
// counter-clockwise quarter turn of dhat.
inline Vec2 side_direction(Side s, const Vec2& dhat) {
  switch (s) {
    case Side::front: return {-dhat.x, -dhat.y};
    case Side::back: return dhat;
    case Side::left: return dhat.perp_ccw();
    case Side::right: return {dhat.y, -dhat.x};
  }
  return {0, 0};
}

struct TaskSpec {
  int target_class = 0;
  Side side = Side::front;
  std::vector<std::string> instruction;
  Vec2 goal;
  Pose start;
  double d_stop = 6.0;
  bool ambiguous = false;
};

struct TaskConfig {
  double goal_dist_min = 2.25;
  double goal_dist_max = 3.75;
  double radius_min = 0.8;  // radius range the distance scaling maps from
  double radius_max = 1.5;
  double d_stop = 6.0;
  double altitude = 5.0;
  double field_clearance = 0.5;  // goal must stay this far inside the field
  double obstacle_clearance = 0.3;
};

inline std::vector<std::string> render_instruction(Side side, const std::string& phrase) {
  return {"go", "to", "the", side_name(side), "side", "of", phrase};
}

// Goal distance grows linearly with landmark radius across the configured range.
inline double goal_distance(double radius, const TaskConfig& cfg) {
  const double t = std::clamp((radius - cfg.radius_min) / (cfg.radius_max - cfg.radius_min), 0.0, 1.0);
  return cfg.goal_dist_min + t * (cfg.goal_dist_max - cfg.goal_dist_min);
}

inline TaskSpec generate_task(const EnvironmentSpec& env, const LandmarkPool& pool, uint64_t seed,
                              const TaskConfig& cfg) {
  require(!env.landmarks.empty(), "generate_task: empty environment");
  Rng rng(derive_seed(seed, "task"));

  const double fs = env.field_size;
  const std::array<Vec2, 4> corners{Vec2{0, 0}, Vec2{fs, 0}, Vec2{fs, fs}, Vec2{0, fs}};
  const Vec2 corner = corners[rng.uniform_int(4)];
  const Vec2 center{fs / 2.0, fs / 2.0};

  Pose start;
  start.p = corner;
  start.altitude = cfg.altitude;
  start.yaw = std::atan2(center.y - corner.y, center.x - corner.x);

  // Randomized first choice, then a deterministic sweep over (landmark, side)
  // until the goal is inside the field and clear of every other landmark.
  const int n = int(env.landmarks.size());
  const int li0 = int(rng.uniform_int(uint64_t(n)));
  const int si0 = int(rng.uniform_int(4));
  for (int k = 0; k < n * 4; ++k) {
    const int li = (li0 + k / 4) % n;
    const Side side = Side((si0 + k) % 4);
    const Landmark& lm = env.landmarks[size_t(li)];
    const LandmarkClass& cls = pool.classes[size_t(lm.class_id)];
    const Vec2 dhat = (lm.position - start.p).normalized();
    const Vec2 goal = lm.position + side_direction(side, dhat) * goal_distance(cls.radius, cfg);

    if (goal.x < cfg.field_clearance || goal.y < cfg.field_clearance || goal.x > fs - cfg.field_clearance ||
        goal.y > fs - cfg.field_clearance)
      continue;
    bool blocked = false;
    for (const Landmark& other : env.landmarks) {
      const double r = pool.classes[size_t(other.class_id)].radius + cfg.obstacle_clearance;
      if (distance(other.position, goal) < r) {
        blocked = true;
        break;
      }
    }
    if (blocked) continue;

    TaskSpec task;
    task.target_class = lm.class_id;
    task.side = side;
    task.goal = goal;
    task.start = start;
    task.d_stop = cfg.d_stop;
    task.instruction = render_instruction(side, pool.phrase_of(lm.class_id));
    int mentions = 0;
    for (const Landmark& l : env.landmarks)
      if (pool.classes[size_t(l.class_id)].phrase_id == cls.phrase_id) ++mentions;
    task.ambiguous = mentions > 1;
    return task;
  }
  throw DataError("generate_task: no feasible (landmark, side) pair");
}

inline const Landmark* find_target(const EnvironmentSpec& env, const TaskSpec& task) {
  for (const Landmark& l : env.landmarks)
    if (l.class_id == task.target_class) return &l;
  return nullptr;
}

struct DemoTrajectory {
  double dt = 0.2;
  std::vector<Pose> poses;
};

struct DemoConfig {
  double dt = 0.2;
  double speed = 1.6;
  double attract_gain = 1.0;
  double repulse_gain = 2.0;
  double influence_factor = 2.0;  // repulsion active within factor * radius
  double swirl_gain = 0.8;        // tangential component steering around obstacles
  double clearance = 0.2;
  double eps_goal = 0.5;
  int step_cap = 600;
};

// Point-mass demonstration: constant-speed descent of an attract/repulse
// field, with a hard projection that keeps every pose outside the inflated
// landmark discs.
inline std::optional<DemoTrajectory> synthesize_demo(const EnvironmentSpec& env, const LandmarkPool& pool,
                                                     const TaskSpec& task, const DemoConfig& cfg) {
  require(cfg.dt > 0, "synthesize_demo: dt must be positive");
  DemoTrajectory demo;
  demo.dt = cfg.dt;
  Pose pose = task.start;
  demo.poses.push_back(pose);

  for (int step = 0; step < cfg.step_cap; ++step) {
    if (distance(pose.p, task.goal) <= cfg.eps_goal) return demo;

    Vec2 force = (task.goal - pose.p).normalized() * cfg.attract_gain;
    for (const Landmark& lm : env.landmarks) {
      const double radius = pool.classes[size_t(lm.class_id)].radius;
      const double d0 = cfg.influence_factor * radius;
      const Vec2 away = pose.p - lm.position;
      const double d = away.norm();
      if (d >= d0 || d <= 1e-9) continue;
      const double mag = cfg.repulse_gain * (1.0 - d / d0);
      const Vec2 out_dir = away * (1.0 / d);
      force = force + out_dir * mag;
      // Tangential component so head-on approaches slide around instead of stalling.
      const double side_sign = (lm.position - pose.p).cross(task.goal - pose.p) >= 0.0 ? -1.0 : 1.0;
      force = force + out_dir.perp_ccw() * (side_sign * cfg.swirl_gain * mag);
    }

    Vec2 vel = force.normalized() * cfg.speed;
    Vec2 next = pose.p + vel * cfg.dt;
    // Never enter an inflated disc.
    for (const Landmark& lm : env.landmarks) {
      const double keep_out = pool.classes[size_t(lm.class_id)].radius + cfg.clearance;
      const Vec2 off = next - lm.position;
      const double d = off.norm();
      if (d < keep_out) next = lm.position + (d > 1e-9 ? off * (keep_out / d) : Vec2{keep_out, 0});
    }

    const Vec2 moved = next - pose.p;
    if (moved.norm() > 1e-9) pose.yaw = std::atan2(moved.y, moved.x);
    pose.p = next;
    demo.poses.push_back(pose);
  }
  return std::nullopt;  // step cap: goal unreachable under this field
}

}  // namespace gsmn::world
