#pragma once

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "gsmn/world.hpp"

namespace gsmn::world {

struct TaskRecord {
  uint64_t env_seed = 0;
  uint64_t task_seed = 0;
  EnvironmentSpec env;
  TaskSpec task;
  DemoTrajectory demo;
};

struct Dataset {
  LandmarkPool pool;
  std::vector<TaskRecord> train;
  std::vector<TaskRecord> dev;
  std::vector<TaskRecord> test;

  const std::vector<TaskRecord>& split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "dev") return dev;
    if (name == "test") return test;
    throw ConfigError("unknown split: " + name);
  }
};

struct SplitConfig {
  int train = 300;
  int dev = 75;
  int test = 75;
  int n_classes = 12;
  int n_phrases = 10;
  uint64_t seed = 1;
  GenConfig gen;
  TaskConfig task;
  DemoConfig demo;
};

// Environment seeds are disjoint across splits by construction: each record
// consumes a unique global index, and demo-synthesis retries bump a bounded
// per-index attempt counter folded into the seed.
inline Dataset build_splits(const SplitConfig& cfg) {
  Dataset ds;
  ds.pool = make_pool(cfg.n_classes, cfg.n_phrases, cfg.seed);
  int global = 0;
  auto fill = [&](std::vector<TaskRecord>& out, int count) {
    for (int i = 0; i < count; ++i, ++global) {
      TaskRecord rec;
      bool done = false;
      for (int env_attempt = 0; env_attempt < 8 && !done; ++env_attempt) {
        rec.env_seed = derive_seed(cfg.seed, "env", uint64_t(global) * 64 + uint64_t(env_attempt));
        rec.env = generate_environment(ds.pool, rec.env_seed, cfg.gen);
        for (int task_attempt = 0; task_attempt < 8; ++task_attempt) {
          rec.task_seed = derive_seed(cfg.seed, "task", uint64_t(global) * 64 + uint64_t(task_attempt));
          rec.task = generate_task(rec.env, ds.pool, rec.task_seed, cfg.task);
          if (auto demo = synthesize_demo(rec.env, ds.pool, rec.task, cfg.demo)) {
            rec.demo = *demo;
            done = true;
            break;
          }
        }
      }
      require(done, "build_splits: could not synthesize a reachable task");
      out.push_back(std::move(rec));
    }
  };
  fill(ds.train, cfg.train);
  fill(ds.dev, cfg.dev);
  fill(ds.test, cfg.test);
  return ds;
}

// ---- manifest serialization (line-delimited JSON records + pool file) ----

namespace io {

using nlohmann::json;

inline json pool_to_json(const LandmarkPool& pool) {
  json j;
  j["version"] = 1;
  j["phrases"] = pool.phrases;
  json cls = json::array();
  for (const LandmarkClass& c : pool.classes)
    cls.push_back({{"class_id", c.class_id},
                   {"phrase_id", c.phrase_id},
                   {"radius", c.radius},
                   {"color", {c.color[0], c.color[1], c.color[2]}}});
  j["classes"] = cls;
  return j;
}

inline LandmarkPool pool_from_json(const json& j) {
  require(j.at("version").get<int>() == 1, "pool: unsupported version");
  LandmarkPool pool;
  pool.phrases = j.at("phrases").get<std::vector<std::string>>();
  for (const json& c : j.at("classes")) {
    LandmarkClass lc;
    lc.class_id = c.at("class_id").get<int>();
    lc.phrase_id = c.at("phrase_id").get<int>();
    lc.radius = c.at("radius").get<double>();
    auto col = c.at("color");
    lc.color = {uint8_t(col[0].get<int>()), uint8_t(col[1].get<int>()), uint8_t(col[2].get<int>())};
    pool.classes.push_back(lc);
  }
  return pool;
}

inline json record_to_json(const TaskRecord& r) {
  json j;
  j["version"] = 1;
  j["env_seed"] = r.env_seed;
  j["task_seed"] = r.task_seed;
  json lms = json::array();
  for (const Landmark& l : r.env.landmarks) lms.push_back({{"c", l.class_id}, {"x", l.position.x}, {"y", l.position.y}});
  j["env"] = {{"field_size", r.env.field_size}, {"seed", r.env.seed}, {"landmarks", lms}};
  j["task"] = {{"target_class", r.task.target_class},
               {"side", side_name(r.task.side)},
               {"instruction", r.task.instruction},
               {"goal", {r.task.goal.x, r.task.goal.y}},
               {"start", {r.task.start.p.x, r.task.start.p.y, r.task.start.yaw}},
               {"altitude", r.task.start.altitude},
               {"d_stop", r.task.d_stop},
               {"ambiguous", r.task.ambiguous}};
  json poses = json::array();
  for (const Pose& p : r.demo.poses) poses.push_back({p.p.x, p.p.y, p.yaw});
  j["demo"] = {{"dt", r.demo.dt}, {"poses", poses}};
  return j;
}

inline TaskRecord record_from_json(const json& j) {
  require(j.at("version").get<int>() == 1, "manifest: unsupported record version");
  TaskRecord r;
  r.env_seed = j.at("env_seed").get<uint64_t>();
  r.task_seed = j.at("task_seed").get<uint64_t>();
  r.env.field_size = j.at("env").at("field_size").get<double>();
  r.env.seed = j.at("env").at("seed").get<uint64_t>();
  for (const json& l : j.at("env").at("landmarks"))
    r.env.landmarks.push_back({l.at("c").get<int>(), {l.at("x").get<double>(), l.at("y").get<double>()}});
  const json& t = j.at("task");
  r.task.target_class = t.at("target_class").get<int>();
  auto side = side_from_name(t.at("side").get<std::string>());
  require(side.has_value(), "manifest: bad side");
  r.task.side = *side;
  r.task.instruction = t.at("instruction").get<std::vector<std::string>>();
  r.task.goal = {t.at("goal")[0].get<double>(), t.at("goal")[1].get<double>()};
  r.task.start.p = {t.at("start")[0].get<double>(), t.at("start")[1].get<double>()};
  r.task.start.yaw = t.at("start")[2].get<double>();
  r.task.start.altitude = t.at("altitude").get<double>();
  r.task.d_stop = t.at("d_stop").get<double>();
  r.task.ambiguous = t.at("ambiguous").get<bool>();
  r.demo.dt = j.at("demo").at("dt").get<double>();
  for (const json& p : j.at("demo").at("poses")) {
    Pose pose;
    pose.p = {p[0].get<double>(), p[1].get<double>()};
    pose.yaw = p[2].get<double>();
    pose.altitude = r.task.start.altitude;
    r.demo.poses.push_back(pose);
  }
  return r;
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "pool.json");
    require(f.good(), "save_dataset: cannot write pool file");
    f << pool_to_json(ds.pool).dump(2) << "\n";
  }
  for (const std::string split : {"train", "dev", "test"}) {
    std::ofstream f(dir / (split + ".jsonl"));
    require(f.good(), "save_dataset: cannot write manifest");
    for (const TaskRecord& r : ds.split(split)) f << record_to_json(r).dump() << "\n";
  }
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  {
    std::ifstream f(dir / "pool.json");
    require(f.good(), "load_dataset: missing pool file at " + (dir / "pool.json").string());
    json j;
    f >> j;
    ds.pool = pool_from_json(j);
  }
  auto load_split = [&](const std::string& split, std::vector<TaskRecord>& out) {
    std::ifstream f(dir / (split + ".jsonl"));
    require(f.good(), "load_dataset: missing manifest " + split + ".jsonl");
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      out.push_back(record_from_json(json::parse(line)));
    }
  };
  load_split("train", ds.train);
  load_split("dev", ds.dev);
  load_split("test", ds.test);
  return ds;
}

}  // namespace io
}  // namespace gsmn::world
