#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "gsmn/eval.hpp"
#include "gsmn/learning/trainer.hpp"

namespace gsmn {

// Every knob of a run in one flat structure. Serialized as "key: value"
// lines; a preset key seeds the defaults before any explicit overrides.
struct RunConfig {
  std::string preset = "desk";
  uint64_t seed = 1;
  bool deterministic = false;

  // world + data
  double field_size = 30.0;
  int n_classes = 12;
  int n_phrases = 10;
  int count_min = 6;
  int count_max = 12;
  double edge_margin = 2.7;
  double min_separation = 1.8;
  int train_tasks = 300;
  int dev_tasks = 75;
  int test_tasks = 75;
  double goal_dist_min = 2.25;
  double goal_dist_max = 3.75;
  double d_stop = 6.0;

  // demonstration synthesis
  double demo_dt = 0.2;
  double demo_speed = 1.6;
  double demo_attract = 1.0;
  double demo_repulse = 2.0;
  double demo_influence = 2.0;
  double demo_swirl = 0.8;
  double demo_clearance = 0.2;
  double demo_eps_goal = 0.5;
  int demo_step_cap = 600;

  // simulator + camera
  int image_w = 128;
  int image_h = 72;
  double hfov_deg = 90.0;
  double pitch_deg = -30.0;
  double altitude = 5.0;
  double control_dt = 0.2;
  double lag_tau = 0.3;
  double v_max = 1.6;
  double omega_max = 2.44;
  int step_cap = 120;

  // map + model
  int map_resolution = 32;
  int word_dim = 32;
  int d_u = 64;
  int c_f = 32;
  int f_scale = 8;
  int c_r = 8;
  int c_g = 8;
  int ctrl_hidden = 128;
  int mem_hidden = 64;
  double leaky_slope = 0.1;
  double map_lambda = 0.5;

  // losses
  double lambda_x = 0.2;
  double lambda_omega = 0.4;
  double lambda_stop = 0.4;
  double lambda_v = 0.1;
  double lambda_l = 0.1;
  double lambda_g = 0.1;
  double lambda_p = 0.1;
  double stop_clip_eps = 1e-6;

  // training
  double lr = 1e-3;
  double l2 = 1e-6;
  double grad_clip = 5.0;
  int sup_epochs = 30;
  int dagger_iters = 60;
  int collect_size = 300;
  int replay_cap = 200;
  int dagger_discard = 20;
  double beta0 = 0.9;
  int eval_every = 0;  // dev evaluation cadence during training; 0 disables

  // expert
  double expert_lookahead = 1.5;
  double expert_gain = 2.0;
  double expert_stop_radius = 1.0;

  // evaluation
  double noise_var = 0.0;
  double d_t = 3.0;
  int avg_steps = 30;

  template <typename F>
  void visit(F&& f) {
    f("preset", preset);
    f("seed", seed);
    f("deterministic", deterministic);
    f("field_size", field_size);
    f("n_classes", n_classes);
    f("n_phrases", n_phrases);
    f("count_min", count_min);
    f("count_max", count_max);
    f("edge_margin", edge_margin);
    f("min_separation", min_separation);
    f("train_tasks", train_tasks);
    f("dev_tasks", dev_tasks);
    f("test_tasks", test_tasks);
    f("goal_dist_min", goal_dist_min);
    f("goal_dist_max", goal_dist_max);
    f("d_stop", d_stop);
    f("demo_dt", demo_dt);
    f("demo_speed", demo_speed);
    f("demo_attract", demo_attract);
    f("demo_repulse", demo_repulse);
    f("demo_influence", demo_influence);
    f("demo_swirl", demo_swirl);
    f("demo_clearance", demo_clearance);
    f("demo_eps_goal", demo_eps_goal);
    f("demo_step_cap", demo_step_cap);
    f("image_w", image_w);
    f("image_h", image_h);
    f("hfov_deg", hfov_deg);
    f("pitch_deg", pitch_deg);
    f("altitude", altitude);
    f("control_dt", control_dt);
    f("lag_tau", lag_tau);
    f("v_max", v_max);
    f("omega_max", omega_max);
    f("step_cap", step_cap);
    f("map_resolution", map_resolution);
    f("word_dim", word_dim);
    f("d_u", d_u);
    f("c_f", c_f);
    f("f_scale", f_scale);
    f("c_r", c_r);
    f("c_g", c_g);
    f("ctrl_hidden", ctrl_hidden);
    f("mem_hidden", mem_hidden);
    f("leaky_slope", leaky_slope);
    f("map_lambda", map_lambda);
    f("lambda_x", lambda_x);
    f("lambda_omega", lambda_omega);
    f("lambda_stop", lambda_stop);
    f("lambda_v", lambda_v);
    f("lambda_l", lambda_l);
    f("lambda_g", lambda_g);
    f("lambda_p", lambda_p);
    f("stop_clip_eps", stop_clip_eps);
    f("lr", lr);
    f("l2", l2);
    f("grad_clip", grad_clip);
    f("sup_epochs", sup_epochs);
    f("dagger_iters", dagger_iters);
    f("collect_size", collect_size);
    f("replay_cap", replay_cap);
    f("dagger_discard", dagger_discard);
    f("beta0", beta0);
    f("eval_every", eval_every);
    f("expert_lookahead", expert_lookahead);
    f("expert_gain", expert_gain);
    f("expert_stop_radius", expert_stop_radius);
    f("noise_var", noise_var);
    f("d_t", d_t);
    f("avg_steps", avg_steps);
  }
};

inline RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "desk") return c;
  if (name == "paper") {
    c.n_classes = 63;
    c.n_phrases = 45;
    c.count_max = 13;
    c.train_tasks = 3500;
    c.dev_tasks = 750;
    c.test_tasks = 750;
    c.image_w = 256;
    c.image_h = 144;
    c.sup_epochs = 30;
    c.dagger_iters = 100;
    c.collect_size = 3500;
    c.replay_cap = 520;
    c.dagger_discard = 20;
    return c;
  }
  if (name == "smoke") {
    c.n_classes = 8;
    c.n_phrases = 7;
    c.count_min = 5;
    c.count_max = 8;
    c.train_tasks = 60;
    c.dev_tasks = 20;
    c.test_tasks = 20;
    c.image_w = 64;
    c.image_h = 40;
    c.map_resolution = 24;
    c.sup_epochs = 15;
    c.dagger_iters = 15;
    c.collect_size = 60;
    c.replay_cap = 40;
    c.dagger_discard = 8;
    return c;
  }
  throw ConfigError("unknown preset: " + name);
}

namespace config_detail {

inline std::string to_string_value(const std::string& v) { return v; }
inline std::string to_string_value(bool v) { return v ? "true" : "false"; }
inline std::string to_string_value(uint64_t v) { return std::to_string(v); }
inline std::string to_string_value(int v) { return std::to_string(v); }
inline std::string to_string_value(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

inline void parse_value(const std::string& s, std::string& out) { out = s; }
inline void parse_value(const std::string& s, bool& out) {
  if (s == "true" || s == "1")
    out = true;
  else if (s == "false" || s == "0")
    out = false;
  else
    throw ConfigError("bad boolean: " + s);
}
inline void parse_value(const std::string& s, uint64_t& out) { out = std::stoull(s); }
inline void parse_value(const std::string& s, int& out) { out = std::stoi(s); }
inline void parse_value(const std::string& s, double& out) { out = std::stod(s); }

}  // namespace config_detail

inline std::string serialize_config(RunConfig& cfg) {
  std::ostringstream out;
  cfg.visit([&](const char* key, auto& field) { out << key << ": " << config_detail::to_string_value(field) << "\n"; });
  return out.str();
}

// "key: value" lines with '#' comments. The preset is resolved first, then
// every explicitly listed key overrides it.
inline RunConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const size_t colon = line.find(':');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (colon == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key: value'");
    auto trim = [](std::string s) {
      const size_t a = s.find_first_not_of(" \t\r");
      const size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, colon))] = trim(line.substr(colon + 1));
  }

  RunConfig cfg = preset_config(kv.count("preset") ? kv.at("preset") : "desk");
  std::map<std::string, bool> known;
  cfg.visit([&](const char* key, auto& field) {
    known[key] = true;
    auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
      config_detail::parse_value(it->second, field);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad value for ") + key + ": " + it->second);
    }
  });
  for (const auto& [k, v] : kv)
    if (!known.count(k)) throw ConfigError("unknown config key: " + k);
  return cfg;
}

inline RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f.good()) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

// ---- projections onto the module configs ----

inline world::SplitConfig split_config(const RunConfig& c) {
  world::SplitConfig s;
  s.train = c.train_tasks;
  s.dev = c.dev_tasks;
  s.test = c.test_tasks;
  s.n_classes = c.n_classes;
  s.n_phrases = c.n_phrases;
  s.seed = c.seed;
  s.gen.field_size = c.field_size;
  s.gen.count_min = c.count_min;
  s.gen.count_max = c.count_max;
  s.gen.edge_margin = c.edge_margin;
  s.gen.min_separation = c.min_separation;
  s.task.goal_dist_min = c.goal_dist_min;
  s.task.goal_dist_max = c.goal_dist_max;
  s.task.d_stop = c.d_stop;
  s.task.altitude = c.altitude;
  s.demo.dt = c.demo_dt;
  s.demo.speed = c.demo_speed;
  s.demo.attract_gain = c.demo_attract;
  s.demo.repulse_gain = c.demo_repulse;
  s.demo.influence_factor = c.demo_influence;
  s.demo.swirl_gain = c.demo_swirl;
  s.demo.clearance = c.demo_clearance;
  s.demo.eps_goal = c.demo_eps_goal;
  s.demo.step_cap = c.demo_step_cap;
  return s;
}

inline geo::CameraModel camera_config(const RunConfig& c) {
  geo::CameraModel cam;
  cam.width = c.image_w;
  cam.height = c.image_h;
  cam.hfov_rad = deg2rad(c.hfov_deg);
  cam.pitch_rad = deg2rad(c.pitch_deg);
  return cam;
}

inline model::NetConfig net_config(const RunConfig& c, model::Kind kind, int vocab_size) {
  model::NetConfig m;
  m.kind = kind;
  m.vocab_size = vocab_size;
  m.n_classes = c.n_classes;
  m.word_dim = c.word_dim;
  m.d_u = c.d_u;
  m.image_w = c.image_w;
  m.image_h = c.image_h;
  m.c_f = c.c_f;
  m.f_scale = c.f_scale;
  m.c_r = c.c_r;
  m.c_g = c.c_g;
  m.ctrl_hidden = c.ctrl_hidden;
  m.mem_hidden = c.mem_hidden;
  m.leaky_slope = c.leaky_slope;
  m.map_lambda = c.map_lambda;
  m.grid.extent_m = c.field_size;
  m.grid.resolution = c.map_resolution;
  m.camera = camera_config(c);
  require(c.image_w % c.f_scale == 0 && c.image_h % c.f_scale == 0,
          "image dimensions must be divisible by f_scale");
  return m;
}

inline learn::LossWeights loss_weights(const RunConfig& c) {
  learn::LossWeights w;
  w.lambda_x = c.lambda_x;
  w.lambda_omega = c.lambda_omega;
  w.lambda_stop = c.lambda_stop;
  w.lambda_v = c.lambda_v;
  w.lambda_l = c.lambda_l;
  w.lambda_g = c.lambda_g;
  w.lambda_p = c.lambda_p;
  w.stop_clip_eps = c.stop_clip_eps;
  return w;
}

inline learn::ExpertConfig expert_config(const RunConfig& c) {
  learn::ExpertConfig e;
  e.lookahead = c.expert_lookahead;
  e.bearing_gain = c.expert_gain;
  e.stop_radius = c.expert_stop_radius;
  e.v_max = c.v_max;
  e.omega_max = c.omega_max;
  return e;
}

inline sim::AgentConfig agent_config(const RunConfig& c) {
  sim::AgentConfig a;
  a.v_max = c.v_max;
  a.omega_max = c.omega_max;
  a.lag_tau = c.lag_tau;
  return a;
}

inline sim::EpisodeOptions episode_options(const RunConfig& c) {
  sim::EpisodeOptions o;
  o.control_dt = c.control_dt;
  o.step_cap = c.step_cap;
  return o;
}

inline learn::TrainConfig train_config(const RunConfig& c) {
  learn::TrainConfig t;
  t.supervised_epochs = c.sup_epochs;
  t.dagger_iterations = c.dagger_iters;
  t.collect_size = c.collect_size;
  t.replay_cap = c.replay_cap;
  t.dagger_discard = c.dagger_discard;
  t.beta0 = c.beta0;
  t.adam.lr = c.lr;
  t.adam.l2 = c.l2;
  t.adam.grad_clip = c.grad_clip;
  t.loss = loss_weights(c);
  t.expert = expert_config(c);
  t.agent = agent_config(c);
  t.episode = episode_options(c);
  t.seed = c.seed;
  return t;
}

inline evaluation::EvalOptions eval_options(const RunConfig& c) {
  evaluation::EvalOptions o;
  o.episode = episode_options(c);
  o.expert = expert_config(c);
  o.agent = agent_config(c);
  o.camera = camera_config(c);
  o.d_t = c.d_t;
  o.seed = c.seed;
  if (c.noise_var > 0) o.noise = evaluation::NoiseSpec{c.noise_var};
  return o;
}

}  // namespace gsmn
