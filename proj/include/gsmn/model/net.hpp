#pragma once

#include <map>
#include <memory>
#include <string>

#include "gsmn/geometry.hpp"
#include "gsmn/model/vocab.hpp"
#include "gsmn/nn/optim.hpp"
#include "gsmn/nn/spatial.hpp"
#include "gsmn/simulator.hpp"

namespace gsmn::model {

enum class Kind { gsmn, gs_fpv, gs_fpv_mem };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::gsmn: return "gsmn";
    case Kind::gs_fpv: return "gs_fpv";
    case Kind::gs_fpv_mem: return "gs_fpv_mem";
  }
  return "?";
}

inline std::optional<Kind> kind_from_name(const std::string& s) {
  for (Kind k : {Kind::gsmn, Kind::gs_fpv, Kind::gs_fpv_mem})
    if (s == kind_name(k)) return k;
  return std::nullopt;
}

struct NetConfig {
  Kind kind = Kind::gsmn;
  int vocab_size = 0;
  int n_classes = 0;   // landmark classes, for the auxiliary heads
  int n_sides = 4;
  int word_dim = 32;
  int d_u = 64;        // instruction embedding size
  int image_w = 128;
  int image_h = 72;
  int c_f = 32;        // image feature channels
  int f_scale = 8;
  int c_r = 8;         // relevance map channels
  int c_g = 8;         // goal map channels
  int ctrl_hidden = 128;
  int mem_hidden = 64;  // recurrent cell width for gs_fpv_mem
  double leaky_slope = 0.1;
  double map_lambda = 0.5;  // leaky integrator rate
  nn::GridSpec grid;
  geo::CameraModel camera;

  int feat_h() const { return image_h / f_scale; }
  int feat_w() const { return image_w / f_scale; }

  // Side length of a stride-2 residual block output.
  static int half(int n) { return (n + 1) / 2; }

  int map_flat() const {
    // Relevance/goal maps pass through a stride-2 residual block, then flatten.
    if (kind == Kind::gsmn) {
      const int side = half(grid.resolution);
      return side * side;
    }
    return half(feat_h()) * half(feat_w());
  }

  int mem_input() const { return (c_r + c_g) * feat_h() * feat_w(); }

  int ctrl_in() const {
    int dim = c_r * map_flat() + c_g * map_flat() + d_u;
    if (kind == Kind::gs_fpv_mem) dim += mem_hidden;
    return dim;
  }
};

// All learnable parameters plus the forward passes for the three policy
// architectures. Templated on scalar so gradient checks run in double.
template <typename T>
class PolicyNet {
 public:
  using Var = nn::Node<T>*;
  using P = nn::Parameter<T>;

  explicit PolicyNet(const NetConfig& cfg) : cfg_(cfg) {
    const int H = cfg.d_u;
    add("embed", {cfg.vocab_size, cfg.word_dim});
    add("lstm_wih", {4 * H, cfg.word_dim});
    add("lstm_whh", {4 * H, H});
    add("lstm_b", {4 * H});

    add("conv1_w", {cfg.c_f, 3, 3, 3});
    add("conv1_b", {cfg.c_f});
    for (int b = 1; b <= 6; ++b) {
      add(block_name(b, "c1_w"), {cfg.c_f, cfg.c_f, 3, 3});
      add(block_name(b, "c1_b"), {cfg.c_f});
      add(block_name(b, "c2_w"), {cfg.c_f, cfg.c_f, 3, 3});
      add(block_name(b, "c2_b"), {cfg.c_f});
      if (block_stride(b) == 2) add(block_name(b, "skip_w"), {cfg.c_f, cfg.c_f, 1, 1});
    }

    add("label_W", {cfg.c_f * cfg.c_r + cfg.c_r, cfg.d_u});
    add("label_b", {cfg.c_f * cfg.c_r + cfg.c_r});
    const int k1 = cfg.c_g * cfg.c_r * 9 + cfg.c_g;
    const int k2 = cfg.c_g * cfg.c_g * 9 + cfg.c_g;
    add("spatial_W", {k1 + k2, cfg.d_u});
    add("spatial_b", {k1 + k2});

    add_resblock("rb_r", cfg.c_r);
    add_resblock("rb_g", cfg.c_g);

    add("p1_W", {cfg.ctrl_hidden, cfg.ctrl_in()});
    add("p1_b", {cfg.ctrl_hidden});
    add("p2_W", {3, cfg.ctrl_in() + cfg.ctrl_hidden});
    add("p2_b", {3});

    if (cfg.kind == Kind::gs_fpv_mem) {
      add("mem_wih", {4 * cfg.mem_hidden, cfg.mem_input()});
      add("mem_whh", {4 * cfg.mem_hidden, cfg.mem_hidden});
      add("mem_b", {4 * cfg.mem_hidden});
    }

    add("percept_W", {cfg.n_classes, cfg.c_f});
    add("percept_b", {cfg.n_classes});
    add("ground_W", {1, cfg.c_r});
    add("ground_b", {1});
    add("lang_lm_W", {cfg.n_classes, cfg.d_u});
    add("lang_lm_b", {cfg.n_classes});
    add("lang_side_W", {cfg.n_sides, cfg.d_u});
    add("lang_side_b", {cfg.n_sides});
    if (cfg.kind == Kind::gsmn) {
      add("plan_W", {1, cfg.c_g});
      add("plan_b", {1});
    }
  }

  const NetConfig& config() const { return cfg_; }

  void init(uint64_t seed) {
    Rng rng(derive_seed(seed, "init"));
    for (auto& [name, p] : params_) {
      const int nd = p->value.ndim();
      if (nd == 4) {
        nn::init_conv(*p, rng);
      } else if (nd == 2) {
        nn::init_linear(*p, rng);
      } else {
        p->value.fill(T(0));
      }
    }
    // Word embeddings: small uniform.
    nn::init_uniform(param("embed"), rng, -0.1, 0.1);
    // LSTM forget-gate bias starts open.
    for (auto* name : {"lstm_b", "mem_b"}) {
      if (!has(name)) continue;
      P& b = param(name);
      const int h = int(b.value.numel()) / 4;
      for (int i = h; i < 2 * h; ++i) b.value[size_t(i)] = T(1);
    }
  }

  bool has(const std::string& name) const { return params_.count(name) > 0; }

  P& param(const std::string& name) {
    auto it = params_.find(name);
    require(it != params_.end(), "unknown parameter: " + name);
    return *it->second;
  }

  std::vector<P*> parameters() {
    std::vector<P*> out;
    for (auto& [name, p] : params_) out.push_back(p.get());
    return out;
  }

  // ---- forward pieces ----

  Var encode_instruction(nn::Graph<T>& g, const std::vector<int>& tokens) {
    const int H = cfg_.d_u;
    Var wih = g.param(param("lstm_wih"));
    Var whh = g.param(param("lstm_whh"));
    Var b = g.param(param("lstm_b"));
    Var emb = g.param(param("embed"));
    Var h = g.leaf(nn::Tensor<T>({H}));
    Var c = g.leaf(nn::Tensor<T>({H}));
    std::vector<int> toks = tokens.empty() ? std::vector<int>{Vocab::kPad} : tokens;
    for (int tok : toks) {
      require(tok >= 0 && tok < cfg_.vocab_size, "token id out of vocabulary");
      Var x = nn::select_row(g, emb, tok);
      auto [nh, nc] = lstm_cell(g, wih, whh, b, x, h, c, H);
      h = nh;
      c = nc;
    }
    return h;
  }

  Var encode_image(nn::Graph<T>& g, const nn::Tensor<T>& img_chw) {
    Var x = g.leaf(img_chw);
    x = nn::conv2d(g, x, g.param(param("conv1_w")), g.param(param("conv1_b")), {2, 1, 1});
    x = nn::leaky_relu(g, x, T(cfg_.leaky_slope));
    for (int b = 1; b <= 6; ++b) x = res_block(g, x, "b" + std::to_string(b) + "_", block_stride(b));
    return x;
  }

  // One stride-2 residual block over an arbitrary named parameter prefix.
  Var res_block(nn::Graph<T>& g, Var x, const std::string& prefix, int stride) {
    Var h = nn::conv2d(g, x, g.param(param(prefix + "c1_w")), g.param(param(prefix + "c1_b")),
                       {stride, 1, 1});
    h = nn::leaky_relu(g, h, T(cfg_.leaky_slope));
    h = nn::conv2d(g, h, g.param(param(prefix + "c2_w")), g.param(param(prefix + "c2_b")), {1, 1, 1});
    Var skip = x;
    if (stride != 1) skip = nn::conv2d(g, x, g.param(param(prefix + "skip_w")), Var(nullptr), nn::ConvSpec{stride, 0, 1});
    return nn::leaky_relu(g, nn::add(g, h, skip), T(cfg_.leaky_slope));
  }

  // Language-generated 1x1 convolution (relevance filter).
  Var conv_label(nn::Graph<T>& g, Var phi_u, Var src) {
    Var vec = nn::linear(g, g.param(param("label_W")), phi_u, g.param(param("label_b")));
    const int kn = cfg_.c_r * cfg_.c_f;
    Var kernel = nn::reshape(g, nn::slice(g, vec, 0, kn), {cfg_.c_r, cfg_.c_f, 1, 1});
    Var bias = nn::slice(g, vec, kn, cfg_.c_r);
    return nn::conv2d(g, src, kernel, bias, {1, 0, 1});
  }

  // Language-generated cascade: 3x3 conv, then 3x3 conv with dilation 3,
  // LeakyReLU after each.
  Var conv_spatial(nn::Graph<T>& g, Var phi_u, Var src) {
    Var vec = nn::linear(g, g.param(param("spatial_W")), phi_u, g.param(param("spatial_b")));
    const int k1w = cfg_.c_g * cfg_.c_r * 9;
    const int k2w = cfg_.c_g * cfg_.c_g * 9;
    int off = 0;
    Var k1 = nn::reshape(g, nn::slice(g, vec, off, k1w), {cfg_.c_g, cfg_.c_r, 3, 3});
    off += k1w;
    Var b1 = nn::slice(g, vec, off, cfg_.c_g);
    off += cfg_.c_g;
    Var k2 = nn::reshape(g, nn::slice(g, vec, off, k2w), {cfg_.c_g, cfg_.c_g, 3, 3});
    off += k2w;
    Var b2 = nn::slice(g, vec, off, cfg_.c_g);
    Var h = nn::conv2d(g, src, k1, b1, {1, 1, 1});
    h = nn::leaky_relu(g, h, T(cfg_.leaky_slope));
    h = nn::conv2d(g, h, k2, b2, {1, 3, 3});
    return nn::leaky_relu(g, h, T(cfg_.leaky_slope));
  }

  struct StepVars {
    Var raw = nullptr;     // (3): v, omega, stop logit
    Var p_stop = nullptr;  // (1)
    Var f_c = nullptr;     // camera-frame features
    Var s_w = nullptr;     // semantic map (gsmn)
    Var r_map = nullptr;   // relevance map: world frame for gsmn, camera frame for fpv
    Var r_r = nullptr;     // robot-frame relevance map (gsmn)
    Var g_map = nullptr;   // goal map: robot frame for gsmn, camera frame for fpv
    nn::Tensor<T> mask;    // field-of-view footprint (gsmn)
  };

  // Recurrent state threaded between steps of one episode.
  struct State {
    Var phi_u = nullptr;
    Var s_w = nullptr;   // gsmn semantic map
    Var mem_h = nullptr; // gs_fpv_mem cell
    Var mem_c = nullptr;
    int step = 0;
  };

  State start_episode(nn::Graph<T>& g, const std::vector<int>& tokens) {
    State st;
    st.phi_u = encode_instruction(g, tokens);
    const int R = cfg_.grid.resolution;
    if (cfg_.kind == Kind::gsmn) st.s_w = g.leaf(nn::Tensor<T>({cfg_.c_f, R, R}));
    if (cfg_.kind == Kind::gs_fpv_mem) {
      st.mem_h = g.leaf(nn::Tensor<T>({cfg_.mem_hidden}));
      st.mem_c = g.leaf(nn::Tensor<T>({cfg_.mem_hidden}));
    }
    return st;
  }

  StepVars step(nn::Graph<T>& g, State& st, const nn::Tensor<T>& img_chw, const Pose& obs_pose) {
    StepVars out;
    out.f_c = encode_image(g, img_chw);
    check_finite(out.f_c, "image encoder");

    Var r_src = nullptr;
    if (cfg_.kind == Kind::gsmn) {
      const auto hits =
          geo::feature_ground_hits(obs_pose, cfg_.camera, cfg_.feat_h(), cfg_.feat_w(), cfg_.f_scale);
      auto proj = nn::project_features(g, out.f_c, hits, cfg_.grid);
      out.s_w = nn::leaky_integrate(g, st.s_w, proj.features, proj.mask, T(cfg_.map_lambda));
      out.mask = std::move(proj.mask);
      st.s_w = out.s_w;
      check_finite(out.s_w, "semantic map");
      r_src = out.s_w;
    } else {
      r_src = out.f_c;
    }

    out.r_map = conv_label(g, st.phi_u, r_src);
    check_finite(out.r_map, "relevance map");

    Var g_in = out.r_map;
    if (cfg_.kind == Kind::gsmn) {
      out.r_r = nn::world_to_robot(g, out.r_map, obs_pose.p.x, obs_pose.p.y, obs_pose.yaw, cfg_.grid);
      g_in = out.r_r;
    }
    out.g_map = conv_spatial(g, st.phi_u, g_in);
    check_finite(out.g_map, "goal map");

    Var r_feat = nn::flatten(g, res_block(g, g_in, "rb_r_", 2));
    Var g_feat = nn::flatten(g, res_block(g, out.g_map, "rb_g_", 2));

    std::vector<Var> parts{r_feat, g_feat, st.phi_u};
    if (cfg_.kind == Kind::gs_fpv_mem) {
      Var mem_in = nn::concat(g, {nn::flatten(g, out.r_map), nn::flatten(g, out.g_map)});
      auto [nh, nc] = lstm_cell(g, g.param(param("mem_wih")), g.param(param("mem_whh")),
                                g.param(param("mem_b")), mem_in, st.mem_h, st.mem_c, cfg_.mem_hidden);
      st.mem_h = nh;
      st.mem_c = nc;
      parts.push_back(nh);
    }
    Var phi_in = nn::concat(g, parts);
    Var phi_p1 = nn::leaky_relu(g, nn::linear(g, g.param(param("p1_W")), phi_in, g.param(param("p1_b"))),
                                T(cfg_.leaky_slope));
    out.raw = nn::linear(g, g.param(param("p2_W")), nn::concat(g, {phi_in, phi_p1}),
                         g.param(param("p2_b")));
    check_finite(out.raw, "controller");
    out.p_stop = nn::sigmoid(g, nn::slice(g, out.raw, 2, 1));
    ++st.step;
    return out;
  }

  // Convert input image bytes to the centered float CHW tensor.
  nn::Tensor<T> image_tensor(const sim::Image& img) const {
    require(img.width == cfg_.image_w && img.height == cfg_.image_h, "image size mismatch with config");
    nn::Tensor<T> t({3, img.height, img.width});
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const uint8_t* px = img.pixel(y, x);
        for (int c = 0; c < 3; ++c) t.at(c, y, x) = T(px[c]) / T(255) - T(0.5);
      }
    return t;
  }

  static sim::Action to_action(const StepVars& sv) {
    sim::Action a;
    a.v = double(sv.raw->value[0]);
    a.omega = double(sv.raw->value[1]);
    a.p_stop = double(sv.p_stop->value[0]);
    return a;
  }

 private:
  static std::string block_name(int b, const char* suffix) { return "b" + std::to_string(b) + "_" + suffix; }

  // Downsampling lives early (input conv + first two blocks) to keep the
  // heavy 3x3 convolutions on small grids.
  static int block_stride(int b) { return b <= 2 ? 2 : 1; }

  void add(const std::string& name, std::vector<int> shape) {
    params_.emplace(name, std::make_unique<P>(name, std::move(shape)));
  }

  void add_resblock(const std::string& prefix, int ch) {
    add(prefix + "_c1_w", {ch, ch, 3, 3});
    add(prefix + "_c1_b", {ch});
    add(prefix + "_c2_w", {ch, ch, 3, 3});
    add(prefix + "_c2_b", {ch});
    add(prefix + "_skip_w", {ch, ch, 1, 1});
  }

  std::pair<Var, Var> lstm_cell(nn::Graph<T>& g, Var wih, Var whh, Var b, Var x, Var h, Var c, int H) {
    Var z = nn::add(g, nn::linear(g, wih, x, b), nn::linear(g, whh, h, Var(nullptr)));
    Var i = nn::sigmoid(g, nn::slice(g, z, 0, H));
    Var f = nn::sigmoid(g, nn::slice(g, z, H, H));
    Var gg = nn::tanh_op(g, nn::slice(g, z, 2 * H, H));
    Var o = nn::sigmoid(g, nn::slice(g, z, 3 * H, H));
    Var nc = nn::add(g, nn::mul(g, f, c), nn::mul(g, i, gg));
    Var nh = nn::mul(g, o, nn::tanh_op(g, nc));
    return {nh, nc};
  }

  void check_finite(Var v, const char* stage) const {
    if (!v->value.all_finite())
      throw NumericError(std::string("non-finite values at stage: ") + stage);
  }

  NetConfig cfg_;
  std::map<std::string, std::unique_ptr<P>> params_;
};

}  // namespace gsmn::model
