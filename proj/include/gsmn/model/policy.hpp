#pragma once

#include "gsmn/model/net.hpp"

namespace gsmn::model {

// Runs a PolicyNet as an executable policy: a fresh inference graph per step,
// with the recurrent state (semantic map, memory cell) carried as plain
// tensors between steps.
class NetPolicy : public sim::Policy {
 public:
  explicit NetPolicy(PolicyNet<float>& net, bool record_maps = false)
      : net_(net), record_maps_(record_maps) {}

  void reset(const std::vector<int>& tokens) override {
    nn::Graph<float> g(/*inference=*/true);
    phi_u_ = net_.encode_instruction(g, tokens)->value;
    const auto& cfg = net_.config();
    s_w_ = nn::Tensor<float>({cfg.c_f, cfg.grid.resolution, cfg.grid.resolution});
    mem_h_ = nn::Tensor<float>({cfg.mem_hidden});
    mem_c_ = nn::Tensor<float>({cfg.mem_hidden});
    recorded_.clear();
  }

  sim::Action act(const sim::AgentContext& ctx) override {
    nn::Graph<float> g(/*inference=*/true);
    typename PolicyNet<float>::State st;
    st.phi_u = g.leaf(phi_u_);
    const auto& cfg = net_.config();
    if (cfg.kind == Kind::gsmn) st.s_w = g.leaf(s_w_);
    if (cfg.kind == Kind::gs_fpv_mem) {
      st.mem_h = g.leaf(mem_h_);
      st.mem_c = g.leaf(mem_c_);
    }
    const auto sv = net_.step(g, st, net_.image_tensor(ctx.image), ctx.pose);
    if (cfg.kind == Kind::gsmn) s_w_ = st.s_w->value;
    if (cfg.kind == Kind::gs_fpv_mem) {
      mem_h_ = st.mem_h->value;
      mem_c_ = st.mem_c->value;
    }
    if (record_maps_) {
      StepMaps maps;
      if (sv.s_w) maps.s_w = sv.s_w->value;
      if (sv.r_map) maps.r_map = sv.r_map->value;
      if (sv.g_map) maps.g_map = sv.g_map->value;
      recorded_.push_back(std::move(maps));
    }
    return PolicyNet<float>::to_action(sv);
  }

  struct StepMaps {
    nn::Tensor<float> s_w;
    nn::Tensor<float> r_map;  // world frame for gsmn
    nn::Tensor<float> g_map;  // robot frame for gsmn
  };
  const std::vector<StepMaps>& recorded_maps() const { return recorded_; }

 private:
  PolicyNet<float>& net_;
  bool record_maps_;
  nn::Tensor<float> phi_u_;
  nn::Tensor<float> s_w_;
  nn::Tensor<float> mem_h_;
  nn::Tensor<float> mem_c_;
  std::vector<StepMaps> recorded_;
};

}  // namespace gsmn::model
