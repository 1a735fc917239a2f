#pragma once

#include "gsmn/model/net.hpp"
#include "gsmn/nn/ops.hpp"

namespace gsmn::learn {

struct LossWeights {
  double lambda_x = 0.2;     // forward-velocity term
  double lambda_omega = 0.4;
  double lambda_stop = 0.4;
  double lambda_v = 0.1;  // J_percept
  double lambda_l = 0.1;  // J_lang
  double lambda_g = 0.1;  // J_ground
  double lambda_p = 0.1;  // J_plan
  double stop_clip_eps = 1e-6;
};

// Weighted action distance: squared velocity errors plus a stop
// cross-entropy with the probability clipped away from {0, 1}.
inline double action_loss(const sim::Action& a, const sim::Action& expert, const LossWeights& w) {
  const double dv = a.v - expert.v;
  const double dw = a.omega - expert.omega;
  const double p = std::clamp(a.p_stop, w.stop_clip_eps, 1.0 - w.stop_clip_eps);
  const double bce = -(expert.p_stop * std::log(p) + (1.0 - expert.p_stop) * std::log(1.0 - p));
  return w.lambda_x * dv * dv + w.lambda_omega * dw * dw + w.lambda_stop * bce;
}

// Graph-side version over a policy step output; must agree with the scalar
// form above (checked in tests).
template <typename T>
nn::Node<T>* action_loss_var(nn::Graph<T>& g, const typename model::PolicyNet<T>::StepVars& sv,
                             const sim::Action& expert, const LossWeights& w) {
  auto* v_term = nn::squared_error_at(g, sv.raw, 0, T(expert.v));
  auto* w_term = nn::squared_error_at(g, sv.raw, 1, T(expert.omega));
  auto* stop_term = nn::bce_prob(g, sv.p_stop, 0, T(expert.p_stop), T(w.stop_clip_eps));
  return nn::add_scalars<T>(g, {v_term, w_term, stop_term},
                            {T(w.lambda_x), T(w.lambda_omega), T(w.lambda_stop)});
}

// Ground truth consumed by the auxiliary objectives at one step.
struct StepTruth {
  struct VisibleObject {
    int class_id = 0;
    int map_row = 0;  // world-grid cell for gsmn, feature-map cell for fpv
    int map_col = 0;
    bool mentioned = false;
  };
  std::vector<VisibleObject> visible;  // O_FPV
  bool goal_in_map = false;
  int goal_row = 0, goal_col = 0;  // robot-frame goal-map cell (gsmn only)
  int neg_row = 0, neg_col = 0;    // sampled negative cell
};

// Assemble the per-step ground truth: O_FPV is the set of landmarks whose
// centers project into the camera image at the true pose. Map cells are
// world-grid cells for gsmn and feature-map cells for the fpv baselines; the
// goal cell lives in the robot frame of the observed pose.
inline StepTruth build_step_truth(const world::EnvironmentSpec& env, const world::LandmarkPool& pool,
                                  const world::TaskSpec& task, const Pose& true_pose,
                                  const Pose& obs_pose, const model::NetConfig& cfg, Rng& rng) {
  StepTruth truth;
  const geo::CameraToWorld T = geo::camera_to_world(true_pose, cfg.camera);
  const int target_phrase = pool.classes[size_t(task.target_class)].phrase_id;
  const int R = cfg.grid.resolution;
  const double cs = cfg.grid.cell();

  for (const world::Landmark& lm : env.landmarks) {
    const auto px = geo::world_to_pixel(lm.position, cfg.camera, T);
    if (!px || !geo::pixel_in_image(*px, cfg.camera)) continue;
    StepTruth::VisibleObject o;
    o.class_id = lm.class_id;
    o.mentioned = pool.classes[size_t(lm.class_id)].phrase_id == target_phrase;
    if (cfg.kind == model::Kind::gsmn) {
      o.map_row = std::clamp(int(std::floor(lm.position.y / cs)), 0, R - 1);
      o.map_col = std::clamp(int(std::floor(lm.position.x / cs)), 0, R - 1);
    } else {
      o.map_row = std::clamp(int(px->y) / cfg.f_scale, 0, cfg.feat_h() - 1);
      o.map_col = std::clamp(int(px->x) / cfg.f_scale, 0, cfg.feat_w() - 1);
    }
    truth.visible.push_back(o);
  }

  if (cfg.kind == model::Kind::gsmn) {
    // Goal position in the agent frame of the observed pose.
    const Vec2 rel = task.goal - obs_pose.p;
    const double c = std::cos(-obs_pose.yaw), s = std::sin(-obs_pose.yaw);
    const double xr = c * rel.x - s * rel.y;
    const double yr = s * rel.x + c * rel.y;
    const double half = cfg.grid.extent_m / 2.0;
    const int col = int(std::floor((xr + half) / cs));
    const int row = int(std::floor((yr + half) / cs));
    if (row >= 0 && row < R && col >= 0 && col < R) {
      truth.goal_in_map = true;
      truth.goal_row = row;
      truth.goal_col = col;
      do {
        truth.neg_row = int(rng.uniform_int(uint64_t(R)));
        truth.neg_col = int(rng.uniform_int(uint64_t(R)));
      } while (truth.neg_row == row && truth.neg_col == col);
    }
  }
  return truth;
}

template <typename T>
struct AuxLosses {
  nn::Node<T>* percept = nullptr;
  nn::Node<T>* lang = nullptr;
  nn::Node<T>* ground = nullptr;
  nn::Node<T>* plan = nullptr;
};

// The four additive auxiliary objectives for one step. Objects outside the
// field of view contribute nothing; an empty O_FPV zeroes percept and ground.
template <typename T>
AuxLosses<T> aux_losses(nn::Graph<T>& g, model::PolicyNet<T>& net,
                        const typename model::PolicyNet<T>::State& st,
                        const typename model::PolicyNet<T>::StepVars& sv, const StepTruth& truth,
                        int instr_class, int instr_side) {
  AuxLosses<T> out;
  const auto& cfg = net.config();

  std::vector<nn::Node<T>*> percept_terms;
  std::vector<nn::Node<T>*> ground_terms;
  auto* percept_src = cfg.kind == model::Kind::gsmn ? sv.s_w : sv.f_c;
  for (const auto& o : truth.visible) {
    auto* cell = nn::map_cell(g, percept_src, o.map_row, o.map_col);
    auto* logits = nn::linear(g, g.param(net.param("percept_W")), cell, g.param(net.param("percept_b")));
    percept_terms.push_back(nn::softmax_nll(g, logits, o.class_id));

    auto* rcell = nn::map_cell(g, sv.r_map, o.map_row, o.map_col);
    auto* rlogit = nn::linear(g, g.param(net.param("ground_W")), rcell, g.param(net.param("ground_b")));
    ground_terms.push_back(nn::bce_logit(g, rlogit, 0, T(o.mentioned ? 1 : 0)));
  }
  if (!percept_terms.empty()) {
    out.percept = nn::mean_scalars(g, percept_terms);
    out.ground = nn::mean_scalars(g, ground_terms);
  }

  auto* lm_logits =
      nn::linear(g, g.param(net.param("lang_lm_W")), st.phi_u, g.param(net.param("lang_lm_b")));
  auto* side_logits =
      nn::linear(g, g.param(net.param("lang_side_W")), st.phi_u, g.param(net.param("lang_side_b")));
  out.lang = nn::add_scalars<T>(
      g, {nn::softmax_nll(g, lm_logits, instr_class), nn::softmax_nll(g, side_logits, instr_side)},
      {T(1), T(1)});

  if (cfg.kind == model::Kind::gsmn && truth.goal_in_map) {
    auto* pos_cell = nn::map_cell(g, sv.g_map, truth.goal_row, truth.goal_col);
    auto* pos_logit = nn::linear(g, g.param(net.param("plan_W")), pos_cell, g.param(net.param("plan_b")));
    auto* neg_cell = nn::map_cell(g, sv.g_map, truth.neg_row, truth.neg_col);
    auto* neg_logit = nn::linear(g, g.param(net.param("plan_W")), neg_cell, g.param(net.param("plan_b")));
    out.plan = nn::add_scalars<T>(
        g, {nn::bce_logit(g, pos_logit, 0, T(1)), nn::bce_logit(g, neg_logit, 0, T(0))}, {T(1), T(1)});
  }
  return out;
}

}  // namespace gsmn::learn
