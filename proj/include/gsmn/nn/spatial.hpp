#pragma once

#include <cmath>
#include <vector>

#include "gsmn/nn/ops.hpp"

namespace gsmn::nn {

// Ground-plane hit of one feature pixel's camera ray, in world meters.
// Computed outside the graph: poses and rays carry no gradient.
struct GroundHit {
  bool valid = false;
  double x = 0.0;
  double y = 0.0;
};

// Square world-frame grid: cell (row, col) center sits at
// ((col + 0.5) * cell, (row + 0.5) * cell) in meters, so world (0,0) is the
// corner of cell (0,0).
struct GridSpec {
  double extent_m = 30.0;
  int resolution = 32;
  double cell() const { return extent_m / resolution; }
};

template <typename T>
struct Projected {
  Var<T> features = nullptr;   // (C, res, res), weight-normalized splat
  Tensor<T> mask;              // (res, res), 1 where any weight landed
};

// Scatter camera-frame features onto the world grid with bilinear splatting,
// then normalize each cell by its accumulated weight. Gradients flow to the
// feature values only.
template <typename T>
Projected<T> project_features(Graph<T>& g, Var<T> feats, const std::vector<GroundHit>& hits,
                              const GridSpec& grid) {
  const int C = feats->value.dim(0);
  const int Hf = feats->value.dim(1);
  const int Wf = feats->value.dim(2);
  require(int(hits.size()) == Hf * Wf, "project_features: hit count mismatch");
  const int R = grid.resolution;
  const double cs = grid.cell();

  struct Splat {
    int feat;  // flattened (h*Wf + w) feature index
    int cell;  // flattened (row*R + col) grid cell
    T w;       // bilinear weight / cell weight sum
  };

  Tensor<T> acc({C, R, R});
  std::vector<T> wsum(size_t(R) * size_t(R), T(0));
  std::vector<Splat> splats;
  splats.reserve(hits.size() * 4);

  for (int f = 0; f < Hf * Wf; ++f) {
    const GroundHit& h = hits[size_t(f)];
    if (!h.valid) continue;
    const double u = h.x / cs - 0.5;  // continuous col
    const double v = h.y / cs - 0.5;  // continuous row
    if (u < -1.0 || u > double(R) || v < -1.0 || v > double(R)) continue;
    const int u0 = int(std::floor(u));
    const int v0 = int(std::floor(v));
    const double fu = u - u0;
    const double fv = v - v0;
    const double w4[4] = {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};
    const int cu[4] = {u0, u0 + 1, u0, u0 + 1};
    const int cv[4] = {v0, v0, v0 + 1, v0 + 1};
    for (int k = 0; k < 4; ++k) {
      if (cu[k] < 0 || cu[k] >= R || cv[k] < 0 || cv[k] >= R) continue;
      if (w4[k] == 0.0) continue;
      const int cell = cv[k] * R + cu[k];
      wsum[size_t(cell)] += T(w4[k]);
      splats.push_back({f, cell, T(w4[k])});
      const T* src = feats->value.data();
      T* dst = acc.data();
      for (int c = 0; c < C; ++c)
        dst[size_t(c) * size_t(R) * size_t(R) + size_t(cell)] +=
            T(w4[k]) * src[size_t(c) * size_t(Hf) * size_t(Wf) + size_t(f)];
    }
  }

  Tensor<T> mask({R, R});
  for (int cell = 0; cell < R * R; ++cell) {
    if (wsum[size_t(cell)] > T(0)) {
      mask[size_t(cell)] = T(1);
      const T inv = T(1) / wsum[size_t(cell)];
      for (int c = 0; c < C; ++c) acc[size_t(c) * size_t(R) * size_t(R) + size_t(cell)] *= inv;
    }
  }
  // Normalized weights make the backward pass a plain transposed gather.
  for (Splat& s : splats) s.w /= wsum[size_t(s.cell)];

  Projected<T> out;
  out.mask = mask;
  out.features = g.make(
      std::move(acc), {feats},
      [feats, splats = std::move(splats), C, Hf, Wf, R](Graph<T>& gr, Node<T>& n) {
        if (!feats->requires_grad) return;
        Tensor<T>& df = gr.grad_of(feats);
        const size_t cell_stride = size_t(R) * size_t(R);
        const size_t feat_stride = size_t(Hf) * size_t(Wf);
        for (const Splat& s : splats)
          for (int c = 0; c < C; ++c)
            df[size_t(c) * feat_stride + size_t(s.feat)] += s.w * n.grad[size_t(c) * cell_stride + size_t(s.cell)];
      },
      "project_features");
  return out;
}

// Resample a world-frame grid into the agent frame: the agent sits at the
// grid center with +x (forward) along increasing columns and +y (left) along
// increasing rows. Bilinear gather; samples outside the source read 0.
template <typename T>
Var<T> world_to_robot(Graph<T>& g, Var<T> world, double agent_x, double agent_y, double yaw,
                      const GridSpec& grid) {
  const int C = world->value.dim(0);
  const int R = grid.resolution;
  require(world->value.dim(1) == R && world->value.dim(2) == R, "world_to_robot: grid mismatch");
  const double cs = grid.cell();
  const double half = grid.extent_m / 2.0;
  const double cy = std::cos(yaw), sy = std::sin(yaw);

  struct Tap {
    int src[4];
    T w[4];
    int n = 0;
  };
  std::vector<Tap> taps(size_t(R) * size_t(R));

  for (int r = 0; r < R; ++r)
    for (int c = 0; c < R; ++c) {
      const double xr = (c + 0.5) * cs - half;  // forward
      const double yr = (r + 0.5) * cs - half;  // left
      const double wx = agent_x + cy * xr - sy * yr;
      const double wy = agent_y + sy * xr + cy * yr;
      const double u = wx / cs - 0.5;
      const double v = wy / cs - 0.5;
      const int u0 = int(std::floor(u));
      const int v0 = int(std::floor(v));
      const double fu = u - u0;
      const double fv = v - v0;
      const double w4[4] = {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};
      const int cu[4] = {u0, u0 + 1, u0, u0 + 1};
      const int cv[4] = {v0, v0, v0 + 1, v0 + 1};
      Tap& t = taps[size_t(r) * size_t(R) + size_t(c)];
      for (int k = 0; k < 4; ++k) {
        if (cu[k] < 0 || cu[k] >= R || cv[k] < 0 || cv[k] >= R) continue;
        t.src[t.n] = cv[k] * R + cu[k];
        t.w[t.n] = T(w4[k]);
        ++t.n;
      }
    }

  Tensor<T> out({C, R, R});
  const size_t plane = size_t(R) * size_t(R);
  for (int c = 0; c < C; ++c) {
    const T* src = world->value.data() + size_t(c) * plane;
    T* dst = out.data() + size_t(c) * plane;
    for (size_t i = 0; i < plane; ++i) {
      const Tap& t = taps[i];
      T v = T(0);
      for (int k = 0; k < t.n; ++k) v += t.w[k] * src[size_t(t.src[k])];
      dst[i] = v;
    }
  }

  return g.make(std::move(out), {world},
                [world, taps = std::move(taps), C, R](Graph<T>& gr, Node<T>& n) {
                  if (!world->requires_grad) return;
                  Tensor<T>& dw = gr.grad_of(world);
                  const size_t plane = size_t(R) * size_t(R);
                  for (int c = 0; c < C; ++c) {
                    T* dsrc = dw.data() + size_t(c) * plane;
                    const T* gout = n.grad.data() + size_t(c) * plane;
                    for (size_t i = 0; i < plane; ++i) {
                      const Tap& t = taps[i];
                      for (int k = 0; k < t.n; ++k) dsrc[size_t(t.src[k])] += t.w[k] * gout[i];
                    }
                  }
                },
                "world_to_robot");
}

// Masked leaky-integrator map update. For binary mask m:
//   m = 1: out = (1 - lambda) * prev + lambda * obs
//   m = 0: out = prev  (bit-exact carry-over)
template <typename T>
Var<T> leaky_integrate(Graph<T>& g, Var<T> prev, Var<T> obs, const Tensor<T>& mask, T lambda) {
  const int C = prev->value.dim(0);
  const int R = prev->value.dim(1);
  require(prev->value.same_shape(obs->value), "leaky_integrate: shape mismatch");
  require(int(mask.numel()) == R * prev->value.dim(2), "leaky_integrate: mask mismatch");
  const size_t plane = mask.numel();
  Tensor<T> out(prev->value.shape());
  const bool overwrite = (lambda == T(1));
  for (int c = 0; c < C; ++c) {
    const T* p = prev->value.data() + size_t(c) * plane;
    const T* o = obs->value.data() + size_t(c) * plane;
    T* d = out.data() + size_t(c) * plane;
    for (size_t i = 0; i < plane; ++i) {
      if (mask[i] == T(0))
        d[i] = p[i];
      else
        d[i] = overwrite ? o[i] : (T(1) - lambda) * p[i] + lambda * o[i];
    }
  }
  Tensor<T> mask_copy = mask;
  return g.make(std::move(out), {prev, obs},
                [prev, obs, mask = std::move(mask_copy), lambda, C, plane](Graph<T>& gr, Node<T>& n) {
                  if (prev->requires_grad) {
                    Tensor<T>& dp = gr.grad_of(prev);
                    for (int c = 0; c < C; ++c)
                      for (size_t i = 0; i < plane; ++i)
                        dp[size_t(c) * plane + i] +=
                            n.grad[size_t(c) * plane + i] * (mask[i] == T(0) ? T(1) : T(1) - lambda);
                  }
                  if (obs->requires_grad) {
                    Tensor<T>& dob = gr.grad_of(obs);
                    for (int c = 0; c < C; ++c)
                      for (size_t i = 0; i < plane; ++i)
                        if (mask[i] != T(0)) dob[size_t(c) * plane + i] += n.grad[size_t(c) * plane + i] * lambda;
                  }
                },
                "leaky_integrate");
}

}  // namespace gsmn::nn
