#pragma once

#include "gsmn/io/png.hpp"
#include "gsmn/model/policy.hpp"
#include "gsmn/nn/tensor.hpp"

namespace gsmn::viz {

struct VizConfig {
  int px_per_cell = 16;       // top-down pixels per map cell
  double overlay_alpha = 0.6;
  std::array<uint8_t, 3> demo_color{220, 40, 40};      // ground truth: red
  std::array<uint8_t, 3> executed_color{40, 70, 230};  // executed: blue
  std::array<uint8_t, 3> goal_color{255, 255, 255};
};

namespace detail {

inline void set_px(sim::Image& img, int x, int y, const std::array<uint8_t, 3>& c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  uint8_t* p = img.pixel(y, x);
  p[0] = c[0];
  p[1] = c[1];
  p[2] = c[2];
}

inline void draw_disc(sim::Image& img, double cx, double cy, double r, const std::array<uint8_t, 3>& c) {
  for (int y = int(cy - r); y <= int(cy + r) + 1; ++y)
    for (int x = int(cx - r); x <= int(cx + r) + 1; ++x)
      if ((x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy) <= r * r) set_px(img, x, y, c);
}

inline void draw_line(sim::Image& img, double x0, double y0, double x1, double y1,
                      const std::array<uint8_t, 3>& c) {
  const double len = std::hypot(x1 - x0, y1 - y0);
  const int n = std::max(1, int(len * 2));
  for (int i = 0; i <= n; ++i) {
    const double t = double(i) / n;
    set_px(img, int(x0 + t * (x1 - x0)), int(y0 + t * (y1 - y0)), c);
  }
}

}  // namespace detail

// World (x, y) to top-down pixel coordinates; world y points up the image.
struct TopdownFrame {
  double scale = 16.0;  // px per meter
  int size = 512;

  double px(double wx) const { return wx * scale; }
  double py(double wy) const { return size - wy * scale; }
};

inline TopdownFrame topdown_frame(double field_size, int map_resolution, int px_per_cell) {
  TopdownFrame f;
  f.size = map_resolution * px_per_cell;
  f.scale = f.size / field_size;
  return f;
}

inline sim::Image draw_topdown(const world::EnvironmentSpec& env, const world::LandmarkPool& pool,
                               const world::TaskSpec& task, const std::vector<Pose>& demo,
                               const std::vector<Pose>& executed, const TopdownFrame& f,
                               const VizConfig& cfg = {}) {
  sim::Image img;
  img.width = f.size;
  img.height = f.size;
  img.rgb.assign(size_t(f.size) * size_t(f.size) * 3, 0);
  const sim::RenderPalette pal;
  for (int y = 0; y < f.size; ++y)
    for (int x = 0; x < f.size; ++x) detail::set_px(img, x, y, pal.field);
  for (const world::Landmark& lm : env.landmarks) {
    const auto& cls = pool.classes[size_t(lm.class_id)];
    detail::draw_disc(img, f.px(lm.position.x), f.py(lm.position.y), cls.radius * f.scale, cls.color);
  }
  detail::draw_disc(img, f.px(task.goal.x), f.py(task.goal.y), 0.3 * f.scale, cfg.goal_color);
  auto draw_path = [&](const std::vector<Pose>& path, const std::array<uint8_t, 3>& color) {
    for (size_t i = 0; i + 1 < path.size(); ++i)
      detail::draw_line(img, f.px(path[i].p.x), f.py(path[i].p.y), f.px(path[i + 1].p.x),
                        f.py(path[i + 1].p.y), color);
  };
  draw_path(demo, cfg.demo_color);
  draw_path(executed, cfg.executed_color);
  if (!executed.empty())
    detail::draw_disc(img, f.px(executed.back().p.x), f.py(executed.back().p.y), 0.25 * f.scale,
                      cfg.executed_color);
  return img;
}

// Fixed random 3 x C projection reducing feature channels to RGB; saved per
// run so colors stay comparable across steps.
inline nn::Tensor<float> color_projection(int channels, uint64_t seed) {
  nn::Tensor<float> proj({3, channels});
  Rng rng(derive_seed(seed, "viz_proj"));
  for (size_t i = 0; i < proj.numel(); ++i) proj[i] = float(rng.normal(0.0, 1.0));
  return proj;
}

// Alpha-blend a (C, res, res) world-frame map onto a top-down image. Map cell
// (r, c) covers the world square whose center is ((c+.5)cell, (r+.5)cell), so
// with size = res * px_per_cell the pixel blocks line up with cells exactly.
inline void overlay_world_map(sim::Image& img, const nn::Tensor<float>& map,
                              const nn::Tensor<float>& proj, double alpha) {
  const int C = map.dim(0), R = map.dim(1);
  const int ppc = img.width / R;
  // Normalize projected values to [0,1] per image for display.
  std::vector<double> rgb(size_t(R) * size_t(R) * 3, 0.0);
  double lo = 1e300, hi = -1e300;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < R; ++c)
      for (int k = 0; k < 3; ++k) {
        double v = 0;
        for (int ch = 0; ch < C; ++ch) v += double(proj[size_t(k * C + ch)]) * double(map.at(ch, r, c));
        rgb[(size_t(r) * R + size_t(c)) * 3 + size_t(k)] = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  const double span = hi - lo > 1e-12 ? hi - lo : 1.0;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < R; ++c)
      for (int py = 0; py < ppc; ++py)
        for (int px = 0; px < ppc; ++px) {
          // world row r has y = (r+.5)cell; image rows grow downward
          const int iy = img.height - 1 - (r * ppc + py);
          const int ix = c * ppc + px;
          uint8_t* p = img.pixel(iy, ix);
          for (int k = 0; k < 3; ++k) {
            const double v = (rgb[(size_t(r) * R + size_t(c)) * 3 + size_t(k)] - lo) / span;
            p[k] = uint8_t(std::clamp((1 - alpha) * p[k] + alpha * 255.0 * v, 0.0, 255.0));
          }
        }
}

// Resample a robot-frame map back into the world frame for display (nearest
// neighbor; display only).
inline nn::Tensor<float> robot_map_to_world(const nn::Tensor<float>& robot, const Pose& pose,
                                            const nn::GridSpec& grid) {
  const int C = robot.dim(0), R = grid.resolution;
  nn::Tensor<float> out({C, R, R});
  const double cs = grid.cell();
  const double half = grid.extent_m / 2.0;
  const double cy = std::cos(-pose.yaw), sy = std::sin(-pose.yaw);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < R; ++c) {
      const double wx = (c + 0.5) * cs - pose.p.x;
      const double wy = (r + 0.5) * cs - pose.p.y;
      const double xr = cy * wx - sy * wy;
      const double yr = sy * wx + cy * wy;
      const int sc = int(std::floor((xr + half) / cs));
      const int sr = int(std::floor((yr + half) / cs));
      if (sc < 0 || sc >= R || sr < 0 || sr >= R) continue;
      for (int ch = 0; ch < C; ++ch) out.at(ch, r, c) = robot.at(ch, sr, sc);
    }
  return out;
}

}  // namespace gsmn::viz
