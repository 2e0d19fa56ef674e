#pragma once

// Normalized center-format boxes and the overlap / distance functions used by
// graph assembling, the matching cost, the losses and the metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "sgtrkit/error.hpp"

namespace sgtrkit {

// Added to the center distance in d_loc so coincident centers stay finite.
inline constexpr double kDefaultLocEpsilon = 1e-3;

struct Corners {
  double x1, y1, x2, y2;
  friend bool operator==(const Corners&, const Corners&) = default;
};

struct Box {
  double cx = 0.5;
  double cy = 0.5;
  double w = 1.0;
  double h = 1.0;

  std::array<double, 4> as_array() const noexcept { return {cx, cy, w, h}; }
  Corners corners() const noexcept { return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h}; }
  double area() const noexcept { return w * h; }

  static Box from_corners(const Corners& c) noexcept {
    return {0.5 * (c.x1 + c.x2), 0.5 * (c.y1 + c.y2), c.x2 - c.x1, c.y2 - c.y1};
  }

  friend bool operator==(const Box&, const Box&) = default;
};

// Subject and object centers (xs, ys, xo, yo) predicted by a predicate node.
struct CenterPair {
  double xs = 0.5;
  double ys = 0.5;
  double xo = 0.5;
  double yo = 0.5;

  std::array<double, 4> as_array() const noexcept { return {xs, ys, xo, yo}; }
  friend bool operator==(const CenterPair&, const CenterPair&) = default;
};

struct CenterPoint {
  double x = 0.5;
  double y = 0.5;
};

inline CenterPoint center_of(const Box& b) noexcept { return {b.cx, b.cy}; }
inline CenterPoint center_of(const CenterPoint& p) noexcept { return p; }
inline CenterPair centers_of(const Box& sub, const Box& obj) noexcept { return {sub.cx, sub.cy, obj.cx, obj.cy}; }

// Throws InvariantError naming `what` and the offending field.
inline void check_box(const Box& b, const std::string& what) {
  const std::array<std::pair<const char*, double>, 4> fields{{{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}}};
  for (const auto& [name, v] : fields) {
    if (!std::isfinite(v)) throw InvariantError(what + "." + name + " is not finite");
  }
  if (b.cx < 0.0 || b.cx > 1.0) throw InvariantError(what + ".cx = " + std::to_string(b.cx) + " outside [0, 1]");
  if (b.cy < 0.0 || b.cy > 1.0) throw InvariantError(what + ".cy = " + std::to_string(b.cy) + " outside [0, 1]");
  if (!(b.w > 0.0) || b.w > 1.0) throw InvariantError(what + ".w = " + std::to_string(b.w) + " outside (0, 1]");
  if (!(b.h > 0.0) || b.h > 1.0) throw InvariantError(what + ".h = " + std::to_string(b.h) + " outside (0, 1]");
}

inline void check_center_pair(const CenterPair& c, const std::string& what) {
  const std::array<std::pair<const char*, double>, 4> fields{{{"xs", c.xs}, {"ys", c.ys}, {"xo", c.xo}, {"yo", c.yo}}};
  for (const auto& [name, v] : fields) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw InvariantError(what + "." + name + " = " + std::to_string(v) + " outside [0, 1]");
    }
  }
}

inline double intersection_area(const Box& a, const Box& b) noexcept {
  const Corners ca = a.corners(), cb = b.corners();
  const double iw = std::max(0.0, std::min(ca.x2, cb.x2) - std::max(ca.x1, cb.x1));
  const double ih = std::max(0.0, std::min(ca.y2, cb.y2) - std::max(ca.y1, cb.y1));
  return iw * ih;
}

inline double iou(const Box& a, const Box& b) noexcept {
  const double inter = intersection_area(a, b);
  return inter / (a.area() + b.area() - inter);
}

// Generalized IoU: IoU minus the fraction of the enclosing hull not covered by
// the union. Lies in (-1, 1]; exactly 1 for identical boxes.
inline double giou(const Box& a, const Box& b) noexcept {
  if (a == b) return 1.0;
  const Corners ca = a.corners(), cb = b.corners();
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double hull = (std::max(ca.x2, cb.x2) - std::min(ca.x1, cb.x1)) *
                      (std::max(ca.y2, cb.y2) - std::min(ca.y1, cb.y1));
  return inter / uni - (hull - uni) / hull;
}

// GIoU clamped to [0, 1].
inline double d_giou_clipped(const Box& a, const Box& b) noexcept { return std::clamp(giou(a, b), 0.0, 1.0); }

// L1 distance between centers.
template <typename A, typename B>
double d_center(const A& a, const B& b) noexcept {
  const CenterPoint pa = center_of(a), pb = center_of(b);
  return std::abs(pa.x - pb.x) + std::abs(pa.y - pb.y);
}

// Spatial matching score: clipped GIoU over (center L1 + eps). Larger is better.
inline double d_loc(const Box& a, const Box& b, double eps = kDefaultLocEpsilon) noexcept {
  return d_giou_clipped(a, b) / (d_center(a, b) + eps);
}

// L1 over the four (cx, cy, w, h) fields.
inline double box_l1(const Box& a, const Box& b) noexcept {
  return std::abs(a.cx - b.cx) + std::abs(a.cy - b.cy) + std::abs(a.w - b.w) + std::abs(a.h - b.h);
}

inline double center_pair_l1(const CenterPair& a, const CenterPair& b) noexcept {
  return std::abs(a.xs - b.xs) + std::abs(a.ys - b.ys) + std::abs(a.xo - b.xo) + std::abs(a.yo - b.yo);
}

}  // namespace sgtrkit
