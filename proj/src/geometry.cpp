#include "gridalloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gridalloc {

double squared_distance(const GeoPoint& a, const GeoPoint& b) {
  double dx = a.x - b.x;
  double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

double ring_area(const Ring& ring) {
  if (ring.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const GeoPoint& a = ring[i];
    const GeoPoint& b = ring[(i + 1) % ring.size()];
    acc += a.x * b.y - b.x * a.y;
  }
  return 0.5 * acc;
}

double polygon_area(const MultiPolygon& poly) {
  double total = 0.0;
  for (const Polygon& part : poly) {
    total += std::fabs(ring_area(part.outer));
    for (const Ring& hole : part.holes) total -= std::fabs(ring_area(hole));
  }
  return total;
}

BBox bounding_box(const MultiPolygon& poly) {
  BBox b{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
         std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const Polygon& part : poly)
    for (const GeoPoint& p : part.outer) {
      b.min_x = std::min(b.min_x, p.x);
      b.min_y = std::min(b.min_y, p.y);
      b.max_x = std::max(b.max_x, p.x);
      b.max_y = std::max(b.max_y, p.y);
    }
  return b;
}

namespace {

bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  double scale = std::max({std::fabs(a.x), std::fabs(a.y), std::fabs(b.x), std::fabs(b.y), 1.0});
  if (std::fabs(cross) > 1e-12 * scale * scale) return false;
  return p.x >= std::min(a.x, b.x) - 1e-12 && p.x <= std::max(a.x, b.x) + 1e-12 &&
         p.y >= std::min(a.y, b.y) - 1e-12 && p.y <= std::max(a.y, b.y) + 1e-12;
}

// Crossing count for one ring; boundary handled by the caller.
int ray_crossings(const GeoPoint& p, const Ring& ring) {
  int crossings = 0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const GeoPoint& a = ring[i];
    const GeoPoint& b = ring[(i + 1) % ring.size()];
    if ((a.y > p.y) != (b.y > p.y)) {
      double x_hit = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (x_hit > p.x) ++crossings;
    }
  }
  return crossings;
}

}  // namespace

bool point_in_ring(const GeoPoint& p, const Ring& ring) {
  if (ring.size() < 3) return false;
  for (std::size_t i = 0; i < ring.size(); ++i)
    if (on_segment(p, ring[i], ring[(i + 1) % ring.size()])) return true;
  return ray_crossings(p, ring) % 2 == 1;
}

bool point_in_polygon(const GeoPoint& p, const MultiPolygon& poly) {
  for (const Polygon& part : poly) {
    if (part.outer.size() < 3) continue;
    bool boundary = false;
    for (std::size_t i = 0; i < part.outer.size() && !boundary; ++i)
      boundary = on_segment(p, part.outer[i], part.outer[(i + 1) % part.outer.size()]);
    for (const Ring& hole : part.holes)
      for (std::size_t i = 0; i < hole.size() && !boundary; ++i)
        boundary = on_segment(p, hole[i], hole[(i + 1) % hole.size()]);
    if (boundary) return true;
    int crossings = ray_crossings(p, part.outer);
    for (const Ring& hole : part.holes) crossings += ray_crossings(p, hole);
    if (crossings % 2 == 1) return true;
  }
  return false;
}

namespace {

enum class Side { Left, Right, Bottom, Top };

bool inside_edge(const GeoPoint& p, const BBox& r, Side s) {
  switch (s) {
    case Side::Left: return p.x >= r.min_x;
    case Side::Right: return p.x <= r.max_x;
    case Side::Bottom: return p.y >= r.min_y;
    case Side::Top: return p.y <= r.max_y;
  }
  return false;
}

GeoPoint edge_intersect(const GeoPoint& a, const GeoPoint& b, const BBox& r, Side s) {
  double t = 0;
  switch (s) {
    case Side::Left: t = (r.min_x - a.x) / (b.x - a.x); break;
    case Side::Right: t = (r.max_x - a.x) / (b.x - a.x); break;
    case Side::Bottom: t = (r.min_y - a.y) / (b.y - a.y); break;
    case Side::Top: t = (r.max_y - a.y) / (b.y - a.y); break;
  }
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

}  // namespace

Ring clip_ring_to_rect(const Ring& ring, const BBox& rect) {
  Ring subject = ring;
  for (Side s : {Side::Left, Side::Right, Side::Bottom, Side::Top}) {
    Ring clipped;
    clipped.reserve(subject.size() + 4);
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const GeoPoint& cur = subject[i];
      const GeoPoint& prev = subject[(i + subject.size() - 1) % subject.size()];
      bool cur_in = inside_edge(cur, rect, s);
      bool prev_in = inside_edge(prev, rect, s);
      if (cur_in) {
        if (!prev_in) clipped.push_back(edge_intersect(prev, cur, rect, s));
        clipped.push_back(cur);
      } else if (prev_in) {
        clipped.push_back(edge_intersect(prev, cur, rect, s));
      }
    }
    subject = std::move(clipped);
    if (subject.empty()) break;
  }
  return subject;
}

double intersection_area_with_rect(const MultiPolygon& poly, const BBox& rect) {
  double total = 0.0;
  for (const Polygon& part : poly) {
    total += std::fabs(ring_area(clip_ring_to_rect(part.outer, rect)));
    for (const Ring& hole : part.holes)
      total -= std::fabs(ring_area(clip_ring_to_rect(hole, rect)));
  }
  return std::max(total, 0.0);
}

}  // namespace gridalloc
