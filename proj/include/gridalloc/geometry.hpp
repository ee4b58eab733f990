#pragma once

#include <vector>

namespace gridalloc {

/// Planar coordinates in meters. No geographic (lat/lon) handling; inputs
/// must already be projected.
struct GeoPoint {
  double x{0};
  double y{0};
};

/// Ring stored without the repeated closing vertex.
using Ring = std::vector<GeoPoint>;

struct Polygon {
  Ring outer;
  std::vector<Ring> holes;
};

/// Multi-part polygon; parts are assumed disjoint.
using MultiPolygon = std::vector<Polygon>;

struct BBox {
  double min_x{0}, min_y{0}, max_x{0}, max_y{0};
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double area() const { return width() * height(); }
};

double squared_distance(const GeoPoint& a, const GeoPoint& b);

/// Signed shoelace area (positive for counterclockwise rings).
double ring_area(const Ring& ring);

/// Total area: |outer| minus |holes| per part.
double polygon_area(const MultiPolygon& poly);

BBox bounding_box(const MultiPolygon& poly);

/// Even-odd (ray crossing) membership over all rings; points exactly on a
/// ring boundary count as inside.
bool point_in_ring(const GeoPoint& p, const Ring& ring);
bool point_in_polygon(const GeoPoint& p, const MultiPolygon& poly);

/// Sutherland-Hodgman clip of one ring against an axis-aligned rectangle.
Ring clip_ring_to_rect(const Ring& ring, const BBox& rect);

/// Area of the intersection between a polygon (with holes) and a rectangle.
double intersection_area_with_rect(const MultiPolygon& poly, const BBox& rect);

}  // namespace gridalloc
