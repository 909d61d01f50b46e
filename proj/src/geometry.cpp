#include "segreward/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "segreward/error.hpp"
#include "segreward/numfmt.hpp"

namespace segreward {

BBox::BBox(double x1, double y1, double x2, double y2)
    : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) ||
      !std::isfinite(y2)) {
    throw invalid_argument("box coordinates must be finite");
  }
  if (x1 > x2 || y1 > y2) {
    throw invalid_argument("box has negative extent: " + to_string(*this));
  }
}

BBox BBox::translated(double dx, double dy) const {
  return BBox(x1_ + dx, y1_ + dy, x2_ + dx, y2_ + dy);
}

double area(const BBox& b) { return b.width() * b.height(); }

double intersection_area(const BBox& a, const BBox& b) {
  const double w = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double h = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (w <= 0 || h <= 0) return 0;
  return w * h;
}

double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = area(a) + area(b) - inter;
  if (uni <= 0) return 0;
  return inter / uni;
}

BBox enclosing_box(const BBox& a, const BBox& b) {
  return BBox(std::min(a.x1(), b.x1()), std::min(a.y1(), b.y1()),
              std::max(a.x2(), b.x2()), std::max(a.y2(), b.y2()));
}

double giou(const BBox& a, const BBox& b) {
  const double area_a = area(a);
  const double area_b = area(b);
  if (area_a <= 0 && area_b <= 0) {
    throw degenerate("undefined GIoU: both boxes have zero area");
  }
  const double inter = intersection_area(a, b);
  const double uni = area_a + area_b - inter;
  const double hull = area(enclosing_box(a, b));
  return inter / uni - (hull - uni) / hull;
}

std::string to_string(const BBox& b) {
  return "[" + format_number(b.x1()) + "," + format_number(b.y1()) + "," +
         format_number(b.x2()) + "," + format_number(b.y2()) + "]";
}

std::string to_string(const std::vector<BBox>& boxes) {
  std::string out = "[";
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (i) out += ",";
    out += to_string(boxes[i]);
  }
  return out + "]";
}

}  // namespace segreward
