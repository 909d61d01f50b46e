#pragma once

#include <string>
#include <vector>

namespace segreward {

// Axis-aligned box in pixel coordinates, origin top-left. The right and
// bottom edges are exclusive, so pixel (r, c) is the box [c, r, c+1, r+1].
// Zero-area boxes are valid; negative extents and non-finite values are not.
class BBox {
 public:
  BBox() = default;
  BBox(double x1, double y1, double x2, double y2);

  double x1() const { return x1_; }
  double y1() const { return y1_; }
  double x2() const { return x2_; }
  double y2() const { return y2_; }
  double width() const { return x2_ - x1_; }
  double height() const { return y2_ - y1_; }

  BBox translated(double dx, double dy) const;

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double x1_ = 0, y1_ = 0, x2_ = 0, y2_ = 0;
};

double area(const BBox& b);
double intersection_area(const BBox& a, const BBox& b);

// |a ∩ b| / |a ∪ b|. Two zero-area boxes give 0 rather than 0/0 so the
// value can always be used as a matching cost.
double iou(const BBox& a, const BBox& b);

BBox enclosing_box(const BBox& a, const BBox& b);

// IoU minus the fraction of the enclosing box not covered by the union.
// Throws when both boxes have zero area.
double giou(const BBox& a, const BBox& b);

// `[x1, y1, x2, y2]`, integral coordinates printed without a fraction.
std::string to_string(const BBox& b);
std::string to_string(const std::vector<BBox>& boxes);

}  // namespace segreward
