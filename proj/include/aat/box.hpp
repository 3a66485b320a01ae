#pragma once

#include <vector>

namespace aat {

// Axis-aligned box in pixel coordinates, x1 < x2 and y1 < y2 when valid.
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return valid() ? width() * height() : 0.0; }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }
  bool valid() const { return x1 < x2 && y1 < y2; }
  bool inside(double width_limit, double height_limit) const {
    return valid() && x1 >= 0 && y1 >= 0 && x2 <= width_limit && y2 <= height_limit;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

// Area of the intersection rectangle (0 when disjoint).
double intersection_area(const Box& a, const Box& b);

// Intersection over union. A zero-area box yields 0 and logs a warning.
double iou(const Box& a, const Box& b);

// Lexicographic (x1, y1, x2, y2).
bool box_less(const Box& a, const Box& b);

Box clip_box(const Box& b, double width, double height);

}  // namespace aat
