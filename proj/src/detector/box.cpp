#include "aat/box.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "aat/log.hpp"

namespace aat {

double intersection_area(const Box& a, const Box& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  return (w > 0 && h > 0) ? w * h : 0.0;
}

double iou(const Box& a, const Box& b) {
  if (a.area() <= 0 || b.area() <= 0) {
    std::ostringstream msg;
    msg << "iou: degenerate box (" << a.x1 << ',' << a.y1 << ',' << a.x2 << ',' << a.y2 << ") vs ("
        << b.x1 << ',' << b.y1 << ',' << b.x2 << ',' << b.y2 << ')';
    log::warn(msg.str());
    return 0.0;
  }
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

bool box_less(const Box& a, const Box& b) {
  return std::tie(a.x1, a.y1, a.x2, a.y2) < std::tie(b.x1, b.y1, b.x2, b.y2);
}

Box clip_box(const Box& b, double width, double height) {
  return Box{std::clamp(b.x1, 0.0, width), std::clamp(b.y1, 0.0, height),
             std::clamp(b.x2, 0.0, width), std::clamp(b.y2, 0.0, height)};
}

}  // namespace aat
