#include "lsbo/pareto.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace lsbo {

std::vector<std::size_t> non_dominated(std::span<const Point2> pts) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pts[a].f1 != pts[b].f1) return pts[a].f1 < pts[b].f1;
    if (pts[a].f2 != pts[b].f2) return pts[a].f2 < pts[b].f2;
    return a < b;
  });

  std::vector<std::size_t> keep;
  double best2 = std::numeric_limits<double>::infinity();  // min f2 at strictly smaller f1
  std::size_t i = 0;
  while (i < n) {
    // Group shares one f1 value; only its min-f2 members can survive.
    std::size_t j = i;
    double f1 = pts[order[i]].f1;
    double group_min2 = pts[order[i]].f2;
    while (j < n && pts[order[j]].f1 == f1) ++j;
    for (std::size_t k = i; k < j; ++k) {
      const Point2& q = pts[order[k]];
      if (q.f2 > group_min2) break;              // dominated inside the group
      if (best2 <= q.f2) continue;               // dominated by a smaller-f1 point
      keep.push_back(order[k]);
    }
    if (group_min2 < best2) best2 = group_min2;
    i = j;
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

double hypervolume_2d(std::span<const Point2> pts, Point2 ref) {
  std::vector<std::size_t> nd = non_dominated(pts);
  std::vector<Point2> front;
  front.reserve(nd.size());
  for (std::size_t idx : nd) {
    const Point2& p = pts[idx];
    if (p.f1 < ref.f1 && p.f2 < ref.f2) front.push_back(p);
  }
  std::sort(front.begin(), front.end(), [](const Point2& a, const Point2& b) {
    if (a.f1 != b.f1) return a.f1 < b.f1;
    return a.f2 < b.f2;
  });
  double hv = 0.0;
  double prev2 = ref.f2;
  for (const Point2& p : front) {
    if (p.f2 < prev2) {
      hv += (ref.f1 - p.f1) * (prev2 - p.f2);
      prev2 = p.f2;
    }
  }
  return hv;
}

}  // namespace lsbo
