#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lsbo {

struct Point2 {
  double f1 = 0.0;
  double f2 = 0.0;
};

// Indices (ascending) of points not dominated by any other under
// minimization. p dominates q iff p <= q componentwise and p != q; exact
// duplicates of a non-dominated point are all retained.
std::vector<std::size_t> non_dominated(std::span<const Point2> pts);

// Hypervolume dominated by the non-dominated subset of pts relative to ref,
// counting only points strictly better than ref in both objectives.
double hypervolume_2d(std::span<const Point2> pts, Point2 ref);

}  // namespace lsbo
