#pragma once

#include "npw/common.hpp"

#include <vector>

namespace npw::detail {

/// Calls fn(point) for every node of a uniform tensor grid with
/// `points_per_dim` nodes per axis (endpoints included).
template <class Fn>
void for_each_uniform_node(const Box& box, int points_per_dim, Fn&& fn) {
  const std::size_t d = box.dims();
  Vector p(static_cast<Eigen::Index>(d));
  if (d == 0) {
    fn(p);
    return;
  }
  std::vector<int> idx(d, 0);
  const int m = points_per_dim < 2 ? 1 : points_per_dim;
  while (true) {
    for (std::size_t k = 0; k < d; ++k) {
      const auto& r = box.ranges[k];
      p[static_cast<Eigen::Index>(k)] = m == 1 ? 0.5 * (r.lo + r.hi) : r.lo + r.width() * idx[k] / (m - 1);
    }
    fn(p);
    std::size_t k = 0;
    while (k < d && ++idx[k] == m) idx[k++] = 0;
    if (k == d) break;
  }
}

}  // namespace npw::detail
