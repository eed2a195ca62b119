#include "csc/dbscan.hpp"

#include <cmath>
#include <cstdint>
#include <deque>

#include "csc/errors.hpp"
#include "csc/simd.hpp"

namespace csc {

std::vector<std::size_t> ClusterAssignment::cluster_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(num_clusters), 0);
  for (int c : cluster)
    if (c != kNoise) ++sizes[static_cast<std::size_t>(c)];
  return sizes;
}

ClusterAssignment dbscan(const Matrix& points, double eps, int min_pts) {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (min_pts < 1) throw ConfigError("min_pts must be at least 1");
  if (points.cols != 2) throw ShapeError("dbscan expects 2-D points");
  const std::size_t n = points.rows;
  std::vector<float> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = points(i, 0);
    ys[i] = points(i, 1);
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw DataError("dbscan input is not finite");
  }
  const auto& k = simd::active();
  const float eps2 = static_cast<float>(eps * eps);

  // Adjacency lists, CSR layout.
  std::vector<std::size_t> offset(n + 1, 0);
  std::vector<std::uint32_t> adj;
  std::vector<std::uint32_t> buf(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cnt = k.radius_2d(xs.data(), ys.data(), n, xs[i], ys[i], eps2, buf.data());
    adj.insert(adj.end(), buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(cnt));
    offset[i + 1] = adj.size();
  }

  ClusterAssignment out;
  out.cluster.assign(n, kNoise);
  out.is_core.assign(n, false);
  for (std::size_t i = 0; i < n; ++i)
    out.is_core[i] = offset[i + 1] - offset[i] >= static_cast<std::size_t>(min_pts);

  std::deque<std::uint32_t> frontier;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!out.is_core[seed] || out.cluster[seed] != kNoise) continue;
    const int id = out.num_clusters++;
    out.cluster[seed] = id;
    frontier.push_back(static_cast<std::uint32_t>(seed));
    while (!frontier.empty()) {
      const std::uint32_t p = frontier.front();
      frontier.pop_front();
      for (std::size_t e = offset[p]; e < offset[p + 1]; ++e) {
        const std::uint32_t q = adj[e];
        if (out.cluster[q] != kNoise) continue;
        out.cluster[q] = id;
        if (out.is_core[q]) frontier.push_back(q);
      }
    }
  }
  return out;
}

}  // namespace csc
