#pragma once

#include <cstddef>
#include <vector>

#include "csc/matrix.hpp"

namespace csc {

inline constexpr int kNoise = -1;

struct ClusterAssignment {
  std::vector<int> cluster;   // cluster id per point, or kNoise
  int num_clusters = 0;
  std::vector<bool> is_core;  // at least min_pts neighbours within eps, self included

  std::size_t size() const { return cluster.size(); }
  std::vector<std::size_t> cluster_sizes() const;
};

// DBSCAN over rows of an n x 2 point set. Clusters are grown in index order
// from the lowest unvisited core point; a border point joins the first
// cluster that reaches it.
ClusterAssignment dbscan(const Matrix& points, double eps, int min_pts);

}  // namespace csc
