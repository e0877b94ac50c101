#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fedgroup/errors.hpp"
#include "fedgroup/lsh.hpp"
#include "fedgroup/rng.hpp"

namespace fedgroup {

// A fixed partition of device indices into K groups. Once produced by
// preprocessing it never changes for the rest of the training run.
struct DeviceGroups {
  std::vector<std::size_t> assignment;  // device index -> group index in [0, K)
  std::size_t k = 0;

  std::vector<std::vector<std::size_t>> members() const {
    std::vector<std::vector<std::size_t>> m(k);
    for (std::size_t i = 0; i < assignment.size(); ++i) m[assignment[i]].push_back(i);
    return m;
  }

  bool operator==(const DeviceGroups&) const = default;
};

// Per-iteration diagnostics for the Lloyd loop; used by property tests.
struct KMeansTrace {
  std::vector<double> wss;          // within-cluster sum of squares per iteration
  std::vector<bool> repaired;       // whether an empty-cluster repair fired
  std::size_t iterations = 0;
};

namespace detail {

inline double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    acc += d * d;
  }
  return acc;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding, Euclidean distance, deterministic
// in the seed. Nearest-centroid ties break toward the lowest group index;
// empty clusters are repaired by moving the point farthest from its centroid.
inline DeviceGroups kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                           std::uint64_t seed, std::size_t max_iters = 100,
                           KMeansTrace* trace = nullptr) {
  const std::size_t n = points.size();
  if (k < 1) throw ConfigError("kmeans: K must be >= 1");
  if (k > n) {
    throw ConfigError("kmeans: K = " + std::to_string(k) + " exceeds point count " +
                      std::to_string(n));
  }
  if (max_iters < 1) throw ConfigError("kmeans: max_iters must be >= 1");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ContractError("kmeans: points disagree on dimension");
  }

  RngStream rng = RngStream::derived(seed, "kmeans");

  // k-means++ seeding: next centroid drawn proportional to squared distance
  // from the nearest already-chosen one.
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  centroids.push_back(points[rng.uniform_int(n)]);
  std::vector<double> d2(n);
  for (std::size_t c = 1; c < k; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& cen : centroids) best = std::min(best, detail::dist2(points[i], cen));
      d2[i] = best;
      sum += best;
    }
    std::size_t pick;
    if (sum <= 0.0) {
      pick = rng.uniform_int(n);  // all points coincide with chosen centroids
    } else {
      const double target = rng.uniform() * sum;
      double cum = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > target) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(points[pick]);
  }

  std::vector<std::size_t> assignment(n, 0);
  std::vector<std::size_t> prev(n, std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> sizes(k);
  std::size_t iter = 0;
  for (; iter < max_iters; ++iter) {
    // Assignment step, ties toward the lowest group index.
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_g = 0;
      for (std::size_t g = 0; g < k; ++g) {
        const double d = detail::dist2(points[i], centroids[g]);
        if (d < best) {
          best = d;
          best_g = g;
        }
      }
      assignment[i] = best_g;
    }

    // Empty-cluster repair: donate the point farthest from its centroid,
    // taken from a group that keeps at least one member.
    std::fill(sizes.begin(), sizes.end(), std::size_t(0));
    for (std::size_t g : assignment) ++sizes[g];
    bool repaired = false;
    for (std::size_t g = 0; g < k; ++g) {
      if (sizes[g] > 0) continue;
      double worst = -1.0;
      std::size_t worst_i = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[assignment[i]] < 2) continue;
        const double d = detail::dist2(points[i], centroids[assignment[i]]);
        if (d > worst) {
          worst = d;
          worst_i = i;
        }
      }
      if (worst_i == n) throw NumericError("kmeans: cannot repair empty cluster");
      --sizes[assignment[worst_i]];
      assignment[worst_i] = g;
      ++sizes[g];
      repaired = true;
    }

    const bool converged = (assignment == prev);

    // Update step: centroid sums in fixed point-index order.
    for (std::size_t g = 0; g < k; ++g) {
      std::fill(centroids[g].begin(), centroids[g].end(), 0.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto& cen = centroids[assignment[i]];
      for (std::size_t j = 0; j < dim; ++j) cen[j] += points[i][j];
    }
    for (std::size_t g = 0; g < k; ++g) {
      const double inv = 1.0 / double(sizes[g]);
      for (double& v : centroids[g]) v *= inv;
    }

    if (trace != nullptr) {
      double wss = 0.0;
      for (std::size_t i = 0; i < n; ++i) wss += detail::dist2(points[i], centroids[assignment[i]]);
      trace->wss.push_back(wss);
      trace->repaired.push_back(repaired);
    }
    if (converged) break;
    prev = assignment;
  }
  if (trace != nullptr) trace->iterations = std::min(iter + 1, max_iters);

  DeviceGroups groups;
  groups.k = k;
  groups.assignment = std::move(assignment);
  return groups;
}

// Integer hash vectors embedded as real points for Euclidean clustering.
inline std::vector<std::vector<double>> to_points(const std::vector<HashVector>& hashes) {
  std::vector<std::vector<double>> pts(hashes.size());
  for (std::size_t i = 0; i < hashes.size(); ++i) {
    pts[i].assign(hashes[i].begin(), hashes[i].end());
  }
  return pts;
}

// Fraction of devices covered by their group's majority label.
inline double purity(const DeviceGroups& groups, const std::vector<int>& true_labels) {
  if (groups.assignment.size() != true_labels.size()) {
    throw ContractError("purity: assignment length " + std::to_string(groups.assignment.size()) +
                        " != label count " + std::to_string(true_labels.size()));
  }
  int max_label = 0;
  for (int l : true_labels) {
    if (l < 0) throw ContractError("purity: negative label");
    max_label = std::max(max_label, l);
  }
  std::vector<std::vector<std::size_t>> counts(groups.k,
                                               std::vector<std::size_t>(std::size_t(max_label) + 1, 0));
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    ++counts[groups.assignment[i]][std::size_t(true_labels[i])];
  }
  std::size_t covered = 0;
  for (const auto& hist : counts) covered += *std::max_element(hist.begin(), hist.end());
  return double(covered) / double(true_labels.size());
}

}  // namespace fedgroup
