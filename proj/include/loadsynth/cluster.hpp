#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "rng.hpp"
#include "segment.hpp"

namespace loadsynth {

using PointSet = std::span<const std::span<const double>>;
using Centers = std::vector<std::vector<double>>;

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

/// Index of the nearest center; ties go to the lowest index.
inline std::size_t nearest_center(std::span<const double> point, const Centers& centers) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = squared_distance(point, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

struct KMeansResult {
  std::vector<std::size_t> assignment;  // point -> index into centers
  Centers centers;                      // non-empty clusters only
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

inline Centers kmeans_plus_plus(PointSet points, std::size_t k, Rng& rng) {
  Centers centers;
  centers.reserve(k);
  const std::size_t n = points.size();
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.below(n);
  chosen[first] = true;
  centers.emplace_back(points[first].begin(), points[first].end());
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = squared_distance(points[i], centers.back());
  while (centers.size() < k) {
    double total = 0.0;
    for (double d : dist) total += d;
    std::size_t pick;
    if (total > 0.0) {
      pick = rng.categorical(dist);
    } else {
      // Every point coincides with a center: fall back to an unchosen index.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) free.push_back(i);
      pick = free[rng.below(free.size())];
    }
    chosen[pick] = true;
    centers.emplace_back(points[pick].begin(), points[pick].end());
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], squared_distance(points[i], centers.back()));
  }
  return centers;
}

}  // namespace detail

/// Lloyd iteration with squared Euclidean distance on raw values.
///
/// Cold starts (empty `warm_start`) are seeded with k-means++ and need
/// 1 <= k <= points.size(). A warm start fixes the initial centers and
/// ignores `k`; it may hold more centers than points. Iteration stops when
/// the assignment or the centers stop changing. Clusters that end up empty
/// are removed and the assignment is renumbered in center order.
inline KMeansResult kmeans(PointSet points, std::size_t k, std::span<const std::vector<double>> warm_start,
                           std::size_t max_iters, std::uint64_t seed) {
  const std::size_t n = points.size();
  if (n == 0) throw ArgumentError("kmeans: no points");
  const std::size_t dim = points[0].size();
  for (const auto& p : points)
    if (p.size() != dim) throw ArgumentError("kmeans: points differ in length");

  Centers centers;
  if (warm_start.empty()) {
    if (k < 1) throw ArgumentError("kmeans: k must be at least 1");
    if (k > n) {
      throw ArgumentError("kmeans: k=" + std::to_string(k) + " exceeds the number of points (" + std::to_string(n) +
                          ")");
    }
    Rng rng(seed);
    centers = detail::kmeans_plus_plus(points, k, rng);
  } else {
    centers.assign(warm_start.begin(), warm_start.end());
    for (const auto& c : centers)
      if (c.size() != dim) throw ArgumentError("kmeans: warm-start center has wrong length");
  }

  KMeansResult result;
  std::vector<std::size_t> assignment(n, 0);
  std::vector<std::size_t> next(n);
  for (std::size_t iter = 1; iter <= std::max<std::size_t>(max_iters, 1); ++iter) {
    result.iterations = iter;
    for (std::size_t i = 0; i < n; ++i) next[i] = nearest_center(points[i], centers);
    if (iter > 1 && next == assignment) {
      result.converged = true;
      break;
    }
    assignment.swap(next);

    Centers updated(centers.size(), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(centers.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& c = updated[assignment[i]];
      for (std::size_t j = 0; j < dim; ++j) c[j] += points[i][j];
      ++counts[assignment[i]];
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (counts[c] == 0) {
        updated[c] = centers[c];
        continue;
      }
      for (double& v : updated[c]) v /= static_cast<double>(counts[c]);
    }
    const bool unchanged = updated == centers;
    centers.swap(updated);
    if (unchanged) {
      result.converged = true;
      break;
    }
  }

  std::vector<std::size_t> counts(centers.size(), 0);
  for (std::size_t a : assignment) ++counts[a];
  std::vector<std::size_t> remap(centers.size(), 0);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    if (counts[c] == 0) continue;
    remap[c] = result.centers.size();
    result.centers.push_back(std::move(centers[c]));
  }
  result.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.assignment[i] = remap[assignment[i]];
  return result;
}

/// Population standard deviation of the totals over their mean. Zero for a
/// single member; +infinity when the mean is zero but the spread is not.
inline double cluster_ratio(std::span<const double> totals) {
  if (totals.empty()) throw ArgumentError("cluster_ratio: empty pattern");
  if (totals.size() == 1) return 0.0;
  double mean = 0.0;
  for (double t : totals) mean += t;
  mean /= static_cast<double>(totals.size());
  double var = 0.0;
  for (double t : totals) var += (t - mean) * (t - mean);
  const double sigma = std::sqrt(var / static_cast<double>(totals.size()));
  if (mean == 0.0) return sigma == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return sigma / mean;
}

struct Pattern {
  std::size_t id = 0;
  Scale scale = Scale::Day;
  std::vector<double> centroid;
  std::vector<std::size_t> members;  // indices into the clustered input

  friend bool operator==(const Pattern&, const Pattern&) = default;
};

/// Where a clustered input came from.
struct SegmentRef {
  std::string user;
  std::size_t ordinal = 0;
  friend bool operator==(const SegmentRef&, const SegmentRef&) = default;
};

struct PatternCatalog {
  Scale scale = Scale::Day;
  double gamma = 0.10;
  /// Set when clustering stopped on K >= k_max (or on the round budget)
  /// while some cluster still exceeded gamma.
  bool hit_k_max = false;
  std::size_t rounds = 0;
  std::vector<Pattern> patterns;
  /// Optional provenance of each clustered input, parallel to member ids.
  std::vector<SegmentRef> segment_refs;

  [[nodiscard]] std::size_t size() const noexcept { return patterns.size(); }
  friend bool operator==(const PatternCatalog&, const PatternCatalog&) = default;
};

struct AdaptiveKMeansOptions {
  std::size_t k_initial = 8;
  std::size_t k_max = 4096;
  double gamma = 0.10;
  std::uint64_t seed = 0;
  std::size_t max_iters = 300;
  /// Outer-loop budget; the loop also ends here if K never reaches k_max.
  std::size_t max_rounds = 1000;
};

/// Adaptive K-Means on raw segment values.
///
/// Each round runs K-Means warm-started from the accumulated center set,
/// then re-clusters every cluster whose total-consumption ratio exceeds
/// gamma with k = 2 and appends both new centers to the set (the parent
/// center stays). Rounds continue until no cluster exceeds gamma or the
/// set reaches k_max. The first round is a k-means++ cold start seeded
/// with `seed`, with k_initial capped at the number of segments.
inline PatternCatalog adaptive_kmeans(PointSet points, Scale scale, const AdaptiveKMeansOptions& options) {
  if (options.k_initial < 1 || options.k_initial > options.k_max) {
    throw ArgumentError("adaptive_kmeans: need 1 <= k_initial <= k_max");
  }
  if (!(options.gamma > 0.0)) throw ArgumentError("adaptive_kmeans: gamma must be positive");
  if (points.empty()) throw ArgumentError("adaptive_kmeans: no segments");

  std::vector<double> totals(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double t = 0.0;
    for (double v : points[i]) t += v;
    totals[i] = t;
  }

  std::size_t k = std::min(options.k_initial, points.size());
  Centers accumulated;
  KMeansResult result;
  bool stop = false;
  std::size_t rounds = 0;
  do {
    stop = true;
    result = kmeans(points, k, accumulated, options.max_iters, options.seed);
    ++rounds;
    accumulated = result.centers;

    std::vector<std::vector<std::size_t>> members(result.centers.size());
    for (std::size_t i = 0; i < points.size(); ++i) members[result.assignment[i]].push_back(i);
    const std::uint64_t round_seed = derive_seed(options.seed, rounds);
    for (std::size_t c = 0; c < members.size(); ++c) {
      std::vector<double> member_totals;
      member_totals.reserve(members[c].size());
      for (std::size_t i : members[c]) member_totals.push_back(totals[i]);
      if (!(cluster_ratio(member_totals) > options.gamma)) continue;
      stop = false;
      std::vector<std::span<const double>> sub;
      sub.reserve(members[c].size());
      for (std::size_t i : members[c]) sub.push_back(points[i]);
      auto split = kmeans(sub, 2, {}, options.max_iters, derive_seed(round_seed, c));
      for (auto& center : split.centers) accumulated.push_back(std::move(center));
    }
    k = accumulated.size();
  } while (!stop && k < options.k_max && rounds < options.max_rounds);

  PatternCatalog catalog;
  catalog.scale = scale;
  catalog.gamma = options.gamma;
  catalog.hit_k_max = !stop;
  catalog.rounds = rounds;
  catalog.patterns.resize(result.centers.size());
  for (std::size_t c = 0; c < result.centers.size(); ++c) {
    catalog.patterns[c].id = c;
    catalog.patterns[c].scale = scale;
    catalog.patterns[c].centroid = std::move(result.centers[c]);
  }
  for (std::size_t i = 0; i < points.size(); ++i) catalog.patterns[result.assignment[i]].members.push_back(i);
  return catalog;
}

/// Id of the pattern whose centroid is nearest; ties go to the lowest id.
inline std::size_t assign_to_nearest(std::span<const double> segment, const PatternCatalog& catalog) {
  if (catalog.patterns.empty()) throw ArgumentError("assign_to_nearest: empty catalog");
  std::size_t best = catalog.patterns.front().id;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& p : catalog.patterns) {
    if (p.centroid.size() != segment.size()) {
      throw ArgumentError("assign_to_nearest: segment length " + std::to_string(segment.size()) +
                          " does not match the " + std::string(scale_name(catalog.scale)) + " catalog");
    }
    const double d = squared_distance(segment, p.centroid);
    if (d < best_d || (d == best_d && p.id < best)) {
      best_d = d;
      best = p.id;
    }
  }
  return best;
}

}  // namespace loadsynth
