#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "error.hpp"

namespace loadsynth {

using State = std::uint32_t;

/// Maps readings to equal-frequency bins and back to the bin mean.
///
/// Bin b covers [edges[b-1], edges[b]); the outer bins are unbounded.
struct Quantizer {
  std::vector<double> edges;            // strictly increasing, n_bins - 1 of them
  std::vector<double> representatives;  // mean of training values per bin

  [[nodiscard]] std::size_t n_bins() const noexcept { return representatives.size(); }

  [[nodiscard]] State quantize(double v) const {
    return static_cast<State>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
  }

  [[nodiscard]] double dequantize(State s) const {
    if (s >= representatives.size()) throw ArgumentError("dequantize: state out of range");
    return representatives[s];
  }

  [[nodiscard]] std::pair<double, double> bin_bounds(State s) const {
    const double lo = s == 0 ? -std::numeric_limits<double>::infinity() : edges[s - 1];
    const double hi = s + 1 >= representatives.size() ? std::numeric_limits<double>::infinity() : edges[s];
    return {lo, hi};
  }

  friend bool operator==(const Quantizer&, const Quantizer&) = default;
};

namespace detail {

/// Linearly interpolated quantile of sorted data (positions p * (n - 1)).
inline double sorted_quantile(std::span<const double> sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace detail

/// Equal-frequency bins over `values`. Candidate edges that would leave a
/// bin empty are dropped, so fewer than `n_bins` bins may result.
inline Quantizer fit_quantizer(std::span<const double> values, std::size_t n_bins) {
  if (values.empty()) throw ArgumentError("fit_quantizer: no values");
  if (n_bins < 1) throw ArgumentError("fit_quantizer: n_bins must be at least 1");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  Quantizer q;
  auto bin_begin = sorted.begin();
  for (std::size_t j = 1; j < n_bins; ++j) {
    const double edge = detail::sorted_quantile(sorted, static_cast<double>(j) / static_cast<double>(n_bins));
    const auto split = std::lower_bound(bin_begin, sorted.end(), edge);
    if (split == bin_begin || split == sorted.end()) continue;
    q.edges.push_back(edge);
    bin_begin = split;
  }

  q.representatives.assign(q.edges.size() + 1, 0.0);
  std::vector<std::size_t> counts(q.representatives.size(), 0);
  for (double v : sorted) {
    const State s = q.quantize(v);
    q.representatives[s] += v;
    ++counts[s];
  }
  for (std::size_t b = 0; b < counts.size(); ++b) q.representatives[b] /= static_cast<double>(counts[b]);
  return q;
}

}  // namespace loadsynth
