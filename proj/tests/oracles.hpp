#pragma once

// Independent reference implementations used to check the library. They
// favour obviousness over speed and share no code with include/.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

namespace oracle {

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double pop_variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

inline double pop_sd(const std::vector<double>& v) { return std::sqrt(pop_variance(v)); }

struct Stats {
  double mu, sigma, p_max, p_min, sigma_pro, mu_total, sigma_total, gamma, c_max, c_min;
};

/// Table statistics computed by explicit loops over profiles x positions.
inline Stats stats(const std::vector<std::vector<double>>& x, bool l1 = false) {
  const std::size_t n = x.size(), d = x[0].size();
  std::vector<double> totals;
  double p_max = -std::numeric_limits<double>::infinity(), p_min = std::numeric_limits<double>::infinity();
  std::vector<double> per_profile_var;
  for (const auto& row : x) {
    double t = 0;
    for (double v : row) {
      t += v;
      p_max = std::max(p_max, v);
      p_min = std::min(p_min, v);
    }
    totals.push_back(t);
    per_profile_var.push_back(pop_variance(row));
  }
  double norm_dim = 0;
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> col;
    for (std::size_t i = 0; i < n; ++i) col.push_back(x[i][j]);
    const double var = pop_variance(col);
    norm_dim += l1 ? std::abs(var) : var * var;
  }
  if (!l1) norm_dim = std::sqrt(norm_dim);
  double norm_prof = 0;
  for (double v : per_profile_var) norm_prof += v * v;
  norm_prof = std::sqrt(norm_prof);
  Stats s{};
  s.mu_total = mean(totals);
  s.mu = s.mu_total / static_cast<double>(d);
  s.sigma_total = pop_sd(totals);
  s.gamma = s.mu_total == 0 ? (s.sigma_total == 0 ? 0 : std::numeric_limits<double>::infinity()) : s.sigma_total / s.mu_total;
  s.p_max = p_max;
  s.p_min = p_min;
  s.c_max = *std::max_element(totals.begin(), totals.end());
  s.c_min = *std::min_element(totals.begin(), totals.end());
  s.sigma_pro = std::sqrt(norm_dim);
  s.sigma = std::sqrt(static_cast<double>(d) * norm_prof);
  return s;
}

/// Type-7 sample quantile computed from a freshly sorted copy.
inline double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Counts of (position, context, next) n-grams with context length min(i, l).
using NGramCounts = std::map<std::size_t, std::map<std::vector<std::uint32_t>, std::map<std::uint32_t, std::size_t>>>;

inline NGramCounts ngram_counts(const std::vector<std::vector<std::uint32_t>>& seqs, std::size_t l) {
  NGramCounts c;
  for (const auto& s : seqs) {
    for (std::size_t i = 1; i < s.size(); ++i) {
      const std::size_t k = std::min(i, l);
      std::vector<std::uint32_t> ctx(s.begin() + static_cast<std::ptrdiff_t>(i - k), s.begin() + static_cast<std::ptrdiff_t>(i));
      ++c[i][ctx][s[i]];
    }
  }
  return c;
}

/// Minimum within-cluster SSE over every 2-partition of the points.
inline std::pair<double, std::vector<int>> best_two_partition(const std::vector<std::vector<double>>& pts) {
  const std::size_t n = pts.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_lab;
  for (std::uint64_t mask = 1; mask + 1 < (1ull << n); ++mask) {
    double sse = 0;
    std::vector<int> lab(n);
    for (int g = 0; g < 2; ++g) {
      std::vector<double> c(pts[0].size(), 0.0);
      std::size_t m = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (((mask >> i) & 1) == static_cast<std::uint64_t>(g)) {
          for (std::size_t j = 0; j < c.size(); ++j) c[j] += pts[i][j];
          ++m;
          lab[i] = g;
        }
      }
      for (double& v : c) v /= static_cast<double>(m);
      for (std::size_t i = 0; i < n; ++i) {
        if (((mask >> i) & 1) == static_cast<std::uint64_t>(g)) {
          for (std::size_t j = 0; j < c.size(); ++j) sse += (pts[i][j] - c[j]) * (pts[i][j] - c[j]);
        }
      }
    }
    if (sse < best) {
      best = sse;
      best_lab = lab;
    }
  }
  return {best, best_lab};
}

/// Penalised logistic loss minimised by damped Newton iterations with a
/// dense Cholesky-free Gaussian elimination. Intercept is unpenalised.
struct LogitOracle {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  double lambda;

  double loss(const std::vector<double>& b) const {
    double f = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double z = b[0];
      for (std::size_t j = 0; j < x[i].size(); ++j) z += b[j + 1] * x[i][j];
      f += std::log(1.0 + std::exp(-std::abs(z))) + std::max(z, 0.0) - y[i] * z;
    }
    f /= static_cast<double>(x.size());
    for (std::size_t j = 1; j < b.size(); ++j) f += 0.5 * lambda * b[j] * b[j];
    return f;
  }

  std::vector<double> solve() const {
    const std::size_t w = x[0].size() + 1;
    std::vector<double> b(w, 0.0);
    for (int it = 0; it < 200; ++it) {
      std::vector<double> g(w, 0.0);
      std::vector<std::vector<double>> h(w, std::vector<double>(w, 0.0));
      for (std::size_t i = 0; i < x.size(); ++i) {
        std::vector<double> row{1.0};
        row.insert(row.end(), x[i].begin(), x[i].end());
        double z = 0;
        for (std::size_t j = 0; j < w; ++j) z += b[j] * row[j];
        const double p = 1.0 / (1.0 + std::exp(-z));
        for (std::size_t j = 0; j < w; ++j) {
          g[j] += (p - y[i]) * row[j] / static_cast<double>(x.size());
          for (std::size_t k = 0; k < w; ++k) h[j][k] += p * (1 - p) * row[j] * row[k] / static_cast<double>(x.size());
        }
      }
      for (std::size_t j = 1; j < w; ++j) {
        g[j] += lambda * b[j];
        h[j][j] += lambda;
      }
      // Solve h * step = g.
      std::vector<std::vector<double>> a = h;
      std::vector<double> r = g;
      for (std::size_t c = 0; c < w; ++c) {
        std::size_t piv = c;
        for (std::size_t k = c + 1; k < w; ++k)
          if (std::abs(a[k][c]) > std::abs(a[piv][c])) piv = k;
        std::swap(a[c], a[piv]);
        std::swap(r[c], r[piv]);
        for (std::size_t k = c + 1; k < w; ++k) {
          const double f = a[k][c] / a[c][c];
          for (std::size_t m = c; m < w; ++m) a[k][m] -= f * a[c][m];
          r[k] -= f * r[c];
        }
      }
      std::vector<double> step(w);
      for (std::size_t c = w; c-- > 0;) {
        double s = r[c];
        for (std::size_t m = c + 1; m < w; ++m) s -= a[c][m] * step[m];
        step[c] = s / a[c][c];
      }
      double t = 1.0;
      const double f0 = loss(b);
      std::vector<double> nb(w);
      while (true) {
        for (std::size_t j = 0; j < w; ++j) nb[j] = b[j] - t * step[j];
        if (loss(nb) <= f0 || t < 1e-10) break;
        t *= 0.5;
      }
      b = nb;
      double gmax = 0;
      for (double v : g) gmax = std::max(gmax, std::abs(v));
      if (gmax < 1e-13) break;
    }
    return b;
  }
};

/// Number of strict local maxima above half of the day's maximum.
inline int count_peaks(const double* day, std::size_t n) {
  double mx = day[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, day[i]);
  int peaks = 0;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (day[i] > day[i - 1] && day[i] > day[i + 1] && day[i] > 0.5 * mx) ++peaks;
  return peaks;
}

}  // namespace oracle
