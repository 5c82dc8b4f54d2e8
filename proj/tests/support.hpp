// Shared helpers for the test binaries: seeded generators and brute-force
// reference computations written independently of the library internals.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ust/core.hpp"
#include "ust/knn_store.hpp"

namespace support {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline ust::TargetState random_box(std::mt19937_64& g, double span = 100.0) {
  return {uniform(g, -span, span), uniform(g, -span, span), uniform(g, 0.5, span / 2),
          uniform(g, 0.5, span / 2)};
}

inline std::vector<double> random_vector(std::mt19937_64& g, std::size_t dim, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(dim);
  for (double& x : v) x = n(g);
  return v;
}

struct Point {
  std::vector<double> x;
  int label;
};

/// Scalar squared distance in plain index order.
inline double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Indices of the k nearest points by linear scan, ties to the lower index.
inline std::vector<std::size_t> brute_knn(const std::vector<Point>& pts,
                                          const std::vector<double>& q, std::size_t k) {
  std::vector<std::size_t> idx(pts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<double> d(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) d[i] = dist2(pts[i].x, q);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

inline double brute_vote(const std::vector<Point>& pts, const std::vector<double>& q,
                         std::size_t k) {
  const auto nn = brute_knn(pts, q, k);
  double s = 0.0;
  for (std::size_t i : nn) s += pts[i].label;
  return s / static_cast<double>(nn.size());
}

// Cyclic Jacobi eigensolver for a dense symmetric matrix. Returns eigenpairs
// sorted by descending eigenvalue; vectors are the columns of `vecs`.
struct Eig {
  std::vector<double> vals;
  std::vector<std::vector<double>> vecs;  // vecs[c] is eigenvector c
};

inline Eig jacobi(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  Eig out;
  for (std::size_t c : order) {
    out.vals.push_back(a[c][c]);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k][c];
    out.vecs.push_back(col);
  }
  return out;
}

inline std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& data) {
  const std::size_t n = data.size(), d = data.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : data) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j] / static_cast<double>(n);
  }
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  for (const auto& r : data) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
    }
  }
  for (auto& row : c) {
    for (double& x : row) x /= static_cast<double>(n - 1);
  }
  return c;
}

// Angle-like distance between two unit directions, sign ignored.
/// Escape fixture for the forgetting behavior of the budgeted store, k = 1,
/// timers of 10 frames. Frame 0 holds a ring of 12 background negatives at
/// radius 0.3 and a tight cluster of 12 mislabeled positives at the origin;
/// frames 1..15 each add one corrected negative in the annulus 0.2..0.4, then
/// tick and prune. Returns the score at the origin after `frames` frames.
inline double escape_fixture_score(std::uint64_t seed, bool budgeting, int frames = 15) {
  ust::KnnConfig c;
  c.k = 1;
  c.initial_timer = 10;
  c.budgeting = budgeting;
  ust::KnnStore s(2, c);
  auto g = rng(seed);
  const double two_pi = 2 * std::acos(-1.0);
  auto polar = [](double r, double a) { return ust::FeatureVector({r * std::cos(a), r * std::sin(a)}); };
  for (int i = 0; i < 12; ++i) s.insert(polar(0.3, two_pi * i / 12), ust::Label::kNegative, 0);
  for (int i = 0; i < 12; ++i) {
    const double a = uniform(g, 0, two_pi), r = 0.02 * std::sqrt(uniform(g, 0, 1));
    s.insert(polar(r, a), ust::Label::kPositive, 0);
  }
  for (int t = 1; t <= frames; ++t) {
    const double a = uniform(g, 0, two_pi), r = 0.2 + 0.2 * std::sqrt(uniform(g, 0, 1));
    s.insert(polar(r, a), ust::Label::kNegative, t);
    s.tick();
    s.prune();
  }
  return s.score(ust::FeatureVector({0.0, 0.0}));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ust_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace support
