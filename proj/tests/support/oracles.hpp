#pragma once

// Straight-line reference implementations used as test oracles. They share no
// code with the library beyond the plain data containers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "pmoe/model.hpp"

namespace oracle {

inline double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double clip(double p, double delta) { return std::min(std::max(p, delta), 1.0 - delta); }

inline double dot_aug(const pmoe::Vector& params, const pmoe::FeatureMatrix& x, Eigen::Index n) {
  double s = params[params.size() - 1];
  for (Eigen::Index j = 0; j < x.cols(); ++j) s += params[j] * x(n, j);
  return s;
}

inline double mixture(double f, double rho, int g, double delta) {
  if (g == -1) return f;
  return clip((1.0 - rho) * f + rho * g, delta);
}

// Cross-entropy of the mixture plus gamma * sum_{j<d} |w_j|.
inline double loss(const pmoe::Vector& theta, const pmoe::Vector& w, double gamma, double delta,
                   const pmoe::FeatureMatrix& x, const pmoe::Vector& y, const std::vector<int>& g) {
  double total = 0.0;
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    const double f = clip(sig(dot_aug(theta, x, n)), delta);
    const double rho = clip(sig(dot_aug(w, x, n)), delta);
    const double p = mixture(f, rho, g[static_cast<std::size_t>(n)], delta);
    total -= y[n] * std::log(p) + (1.0 - y[n]) * std::log(1.0 - p);
  }
  for (Eigen::Index j = 0; j + 1 < w.size(); ++j) total += gamma * std::abs(w[j]);
  return total;
}

// Central-difference gradient of a scalar function.
inline pmoe::Vector numeric_gradient(const std::function<double(const pmoe::Vector&)>& f,
                                     pmoe::Vector x, double h) {
  pmoe::Vector out(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double keep = x[j];
    x[j] = keep + h;
    const double up = f(x);
    x[j] = keep - h;
    const double down = f(x);
    x[j] = keep;
    out[j] = (up - down) / (2.0 * h);
  }
  return out;
}

// Fraction of (positive, negative) pairs ranked correctly, ties counting half.
inline double pairwise_auc(const std::vector<double>& s, const std::vector<double>& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1.0) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0.0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

inline int hard_label(double f, double rho, int g, double t, double tau) {
  if (g != -1 && rho >= t) return g;
  return f >= tau ? 1 : 0;
}

// Nearest point to z with loss_at(a, b) <= bound, by grid search on the disc
// of the given radius around z at resolution `step`. Every feasible grid point
// within two cells of the best distance is then refined on a grid ten times
// finer, down to step / 1000, so that boundaries nearly parallel to the circle
// around z do not send the answer to the wrong cell.
inline pmoe::Vector grid_projection(const std::function<double(double, double)>& loss_at,
                                    double bound, const pmoe::Vector& z, double radius,
                                    double step) {
  struct Point {
    double dist;
    long i, k;
  };
  std::vector<Point> candidates;
  double best = std::numeric_limits<double>::infinity();
  pmoe::Vector best_point(2);
  auto visit = [&](long i, long k, double h) {
    const double a = h * static_cast<double>(i), b = h * static_cast<double>(k);
    const double dist = std::hypot(a - z[0], b - z[1]);
    if (dist > radius || dist > best + 2.0 * h) return;
    if (loss_at(a, b) > bound) return;
    candidates.push_back({dist, i, k});
    if (dist < best) {
      best = dist;
      best_point = pmoe::Vector{{a, b}};
    }
  };

  double h = step;
  for (long i = std::lround(std::floor((z[0] - radius) / h)); i <= std::lround(std::ceil((z[0] + radius) / h)); ++i) {
    for (long k = std::lround(std::floor((z[1] - radius) / h)); k <= std::lround(std::ceil((z[1] + radius) / h)); ++k) {
      visit(i, k, h);
    }
  }
  while (h > step / 1000.0 * 1.5 && !candidates.empty()) {
    std::vector<Point> keep;
    for (const auto& c : candidates) {
      if (c.dist <= best + 2.0 * h) keep.push_back(c);
    }
    std::set<std::pair<long, long>> fine;
    for (const auto& c : keep) {
      for (long di = -20; di <= 20; ++di) {
        for (long dk = -20; dk <= 20; ++dk) fine.insert({10 * c.i + di, 10 * c.k + dk});
      }
    }
    h /= 10.0;
    candidates.clear();
    for (const auto& [i, k] : fine) visit(i, k, h);
  }
  return best_point;
}

inline pmoe::FeatureMatrix random_features(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  pmoe::FeatureMatrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = normal(rng);
  }
  return x;
}

inline pmoe::Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  pmoe::Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace oracle
