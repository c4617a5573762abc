#pragma once

// Brute-force reference implementations used by unit and acceptance tests.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "fogcast/common.hpp"
#include "fogcast/gbdt.hpp"

namespace fogcast::oracle {

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

// Enumerates every (feature, midpoint) candidate. For each candidate the left
// sums are recomputed from scratch over rows sorted by (value, position), the
// order the trainer commits to, so the comparison can be exact.
inline std::optional<Split> exhaustive_split(const Matrix& x, std::span<const double> g,
                                             std::span<const double> h, double lambda,
                                             double gamma, double min_child_weight) {
  const std::size_t n = x.rows();
  double G = 0.0, H = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    G += g[i];
    H += h[i];
  }
  std::optional<Split> best;
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return x(a, f) < x(b, f) || (x(a, f) == x(b, f) && a < b);
    });
    std::vector<double> distinct;
    for (std::size_t i : order) {
      if (distinct.empty() || distinct.back() != x(i, f)) distinct.push_back(x(i, f));
    }
    std::optional<Split> best_f;
    for (std::size_t k = 0; k + 1 < distinct.size(); ++k) {
      const double lo = distinct[k], hi = distinct[k + 1];
      double t = lo + (hi - lo) / 2.0;
      if (!(t > lo)) t = hi;
      double gl = 0.0, hl = 0.0;
      for (std::size_t i : order) {
        if (!(x(i, f) < t)) break;
        gl += g[i];
        hl += h[i];
      }
      const double gr = G - gl, hr = H - hl;
      if (hl < min_child_weight || hr < min_child_weight) continue;
      const double gain =
          0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - G * G / (H + lambda)) - gamma;
      if (!(gain > 0.0)) continue;
      if (!best_f || gain > best_f->gain) best_f = Split{f, t, gain};
    }
    if (best_f && (!best || best_f->gain > best->gain)) best = best_f;
  }
  return best;
}

// P(score of a random positive > random negative) + 0.5 P(tie), by counting
// every pair. Numerator and denominator are integers (ties count twice), so
// the result is the exactly rounded quotient.
inline double pairwise_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  std::uint64_t twice_wins = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        twice_wins += 2;
      } else if (scores[i] == scores[j]) {
        twice_wins += 1;
      }
    }
  }
  return double(twice_wins) / double(2 * pairs);
}

// Small random regression problem with repeated feature values so ties and
// duplicate thresholds are exercised. Half the sets use dyadic gradients,
// where every partial sum is exact.
struct SplitProblem {
  Matrix x;
  std::vector<double> g;
  std::vector<double> h;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
};

inline SplitProblem random_split_problem(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> rows(2, 64), cols(1, 4), levels(1, 12), pick(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SplitProblem p;
  const int n = rows(rng), d = cols(rng);
  p.x = Matrix(std::size_t(n), std::size_t(d));
  for (int f = 0; f < d; ++f) {
    const int L = levels(rng);
    for (int i = 0; i < n; ++i) p.x(i, f) = std::floor(unit(rng) * L) / 4.0 - 1.0;
  }
  const bool dyadic = unit(rng) < 0.5;
  for (int i = 0; i < n; ++i) {
    if (dyadic) {
      p.g.push_back(std::round((2.0 * unit(rng) - 1.0) * 64.0) / 64.0);
      p.h.push_back(std::round((0.05 + unit(rng)) * 64.0) / 64.0);
    } else {
      const double prob = unit(rng);
      const double w = unit(rng) < 0.2 ? 5.0 : 1.0;
      const double y = unit(rng) < 0.3 ? 1.0 : 0.0;
      p.g.push_back(w * (prob - y));
      p.h.push_back(w * prob * (1.0 - prob));
    }
  }
  const double lambdas[] = {0.0, 1.0, 3.5};
  const double gammas[] = {0.0, 0.0, 0.1};
  const double mcws[] = {0.0, 1.0, 2.5};
  p.lambda = lambdas[pick(rng)];
  p.gamma = gammas[pick(rng)];
  p.min_child_weight = mcws[pick(rng)];
  if (p.lambda == 0.0 && p.min_child_weight == 0.0) p.min_child_weight = 1e-6;
  return p;
}

// Tree expectation with the features in `fixed` (bit mask) set to x and the
// others integrated out by child-cover fractions.
inline double coalition_value(const gbdt::Tree& tree, std::span<const double> x, unsigned fixed,
                              int node = 0) {
  const auto& n = tree.nodes[std::size_t(node)];
  if (n.is_leaf()) return n.leaf_value;
  if (fixed & (1u << n.feature)) {
    return coalition_value(tree, x, fixed, x[std::size_t(n.feature)] < n.threshold ? n.left : n.right);
  }
  const auto& l = tree.nodes[std::size_t(n.left)];
  const auto& r = tree.nodes[std::size_t(n.right)];
  return (l.cover * coalition_value(tree, x, fixed, n.left) +
          r.cover * coalition_value(tree, x, fixed, n.right)) /
         n.cover;
}

// Shapley values as the mean marginal contribution over all orderings of the
// features. Independent of the subset-weight formulation; m <= 8.
inline std::vector<double> permutation_shapley(const gbdt::Tree& tree, std::span<const double> x,
                                               std::size_t num_features) {
  std::vector<int> order(num_features);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(num_features, 0.0);
  double count = 0.0;
  do {
    unsigned fixed = 0;
    double prev = coalition_value(tree, x, fixed);
    for (int f : order) {
      fixed |= 1u << f;
      const double next = coalition_value(tree, x, fixed);
      phi[std::size_t(f)] += next - prev;
      prev = next;
    }
    count += 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  for (auto& v : phi) v /= count;
  return phi;
}

}  // namespace fogcast::oracle
