#ifndef OBLIVION_TESTS_HELPERS_HPP
#define OBLIVION_TESTS_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "oblivion/game_values.hpp"
#include "oblivion/model.hpp"
#include "oblivion/rational.hpp"

namespace testutil {

using namespace oblivion;

inline std::mt19937_64 rng_for(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// |a-b| relative to the larger magnitude, floored at 1.
inline double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

// Random oblivious tree: depth in [1, max_depth], k distinct features drawn
// from [0, n_features), occasional duplicate thresholds, random values, and
// random probabilities with occasional zero-probability realizable cells.
inline ObliviousTree random_tree(std::mt19937_64& rng, int max_depth, int max_k, int n_features,
                                 bool with_probabilities = true) {
  const int m = uniform_int(rng, 1, max_depth);
  const int k = uniform_int(rng, 1, std::min(m, max_k));

  std::vector<int> ids(n_features);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(k);

  std::vector<SplitLevel> levels(m);
  std::vector<std::vector<double>> used(k);
  for (int s = 0; s < m; ++s) {
    const int q = s < k ? s : uniform_int(rng, 0, k - 1);
    levels[s].feature = ids[q];
    if (!used[q].empty() && uniform(rng, 0, 1) < 0.15) {
      levels[s].threshold = used[q][uniform_int(rng, 0, used[q].size() - 1)];
    } else {
      levels[s].threshold = uniform(rng, -2.0, 2.0);
      used[q].push_back(levels[s].threshold);
    }
  }
  std::shuffle(levels.begin(), levels.end(), rng);

  std::vector<double> values(1u << m);
  for (double& v : values) v = uniform(rng, -5.0, 5.0);
  ObliviousTree skeleton(levels, values);
  if (!with_probabilities) return skeleton;

  std::vector<double> probs(1u << m, 0.0);
  double total = 0.0;
  for (std::uint32_t c : skeleton.realizable()) {
    probs[c] = uniform(rng, 0, 1) < 0.1 ? 0.0 : uniform(rng, 0.01, 1.0);
    total += probs[c];
  }
  if (total == 0.0) {
    probs[skeleton.realizable().front()] = 1.0;
    total = 1.0;
  }
  for (double& p : probs) p /= total;
  return skeleton.with_probabilities(probs);
}

// Random generic binary tree grown by splitting random leaves.
inline GenericTree random_generic_tree(std::mt19937_64& rng, int internal_nodes, int n_features) {
  std::vector<GenericTreeNode> nodes;
  nodes.push_back({-1, 0.0, uniform(rng, -3.0, 3.0), -1, -1});
  std::vector<int> leaves = {0};
  for (int split = 0; split < internal_nodes; ++split) {
    const int pick = uniform_int(rng, 0, static_cast<int>(leaves.size()) - 1);
    const int idx = leaves[pick];
    leaves.erase(leaves.begin() + pick);
    const int left = static_cast<int>(nodes.size());
    nodes.push_back({-1, 0.0, uniform(rng, -3.0, 3.0), -1, -1});
    const int right = static_cast<int>(nodes.size());
    nodes.push_back({-1, 0.0, uniform(rng, -3.0, 3.0), -1, -1});
    nodes[idx].feature = uniform_int(rng, 0, n_features - 1);
    nodes[idx].threshold = uniform(rng, -2.0, 2.0);
    nodes[idx].left = left;
    nodes[idx].right = right;
    leaves.push_back(left);
    leaves.push_back(right);
  }
  return GenericTree(std::move(nodes));
}

// Backward-Pascal family generated from a random deepest row; shallower rows
// follow from alpha(s,n-1) = alpha(s,n) + alpha(s+1,n).
inline CoefficientFamily random_pascal_family(std::mt19937_64& rng, int n_max) {
  std::vector<std::vector<Rational>> rows(n_max);
  rows[n_max - 1].resize(n_max);
  for (int s = 0; s < n_max; ++s)
    rows[n_max - 1][s] = Rational(uniform_int(rng, -4, 9), uniform_int(rng, 1, 6));
  for (int n = n_max - 1; n >= 1; --n) {
    rows[n - 1].resize(n);
    for (int s = 0; s < n; ++s) rows[n - 1][s] = rows[n][s] + rows[n][s + 1];
  }
  return CoefficientFamily::custom(std::move(rows));
}

// Direct summation form of the nested-coalition Shapley weight.
inline Rational hockey_stick_direct(int z, int w, int n) {
  Rational sum(0);
  for (int s = z; s <= w; ++s)
    sum += Rational(binomial(w - z, s - z)) *
           Rational(factorial(s) * factorial(n - s - 1), factorial(n));
  return sum;
}

// Random partition of {0..n-1} into random nonempty blocks.
inline FeaturePartition random_partition(std::mt19937_64& rng, int n) {
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  FeaturePartition p;
  std::size_t pos = 0;
  while (pos < ids.size()) {
    const int take = uniform_int(rng, 1, static_cast<int>(ids.size() - pos));
    p.blocks.emplace_back(ids.begin() + pos, ids.begin() + pos + take);
    pos += take;
  }
  return p;
}

// A point interior to the cell of a given realizable code.
inline FeaturePoint representative_point(const ObliviousTree& tree, std::uint32_t code,
                                         int width) {
  FeaturePoint x(width, 0.0);
  const auto& part = tree.partition();
  for (int q = 0; q < part.group_count(); ++q) {
    double lo = kNegInf, hi = kPosInf;
    for (int s = 0; s < tree.depth(); ++s) {
      if (!(part.group_levels[q] & (1u << s))) continue;
      const double t = tree.levels()[s].threshold;
      if (code & (1u << s))
        lo = std::max(lo, t);
      else
        hi = std::min(hi, t);
    }
    double rep;
    if (lo == kNegInf && hi == kPosInf)
      rep = 0.0;
    else if (lo == kNegInf)
      rep = hi - 1.0;
    else if (hi == kPosInf)
      rep = lo + 1.0;
    else
      rep = 0.5 * (lo + hi);
    x[part.group_feature[q]] = rep;
  }
  return x;
}

}  // namespace testutil

#endif
