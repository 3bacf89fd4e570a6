#include "oblivion/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace oblivion {

GameOracle::GameOracle(int player_count, std::function<double(std::uint64_t)> evaluate)
    : players_(player_count), evaluate_(std::move(evaluate)) {
  if (player_count < 1 || player_count > kMaxPlayers)
    throw CapacityError("game oracle supports 1.." + std::to_string(kMaxPlayers) + " players");
}

double GameOracle::value(std::uint64_t coalition) const {
  if (coalition & ~full_coalition()) throw DomainError("coalition outside the player set");
  const auto it = memo_.find(coalition);
  if (it != memo_.end()) return it->second;
  const double v = evaluate_(coalition);
  memo_.emplace(coalition, v);
  return v;
}

GameOracle empirical_marginal_game(Model f, const Dataset& background, FeaturePoint x) {
  if (background.rows.empty()) throw ConfigError("empirical marginal game needs background rows");
  if (background.width() != static_cast<int>(x.size()))
    throw InputShapeError("explicand width does not match the background data");
  const int n = static_cast<int>(x.size());
  auto eval = [f = std::move(f), rows = background.rows, x = std::move(x)](std::uint64_t S) {
    double sum = 0.0;
    FeaturePoint spliced;
    for (const auto& row : rows) {
      spliced = row;
      for (std::uint64_t rest = S; rest != 0; rest &= rest - 1) {
        const int i = __builtin_ctzll(rest);
        spliced[i] = x[i];
      }
      sum += f(spliced);
    }
    return sum / static_cast<double>(rows.size());
  };
  return GameOracle(n, std::move(eval));
}

GameOracle closed_form_marginal_game(const ObliviousTree& tree, const LeafCode& leaf) {
  if (leaf.width != tree.depth())
    throw InputShapeError("leaf code width does not match the tree depth");
  if (!tree.is_realizable(leaf.bits))
    throw DomainError("closed-form marginal game needs a realizable leaf");
  const int k = tree.distinct_feature_count();
  auto eval = [codes = tree.realizable(), values = tree.leaf_values(),
               probs = tree.leaf_probabilities(), groups = tree.partition().group_levels,
               a = leaf.bits](std::uint64_t Q) {
    auto agrees_on = [&](std::uint32_t c1, std::uint32_t c2, std::uint64_t set) {
      for (std::uint64_t rest = set; rest != 0; rest &= rest - 1)
        if ((c1 ^ c2) & groups[__builtin_ctzll(rest)]) return false;
      return true;
    };
    const std::uint64_t all = (1ull << groups.size()) - 1;
    double v = 0.0;
    for (std::uint32_t b : codes) {
      if (!agrees_on(b, a, Q)) continue;
      double mass = 0.0;
      for (std::uint32_t u : codes)
        if (agrees_on(u, b, all & ~Q)) mass += probs[u];
      v += values[b] * mass;
    }
    return v;
  };
  return GameOracle(k, std::move(eval));
}

std::vector<double> brute_force_value(const GameOracle& game, const GameValueSpec& spec) {
  const int n = game.player_count();
  if (n > 20) throw CapacityError("brute force capped at 20 players");
  const std::uint64_t full = game.full_coalition();
  std::vector<double> out(n, 0.0);

  if (!spec.is_coalitional()) {
    const auto& family = spec.effective_family();
    std::vector<double> alpha(n);
    for (int s = 0; s < n; ++s) alpha[s] = to_double(family.coefficient(s, n));
    for (int i = 0; i < n; ++i) {
      const std::uint64_t bit = 1ull << i;
      double h = 0.0;
      for (std::uint64_t S = 0; S <= full; ++S) {
        if (S & bit) continue;
        h += alpha[popcount(S)] * (game.value(S | bit) - game.value(S));
      }
      out[i] = h;
    }
    return out;
  }

  std::vector<std::vector<int>> blocks = spec.partition.blocks;
  const MaskPartition part = MaskPartition::from_blocks(n, blocks);
  const int m = part.block_count();
  for (int i = 0; i < n; ++i) {
    const int j = part.block_of(i);
    const std::uint64_t home = part.blocks[j];
    const std::uint64_t bit = 1ull << i;
    const int sj = popcount(home);
    double h = 0.0;
    // Literal double sum over block subsets R and within-block subsets.
    const std::uint64_t block_rest = ((1ull << m) - 1) ^ (1ull << j);
    std::uint64_t R = block_rest;
    while (true) {
      std::uint64_t q_mask = 0;
      for (std::uint64_t rest = R; rest != 0; rest &= rest - 1)
        q_mask |= part.blocks[__builtin_ctzll(rest)];
      const Rational c1 = spec.family_outer.coefficient(popcount(R), m);
      std::uint64_t Ks = home & ~bit;
      while (true) {
        const double coeff =
            to_double(c1 * spec.family_inner.coefficient(popcount(Ks), sj));
        h += coeff * (game.value(q_mask | Ks | bit) - game.value(q_mask | Ks));
        if (Ks == 0) break;
        Ks = (Ks - 1) & (home & ~bit);
      }
      if (R == 0) break;
      R = (R - 1) & block_rest;
    }
    out[i] = h;
  }
  return out;
}

std::vector<Rational> brute_force_value_exact(int player_count,
                                              const std::function<Rational(std::uint64_t)>& game,
                                              const CoefficientFamily& family) {
  if (player_count > 20) throw CapacityError("brute force capped at 20 players");
  const std::uint64_t full = (1ull << player_count) - 1;
  std::vector<Rational> out(player_count, Rational(0));
  for (int i = 0; i < player_count; ++i) {
    const std::uint64_t bit = 1ull << i;
    Rational h(0);
    for (std::uint64_t S = 0; S <= full; ++S) {
      if (S & bit) continue;
      h += family.coefficient(popcount(S), player_count) * (game(S | bit) - game(S));
    }
    out[i] = h;
  }
  return out;
}

std::vector<double> node_masses_from_dataset(const GenericTree& tree, const Dataset& data) {
  if (data.rows.empty()) throw ConfigError("node masses need a nonempty dataset");
  std::vector<double> mass(tree.node_count(), 0.0);
  for (const auto& row : data.rows) {
    int idx = tree.root();
    mass[idx] += 1.0;
    while (!tree.nodes()[idx].is_leaf()) {
      const auto& node = tree.nodes()[idx];
      idx = row[node.feature] > node.threshold ? node.right : node.left;
      mass[idx] += 1.0;
    }
  }
  return mass;
}

namespace {

double fill_masses(const GenericTree& tree, int idx, const std::vector<double>& leaf_mass,
                   std::vector<double>& mass) {
  const auto& node = tree.nodes()[idx];
  if (node.is_leaf()) {
    mass[idx] = leaf_mass[idx];
    return mass[idx];
  }
  mass[idx] = fill_masses(tree, node.left, leaf_mass, mass) +
              fill_masses(tree, node.right, leaf_mass, mass);
  return mass[idx];
}

// Mass-weighted average of descendant leaf values.
double node_value(const GenericTree& tree, int idx, const std::vector<double>& mass,
                  std::vector<double>& cache, std::vector<char>& cached) {
  if (cached[idx]) return cache[idx];
  const auto& node = tree.nodes()[idx];
  double v;
  if (node.is_leaf()) {
    v = node.value;
  } else {
    if (mass[idx] <= 0.0) throw EvaluationError("tree node has zero data coverage");
    v = (mass[node.left] * node_value(tree, node.left, mass, cache, cached) +
         mass[node.right] * node_value(tree, node.right, mass, cache, cached)) /
        mass[idx];
  }
  cache[idx] = v;
  cached[idx] = 1;
  return v;
}

}  // namespace

std::vector<double> node_masses_from_leaf_probabilities(
    const GenericTree& tree, const std::vector<double>& leaf_mass_by_node) {
  if (leaf_mass_by_node.size() != static_cast<std::size_t>(tree.node_count()))
    throw ConfigError("leaf mass array must be indexed by node");
  std::vector<double> mass(tree.node_count(), 0.0);
  fill_masses(tree, tree.root(), leaf_mass_by_node, mass);
  return mass;
}

GameOracle path_dependent_game(const GenericTree& tree, std::vector<double> node_masses,
                               FeaturePoint x, int n_players) {
  if (node_masses.size() != static_cast<std::size_t>(tree.node_count()))
    throw ConfigError("node mass array must be indexed by node");
  auto eval = [tree, masses = std::move(node_masses), x = std::move(x)](std::uint64_t S) {
    std::function<double(int)> rec = [&](int idx) -> double {
      const auto& node = tree.nodes()[idx];
      if (node.is_leaf()) return node.value;
      if ((S >> node.feature) & 1)
        return rec(x[node.feature] > node.threshold ? node.right : node.left);
      if (masses[idx] <= 0.0) throw EvaluationError("tree node has zero data coverage");
      return (masses[node.left] * rec(node.left) + masses[node.right] * rec(node.right)) /
             masses[idx];
    };
    return rec(tree.root());
  };
  return GameOracle(n_players, std::move(eval));
}

GameOracle eject_game(const GenericTree& tree, std::vector<double> node_masses, FeaturePoint x,
                      int n_players) {
  if (node_masses.size() != static_cast<std::size_t>(tree.node_count()))
    throw ConfigError("node mass array must be indexed by node");
  auto eval = [tree, masses = std::move(node_masses), x = std::move(x)](std::uint64_t S) {
    std::vector<double> cache(tree.node_count(), 0.0);
    std::vector<char> cached(tree.node_count(), 0);
    int idx = tree.root();
    while (true) {
      const auto& node = tree.nodes()[idx];
      if (node.is_leaf()) return node.value;
      if (!((S >> node.feature) & 1))
        return node_value(tree, idx, masses, cache, cached);
      idx = x[node.feature] > node.threshold ? node.right : node.left;
    }
  };
  return GameOracle(n_players, std::move(eval));
}

int OneHotEncoding::encoded_width() const {
  int w = 0;
  for (const auto& f : features) w += f.categorical ? static_cast<int>(f.categories.size()) : 1;
  return w;
}

FeaturePoint OneHotEncoding::encode(const FeaturePoint& x) const {
  if (x.size() != features.size())
    throw InputShapeError("point width does not match the encoding map");
  FeaturePoint out;
  out.reserve(encoded_width());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    if (!f.categorical) {
      out.push_back(x[i]);
      continue;
    }
    const auto it = std::find(f.categories.begin(), f.categories.end(), x[i]);
    if (it == f.categories.end())
      throw ConfigError("value not in the category list of feature " + std::to_string(i));
    for (std::size_t c = 0; c < f.categories.size(); ++c)
      out.push_back(c == static_cast<std::size_t>(it - f.categories.begin()) ? 1.0 : 0.0);
  }
  return out;
}

FeaturePartition OneHotEncoding::encoded_partition() const {
  FeaturePartition p;
  int idx = 0;
  for (const auto& f : features) {
    std::vector<int> block;
    const int width = f.categorical ? static_cast<int>(f.categories.size()) : 1;
    for (int c = 0; c < width; ++c) block.push_back(idx++);
    p.blocks.push_back(std::move(block));
  }
  return p;
}

OneHotCheckResult onehot_owen_recovery_check(Model encoded_model, const OneHotEncoding& encoding,
                                             const Dataset& original_data, const FeaturePoint& x) {
  if (original_data.rows.empty()) throw ConfigError("recovery check needs background rows");
  if (original_data.width() != encoding.original_width())
    throw ConfigError("dataset width does not match the encoding map");

  Dataset encoded_data;
  encoded_data.rows.reserve(original_data.rows.size());
  for (const auto& row : original_data.rows) encoded_data.rows.push_back(encoding.encode(row));
  const FeaturePoint x_enc = encoding.encode(x);

  GameOracle encoded_game = empirical_marginal_game(encoded_model, encoded_data, x_enc);
  const std::vector<double> owen =
      brute_force_value(encoded_game, GameValueSpec::owen(encoding.encoded_partition()));

  Model original_model = [&encoded_model, &encoding](const FeaturePoint& p) {
    return encoded_model(encoding.encode(p));
  };
  GameOracle original_game = empirical_marginal_game(original_model, original_data, x);
  const std::vector<double> shapley =
      brute_force_value(original_game, GameValueSpec::shapley());

  OneHotCheckResult result;
  result.direct_shapley = shapley;
  result.owen_block_sums.assign(encoding.original_width(), 0.0);
  const FeaturePartition part = encoding.encoded_partition();
  for (std::size_t blk = 0; blk < part.blocks.size(); ++blk)
    for (int enc_idx : part.blocks[blk]) result.owen_block_sums[blk] += owen[enc_idx];
  for (int i = 0; i < encoding.original_width(); ++i)
    result.max_abs_diff =
        std::max(result.max_abs_diff, std::fabs(result.owen_block_sums[i] - shapley[i]));
  return result;
}

}  // namespace oblivion
