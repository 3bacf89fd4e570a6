#ifndef OBLIVION_ORACLE_HPP
#define OBLIVION_ORACLE_HPP

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "oblivion/engine.hpp"
#include "oblivion/game_values.hpp"
#include "oblivion/model.hpp"

namespace oblivion {

// A black-box set function S -> v(S) over bitmask coalitions. Values are
// memoized per instance; one instance serves a single consumer.
class GameOracle {
 public:
  GameOracle(int player_count, std::function<double(std::uint64_t)> evaluate);

  int player_count() const { return players_; }
  std::uint64_t full_coalition() const { return (1ull << players_) - 1; }
  double value(std::uint64_t coalition) const;

 private:
  int players_ = 0;
  std::function<double(std::uint64_t)> evaluate_;
  mutable std::unordered_map<std::uint64_t, double> memo_;
};

using Model = std::function<double(const FeaturePoint&)>;

// v(S) = (1/|D|) sum over background rows of f(x_S, row_{-S}).
GameOracle empirical_marginal_game(Model f, const Dataset& background, FeaturePoint x);

// The marginal game of a single oblivious tree at a leaf's cell, written
// directly in terms of leaf values and probabilities; players are the
// distinct in-tree features.
GameOracle closed_form_marginal_game(const ObliviousTree& tree, const LeafCode& leaf);

// Direct evaluation of the game value by its defining coalition sums.
// Capped at 20 players.
std::vector<double> brute_force_value(const GameOracle& game, const GameValueSpec& spec);

// Rational-arithmetic variant for exactness tests on rational games.
std::vector<Rational> brute_force_value_exact(int player_count,
                                              const std::function<Rational(std::uint64_t)>& game,
                                              const CoefficientFamily& family);

// ---------------------------------------------------------------------------
// TreeSHAP-style games over generic trees.

// Data mass reaching each node (counts or probabilities); index = node index.
std::vector<double> node_masses_from_dataset(const GenericTree& tree, const Dataset& data);
std::vector<double> node_masses_from_leaf_probabilities(const GenericTree& tree,
                                                        const std::vector<double>& leaf_mass_by_node);

// Path-dependent TreeSHAP game: splits on coalition features follow the
// explicand; other splits average the subtrees by their mass fractions.
GameOracle path_dependent_game(const GenericTree& tree, std::vector<double> node_masses,
                               FeaturePoint x, int n_players);

// Eject variant: a split on a feature outside the coalition returns the
// current node's value, the mass-weighted average of its descendant leaves.
GameOracle eject_game(const GenericTree& tree, std::vector<double> node_masses, FeaturePoint x,
                      int n_players);

// ---------------------------------------------------------------------------
// One-hot/Owen recovery (categorical features).

struct OneHotEncoding {
  struct Feature {
    bool categorical = false;
    std::vector<double> categories;  // category codes, size = arity
  };
  std::vector<Feature> features;

  int original_width() const { return static_cast<int>(features.size()); }
  int encoded_width() const;
  FeaturePoint encode(const FeaturePoint& x) const;
  FeaturePartition encoded_partition() const;  // indicator blocks, singletons for numerics
};

struct OneHotCheckResult {
  std::vector<double> owen_block_sums;  // per original feature
  std::vector<double> direct_shapley;   // per original feature
  double max_abs_diff = 0.0;
};

// Owen values (within-block family = Shapley) of the empirical marginal game
// on encoded features, block-summed and compared against Shapley values of
// the empirical marginal game on the original features.
OneHotCheckResult onehot_owen_recovery_check(Model encoded_model, const OneHotEncoding& encoding,
                                             const Dataset& original_data, const FeaturePoint& x);

}  // namespace oblivion

#endif
