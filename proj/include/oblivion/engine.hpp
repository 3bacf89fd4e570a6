#ifndef OBLIVION_ENGINE_HPP
#define OBLIVION_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "oblivion/game_values.hpp"
#include "oblivion/model.hpp"

namespace oblivion {

// Per-tree lookup table: one row of k(T) attributions per realizable leaf.
struct TreeAttributionTable {
  int depth = 0;
  std::vector<int> feature_ids;           // group order -> global feature index
  std::vector<std::uint32_t> codes;       // realizable codes, ascending
  std::vector<std::vector<double>> rows;  // rows[i] belongs to codes[i]

  int row_index(std::uint32_t code) const;  // -1 when absent
};

struct AttributionTable {
  GameValueSpec spec;
  std::vector<TreeAttributionTable> trees;
};

// Counts the expanded (leaf-value, probability) product terms the
// precomputation folds into each in-tree feature, summed over all leaves.
struct TermCounter {
  std::vector<std::uint64_t> per_feature;
};

// Expanded-term budget of the per-leaf formula for one (leaf, feature) pair.
struct TermCountAudit {
  std::vector<std::uint64_t> per_feature;           // both sums together
  std::vector<std::uint64_t> per_feature_one_side;  // either sum alone
  double bound_per_side = 0.0;                      // 3^(k-1) * (m/k)^k
};

TreeAttributionTable precompute_tree_table(const ObliviousTree& tree, const GameValueSpec& spec,
                                           double scale = 1.0, TermCounter* counter = nullptr);

// One table per tree, rows scaled by ensemble.scale. `max_threads` caps the
// tree-level parallelism; 0 picks the hardware concurrency.
AttributionTable precompute_ensemble(const Ensemble& ensemble, const GameValueSpec& spec,
                                     int max_threads = 0);

std::vector<double> explain(const AttributionTable& tables, const Ensemble& ensemble,
                            const FeaturePoint& x);

TermCountAudit term_count_audit(const ObliviousTree& tree);

// ---------------------------------------------------------------------------
// Additive models with pairwise interactions (EBM-style shortcut).

struct AdditiveModel {
  struct Interaction {
    int i = 0;
    int j = 0;  // i < j
    std::function<double(double, double)> f;
  };

  int n_features = 0;
  std::vector<std::function<double(double)>> univariate;  // empty slot = no term
  std::vector<Interaction> interactions;

  double evaluate(const FeaturePoint& x) const;
};

std::vector<double> explain_additive(const AdditiveModel& model, const Dataset& background,
                                     const FeaturePoint& x);

}  // namespace oblivion

#endif
