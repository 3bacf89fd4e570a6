#ifndef OBLIVION_BENCH_HPP
#define OBLIVION_BENCH_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "oblivion/game_values.hpp"
#include "oblivion/model.hpp"

namespace oblivion {

// Synthetic regression target: Y = sum a_i X_i + sum_{i<j} b_ij X_i X_j + eps,
// X standard normal per coordinate.
struct SynthSpec {
  int n = 0;
  std::vector<double> a;  // length n
  std::vector<double> b;  // upper triangle i<j, row-major, length n(n-1)/2
  double noise_sd = 0.0;
  std::uint64_t seed = 0;

  // a_i drawn from (1,5), b_ij from (-0.5,0.5).
  static SynthSpec random(int n, double noise_sd, std::uint64_t seed);
  double pair_coefficient(int i, int j) const;  // requires i < j
};

struct SynthData {
  Dataset inputs;
  std::vector<double> targets;
};

SynthData synth_dataset(const SynthSpec& spec, int rows);

// Random oblivious ensembles shaped like trained boosters: each tree draws
// its levels from a per-tree feature pool and estimates leaf probabilities
// from supplied sample rows.
Ensemble random_synthetic_ensemble(int depth, int n_trees, int n_features, int pool_size,
                                   const Dataset& probability_rows, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Error analysis.

struct GiniBound {
  double gini = 0.0;       // sum of squared leaf probabilities
  double c_constant = 0.0; // Lipschitz-style constant of the RMSE bound
  double rhs_bound = 0.0;  // c_constant / sqrt(|D|) * l2 norm of leaf values
};

GiniBound gini_and_bound(const ObliviousTree& tree, int n_trees_with_feature, int d_size);

// An oblivious tree whose cell distribution factorizes across features, so
// true leaf probabilities are products of per-group pattern probabilities.
class ProductFormTree {
 public:
  static ProductFormTree random(int depth, int k, std::uint64_t seed);

  const ObliviousTree& tree() const { return tree_; }                // true probabilities
  FeaturePoint sample(std::mt19937_64& rng) const;                   // draw from the product law
  Dataset sample_dataset(int rows, std::mt19937_64& rng) const;

 private:
  ProductFormTree(ObliviousTree tree, std::vector<std::vector<double>> pattern_probs,
                  std::vector<std::vector<double>> pattern_reps);
  ObliviousTree tree_;
  std::vector<std::vector<double>> pattern_probs_;  // aligned with tree_.group_patterns()
  std::vector<std::vector<double>> pattern_reps_;   // coordinate inside each pattern's interval
};

struct ErrorScalingRow {
  int d_size = 0;
  double rmse_overall = 0.0;  // across all leaves, features, repeats
  double rmse_max = 0.0;      // worst (leaf, feature) cell
  double bound = 0.0;         // analytic RMSE bound at this |D|
};

std::vector<ErrorScalingRow> error_scaling_experiment(const ProductFormTree& truth,
                                                      const std::vector<int>& d_sizes,
                                                      int repeats, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Complexity-shape measurements.

struct TimingRow {
  int depth = 0;
  double precompute_per_tree_seconds = 0.0;  // median across the ensemble's trees
  double explain_per_point_seconds = 0.0;    // median across repeated batches
};

struct TimingConfig {
  std::vector<int> depths;
  int trees_per_ensemble = 100;
  int n_features = 40;
  int pool_size = 8;         // distinct-feature cap per tree
  int explain_points = 1000;
  int explain_batches = 5;   // medians need >= 5 measurements
  int probability_rows = 4000;
  std::uint64_t seed = 7;
};

std::vector<TimingRow> timing_experiment(const TimingConfig& config, const GameValueSpec& spec);

// Least-squares fit y = intercept + slope * x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace oblivion

#endif
