#ifndef OBLIVION_MODEL_HPP
#define OBLIVION_MODEL_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "oblivion/errors.hpp"

namespace oblivion {

// An explicand: one value per global feature index.
using FeaturePoint = std::vector<double>;

struct Dataset {
  std::vector<FeaturePoint> rows;
  std::vector<std::string> columns;  // empty when the source had no header

  int width() const { return rows.empty() ? 0 : static_cast<int>(rows.front().size()); }
  int size() const { return static_cast<int>(rows.size()); }
};

struct SplitLevel {
  int feature = 0;  // global feature index
  double threshold = 0.0;
};

// Path through an oblivious tree: bit s is 1 iff the level-s comparison came
// out "feature > threshold". Bit 0 is the root level; the leaf-array index of
// a code is the plain integer value of `bits`.
struct LeafCode {
  std::uint32_t bits = 0;
  int width = 0;

  bool bit(int level) const { return (bits >> level) & 1u; }
  std::string to_string() const;  // root bit first, e.g. "110"
  static LeafCode from_string(const std::string& s);

  friend bool operator==(const LeafCode&, const LeafCode&) = default;
};

// Partition p(T) of the levels {0..m-1} into groups by distinct feature,
// ordered by first appearance from the root.
struct LevelPartition {
  int depth = 0;
  std::vector<std::uint32_t> group_levels;  // bitmask over levels per group
  std::vector<int> group_feature;           // global feature id per group

  int group_count() const { return static_cast<int>(group_levels.size()); }
};

class ObliviousTree {
 public:
  // `leaf_values` has length 2^(levels.size()); `leaf_probabilities` is either
  // empty (unpopulated) or the same length, zero off the realizable set and
  // summing to 1 over it.
  ObliviousTree(std::vector<SplitLevel> levels, std::vector<double> leaf_values,
                std::vector<double> leaf_probabilities = {});

  int depth() const { return static_cast<int>(levels_.size()); }
  std::uint32_t leaf_count() const { return 1u << depth(); }
  const std::vector<SplitLevel>& levels() const { return levels_; }
  const std::vector<double>& leaf_values() const { return leaf_values_; }
  bool has_probabilities() const { return !leaf_probabilities_.empty(); }
  const std::vector<double>& leaf_probabilities() const;
  const LevelPartition& partition() const { return partition_; }
  int distinct_feature_count() const { return partition_.group_count(); }
  int max_feature() const { return max_feature_; }

  // Realizable codes in ascending integer order.
  const std::vector<std::uint32_t>& realizable() const { return realizable_; }
  bool is_realizable(std::uint32_t code) const { return realizable_index_[code] >= 0; }
  // Index of a code within realizable(), -1 if not realizable.
  int realizable_index(std::uint32_t code) const { return realizable_index_[code]; }

  // Admissible bit patterns per partition group, as full-width masks restricted
  // to the group's level positions. A code is realizable iff its restriction to
  // every group is admissible; the realizable set is the product of these.
  const std::vector<std::vector<std::uint32_t>>& group_patterns() const { return group_patterns_; }

  ObliviousTree with_probabilities(std::vector<double> probs) const;

  // Probability-weighted mean leaf value.
  double expected_value() const;

 private:
  std::vector<SplitLevel> levels_;
  std::vector<double> leaf_values_;
  std::vector<double> leaf_probabilities_;
  LevelPartition partition_;
  std::vector<std::vector<std::uint32_t>> group_patterns_;
  std::vector<std::uint32_t> realizable_;
  std::vector<int> realizable_index_;
  int max_feature_ = 0;
};

LeafCode route_to_leaf(const ObliviousTree& tree, const FeaturePoint& x);
LevelPartition level_partition(const std::vector<SplitLevel>& levels);
std::vector<std::uint32_t> realizable_codes(const ObliviousTree& tree);
std::vector<double> estimate_leaf_probabilities(const ObliviousTree& tree, const Dataset& data);

struct Ensemble {
  std::vector<ObliviousTree> trees;
  double scale = 1.0;
  double bias = 0.0;
  int n_features = 0;

  // prediction = scale * sum of tree outputs + bias
};

void validate_ensemble(const Ensemble& ensemble);
double predict(const Ensemble& ensemble, const FeaturePoint& x);
// Probability-weighted mean prediction of the full ensemble.
double mean_prediction(const Ensemble& ensemble);

// ---------------------------------------------------------------------------
// Generic (not necessarily symmetric) binary decision trees.

struct GenericTreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;  // leaf value (leaves only)
  int left = -1;       // child for "<= threshold"
  int right = -1;      // child for "> threshold"

  bool is_leaf() const { return feature < 0; }
};

class GenericTree {
 public:
  GenericTree() = default;
  explicit GenericTree(std::vector<GenericTreeNode> nodes, int root = 0);

  const std::vector<GenericTreeNode>& nodes() const { return nodes_; }
  int root() const { return root_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  int max_feature() const { return max_feature_; }
  int leaf_at(const FeaturePoint& x) const;  // node index of the reached leaf

 private:
  std::vector<GenericTreeNode> nodes_;
  int root_ = 0;
  int max_feature_ = -1;
};

double predict(const GenericTree& tree, const FeaturePoint& x);

// One cell of the grid completion of the partition cut by a generic tree.
struct GridCell {
  std::uint32_t code = 0;                            // realizable code of obl(T)
  std::vector<std::pair<double, double>> intervals;  // (lo, hi] per distinct feature, group order
  FeaturePoint representative;                       // interior point, width = max feature + 1
};

struct ObliviousizeResult {
  ObliviousTree tree;           // no probabilities attached
  std::vector<GridCell> cells;  // one per realizable code, same order as tree.realizable()
};

// Appendix-F construction: one level per distinct (feature, threshold) split of
// the input tree, ordered lexicographically; computes the identical function.
ObliviousizeResult obliviousize(const GenericTree& tree);

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

}  // namespace oblivion

#endif
