#include "oblivion/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace oblivion {

namespace {

constexpr int kMaxDepth = 24;  // leaf arrays are 2^m; keep them addressable

}  // namespace

std::string LeafCode::to_string() const {
  std::string s(width, '0');
  for (int i = 0; i < width; ++i)
    if (bit(i)) s[i] = '1';
  return s;
}

LeafCode LeafCode::from_string(const std::string& s) {
  if (s.empty() || s.size() > 32)
    throw FormatError("leaf code must have 1..32 bits: '" + s + "'");
  LeafCode code;
  code.width = static_cast<int>(s.size());
  for (int i = 0; i < code.width; ++i) {
    if (s[i] == '1')
      code.bits |= (1u << i);
    else if (s[i] != '0')
      throw FormatError("leaf code must be a binary string: '" + s + "'");
  }
  return code;
}

LevelPartition level_partition(const std::vector<SplitLevel>& levels) {
  if (levels.empty()) throw DomainError("level_partition: tree has no levels");
  LevelPartition p;
  p.depth = static_cast<int>(levels.size());
  std::map<int, int> seen;  // feature -> group index
  for (int s = 0; s < p.depth; ++s) {
    const int f = levels[s].feature;
    auto it = seen.find(f);
    if (it == seen.end()) {
      seen.emplace(f, p.group_count());
      p.group_levels.push_back(1u << s);
      p.group_feature.push_back(f);
    } else {
      p.group_levels[it->second] |= (1u << s);
    }
  }
  return p;
}

namespace {

// Admissible bit patterns of one group: those whose implied interval
// (max exceeded threshold, min non-exceeded threshold] is nonempty.
std::vector<std::uint32_t> admissible_patterns(const std::vector<SplitLevel>& levels,
                                               std::uint32_t group_mask) {
  std::vector<int> group_positions;
  for (int s = 0; s < static_cast<int>(levels.size()); ++s)
    if (group_mask & (1u << s)) group_positions.push_back(s);
  const int r = static_cast<int>(group_positions.size());
  std::vector<std::uint32_t> out;
  for (std::uint32_t pat = 0; pat < (1u << r); ++pat) {
    double lo = kNegInf, hi = kPosInf;
    std::uint32_t mask = 0;
    for (int i = 0; i < r; ++i) {
      const double t = levels[group_positions[i]].threshold;
      if (pat & (1u << i)) {
        lo = std::max(lo, t);
        mask |= (1u << group_positions[i]);
      } else {
        hi = std::min(hi, t);
      }
    }
    if (lo < hi) out.push_back(mask);
  }
  return out;
}

void product_codes(const std::vector<std::vector<std::uint32_t>>& patterns, int q,
                   std::uint32_t acc, std::vector<std::uint32_t>& out) {
  if (q == static_cast<int>(patterns.size())) {
    out.push_back(acc);
    return;
  }
  for (std::uint32_t pat : patterns[q]) product_codes(patterns, q + 1, acc | pat, out);
}

}  // namespace

ObliviousTree::ObliviousTree(std::vector<SplitLevel> levels, std::vector<double> leaf_values,
                             std::vector<double> leaf_probabilities)
    : levels_(std::move(levels)),
      leaf_values_(std::move(leaf_values)),
      leaf_probabilities_(std::move(leaf_probabilities)) {
  if (levels_.empty()) throw ConfigError("oblivious tree needs at least one level");
  if (static_cast<int>(levels_.size()) > kMaxDepth)
    throw CapacityError("tree depth exceeds " + std::to_string(kMaxDepth));
  for (const auto& lv : levels_) {
    if (lv.feature < 0) throw ConfigError("negative feature index in tree level");
    if (!std::isfinite(lv.threshold)) throw ConfigError("non-finite threshold in tree level");
    max_feature_ = std::max(max_feature_, lv.feature);
  }
  if (leaf_values_.size() != static_cast<std::size_t>(leaf_count()))
    throw ConfigError("leaf value array must have length 2^depth");

  partition_ = level_partition(levels_);
  group_patterns_.reserve(partition_.group_count());
  for (std::uint32_t gm : partition_.group_levels)
    group_patterns_.push_back(admissible_patterns(levels_, gm));
  product_codes(group_patterns_, 0, 0, realizable_);
  std::sort(realizable_.begin(), realizable_.end());
  realizable_index_.assign(leaf_count(), -1);
  for (int i = 0; i < static_cast<int>(realizable_.size()); ++i)
    realizable_index_[realizable_[i]] = i;

  if (!leaf_probabilities_.empty()) {
    if (leaf_probabilities_.size() != leaf_values_.size())
      throw ConfigError("leaf probability array must have length 2^depth");
    double total = 0.0;
    for (std::uint32_t c = 0; c < leaf_count(); ++c) {
      const double p = leaf_probabilities_[c];
      if (!(p >= 0.0)) throw ConfigError("leaf probabilities must be nonnegative");
      if (realizable_index_[c] < 0) {
        if (p > 1e-9) throw ConfigError("non-realizable leaf carries probability mass");
        leaf_probabilities_[c] = 0.0;
      } else {
        total += p;
      }
    }
    if (std::fabs(total - 1.0) > 1e-9)
      throw ConfigError("leaf probabilities must sum to 1 over realizable codes");
  }
}

const std::vector<double>& ObliviousTree::leaf_probabilities() const {
  if (leaf_probabilities_.empty())
    throw ConfigError("leaf probabilities have not been populated");
  return leaf_probabilities_;
}

ObliviousTree ObliviousTree::with_probabilities(std::vector<double> probs) const {
  return ObliviousTree(levels_, leaf_values_, std::move(probs));
}

double ObliviousTree::expected_value() const {
  const auto& p = leaf_probabilities();
  double e = 0.0;
  for (std::uint32_t c : realizable_) e += leaf_values_[c] * p[c];
  return e;
}

LeafCode route_to_leaf(const ObliviousTree& tree, const FeaturePoint& x) {
  if (static_cast<int>(x.size()) <= tree.max_feature())
    throw InputShapeError("explicand is narrower than the tree's feature indices");
  LeafCode code;
  code.width = tree.depth();
  for (int s = 0; s < tree.depth(); ++s) {
    const auto& lv = tree.levels()[s];
    // Ties route to the "<=" branch.
    if (x[lv.feature] > lv.threshold) code.bits |= (1u << s);
  }
  return code;
}

std::vector<std::uint32_t> realizable_codes(const ObliviousTree& tree) { return tree.realizable(); }

std::vector<double> estimate_leaf_probabilities(const ObliviousTree& tree, const Dataset& data) {
  if (data.rows.empty()) throw ConfigError("cannot estimate probabilities from an empty dataset");
  std::vector<double> counts(tree.leaf_count(), 0.0);
  for (const auto& row : data.rows) counts[route_to_leaf(tree, row).bits] += 1.0;
  const double n = static_cast<double>(data.rows.size());
  for (double& c : counts) c /= n;
  return counts;
}

void validate_ensemble(const Ensemble& ensemble) {
  if (ensemble.scale == 0.0) throw ConfigError("ensemble scale must be nonzero");
  if (ensemble.n_features <= 0) throw ConfigError("ensemble feature count must be positive");
  for (const auto& t : ensemble.trees)
    if (t.max_feature() >= ensemble.n_features)
      throw ConfigError("tree splits on a feature index beyond the ensemble width");
}

double predict(const Ensemble& ensemble, const FeaturePoint& x) {
  if (static_cast<int>(x.size()) != ensemble.n_features)
    throw InputShapeError("explicand width does not match the ensemble feature count");
  double sum = 0.0;
  for (const auto& tree : ensemble.trees) sum += tree.leaf_values()[route_to_leaf(tree, x).bits];
  return ensemble.scale * sum + ensemble.bias;
}

double mean_prediction(const Ensemble& ensemble) {
  double sum = 0.0;
  for (const auto& tree : ensemble.trees) sum += tree.expected_value();
  return ensemble.scale * sum + ensemble.bias;
}

GenericTree::GenericTree(std::vector<GenericTreeNode> nodes, int root)
    : nodes_(std::move(nodes)), root_(root) {
  if (nodes_.empty()) throw ConfigError("generic tree has no nodes");
  if (root_ < 0 || root_ >= node_count()) throw ConfigError("generic tree root out of range");
  // Reachability walk doubles as a cycle/arity check.
  std::vector<int> stack = {root_};
  std::vector<char> seen(nodes_.size(), 0);
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    if (idx < 0 || idx >= node_count()) throw ConfigError("generic tree child index out of range");
    if (seen[idx]) throw ConfigError("generic tree node reachable twice (not a tree)");
    seen[idx] = 1;
    const auto& node = nodes_[idx];
    if (node.is_leaf()) continue;
    if (node.left < 0 || node.right < 0)
      throw ConfigError("internal node must have exactly two children");
    max_feature_ = std::max(max_feature_, node.feature);
    stack.push_back(node.left);
    stack.push_back(node.right);
  }
}

int GenericTree::leaf_at(const FeaturePoint& x) const {
  int idx = root_;
  while (!nodes_[idx].is_leaf()) {
    const auto& node = nodes_[idx];
    if (node.feature >= static_cast<int>(x.size()))
      throw InputShapeError("explicand is narrower than the tree's feature indices");
    idx = x[node.feature] > node.threshold ? node.right : node.left;
  }
  return idx;
}

double predict(const GenericTree& tree, const FeaturePoint& x) {
  return tree.nodes()[tree.leaf_at(x)].value;
}

ObliviousizeResult obliviousize(const GenericTree& tree) {
  std::set<std::pair<int, double>> splits;
  for (const auto& node : tree.nodes())
    if (!node.is_leaf()) splits.emplace(node.feature, node.threshold);
  if (splits.empty()) throw ConfigError("obliviousize needs at least one internal node");

  std::vector<SplitLevel> levels;
  levels.reserve(splits.size());
  for (const auto& [f, t] : splits) levels.push_back({f, t});  // lexicographic by (feature, threshold)

  // Build the realizable structure first with placeholder values, then fill
  // each realizable leaf with the source tree evaluated inside its cell.
  ObliviousTree skeleton(levels, std::vector<double>(1u << levels.size(), 0.0));
  const auto& part = skeleton.partition();
  const int width = std::max(tree.max_feature(), skeleton.max_feature()) + 1;

  std::vector<double> values(skeleton.leaf_count(), 0.0);
  std::vector<GridCell> cells;
  cells.reserve(skeleton.realizable().size());
  for (std::uint32_t code : skeleton.realizable()) {
    GridCell cell;
    cell.code = code;
    cell.representative.assign(width, 0.0);
    for (int q = 0; q < part.group_count(); ++q) {
      double lo = kNegInf, hi = kPosInf;
      for (int s = 0; s < skeleton.depth(); ++s) {
        if (!(part.group_levels[q] & (1u << s))) continue;
        const double t = levels[s].threshold;
        if (code & (1u << s))
          lo = std::max(lo, t);
        else
          hi = std::min(hi, t);
      }
      cell.intervals.emplace_back(lo, hi);
      double rep;
      if (lo == kNegInf && hi == kPosInf)
        rep = 0.0;
      else if (lo == kNegInf)
        rep = hi - 1.0;
      else if (hi == kPosInf)
        rep = lo + 1.0;
      else
        rep = 0.5 * (lo + hi);
      cell.representative[part.group_feature[q]] = rep;
    }
    values[code] = predict(tree, cell.representative);
    cells.push_back(std::move(cell));
  }

  return ObliviousizeResult{ObliviousTree(levels, std::move(values)), std::move(cells)};
}

}  // namespace oblivion
