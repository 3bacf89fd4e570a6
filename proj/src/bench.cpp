#include "oblivion/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "oblivion/engine.hpp"

namespace oblivion {

namespace {

double median(std::vector<double> xs) {
  if (xs.empty()) throw DomainError("median of an empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t mid = xs.size() / 2;
  return xs.size() % 2 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

SynthSpec SynthSpec::random(int n, double noise_sd, std::uint64_t seed) {
  SynthSpec spec;
  spec.n = n;
  spec.noise_sd = noise_sd;
  spec.seed = seed;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  for (int i = 0; i < n; ++i) spec.a.push_back(uniform(rng, 1.0, 5.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) spec.b.push_back(uniform(rng, -0.5, 0.5));
  return spec;
}

double SynthSpec::pair_coefficient(int i, int j) const {
  if (!(0 <= i && i < j && j < n)) throw DomainError("pair_coefficient requires 0 <= i < j < n");
  // offset of (i,j) in the row-major upper triangle
  const int offset = i * n - i * (i + 1) / 2 + (j - i - 1);
  return b[offset];
}

SynthData synth_dataset(const SynthSpec& spec, int rows) {
  if (rows < 1) throw DomainError("synth_dataset needs at least one row");
  if (static_cast<int>(spec.a.size()) != spec.n ||
      static_cast<int>(spec.b.size()) != spec.n * (spec.n - 1) / 2)
    throw ConfigError("synth spec coefficient arrays do not match n");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SynthData out;
  out.inputs.rows.reserve(rows);
  out.targets.reserve(rows);
  for (int r = 0; r < rows; ++r) {
    FeaturePoint x(spec.n);
    for (double& v : x) v = gauss(rng);
    double y = 0.0;
    for (int i = 0; i < spec.n; ++i) y += spec.a[i] * x[i];
    int idx = 0;
    for (int i = 0; i < spec.n; ++i)
      for (int j = i + 1; j < spec.n; ++j) y += spec.b[idx++] * x[i] * x[j];
    if (spec.noise_sd > 0) y += spec.noise_sd * gauss(rng);
    out.inputs.rows.push_back(std::move(x));
    out.targets.push_back(y);
  }
  return out;
}

Ensemble random_synthetic_ensemble(int depth, int n_trees, int n_features, int pool_size,
                                   const Dataset& probability_rows, std::uint64_t seed) {
  if (probability_rows.rows.empty())
    throw ConfigError("synthetic ensemble needs rows to estimate probabilities");
  if (probability_rows.width() < n_features)
    throw InputShapeError("probability rows narrower than the feature count");
  pool_size = std::min(pool_size, n_features);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Ensemble ensemble;
  ensemble.n_features = n_features;
  for (int t = 0; t < n_trees; ++t) {
    std::vector<int> pool(n_features);
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(pool_size);

    std::vector<SplitLevel> levels;
    for (int s = 0; s < depth; ++s) {
      SplitLevel lvl;
      lvl.feature = pool[std::uniform_int_distribution<int>(0, pool_size - 1)(rng)];
      lvl.threshold = gauss(rng);
      levels.push_back(lvl);
    }
    ObliviousTree skeleton(levels, std::vector<double>(1u << depth, 0.0));
    std::vector<double> values(skeleton.leaf_count());
    for (double& v : values) v = uniform(rng, -1.0, 1.0);
    ObliviousTree valued(levels, std::move(values));
    ensemble.trees.push_back(
        valued.with_probabilities(estimate_leaf_probabilities(valued, probability_rows)));
  }
  return ensemble;
}

GiniBound gini_and_bound(const ObliviousTree& tree, int n_trees_with_feature, int d_size) {
  const auto& probs = tree.leaf_probabilities();
  GiniBound out;
  for (std::uint32_t c : tree.realizable()) out.gini += probs[c] * probs[c];
  const double m = tree.depth();
  const double k = tree.distinct_feature_count();
  const double shape = 1.5 / k * std::pow(1.0 + m / k, k);
  out.c_constant = 4.0 * n_trees_with_feature * std::pow(out.gini, 0.25) * std::pow(shape, 0.25);
  double value_norm_sq = 0.0;
  for (std::uint32_t c : tree.realizable())
    value_norm_sq += tree.leaf_values()[c] * tree.leaf_values()[c];
  out.rhs_bound = out.c_constant / std::sqrt(static_cast<double>(d_size)) *
                  std::sqrt(value_norm_sq);
  return out;
}

ProductFormTree::ProductFormTree(ObliviousTree tree, std::vector<std::vector<double>> pattern_probs,
                                 std::vector<std::vector<double>> pattern_reps)
    : tree_(std::move(tree)),
      pattern_probs_(std::move(pattern_probs)),
      pattern_reps_(std::move(pattern_reps)) {}

ProductFormTree ProductFormTree::random(int depth, int k, std::uint64_t seed) {
  if (k < 1 || k > depth) throw DomainError("ProductFormTree needs 1 <= k <= depth");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Features 0..k-1; the first k levels make every feature appear.
  std::vector<SplitLevel> levels(depth);
  for (int s = 0; s < depth; ++s)
    levels[s].feature = s < k ? s : std::uniform_int_distribution<int>(0, k - 1)(rng);
  std::vector<std::vector<double>> thresholds(k);
  for (int s = 0; s < depth; ++s) {
    double t;
    do {
      t = gauss(rng);
    } while (std::find(thresholds[levels[s].feature].begin(), thresholds[levels[s].feature].end(),
                       t) != thresholds[levels[s].feature].end());
    thresholds[levels[s].feature].push_back(t);
    levels[s].threshold = t;
  }

  ObliviousTree skeleton(levels, std::vector<double>(1u << depth, 0.0));
  const auto& part = skeleton.partition();
  const auto& pats = skeleton.group_patterns();

  std::vector<std::vector<double>> pattern_probs(part.group_count());
  std::vector<std::vector<double>> pattern_reps(part.group_count());
  for (int q = 0; q < part.group_count(); ++q) {
    double total = 0.0;
    for (std::size_t i = 0; i < pats[q].size(); ++i) {
      const double w = uniform(rng, 0.05, 1.0);
      pattern_probs[q].push_back(w);
      total += w;
    }
    for (double& p : pattern_probs[q]) p /= total;
    for (std::uint32_t pat : pats[q]) {
      double lo = kNegInf, hi = kPosInf;
      for (int s = 0; s < depth; ++s) {
        if (!(part.group_levels[q] & (1u << s))) continue;
        if (pat & (1u << s))
          lo = std::max(lo, levels[s].threshold);
        else
          hi = std::min(hi, levels[s].threshold);
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
      pattern_reps[q].push_back(rep);
    }
  }

  std::vector<double> probs(skeleton.leaf_count(), 0.0);
  for (std::uint32_t code : skeleton.realizable()) {
    double p = 1.0;
    for (int q = 0; q < part.group_count(); ++q) {
      const std::uint32_t pat = code & part.group_levels[q];
      const auto it = std::find(pats[q].begin(), pats[q].end(), pat);
      p *= pattern_probs[q][it - pats[q].begin()];
    }
    probs[code] = p;
  }
  // Normalize away accumulated rounding so the tree validates.
  double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= total;

  std::vector<double> values(skeleton.leaf_count(), 0.0);
  for (std::uint32_t code : skeleton.realizable()) values[code] = uniform(rng, -2.0, 2.0);

  return ProductFormTree(ObliviousTree(levels, std::move(values), std::move(probs)),
                         std::move(pattern_probs), std::move(pattern_reps));
}

FeaturePoint ProductFormTree::sample(std::mt19937_64& rng) const {
  const auto& part = tree_.partition();
  FeaturePoint x(tree_.max_feature() + 1, 0.0);
  for (int q = 0; q < part.group_count(); ++q) {
    const double u = uniform(rng, 0.0, 1.0);
    double acc = 0.0;
    std::size_t pick = pattern_probs_[q].size() - 1;
    for (std::size_t i = 0; i < pattern_probs_[q].size(); ++i) {
      acc += pattern_probs_[q][i];
      if (u <= acc) {
        pick = i;
        break;
      }
    }
    x[part.group_feature[q]] = pattern_reps_[q][pick];
  }
  return x;
}

Dataset ProductFormTree::sample_dataset(int rows, std::mt19937_64& rng) const {
  Dataset d;
  d.rows.reserve(rows);
  for (int r = 0; r < rows; ++r) d.rows.push_back(sample(rng));
  return d;
}

std::vector<ErrorScalingRow> error_scaling_experiment(const ProductFormTree& truth,
                                                      const std::vector<int>& d_sizes,
                                                      int repeats, std::uint64_t seed) {
  const GameValueSpec spec = GameValueSpec::shapley();
  const TreeAttributionTable exact = precompute_tree_table(truth.tree(), spec);
  const int k = truth.tree().distinct_feature_count();
  const std::size_t cells = exact.rows.size() * k;

  std::mt19937_64 rng(seed);
  std::vector<ErrorScalingRow> out;
  for (int d : d_sizes) {
    std::vector<double> sq(cells, 0.0);
    for (int rep = 0; rep < repeats; ++rep) {
      const Dataset data = truth.sample_dataset(d, rng);
      const ObliviousTree estimated =
          truth.tree().with_probabilities(estimate_leaf_probabilities(truth.tree(), data));
      const TreeAttributionTable table = precompute_tree_table(estimated, spec);
      for (std::size_t row = 0; row < table.rows.size(); ++row)
        for (int i = 0; i < k; ++i) {
          const double diff = table.rows[row][i] - exact.rows[row][i];
          sq[row * k + i] += diff * diff;
        }
    }
    ErrorScalingRow r;
    r.d_size = d;
    double total = 0.0, worst = 0.0;
    for (double s : sq) {
      total += s;
      worst = std::max(worst, s);
    }
    r.rmse_overall = std::sqrt(total / (static_cast<double>(cells) * repeats));
    r.rmse_max = std::sqrt(worst / repeats);
    r.bound = gini_and_bound(truth.tree(), 1, d).rhs_bound;
    out.push_back(r);
  }
  return out;
}

std::vector<TimingRow> timing_experiment(const TimingConfig& config, const GameValueSpec& spec) {
  using Clock = std::chrono::steady_clock;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset prob_rows;
  prob_rows.rows.reserve(config.probability_rows);
  for (int r = 0; r < config.probability_rows; ++r) {
    FeaturePoint x(config.n_features);
    for (double& v : x) v = gauss(rng);
    prob_rows.rows.push_back(std::move(x));
  }

  std::vector<TimingRow> out;
  for (int depth : config.depths) {
    const Ensemble ensemble =
        random_synthetic_ensemble(depth, config.trees_per_ensemble, config.n_features,
                                  std::min(config.pool_size, depth), prob_rows,
                                  config.seed + depth);

    AttributionTable tables;
    tables.spec = spec;
    std::vector<double> per_tree_seconds;
    per_tree_seconds.reserve(ensemble.trees.size());
    for (const auto& tree : ensemble.trees) {
      const auto t0 = Clock::now();
      tables.trees.push_back(precompute_tree_table(tree, spec, ensemble.scale));
      const auto t1 = Clock::now();
      per_tree_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    }

    std::vector<FeaturePoint> points(config.explain_points);
    for (auto& x : points) {
      x.resize(config.n_features);
      for (double& v : x) v = gauss(rng);
    }
    std::vector<double> per_point_seconds;
    volatile double sink = 0.0;
    // Untimed warm-up pass; timed batches then run against warm caches.
    for (const auto& x : points) sink = sink + explain(tables, ensemble, x)[0];
    for (int b = 0; b < config.explain_batches; ++b) {
      const auto t0 = Clock::now();
      for (const auto& x : points) {
        const auto phi = explain(tables, ensemble, x);
        sink = sink + phi[0];
      }
      const auto t1 = Clock::now();
      per_point_seconds.push_back(std::chrono::duration<double>(t1 - t0).count() /
                                  points.size());
    }

    TimingRow row;
    row.depth = depth;
    row.precompute_per_tree_seconds = median(per_tree_seconds);
    row.explain_per_point_seconds = median(per_point_seconds);
    out.push_back(row);
  }
  return out;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("linear_fit needs matched samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("linear_fit needs varying x");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace oblivion
