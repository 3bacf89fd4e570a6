// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.

#include <chrono>
#include <cstdio>
#include <cstring>

#include "helpers.hpp"
#include "oblivion/bench.hpp"
#include "oblivion/engine.hpp"
#include "oblivion/oracle.hpp"
#include "oblivion/repro.hpp"

using namespace oblivion;
using namespace testutil;

namespace {

int failures = 0;

void report(int criterion, const char* label, bool pass, const std::string& detail) {
  std::printf("criterion %2d %s  %s (%s)\n", criterion, pass ? "PASS" : "FAIL", label,
              detail.c_str());
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

GameValueSpec restrict_to_tree(const GameValueSpec& spec, const ObliviousTree& tree) {
  if (!spec.is_coalitional()) return spec;
  FeaturePartition induced;
  const int k = tree.distinct_feature_count();
  for (const auto& block : spec.partition.blocks) {
    std::vector<int> b;
    for (int q = 0; q < k; ++q)
      if (std::find(block.begin(), block.end(), tree.partition().group_feature[q]) != block.end())
        b.push_back(q);
    if (!b.empty()) induced.blocks.push_back(std::move(b));
  }
  return GameValueSpec::coalitional(spec.family_outer, spec.family_inner, induced);
}

// 1: engine tables equal brute-force game values for every family.
void criterion_oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  auto rng = rng_for(1001);
  const CoefficientFamily custom = random_pascal_family(rng, 8);
  double worst = 0.0;
  const int n_trees = 200;
  for (int rep = 0; rep < n_trees; ++rep) {
    const ObliviousTree tree = random_tree(rng, 8, 6, 8);
    const int k = tree.distinct_feature_count();
    const std::vector<GameValueSpec> specs = {
        GameValueSpec::shapley(), GameValueSpec::banzhaf(), GameValueSpec::generic(custom),
        GameValueSpec::owen(random_partition(rng, 8))};
    std::vector<TreeAttributionTable> tables;
    std::vector<GameValueSpec> tree_specs;
    for (const auto& spec : specs) {
      tables.push_back(precompute_tree_table(tree, spec));
      tree_specs.push_back(restrict_to_tree(spec, tree));
    }
    for (std::size_t row = 0; row < tables[0].codes.size(); ++row) {
      GameOracle game = closed_form_marginal_game(tree, LeafCode{tables[0].codes[row], tree.depth()});
      for (std::size_t s = 0; s < specs.size(); ++s) {
        const auto reference = brute_force_value(game, tree_specs[s]);
        for (int i = 0; i < k; ++i)
          worst = std::max(worst, rel_err(tables[s].rows[row][i], reference[i]));
      }
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(1, "oracle equivalence across shapley/banzhaf/custom/owen", worst <= 1e-10,
         std::to_string(n_trees) + " trees, max rel err " + fmt(worst) + ", " + fmt(seconds) +
             "s");
}

// 2: the bundled non-invariance contrasts.
void criterion_non_invariance() {
  const auto r = repro::run_non_invariance();
  report(2, "path-dependent game differs across equal trees; marginal does not", r.pass,
         "treeshap " + fmt(r.treeshap_delta_t1) + "/" + fmt(r.treeshap_delta_t2) + ", marginal " +
             fmt(r.marginal_delta_t1));
}

// 3: realizable-set structure and term counts.
void criterion_structure() {
  bool pass = repro::run_repeated_feature().pass;
  std::string detail = "realizable set + leaf row ok";

  auto rng = rng_for(1003);
  // All-distinct trees: exactly 2 * 3^(m-1) expanded terms per feature.
  for (int m = 1; m <= 6 && pass; ++m) {
    std::vector<SplitLevel> levels;
    for (int s = 0; s < m; ++s) levels.push_back({s, uniform(rng, -1, 1)});
    const TermCountAudit audit = term_count_audit(ObliviousTree(levels, std::vector<double>(1u << m, 0.0)));
    std::uint64_t expected = 2;
    for (int i = 1; i < m; ++i) expected *= 3;
    for (int i = 0; i < m; ++i)
      if (audit.per_feature[i] != expected) {
        pass = false;
        detail = "distinct-feature count mismatch at m=" + std::to_string(m);
      }
  }
  // Any tree: per-side count within both bounds.
  for (int rep = 0; rep < 100 && pass; ++rep) {
    const ObliviousTree tree = random_tree(rng, 8, 6, 6, false);
    const TermCountAudit audit = term_count_audit(tree);
    const double crude = std::pow(3.0, tree.depth() - 1);
    for (int i = 0; i < tree.distinct_feature_count(); ++i) {
      const double count = static_cast<double>(audit.per_feature_one_side[i]);
      if (count > audit.bound_per_side * (1 + 1e-12) || count > crude * (1 + 1e-12)) {
        pass = false;
        detail = "bound violated";
      }
    }
  }
  report(3, "realizable codes and per-leaf term counts", pass, detail);
}

// 4: efficiency of the summed attributions.
void criterion_efficiency() {
  auto rng = rng_for(1004);
  Ensemble e;
  e.n_features = 10;
  e.scale = 0.7;
  e.bias = 0.4;
  for (int t = 0; t < 50; ++t) e.trees.push_back(random_tree(rng, 6, 5, 10));
  const AttributionTable tables = precompute_ensemble(e, GameValueSpec::shapley());
  const double mean = mean_prediction(e);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    FeaturePoint x(10);
    for (double& v : x) v = uniform(rng, -3, 3);
    const auto phi = explain(tables, e, x);
    double sum = 0.0;
    for (double p : phi) sum += p;
    worst = std::max(worst, std::fabs(sum - (predict(e, x) - mean)));
  }
  report(4, "attribution sums equal f(x) minus the mean prediction", worst <= 1e-9,
         "50 trees, 1000 explicands, max residual " + fmt(worst));
}

// 5: structural zeros and route-level constancy.
void criterion_null_and_constancy() {
  auto rng = rng_for(1005);
  Ensemble e;
  e.n_features = 10;
  // Features 7 and 9 never appear in any tree.
  for (int t = 0; t < 20; ++t) e.trees.push_back(random_tree(rng, 5, 4, 7));
  const AttributionTable tables = precompute_ensemble(e, GameValueSpec::shapley());
  bool pass = true;
  for (int i = 0; i < 1000 && pass; ++i) {
    FeaturePoint x(10);
    for (double& v : x) v = uniform(rng, -3, 3);
    const auto phi = explain(tables, e, x);
    if (phi[7] != 0.0 || phi[9] != 0.0) pass = false;

    FeaturePoint y = x;
    for (double& v : y) v += 1e-13;
    bool same_route = true;
    for (const auto& tree : e.trees)
      same_route = same_route && route_to_leaf(tree, x).bits == route_to_leaf(tree, y).bits;
    if (same_route) {
      const auto phi_y = explain(tables, e, y);
      if (std::memcmp(phi.data(), phi_y.data(), sizeof(double) * phi.size()) != 0) pass = false;
    }
  }
  report(5, "absent features get exact zeros; equal routes give identical vectors", pass,
         "20 trees over features 0..6 and 8");
}

// 6: block-summed owen values of encoded games recover shapley.
void criterion_onehot() {
  auto rng = rng_for(1006);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    OneHotEncoding enc;
    const int width = uniform_int(rng, 2, 3);
    for (int f = 0; f < width; ++f) {
      if (uniform(rng, 0, 1) < 0.6) {
        OneHotEncoding::Feature feat;
        feat.categorical = true;
        const int arity = uniform_int(rng, 2, 4);
        for (int c = 0; c < arity; ++c) feat.categories.push_back(c);
        enc.features.push_back(feat);
      } else {
        enc.features.push_back({false, {}});
      }
    }
    const ObliviousTree tree = random_tree(rng, 4, 3, enc.encoded_width());
    Model encoded = [&tree](const FeaturePoint& p) {
      return tree.leaf_values()[route_to_leaf(tree, p).bits];
    };
    Dataset d;
    const int n_rows = uniform_int(rng, 4, 16);
    for (int r = 0; r < n_rows; ++r) {
      FeaturePoint row;
      for (const auto& feat : enc.features)
        row.push_back(feat.categorical
                          ? feat.categories[uniform_int(rng, 0, feat.categories.size() - 1)]
                          : uniform(rng, -2, 2));
      d.rows.push_back(row);
    }
    const auto res = onehot_owen_recovery_check(encoded, enc, d, d.rows[0]);
    worst = std::max(worst, res.max_abs_diff);
  }
  report(6, "one-hot owen block sums equal direct shapley", worst <= 1e-12,
         "50 instances, max diff " + fmt(worst));
}

// 7: RMSE scaling against the error bound.
void criterion_error_scaling() {
  const ProductFormTree truth = ProductFormTree::random(5, 3, 1007);
  const auto rows = error_scaling_experiment(truth, {100, 1000, 10000}, 200, 77);
  std::vector<double> lx, ly;
  bool bounded = true;
  for (const auto& r : rows) {
    lx.push_back(std::log10(r.d_size));
    ly.push_back(std::log10(r.rmse_overall));
    bounded = bounded && r.rmse_max <= r.bound;
  }
  const LinearFit fit = linear_fit(lx, ly);
  const bool slope_ok = std::fabs(fit.slope + 0.5) <= 0.15;
  report(7, "estimation error scales like 1/sqrt(|D|) under the bound", slope_ok && bounded,
         "slope " + fmt(fit.slope) + ", bound margin " +
             fmt(rows.back().bound / rows.back().rmse_max));
}

// 8: precompute and lookup complexity shape across depths.
void criterion_complexity_shape() {
  const auto start = std::chrono::steady_clock::now();
  TimingConfig config;
  config.depths = {4, 5, 6, 7, 8, 9, 10, 11, 12};
  config.trees_per_ensemble = 100;
  config.pool_size = 8;
  config.explain_batches = 9;
  config.seed = 1008;
  const auto rows = timing_experiment(config, GameValueSpec::shapley());

  std::vector<double> depth, log2_pre, explain_time;
  for (const auto& r : rows) {
    depth.push_back(r.depth);
    log2_pre.push_back(std::log2(r.precompute_per_tree_seconds));
    explain_time.push_back(r.explain_per_point_seconds);
  }
  const LinearFit pre_fit = linear_fit(depth, log2_pre);
  const LinearFit exp_fit = linear_fit(depth, explain_time);
  const double slope_cap = std::log2(6.0) + 0.3;
  const bool pass = pre_fit.slope <= slope_cap && exp_fit.r_squared >= 0.9;
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(8, "precompute growth and linear lookup time across depths 4..12", pass,
         "log2 slope " + fmt(pre_fit.slope) + " <= " + fmt(slope_cap) + ", explain R^2 " +
             fmt(exp_fit.r_squared) + ", " + fmt(seconds) + "s");
}

// 9: the oblivious rebuild of generic trees.
void criterion_obliviousize() {
  auto rng = rng_for(1009);
  bool exact = true;
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const GenericTree tree = random_generic_tree(rng, uniform_int(rng, 1, 15), 4);
    const ObliviousizeResult obl = obliviousize(tree);
    for (int i = 0; i < 1000; ++i) {
      FeaturePoint x(4);
      for (double& v : x) v = uniform(rng, -3, 3);
      if (predict(tree, x) != obl.tree.leaf_values()[route_to_leaf(obl.tree, x).bits])
        exact = false;
    }

    // Grid-cell probabilities from integer counts; empirical game as oracle.
    Dataset data;
    std::vector<double> probs(obl.tree.leaf_count(), 0.0);
    int total = 0;
    std::vector<int> counts(obl.cells.size());
    for (auto& c : counts) {
      c = uniform_int(rng, 1, 4);
      total += c;
    }
    for (std::size_t ci = 0; ci < obl.cells.size(); ++ci) {
      probs[obl.cells[ci].code] = static_cast<double>(counts[ci]) / total;
      FeaturePoint rep_point = obl.cells[ci].representative;
      rep_point.resize(4, 0.0);
      for (int dup = 0; dup < counts[ci]; ++dup) data.rows.push_back(rep_point);
    }
    const ObliviousTree weighted = obl.tree.with_probabilities(probs);
    const TreeAttributionTable table = precompute_tree_table(weighted, GameValueSpec::shapley());

    Model f = [&tree](const FeaturePoint& p) { return predict(tree, p); };
    for (int trial = 0; trial < 3; ++trial) {
      const std::uint32_t code =
          weighted.realizable()[uniform_int(rng, 0, weighted.realizable().size() - 1)];
      FeaturePoint x = representative_point(weighted, code, 4);
      const auto reference = brute_force_value(empirical_marginal_game(f, data, x),
                                               GameValueSpec::shapley());
      const int row = table.row_index(code);
      for (int q = 0; q < weighted.distinct_feature_count(); ++q) {
        const int global = weighted.partition().group_feature[q];
        worst = std::max(worst, rel_err(table.rows[row][q], reference[global]));
      }
    }
  }
  report(9, "oblivious rebuilds agree pointwise and under shapley", exact && worst <= 1e-10,
         "100 trees, max rel err " + fmt(worst));
}

// 10: exact coefficient identities.
void criterion_coefficients() {
  bool pass = validate_backward_pascal(CoefficientFamily::shapley(), 12) &&
              validate_backward_pascal(CoefficientFamily::banzhaf(), 12);
  for (int n = 1; n <= 10 && pass; ++n)
    for (int w = 0; w < n && pass; ++w)
      for (int z = 0; z <= w && pass; ++z)
        pass = hockey_stick_sum(z, w, n) == hockey_stick_direct(z, w, n);
  report(10, "backward pascal to n=12 and hockey-stick sums to n=10, exact", pass,
         "rational arithmetic");
}

}  // namespace

int main() {
  criterion_oracle_equivalence();
  criterion_non_invariance();
  criterion_structure();
  criterion_efficiency();
  criterion_null_and_constancy();
  criterion_onehot();
  criterion_error_scaling();
  criterion_complexity_shape();
  criterion_obliviousize();
  criterion_coefficients();
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
