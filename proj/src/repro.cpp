#include "oblivion/repro.hpp"

#include <cmath>

#include "oblivion/engine.hpp"
#include "oblivion/oracle.hpp"

namespace oblivion::repro {

namespace {

constexpr double kC1 = 2.03, kC2 = 1.0, kC3 = 2.0;

// Two-player feature contrast phi_1 - phi_2, which collapses to
// v({1}) - v({2}).
double phi_contrast(const GameOracle& game) {
  const auto phi = brute_force_value(game, GameValueSpec::shapley());
  return phi[0] - phi[1];
}

}  // namespace

ObliviousTree repeated_feature_tree() {
  const std::vector<SplitLevel> levels = {{0, 1.0}, {1, 1.0}, {0, 2.0}};
  std::vector<double> values(8, 0.0), probs(8, 0.0);
  const std::vector<std::pair<const char*, double>> assignments = {
      {"000", 0.0}, {"010", 1.0}, {"100", 2.0}, {"110", 4.0}, {"101", 4.0}, {"111", 5.0}};
  for (const auto& [code, v] : assignments) {
    const std::uint32_t idx = LeafCode::from_string(code).bits;
    values[idx] = v;
    probs[idx] = 1.0 / 6.0;
  }
  return ObliviousTree(levels, std::move(values), std::move(probs));
}

GenericTree non_invariance_tree_one() {
  // Root on x1; its upper half splits on x0.
  std::vector<GenericTreeNode> nodes(5);
  nodes[0] = {1, 0.0, 0.0, 1, 2};
  nodes[1] = {-1, 0.0, kC1, -1, -1};
  nodes[2] = {0, 0.0, 0.0, 3, 4};
  nodes[3] = {-1, 0.0, kC2, -1, -1};
  nodes[4] = {-1, 0.0, kC3, -1, -1};
  return GenericTree(std::move(nodes));
}

GenericTree non_invariance_tree_two() {
  // Root on x0; both halves split on x1, the lower leaves sharing one value.
  std::vector<GenericTreeNode> nodes(7);
  nodes[0] = {0, 0.0, 0.0, 1, 2};
  nodes[1] = {1, 0.0, 0.0, 3, 4};
  nodes[2] = {1, 0.0, 0.0, 5, 6};
  nodes[3] = {-1, 0.0, kC1, -1, -1};
  nodes[4] = {-1, 0.0, kC2, -1, -1};
  nodes[5] = {-1, 0.0, kC1, -1, -1};
  nodes[6] = {-1, 0.0, kC3, -1, -1};
  return GenericTree(std::move(nodes));
}

Dataset non_invariance_dataset() {
  Dataset d;
  auto add = [&d](double x0, double x1, int copies) {
    for (int i = 0; i < copies; ++i) d.rows.push_back({x0, x1});
  };
  add(-0.5, -0.5, 33);  // lower-left cell
  add(0.5, -0.5, 1);    // lower-right cell
  add(-0.5, 0.5, 27);   // upper-left cell
  add(0.5, 0.5, 39);    // upper-right cell
  return d;
}

NonInvarianceResult run_non_invariance() {
  const GenericTree t1 = non_invariance_tree_one();
  const GenericTree t2 = non_invariance_tree_two();
  const Dataset data = non_invariance_dataset();
  const FeaturePoint x = {-0.5, 0.5};

  NonInvarianceResult r;
  r.treeshap_delta_t1 =
      phi_contrast(path_dependent_game(t1, node_masses_from_dataset(t1, data), x, 2));
  r.treeshap_delta_t2 =
      phi_contrast(path_dependent_game(t2, node_masses_from_dataset(t2, data), x, 2));

  Model f1 = [&t1](const FeaturePoint& p) { return predict(t1, p); };
  Model f2 = [&t2](const FeaturePoint& p) { return predict(t2, p); };
  r.marginal_delta_t1 = phi_contrast(empirical_marginal_game(f1, data, x));
  r.marginal_delta_t2 = phi_contrast(empirical_marginal_game(f2, data, x));

  const double tol = 1e-4;
  r.pass = std::fabs(r.treeshap_delta_t1 - (-0.24071)) <= tol &&
           std::fabs(r.treeshap_delta_t2 - 0.1665) <= tol &&
           std::fabs(r.marginal_delta_t1 - (-0.0498)) <= tol &&
           std::fabs(r.marginal_delta_t2 - (-0.0498)) <= tol &&
           r.treeshap_delta_t1 < 0.0 && r.treeshap_delta_t2 > 0.0 &&
           std::fabs(r.marginal_delta_t1 - r.marginal_delta_t2) <= 1e-12;
  return r;
}

RepeatedFeatureResult run_repeated_feature() {
  const ObliviousTree tree = repeated_feature_tree();
  RepeatedFeatureResult r;
  r.realizable = tree.realizable();

  const TreeAttributionTable shapley = precompute_tree_table(tree, GameValueSpec::shapley());
  const TreeAttributionTable banzhaf = precompute_tree_table(tree, GameValueSpec::banzhaf());
  const std::uint32_t leaf = LeafCode::from_string("110").bits;
  const int idx = shapley.row_index(leaf);
  r.phi_x1 = shapley.rows[idx][0];
  r.phi_x2 = shapley.rows[idx][1];
  r.phi_x1_banzhaf = banzhaf.rows[idx][0];

  // Independent route: the expansion written out term by term for leaf 110.
  const auto& c = tree.leaf_values();
  const auto& p = tree.leaf_probabilities();
  auto at = [](const char* s) { return LeafCode::from_string(s).bits; };
  const double a1 = 0.5 * c[at("100")] * (p[at("000")] + p[at("101")]) +
                    0.5 * c[at("110")] * (p[at("000")] + p[at("101")]) +
                    c[at("110")] * (p[at("010")] + p[at("111")]);
  const double a2 = 0.5 * (c[at("000")] * p[at("000")] + c[at("101")] * p[at("101")]) +
                    0.5 * (c[at("010")] * p[at("000")] + c[at("111")] * p[at("101")]) +
                    (c[at("010")] * p[at("010")] + c[at("111")] * p[at("111")]);
  r.hand_expansion = a1 - a2;

  // Depth-3 tree on three distinct features: 2*3^(m-1) terms per feature.
  const ObliviousTree distinct({{0, 0.5}, {1, -0.25}, {2, 1.5}}, std::vector<double>(8, 0.0));
  const TermCountAudit audit = term_count_audit(distinct);
  r.distinct_tree_terms = audit.per_feature[0];

  const double tol = 1e-10;
  bool terms_uniform = true;
  for (const auto t : audit.per_feature) terms_uniform = terms_uniform && t == audit.per_feature[0];
  r.pass = r.realizable == std::vector<std::uint32_t>{0, 1, 2, 3, 5, 7} &&
           std::fabs(r.phi_x1 - 0.5) <= tol && std::fabs(r.phi_x2 - 5.0 / 6.0) <= tol &&
           std::fabs(r.phi_x1_banzhaf - r.phi_x1) <= tol &&
           std::fabs(r.hand_expansion - r.phi_x1) <= tol && r.distinct_tree_terms == 18 &&
           terms_uniform;
  return r;
}

EjectResult run_eject() {
  const double c1 = 1.0, c2 = 2.0, c3 = -1.0;
  // Same four quadrant cells, opposite level order.
  std::vector<GenericTreeNode> n1(7), n2(7);
  n1[0] = {0, 0.0, 0.0, 1, 2};
  n1[1] = {1, 0.0, 0.0, 3, 4};
  n1[2] = {1, 0.0, 0.0, 5, 6};
  n1[3] = {-1, 0.0, c1, -1, -1};
  n1[4] = {-1, 0.0, c2, -1, -1};
  n1[5] = {-1, 0.0, c3, -1, -1};
  n1[6] = {-1, 0.0, c1, -1, -1};
  n2[0] = {1, 0.0, 0.0, 1, 2};
  n2[1] = {0, 0.0, 0.0, 3, 4};
  n2[2] = {0, 0.0, 0.0, 5, 6};
  n2[3] = {-1, 0.0, c1, -1, -1};
  n2[4] = {-1, 0.0, c3, -1, -1};
  n2[5] = {-1, 0.0, c2, -1, -1};
  n2[6] = {-1, 0.0, c1, -1, -1};
  const GenericTree t1(std::move(n1)), t2(std::move(n2));

  auto quarter_masses = [](const GenericTree& t) {
    std::vector<double> leaf_mass(t.node_count(), 0.0);
    for (int i = 0; i < t.node_count(); ++i)
      if (t.nodes()[i].is_leaf()) leaf_mass[i] = 0.25;
    return node_masses_from_leaf_probabilities(t, leaf_mass);
  };

  const FeaturePoint x = {-0.5, 0.5};  // upper-left quadrant
  GameOracle g1 = eject_game(t1, quarter_masses(t1), x, 2);
  GameOracle g2 = eject_game(t2, quarter_masses(t2), x, 2);

  EjectResult r;
  r.v1_t1 = g1.value(0b01);
  r.v1_t2 = g2.value(0b01);
  r.delta_t1 = phi_contrast(g1);
  r.delta_t2 = phi_contrast(g2);

  const double tol = 1e-12;
  r.pass = std::fabs(r.v1_t1 - 0.5 * (c1 + c2)) <= tol &&
           std::fabs(r.v1_t2 - 0.25 * (2 * c1 + c2 + c3)) <= tol &&
           std::fabs(r.delta_t1 - 0.25 * (c2 - c3)) <= tol &&
           std::fabs(r.delta_t2 + 0.25 * (c2 - c3)) <= tol && r.delta_t1 * r.delta_t2 < 0.0;
  return r;
}

}  // namespace oblivion::repro
