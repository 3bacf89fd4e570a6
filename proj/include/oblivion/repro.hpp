#ifndef OBLIVION_REPRO_HPP
#define OBLIVION_REPRO_HPP

#include <cstdint>
#include <vector>

#include "oblivion/model.hpp"

namespace oblivion::repro {

// Bundled reference scenarios with known closed-form outcomes, exposed both
// to the CLI `repro` subcommand and to the test suites.

// Two functionally identical two-feature trees whose path-dependent games
// rank the features differently, while the marginal game cannot tell the
// trees apart. Deltas are 2*(phi_1 - phi_2) on the upper-left cell.
struct NonInvarianceResult {
  double treeshap_delta_t1 = 0.0;  // expected -0.24071
  double treeshap_delta_t2 = 0.0;  // expected +0.1665
  double marginal_delta_t1 = 0.0;  // expected -0.0498
  double marginal_delta_t2 = 0.0;  // expected -0.0498
  bool pass = false;
};
NonInvarianceResult run_non_invariance();

// Depth-3 tree splitting twice on one feature: realizable set of size six,
// a hand-expanded attribution at one leaf, and the term-count identity
// 2*3^(m-1) for trees with all-distinct features.
struct RepeatedFeatureResult {
  std::vector<std::uint32_t> realizable;  // expected {0,1,2,3,5,7}
  double phi_x1 = 0.0;                    // expected 0.5
  double phi_x2 = 0.0;                    // expected 5/6
  double phi_x1_banzhaf = 0.0;            // expected 0.5 (two players)
  double hand_expansion = 0.0;            // independent A1 - A2 route
  std::uint64_t distinct_tree_terms = 0;  // expected 2*3^(m-1) for m = 3
  bool pass = false;
};
RepeatedFeatureResult run_repeated_feature();

// The eject-variant game on two trees that differ only in level order:
// the feature contrast flips sign between the trees.
struct EjectResult {
  double v1_t1 = 0.0;     // expected (c1+c2)/2
  double v1_t2 = 0.0;     // expected (2c1+c2+c3)/4
  double delta_t1 = 0.0;  // expected (c2-c3)/4 for phi contrast *2
  double delta_t2 = 0.0;  // expected -(c2-c3)/4
  bool pass = false;
};
EjectResult run_eject();

// Fixtures shared with the tests.
ObliviousTree repeated_feature_tree();        // levels (x0,1),(x1,1),(x0,2), uniform cells
GenericTree non_invariance_tree_one();        // root split on x1
GenericTree non_invariance_tree_two();        // root split on x0
Dataset non_invariance_dataset();             // 100 rows with fixed cell masses

}  // namespace oblivion::repro

#endif
