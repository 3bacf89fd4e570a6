#ifndef OBLIVION_GAME_VALUES_HPP
#define OBLIVION_GAME_VALUES_HPP

#include <cstdint>
#include <vector>

#include "oblivion/model.hpp"
#include "oblivion/rational.hpp"

namespace oblivion {

// Subsets of players/groups are machine-word bitmasks throughout.
inline constexpr int kMaxPlayers = 60;

inline int popcount(std::uint64_t mask) { return __builtin_popcountll(mask); }

// A coefficient family A = {alpha(s,n)} satisfying the backward Pascal
// identity alpha(s,n) + alpha(s+1,n) = alpha(s,n-1). Shapley and Banzhaf are
// closed forms; custom families are tabulated.
class CoefficientFamily {
 public:
  enum class Kind { Shapley, Banzhaf, Custom };

  CoefficientFamily() = default;
  static CoefficientFamily shapley() { return CoefficientFamily(Kind::Shapley); }
  static CoefficientFamily banzhaf() { return CoefficientFamily(Kind::Banzhaf); }
  // alphas[n-1] holds the row for n players: alpha(0,n) .. alpha(n-1,n).
  static CoefficientFamily custom(std::vector<std::vector<Rational>> alphas);

  Kind kind() const { return kind_; }
  bool is_shapley() const { return kind_ == Kind::Shapley; }
  // Largest n covered; 0 means unlimited (closed form).
  int n_max() const { return static_cast<int>(alphas_.size()); }
  Rational coefficient(int s, int n) const;

 private:
  explicit CoefficientFamily(Kind kind) : kind_(kind) {}
  Kind kind_ = Kind::Shapley;
  std::vector<std::vector<Rational>> alphas_;
};

Rational coefficient(const CoefficientFamily& family, int s, int n);

// Exact table scan of alpha(s,n) + alpha(s+1,n) = alpha(s,n-1) up to n_max.
bool validate_backward_pascal(const CoefficientFamily& family, int n_max);

// Sum of Shapley coefficients over coalitions nested between Z and W
// (|Z| = z, |W| = w, n players): z!(n-w-1)!/(n+z-w)!.
Rational hockey_stick_sum(int z, int w, int n);

enum class OmegaSide { Plus, Minus };

// Collapsed nested-coalition weights of the main per-tree formula.
// Shapley: plus (z-1)!(k-w)!/(k+z-w)!, minus z!(k-w-1)!/(k+z-w)!.
// Banzhaf: 2^(w-z)/2^(k-1) on both sides.
// Generic family: plus alpha(z-1, k+z-w), minus alpha(z, k+z-w).
Rational omega(const CoefficientFamily& family, OmegaSide side, int w, int z, int k);

// ---------------------------------------------------------------------------
// Binary-code combinatorics over a level partition.

// E(e, e2; p): groups on which the two codes agree on every bit.
std::uint64_t match_set(const LeafCode& e, const LeafCode& e2, const LevelPartition& p);

// E^{-1}(e, Q; p) intersected with `candidates`: all codes whose match set
// against e is exactly Q. Pass the realizable set, or all 2^m codes for the
// unrestricted preimage.
std::vector<LeafCode> preimage(const LeafCode& e, std::uint64_t group_subset,
                               const LevelPartition& p,
                               const std::vector<std::uint32_t>& candidates);

// ---------------------------------------------------------------------------
// Partitions of a player set {0..n-1}.

// Blocks of global feature indices; disjoint, nonempty, covering all features.
struct FeaturePartition {
  std::vector<std::vector<int>> blocks;

  static FeaturePartition singletons(int n_features);
  void validate(int n_features) const;
  bool is_singletons() const;
};

// The same partition in bitmask form over a small player universe.
struct MaskPartition {
  int player_count = 0;
  std::vector<std::uint64_t> blocks;

  static MaskPartition from_blocks(int player_count, const std::vector<std::vector<int>>& blocks);
  int block_count() const { return static_cast<int>(blocks.size()); }
  int block_of(int player) const;
};

// Sum of coalitional-value coefficients over coalitions nested between Z and W
// for player i (i in Z: the plus-side weight over Q with Z\{i} <= Q <= W\{i};
// i outside W: the minus-side weight over Z <= Q <= W). Zero when the block
// condition fails; otherwise a product of one alpha1 and one alpha2 term.
Rational owen_nested_weight(const CoefficientFamily& a1, const CoefficientFamily& a2,
                            const MaskPartition& partition, int i, std::uint64_t Z,
                            std::uint64_t W);

enum class IntIncMode { Int, Inc };

// Int(Qcal, Qstar, j): subsets Q with Q & block_j == Qstar whose nonempty
// intersections with other blocks are exactly the blocks in Qcal.
// Inc(Qcal, Qstar, j): same block-j constraint, with Qcal naming exactly the
// other blocks fully contained in Q.
std::vector<std::uint64_t> int_inc_sets(const MaskPartition& partition, int j,
                                        std::uint64_t q_star, std::uint64_t q_cal,
                                        IntIncMode mode);

// ---------------------------------------------------------------------------
// Which attribution to compute.

struct GameValueSpec {
  enum class Variant { Shapley, Banzhaf, Generic, Coalitional };

  Variant variant = Variant::Shapley;
  CoefficientFamily family;        // Generic
  CoefficientFamily family_outer;  // Coalitional: between blocks (A1)
  CoefficientFamily family_inner;  // Coalitional: within the home block (A2)
  FeaturePartition partition;      // Coalitional, over global feature indices

  static GameValueSpec shapley();
  static GameValueSpec banzhaf();
  static GameValueSpec generic(CoefficientFamily f);
  static GameValueSpec owen(FeaturePartition p);
  static GameValueSpec coalitional(CoefficientFamily a1, CoefficientFamily a2,
                                   FeaturePartition p);

  bool is_coalitional() const { return variant == Variant::Coalitional; }
  // Family driving the non-coalitional weights.
  const CoefficientFamily& effective_family() const;
};

}  // namespace oblivion

#endif
