#include "oblivion/game_values.hpp"

#include <algorithm>

namespace oblivion {

CoefficientFamily CoefficientFamily::custom(std::vector<std::vector<Rational>> alphas) {
  CoefficientFamily f(Kind::Custom);
  for (std::size_t n = 1; n <= alphas.size(); ++n)
    if (alphas[n - 1].size() != n)
      throw ConfigError("custom family row " + std::to_string(n) + " must have " +
                        std::to_string(n) + " entries");
  f.alphas_ = std::move(alphas);
  return f;
}

Rational CoefficientFamily::coefficient(int s, int n) const {
  if (s < 0 || s >= n) throw DomainError("coefficient requires 0 <= s < n");
  switch (kind_) {
    case Kind::Shapley:
      return Rational(factorial(s) * factorial(n - s - 1), factorial(n));
    case Kind::Banzhaf:
      return Rational(1, BigInt(1) << (n - 1));
    case Kind::Custom:
      if (n > n_max()) throw DomainError("custom family not tabulated up to n=" + std::to_string(n));
      return alphas_[n - 1][s];
  }
  throw DomainError("unreachable");
}

Rational coefficient(const CoefficientFamily& family, int s, int n) {
  return family.coefficient(s, n);
}

bool validate_backward_pascal(const CoefficientFamily& family, int n_max) {
  if (family.kind() == CoefficientFamily::Kind::Custom) n_max = std::min(n_max, family.n_max());
  for (int n = 2; n <= n_max; ++n)
    for (int s = 0; s + 1 < n; ++s)
      if (family.coefficient(s, n) + family.coefficient(s + 1, n) != family.coefficient(s, n - 1))
        return false;
  return true;
}

Rational hockey_stick_sum(int z, int w, int n) {
  if (!(0 <= z && z <= w && w < n)) throw DomainError("hockey_stick_sum requires 0 <= z <= w < n");
  return Rational(factorial(z) * factorial(n - w - 1), factorial(n + z - w));
}

Rational omega(const CoefficientFamily& family, OmegaSide side, int w, int z, int k) {
  if (side == OmegaSide::Plus) {
    if (!(1 <= z && z <= w && w <= k)) throw DomainError("omega plus requires 1 <= z <= w <= k");
  } else {
    if (!(0 <= z && z <= w && w <= k - 1))
      throw DomainError("omega minus requires 0 <= z <= w <= k-1");
  }
  switch (family.kind()) {
    case CoefficientFamily::Kind::Shapley:
      return side == OmegaSide::Plus
                 ? Rational(factorial(z - 1) * factorial(k - w), factorial(k + z - w))
                 : Rational(factorial(z) * factorial(k - w - 1), factorial(k + z - w));
    case CoefficientFamily::Kind::Banzhaf:
      return Rational(BigInt(1) << (w - z), BigInt(1) << (k - 1));
    case CoefficientFamily::Kind::Custom:
      return side == OmegaSide::Plus ? family.coefficient(z - 1, k + z - w)
                                     : family.coefficient(z, k + z - w);
  }
  throw DomainError("unreachable");
}

std::uint64_t match_set(const LeafCode& e, const LeafCode& e2, const LevelPartition& p) {
  if (e.width != p.depth || e2.width != p.depth)
    throw InputShapeError("leaf code width does not match the partition depth");
  const std::uint32_t diff = e.bits ^ e2.bits;
  std::uint64_t q = 0;
  for (int g = 0; g < p.group_count(); ++g)
    if ((diff & p.group_levels[g]) == 0) q |= (1ull << g);
  return q;
}

std::vector<LeafCode> preimage(const LeafCode& e, std::uint64_t group_subset,
                               const LevelPartition& p,
                               const std::vector<std::uint32_t>& candidates) {
  std::vector<LeafCode> out;
  for (std::uint32_t bits : candidates) {
    LeafCode cand{bits, p.depth};
    if (match_set(e, cand, p) == group_subset) out.push_back(cand);
  }
  return out;
}

FeaturePartition FeaturePartition::singletons(int n_features) {
  FeaturePartition p;
  p.blocks.reserve(n_features);
  for (int i = 0; i < n_features; ++i) p.blocks.push_back({i});
  return p;
}

void FeaturePartition::validate(int n_features) const {
  std::vector<char> seen(n_features, 0);
  for (const auto& block : blocks) {
    if (block.empty()) throw ConfigError("feature partition contains an empty block");
    for (int f : block) {
      if (f < 0 || f >= n_features) throw ConfigError("feature partition index out of range");
      if (seen[f]) throw ConfigError("feature partition blocks are not disjoint");
      seen[f] = 1;
    }
  }
  for (int f = 0; f < n_features; ++f)
    if (!seen[f]) throw ConfigError("feature partition does not cover feature " + std::to_string(f));
}

bool FeaturePartition::is_singletons() const {
  return std::all_of(blocks.begin(), blocks.end(),
                     [](const auto& b) { return b.size() == 1; });
}

MaskPartition MaskPartition::from_blocks(int player_count,
                                         const std::vector<std::vector<int>>& blocks) {
  if (player_count > kMaxPlayers)
    throw CapacityError("partition exceeds " + std::to_string(kMaxPlayers) + " players");
  MaskPartition p;
  p.player_count = player_count;
  std::uint64_t covered = 0;
  for (const auto& block : blocks) {
    if (block.empty()) throw ConfigError("partition contains an empty block");
    std::uint64_t mask = 0;
    for (int i : block) {
      if (i < 0 || i >= player_count) throw ConfigError("partition index out of range");
      if (covered & (1ull << i)) throw ConfigError("partition blocks are not disjoint");
      covered |= (1ull << i);
      mask |= (1ull << i);
    }
    p.blocks.push_back(mask);
  }
  const std::uint64_t full =
      player_count == 64 ? ~0ull : ((1ull << player_count) - 1);
  if (covered != full) throw ConfigError("partition does not cover the player set");
  return p;
}

int MaskPartition::block_of(int player) const {
  for (int b = 0; b < block_count(); ++b)
    if (blocks[b] & (1ull << player)) return b;
  throw DomainError("player not covered by partition");
}

Rational owen_nested_weight(const CoefficientFamily& a1, const CoefficientFamily& a2,
                            const MaskPartition& partition, int i, std::uint64_t Z,
                            std::uint64_t W) {
  if ((Z & ~W) != 0) throw DomainError("owen_nested_weight requires Z to be a subset of W");
  const bool plus = (Z >> i) & 1;
  if (!plus && ((W >> i) & 1))
    throw DomainError("owen_nested_weight requires i in Z or i outside W");
  const int j = partition.block_of(i);
  const std::uint64_t home = partition.blocks[j];
  const int m_tilde = partition.block_count();

  // Block condition over the non-home blocks.
  int cal_z = 0, cal_w = 0;
  for (int r = 0; r < m_tilde; ++r) {
    if (r == j) continue;
    const bool z_meets = (Z & partition.blocks[r]) != 0;
    const bool w_contains = (W & partition.blocks[r]) == partition.blocks[r];
    if (z_meets && !w_contains) return Rational(0);
    cal_z += z_meets ? 1 : 0;
    cal_w += w_contains ? 1 : 0;
  }

  const int sj = popcount(home);
  const int z_star = popcount(Z & home);
  const int w_star = popcount(W & home);
  const Rational outer = a1.coefficient(cal_z, m_tilde + cal_z - cal_w);
  const Rational inner = plus ? a2.coefficient(z_star - 1, sj + z_star - w_star)
                              : a2.coefficient(z_star, sj + z_star - w_star);
  return outer * inner;
}

namespace {

std::vector<std::uint64_t> submasks(std::uint64_t mask, bool exclude_empty, bool exclude_full) {
  std::vector<std::uint64_t> out;
  std::uint64_t s = mask;
  while (true) {
    const bool skip = (exclude_empty && s == 0) || (exclude_full && s == mask);
    if (!skip) out.push_back(s);
    if (s == 0) break;
    s = (s - 1) & mask;
  }
  return out;
}

}  // namespace

std::vector<std::uint64_t> int_inc_sets(const MaskPartition& partition, int j,
                                        std::uint64_t q_star, std::uint64_t q_cal,
                                        IntIncMode mode) {
  if ((q_star & ~partition.blocks[j]) != 0)
    throw DomainError("q_star must be a subset of block j");
  std::vector<std::uint64_t> result = {q_star};
  for (int r = 0; r < partition.block_count(); ++r) {
    if (r == j) continue;
    const bool named = (q_cal >> r) & 1;
    std::vector<std::uint64_t> choices;
    if (mode == IntIncMode::Int) {
      // Q must meet exactly the named blocks.
      choices = named ? submasks(partition.blocks[r], /*exclude_empty=*/true,
                                 /*exclude_full=*/false)
                      : std::vector<std::uint64_t>{0};
    } else {
      // Q must fully contain exactly the named blocks; others stay proper.
      choices = named ? std::vector<std::uint64_t>{partition.blocks[r]}
                      : submasks(partition.blocks[r], /*exclude_empty=*/false,
                                 /*exclude_full=*/true);
    }
    std::vector<std::uint64_t> next;
    next.reserve(result.size() * choices.size());
    for (std::uint64_t base : result)
      for (std::uint64_t c : choices) next.push_back(base | c);
    result = std::move(next);
  }
  std::sort(result.begin(), result.end());
  return result;
}

GameValueSpec GameValueSpec::shapley() { return GameValueSpec{}; }

GameValueSpec GameValueSpec::banzhaf() {
  GameValueSpec s;
  s.variant = Variant::Banzhaf;
  return s;
}

GameValueSpec GameValueSpec::generic(CoefficientFamily f) {
  GameValueSpec s;
  s.variant = Variant::Generic;
  s.family = std::move(f);
  return s;
}

GameValueSpec GameValueSpec::owen(FeaturePartition p) {
  return coalitional(CoefficientFamily::shapley(), CoefficientFamily::shapley(), std::move(p));
}

GameValueSpec GameValueSpec::coalitional(CoefficientFamily a1, CoefficientFamily a2,
                                         FeaturePartition p) {
  GameValueSpec s;
  s.variant = Variant::Coalitional;
  s.family_outer = std::move(a1);
  s.family_inner = std::move(a2);
  s.partition = std::move(p);
  return s;
}

const CoefficientFamily& GameValueSpec::effective_family() const {
  static const CoefficientFamily kShapley = CoefficientFamily::shapley();
  static const CoefficientFamily kBanzhaf = CoefficientFamily::banzhaf();
  switch (variant) {
    case Variant::Shapley:
      return kShapley;
    case Variant::Banzhaf:
      return kBanzhaf;
    case Variant::Generic:
      return family;
    case Variant::Coalitional:
      throw ConfigError("coalitional spec has no single coefficient family");
  }
  throw ConfigError("unreachable");
}

}  // namespace oblivion
