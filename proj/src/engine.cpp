#include "oblivion/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace oblivion {

namespace {

struct KahanRow {
  std::vector<double> sum, comp;

  explicit KahanRow(int k) : sum(k, 0.0), comp(k, 0.0) {}
  void add(int i, double v) {
    const double y = v - comp[i];
    const double t = sum[i] + y;
    comp[i] = (t - sum[i]) - y;
    sum[i] = t;
  }
};

// Codes of E^{-1}(a, W) within the realizable set, enumerated as the product
// of per-group pattern choices: equal to a's pattern on groups in W, any other
// admissible pattern elsewhere.
template <typename Fn>
void preimage_product(const std::vector<std::vector<std::uint32_t>>& pats,
                      const std::vector<std::uint32_t>& a_pattern, std::uint64_t W, int q,
                      std::uint32_t acc, Fn&& fn) {
  if (q == static_cast<int>(pats.size())) {
    fn(acc);
    return;
  }
  if ((W >> q) & 1) {
    preimage_product(pats, a_pattern, W, q + 1, acc | a_pattern[q], fn);
  } else {
    for (std::uint32_t pat : pats[q])
      if (pat != a_pattern[q]) preimage_product(pats, a_pattern, W, q + 1, acc | pat, fn);
  }
}

// Expected-score table: score[e][Q] = c(e) * sum of p(u) over realizable u
// whose agreement set against e is exactly Q, for every realizable e and
// every Q; built once per tree before the leaf loop.
std::vector<double> build_score_sums(const ObliviousTree& tree) {
  const int k = tree.distinct_feature_count();
  const auto& codes = tree.realizable();
  const int r = static_cast<int>(codes.size());
  const auto& p = tree.leaf_probabilities();
  const auto& values = tree.leaf_values();
  const auto& group_levels = tree.partition().group_levels;
  std::vector<double> score(static_cast<std::size_t>(r) << k, 0.0);
  for (int ei = 0; ei < r; ++ei) {
    double* row = &score[static_cast<std::size_t>(ei) << k];
    for (int uj = 0; uj < r; ++uj) {
      const std::uint32_t diff = codes[ei] ^ codes[uj];
      std::uint64_t q = 0;
      for (int g = 0; g < k; ++g)
        if ((diff & group_levels[g]) == 0) q |= (1ull << g);
      row[q] += p[codes[uj]];
    }
    const double c = values[codes[ei]];
    for (std::uint64_t q = 0; q < (1ull << k); ++q) row[q] *= c;
  }
  return score;
}

MaskPartition induced_partition(const ObliviousTree& tree, const FeaturePartition& global) {
  const auto& feats = tree.partition().group_feature;
  const int k = static_cast<int>(feats.size());
  std::vector<std::vector<int>> blocks;
  int covered = 0;
  for (const auto& gb : global.blocks) {
    std::vector<int> blk;
    for (int q = 0; q < k; ++q)
      if (std::find(gb.begin(), gb.end(), feats[q]) != gb.end()) blk.push_back(q);
    if (!blk.empty()) {
      covered += static_cast<int>(blk.size());
      blocks.push_back(std::move(blk));
    }
  }
  if (covered != k)
    throw ConfigError("a tree splits on a feature missing from the coalition partition");
  return MaskPartition::from_blocks(k, blocks);
}

void fill_rows_linear(const ObliviousTree& tree, const CoefficientFamily& family,
                      const std::vector<double>& score, double scale, TermCounter* counter,
                      TreeAttributionTable& out) {
  const int k = tree.distinct_feature_count();
  const auto& codes = tree.realizable();
  const auto& pats = tree.group_patterns();
  const std::uint64_t full = (1ull << k) - 1;

  std::vector<std::vector<double>> wplus(k + 1, std::vector<double>(k + 1, 0.0));
  std::vector<std::vector<double>> wminus(k + 1, std::vector<double>(k + 1, 0.0));
  for (int w = 1; w <= k; ++w)
    for (int z = 1; z <= w; ++z) wplus[w][z] = to_double(omega(family, OmegaSide::Plus, w, z, k));
  for (int w = 0; w <= k - 1; ++w)
    for (int z = 0; z <= w; ++z) wminus[w][z] = to_double(omega(family, OmegaSide::Minus, w, z, k));

  // Number of expanded probability terms folded into one s(b, K\Z) lookup.
  std::vector<std::uint64_t> zterms;
  if (counter) {
    counter->per_feature.assign(k, 0);
    zterms.assign(1ull << k, 1);
    for (std::uint64_t mask = 1; mask <= full; ++mask) {
      const int g = __builtin_ctzll(mask);
      zterms[mask] = zterms[mask ^ (mask & -mask)] * (pats[g].size() - 1);
    }
  }

  std::vector<std::uint32_t> a_pattern(k);
  for (int ai = 0; ai < static_cast<int>(codes.size()); ++ai) {
    const std::uint32_t a = codes[ai];
    for (int q = 0; q < k; ++q) a_pattern[q] = a & tree.partition().group_levels[q];
    KahanRow acc(k);
    for (std::uint64_t W = 0; W <= full; ++W) {
      const int wsz = popcount(W);
      preimage_product(pats, a_pattern, W, 0, 0, [&](std::uint32_t b) {
        const int bi = tree.realizable_index(b);
        const double* srow = &score[static_cast<std::size_t>(bi) << k];
        std::uint64_t Z = W;
        while (true) {
          const double sval = srow[full & ~Z];
          const int zsz = popcount(Z);
          if (Z != 0) {
            const double inc = wplus[wsz][zsz] * sval;
            for (std::uint64_t rest = Z; rest != 0; rest &= rest - 1) {
              const int i = __builtin_ctzll(rest);
              acc.add(i, inc);
              if (counter) counter->per_feature[i] += zterms[Z];
            }
          }
          if (W != full) {
            const double dec = wminus[wsz][zsz] * sval;
            for (std::uint64_t rest = full & ~W; rest != 0; rest &= rest - 1) {
              const int i = __builtin_ctzll(rest);
              acc.add(i, -dec);
              if (counter) counter->per_feature[i] += zterms[Z];
            }
          }
          if (Z == 0) break;
          Z = (Z - 1) & W;
        }
      });
    }
    auto& row = out.rows[ai];
    row = std::move(acc.sum);
    for (double& v : row) v *= scale;
  }
}

void fill_rows_coalitional(const ObliviousTree& tree, const GameValueSpec& spec,
                           const std::vector<double>& score, double scale,
                           TreeAttributionTable& out) {
  const int k = tree.distinct_feature_count();
  const auto& codes = tree.realizable();
  const auto& pats = tree.group_patterns();
  const std::uint64_t full = (1ull << k) - 1;
  const MaskPartition part = induced_partition(tree, spec.partition);
  const int m_tilde = part.block_count();
  const CoefficientFamily& a1 = spec.family_outer;
  const CoefficientFamily& a2 = spec.family_inner;

  std::vector<std::uint32_t> a_pattern(k);
  for (int ai = 0; ai < static_cast<int>(codes.size()); ++ai) {
    const std::uint32_t a = codes[ai];
    for (int q = 0; q < k; ++q) a_pattern[q] = a & tree.partition().group_levels[q];
    KahanRow acc(k);

    for (int j = 0; j < m_tilde; ++j) {
      const std::uint64_t home = part.blocks[j];
      const int hsz = popcount(home);
      const std::uint64_t other_blocks = ((1ull << m_tilde) - 1) ^ (1ull << j);

      std::uint64_t w_cal = other_blocks;
      while (true) {  // W-side block pattern
        const int wcal_sz = popcount(w_cal);
        std::uint64_t w_star = home;
        while (true) {  // W inside the home block
          const int wssz = popcount(w_star);
          // All b with match(a,b) in Inc(w_cal, w_star, j), collected once.
          std::vector<int> bs;  // realizable indices
          for (std::uint64_t W : int_inc_sets(part, j, w_star, w_cal, IntIncMode::Inc)) {
            preimage_product(pats, a_pattern, W, 0, 0,
                             [&](std::uint32_t b) { bs.push_back(tree.realizable_index(b)); });
          }
          if (!bs.empty()) {
            std::uint64_t z_cal = w_cal;
            while (true) {  // Z-side block pattern
              const Rational c1 =
                  a1.coefficient(popcount(z_cal), m_tilde + popcount(z_cal) - wcal_sz);
              std::uint64_t z_star = w_star;
              while (true) {  // Z inside the home block
                const int zssz = popcount(z_star);
                double inner = 0.0;
                const auto zsets = int_inc_sets(part, j, z_star, z_cal, IntIncMode::Int);
                for (const int bi : bs) {
                  const double* srow = &score[static_cast<std::size_t>(bi) << k];
                  for (std::uint64_t Z : zsets) inner += srow[full & ~Z];
                }
                if (z_star != 0) {
                  const double w2 = to_double(c1 * a2.coefficient(zssz - 1, hsz + zssz - wssz));
                  for (std::uint64_t rest = z_star; rest != 0; rest &= rest - 1)
                    acc.add(__builtin_ctzll(rest), w2 * inner);
                }
                if (w_star != home) {
                  const double w2 = to_double(c1 * a2.coefficient(zssz, hsz + zssz - wssz));
                  for (std::uint64_t rest = home & ~w_star; rest != 0; rest &= rest - 1)
                    acc.add(__builtin_ctzll(rest), -w2 * inner);
                }
                if (z_star == 0) break;
                z_star = (z_star - 1) & w_star;
              }
              if (z_cal == 0) break;
              z_cal = (z_cal - 1) & w_cal;
            }
          }
          if (w_star == 0) break;
          w_star = (w_star - 1) & home;
        }
        if (w_cal == 0) break;
        w_cal = (w_cal - 1) & other_blocks;
      }
    }

    auto& row = out.rows[ai];
    row = std::move(acc.sum);
    for (double& v : row) v *= scale;
  }
}

}  // namespace

int TreeAttributionTable::row_index(std::uint32_t code) const {
  const auto it = std::lower_bound(codes.begin(), codes.end(), code);
  if (it == codes.end() || *it != code) return -1;
  return static_cast<int>(it - codes.begin());
}

TreeAttributionTable precompute_tree_table(const ObliviousTree& tree, const GameValueSpec& spec,
                                           double scale, TermCounter* counter) {
  if (!tree.has_probabilities())
    throw ConfigError("precompute requires populated leaf probabilities");
  const int k = tree.distinct_feature_count();
  if (k > kMaxPlayers)
    throw CapacityError("tree has more than " + std::to_string(kMaxPlayers) +
                        " distinct features");

  TreeAttributionTable out;
  out.depth = tree.depth();
  out.feature_ids = tree.partition().group_feature;
  out.codes = tree.realizable();
  out.rows.assign(out.codes.size(), {});

  const std::vector<double> score = build_score_sums(tree);
  if (spec.is_coalitional()) {
    if (counter) throw ConfigError("term counting applies to non-coalitional specs");
    fill_rows_coalitional(tree, spec, score, scale, out);
  } else {
    fill_rows_linear(tree, spec.effective_family(), score, scale, counter, out);
  }
  return out;
}

AttributionTable precompute_ensemble(const Ensemble& ensemble, const GameValueSpec& spec,
                                     int max_threads) {
  validate_ensemble(ensemble);
  if (spec.is_coalitional()) spec.partition.validate(ensemble.n_features);

  AttributionTable out;
  out.spec = spec;
  out.trees.resize(ensemble.trees.size());

  int n_threads = max_threads > 0 ? max_threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(ensemble.trees.size())));

  if (n_threads <= 1) {
    for (std::size_t i = 0; i < ensemble.trees.size(); ++i)
      out.trees[i] = precompute_tree_table(ensemble.trees[i], spec, ensemble.scale);
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= ensemble.trees.size()) return;
      try {
        out.trees[i] = precompute_tree_table(ensemble.trees[i], spec, ensemble.scale);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<double> explain(const AttributionTable& tables, const Ensemble& ensemble,
                            const FeaturePoint& x) {
  if (tables.trees.size() != ensemble.trees.size())
    throw ConfigError("attribution tables do not match the ensemble");
  if (static_cast<int>(x.size()) != ensemble.n_features)
    throw InputShapeError("explicand width does not match the ensemble feature count");
  std::vector<double> phi(ensemble.n_features, 0.0);
  for (std::size_t t = 0; t < ensemble.trees.size(); ++t) {
    const auto& table = tables.trees[t];
    const LeafCode leaf = route_to_leaf(ensemble.trees[t], x);
    const int idx = table.row_index(leaf.bits);
    if (idx < 0) throw ConfigError("explicand routed to a leaf absent from the table");
    const auto& row = table.rows[idx];
    for (std::size_t q = 0; q < row.size(); ++q) phi[table.feature_ids[q]] += row[q];
  }
  return phi;
}

TermCountAudit term_count_audit(const ObliviousTree& tree) {
  const int k = tree.distinct_feature_count();
  const int m = tree.depth();
  const std::uint64_t full = (1ull << k) - 1;
  const auto& pats = tree.group_patterns();

  std::vector<std::uint64_t> zterms(1ull << k, 1);
  for (std::uint64_t mask = 1; mask <= full; ++mask) {
    const int g = __builtin_ctzll(mask);
    zterms[mask] = zterms[mask ^ (mask & -mask)] * (pats[g].size() - 1);
  }

  TermCountAudit audit;
  audit.per_feature.assign(k, 0);
  audit.per_feature_one_side.assign(k, 0);
  for (int i = 0; i < k; ++i) {
    // One side = nested pairs Z <= W inside K\{i}; a pair with difference set D
    // contributes prod over K\D of (|A_q|-1), counted for each of the 2^(k-1-|D|)
    // choices of Z.
    const std::uint64_t rest = full & ~(1ull << i);
    std::uint64_t side = 0;
    std::uint64_t D = rest;
    while (true) {
      side += (1ull << (k - 1 - popcount(D))) * zterms[full & ~D];
      if (D == 0) break;
      D = (D - 1) & rest;
    }
    audit.per_feature_one_side[i] = side;
    audit.per_feature[i] = 2 * side;
  }
  audit.bound_per_side =
      std::pow(3.0, k - 1) * std::pow(static_cast<double>(m) / k, k);
  return audit;
}

double AdditiveModel::evaluate(const FeaturePoint& x) const {
  double y = 0.0;
  for (int i = 0; i < n_features; ++i)
    if (i < static_cast<int>(univariate.size()) && univariate[i]) y += univariate[i](x[i]);
  for (const auto& term : interactions) y += term.f(x[term.i], x[term.j]);
  return y;
}

std::vector<double> explain_additive(const AdditiveModel& model, const Dataset& background,
                                     const FeaturePoint& x) {
  if (background.rows.empty()) throw ConfigError("additive explanation needs a background set");
  if (static_cast<int>(x.size()) != model.n_features)
    throw InputShapeError("explicand width does not match the model feature count");
  if (background.width() != model.n_features)
    throw InputShapeError("background width does not match the model feature count");
  for (const auto& term : model.interactions)
    if (!(0 <= term.i && term.i < term.j && term.j < model.n_features))
      throw ConfigError("interaction pairs must satisfy 0 <= i < j < n");

  const double inv = 1.0 / background.rows.size();
  std::vector<double> phi(model.n_features, 0.0);
  for (int i = 0; i < model.n_features; ++i) {
    if (i >= static_cast<int>(model.univariate.size()) || !model.univariate[i]) continue;
    double mean = 0.0;
    for (const auto& row : background.rows) mean += model.univariate[i](row[i]);
    phi[i] += model.univariate[i](x[i]) - mean * inv;
  }
  for (const auto& term : model.interactions) {
    double mean_both = 0.0, mean_fix_i = 0.0, mean_fix_j = 0.0;
    for (const auto& row : background.rows) {
      mean_both += term.f(row[term.i], row[term.j]);
      mean_fix_i += term.f(x[term.i], row[term.j]);
      mean_fix_j += term.f(row[term.i], x[term.j]);
    }
    mean_both *= inv;
    mean_fix_i *= inv;
    mean_fix_j *= inv;
    const double shared = 0.5 * (term.f(x[term.i], x[term.j]) - mean_both);
    phi[term.i] += shared + 0.5 * (mean_fix_i - mean_fix_j);
    phi[term.j] += shared + 0.5 * (mean_fix_j - mean_fix_i);
  }
  return phi;
}

}  // namespace oblivion
