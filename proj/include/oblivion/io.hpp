#ifndef OBLIVION_IO_HPP
#define OBLIVION_IO_HPP

#include <string>

#include "oblivion/engine.hpp"
#include "oblivion/game_values.hpp"
#include "oblivion/model.hpp"

namespace oblivion {

enum class ModelFormat { Canonical, CatBoostDump };

Ensemble load_model(const std::string& path, ModelFormat format);
void save_model(const Ensemble& ensemble, const std::string& path);

struct CatBoostImport {
  Ensemble ensemble;
  // True when the dump's leaf indexing validated only after reversing the
  // bit/split binding.
  bool reversed_leaf_indexing = false;
};

// Reads a CatBoost JSON dump. When reference inputs/predictions are supplied,
// the split-to-bit orientation is validated against them (retrying with the
// reversed binding) and the import aborts if neither orientation reproduces
// the predictions within 1e-9.
CatBoostImport import_catboost_dump(const std::string& path,
                                    const Dataset* reference_inputs = nullptr,
                                    const std::vector<double>* reference_predictions = nullptr);

Dataset load_dataset(const std::string& path, bool header = false);

void save_tables(const AttributionTable& tables, const std::string& path);
AttributionTable load_tables(const std::string& path);

// {"n": ..., "alphas": [[...], ...]}; entries are numbers, [num, den] pairs,
// or decimal strings. The backward Pascal identity is enforced at load time.
CoefficientFamily load_alpha_table(const std::string& path);

// JSON list of feature-index lists; features not listed become singletons.
FeaturePartition load_partition(const std::string& path, int n_features);

// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace oblivion

#endif
