#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "oblivion/engine.hpp"
#include "oblivion/io.hpp"
#include "oblivion/repro.hpp"

using namespace oblivion;
using namespace testutil;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("io_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
  void write(const std::string& contents) const {
    std::ofstream out(path);
    out << contents;
  }
  std::string read() const {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

Ensemble small_ensemble() {
  Ensemble e;
  e.n_features = 2;
  e.scale = 0.5;
  e.bias = -1.25;
  e.trees.push_back(repro::repeated_feature_tree());
  e.trees.emplace_back(std::vector<SplitLevel>{{1, 0.25}}, std::vector<double>{1.0, -2.0},
                       std::vector<double>{0.3, 0.7});
  return e;
}

}  // namespace

TEST_CASE("canonical model round trip is byte identical") {
  const TempFile a("model_a.json"), b("model_b.json");
  const Ensemble original = small_ensemble();
  save_model(original, a.path);
  const Ensemble loaded = load_model(a.path, ModelFormat::Canonical);
  CHECK(loaded.n_features == original.n_features);
  CHECK(loaded.scale == original.scale);
  CHECK(loaded.bias == original.bias);
  REQUIRE(loaded.trees.size() == original.trees.size());
  for (std::size_t t = 0; t < loaded.trees.size(); ++t) {
    CHECK(loaded.trees[t].leaf_values() == original.trees[t].leaf_values());
    CHECK(loaded.trees[t].leaf_probabilities() == original.trees[t].leaf_probabilities());
  }
  save_model(loaded, b.path);
  CHECK(a.read() == b.read());
}

TEST_CASE("canonical loader reports malformed documents") {
  const TempFile f("bad_model.json");
  f.write("{\"n_features\": 1, \"scale\": 1.0, \"bias\": 0.0, \"trees\": "
          "[{\"levels\": [{\"feature\": 0, \"threshold\": 0.5}], \"leaf_values\": [1, 2, 3]}]}");
  CHECK_THROWS_AS(load_model(f.path, ModelFormat::Canonical), FormatError);

  f.write("not json at all");
  CHECK_THROWS_AS(load_model(f.path, ModelFormat::Canonical), FormatError);

  f.write("{\"scale\": 1.0, \"bias\": 0.0, \"trees\": []}");
  CHECK_THROWS_WITH_AS(load_model(f.path, ModelFormat::Canonical),
                       doctest::Contains("n_features"), FormatError);

  CHECK_THROWS_AS(load_model("does_not_exist.json", ModelFormat::Canonical), FormatError);
}

TEST_CASE("dataset loader parses CSV and reports bad rows") {
  const TempFile f("data.csv");
  f.write("1.0,2.0\n3.0,4.0\n");
  const Dataset d = load_dataset(f.path);
  REQUIRE(d.rows.size() == 2);
  CHECK(d.rows[1] == FeaturePoint{3.0, 4.0});

  f.write("a,b\n0.5,-0.5\n");
  const Dataset with_header = load_dataset(f.path, true);
  CHECK(with_header.columns == std::vector<std::string>{"a", "b"});
  REQUIRE(with_header.rows.size() == 1);
  CHECK(with_header.rows[0] == FeaturePoint{0.5, -0.5});

  f.write("1.0,2.0\n3.0\n");
  CHECK_THROWS_WITH_AS(load_dataset(f.path), doctest::Contains("line 2"), FormatError);

  f.write("1.0,x\n");
  CHECK_THROWS_WITH_AS(load_dataset(f.path), doctest::Contains("column 2"), FormatError);
}

TEST_CASE("tables round trip losslessly for every spec") {
  auto rng = rng_for(41);
  const TempFile a("tables_a.json"), b("tables_b.json");
  Ensemble e;
  e.n_features = 5;
  e.scale = 1.75;
  for (int t = 0; t < 3; ++t) e.trees.push_back(random_tree(rng, 5, 4, 5));

  const std::vector<GameValueSpec> specs = {
      GameValueSpec::shapley(), GameValueSpec::banzhaf(),
      GameValueSpec::generic(random_pascal_family(rng, 6)),
      GameValueSpec::owen(random_partition(rng, 5))};
  for (const auto& spec : specs) {
    const AttributionTable tables = precompute_ensemble(e, spec);
    save_tables(tables, a.path);
    const AttributionTable loaded = load_tables(a.path);
    REQUIRE(loaded.trees.size() == tables.trees.size());
    for (std::size_t t = 0; t < tables.trees.size(); ++t) {
      CHECK(loaded.trees[t].feature_ids == tables.trees[t].feature_ids);
      CHECK(loaded.trees[t].codes == tables.trees[t].codes);
      REQUIRE(loaded.trees[t].rows.size() == tables.trees[t].rows.size());
      for (std::size_t r = 0; r < tables.trees[t].rows.size(); ++r)
        CHECK(loaded.trees[t].rows[r] == tables.trees[t].rows[r]);  // bit-for-bit
    }
    // Deterministic writer: same content twice.
    save_tables(loaded, b.path);
    CHECK(a.read() == b.read());
  }
}

TEST_CASE("empty table files and version gating") {
  const TempFile f("tables_empty.json");
  AttributionTable empty;
  empty.spec = GameValueSpec::shapley();
  save_tables(empty, f.path);
  const AttributionTable loaded = load_tables(f.path);
  CHECK(loaded.trees.empty());

  f.write("{\"version\": 2, \"game\": {\"variant\": \"shapley\"}, \"trees\": []}");
  CHECK_THROWS_WITH_AS(load_tables(f.path), doctest::Contains("version"), FormatError);
}

TEST_CASE("figure tree table serializes the expected row") {
  const TempFile f("tables_fig.json");
  Ensemble e;
  e.n_features = 2;
  e.trees.push_back(repro::repeated_feature_tree());
  save_tables(precompute_ensemble(e, GameValueSpec::shapley()), f.path);
  const AttributionTable loaded = load_tables(f.path);
  const int idx = loaded.trees[0].row_index(LeafCode::from_string("110").bits);
  REQUIRE(idx >= 0);
  CHECK(loaded.trees[0].rows[idx][0] == 0.5);
  CHECK(loaded.trees[0].rows[idx][1] == doctest::Approx(5.0 / 6).epsilon(1e-15));
  CHECK(f.read().find("\"110\"") != std::string::npos);
}

TEST_CASE("catboost dump import with orientation validation") {
  const TempFile f("catboost.json");
  // Depth-2 tree over features 0 and 1; asymmetric leaf values so the two
  // bit/split bindings disagree.
  const std::string dump = R"({
    "features_info": {"float_features": [
      {"borders": [0.5], "flat_feature_index": 0},
      {"borders": [-1.0], "flat_feature_index": 1}
    ]},
    "oblivious_trees": [{
      "leaf_values": [10.0, 20.0, 30.0, 40.0],
      "leaf_weights": [1, 3, 4, 2],
      "splits": [
        {"border": 0.5, "float_feature_index": 0, "split_type": "FloatFeature"},
        {"border": -1.0, "float_feature_index": 1, "split_type": "FloatFeature"}
      ]
    }],
    "scale_and_bias": [2.0, [1.0]]
  })";
  f.write(dump);

  const CatBoostImport plain = import_catboost_dump(f.path);
  CHECK(plain.ensemble.scale == 2.0);
  CHECK(plain.ensemble.bias == 1.0);
  CHECK(plain.ensemble.n_features == 2);
  REQUIRE(plain.ensemble.trees.size() == 1);
  const auto& probs = plain.ensemble.trees[0].leaf_probabilities();
  CHECK(probs[0] == doctest::Approx(0.1));
  CHECK(probs[3] == doctest::Approx(0.2));

  // References consistent with bit0 = first split: x = (1.0, -2.0) lands on
  // bits (1, 0) -> leaf 1 -> 2 * 20 + 1 = 41.
  Dataset inputs;
  inputs.rows = {{1.0, -2.0}, {0.0, 0.0}, {1.0, 0.0}};
  const std::vector<double> straight = {41.0, 2 * 30.0 + 1, 2 * 40.0 + 1};
  const CatBoostImport validated = import_catboost_dump(f.path, &inputs, &straight);
  CHECK_FALSE(validated.reversed_leaf_indexing);
  for (std::size_t i = 0; i < inputs.rows.size(); ++i)
    CHECK(predict(validated.ensemble, inputs.rows[i]) == doctest::Approx(straight[i]));

  // References consistent with the reversed binding: bit0 = last split.
  const std::vector<double> reversed = {2 * 30.0 + 1, 2 * 20.0 + 1, 2 * 40.0 + 1};
  const CatBoostImport flipped = import_catboost_dump(f.path, &inputs, &reversed);
  CHECK(flipped.reversed_leaf_indexing);
  for (std::size_t i = 0; i < inputs.rows.size(); ++i)
    CHECK(predict(flipped.ensemble, inputs.rows[i]) == doctest::Approx(reversed[i]));

  // Garbage references: neither orientation fits.
  const std::vector<double> junk = {0.0, 0.0, 99.0};
  CHECK_THROWS_AS(import_catboost_dump(f.path, &inputs, &junk), FormatError);
}

TEST_CASE("catboost importer rejects unsupported splits") {
  const TempFile f("catboost_bad.json");
  f.write(R"({"oblivious_trees": [{
    "leaf_values": [1.0, 2.0],
    "splits": [{"border": 0.5, "float_feature_index": 0, "split_type": "OneHotFeature"}]
  }]})");
  CHECK_THROWS_WITH_AS(import_catboost_dump(f.path), doctest::Contains("OneHotFeature"),
                       FormatError);
}

TEST_CASE("partition and alpha-table loaders") {
  const TempFile f("partition.json");
  f.write("[[0, 2], [3]]");
  const FeaturePartition p = load_partition(f.path, 5);
  REQUIRE(p.blocks.size() == 4);  // {0,2}, {3}, then singletons {1}, {4}
  CHECK(p.blocks[0] == std::vector<int>{0, 2});

  f.write("[[0, 9]]");
  CHECK_THROWS_AS(load_partition(f.path, 5), FormatError);

  const TempFile alpha("alpha.json");
  alpha.write(R"({"n": 3, "alphas": [[1], [[1,2],[1,2]], [[1,3],[1,6],[1,3]]]})");
  const CoefficientFamily family = load_alpha_table(alpha.path);
  CHECK(family.coefficient(1, 3) == Rational(1, 6));  // the Shapley table

  alpha.write(R"({"alphas": [[1], [[1,2],[1,2]], [[1,3],0.2,[1,3]]]})");
  CHECK_THROWS_WITH_AS(load_alpha_table(alpha.path), doctest::Contains("Pascal"), FormatError);
}
