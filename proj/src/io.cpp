#include "oblivion/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace oblivion {

using nlohmann::json;

namespace {

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

const json& require(const json& j, const char* key, const std::string& context) {
  const auto it = j.find(key);
  if (it == j.end()) throw FormatError(context + ": missing key '" + key + "'");
  return *it;
}

bool is_power_of_two(std::size_t x) { return x != 0 && (x & (x - 1)) == 0; }

std::vector<double> read_double_array(const json& j, const std::string& context) {
  if (!j.is_array()) throw FormatError(context + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw FormatError(context + ": expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

ObliviousTree tree_from_json(const json& jt, const std::string& context) {
  const json& jl = require(jt, "levels", context);
  if (!jl.is_array() || jl.empty()) throw FormatError(context + ".levels: expected a nonempty array");
  std::vector<SplitLevel> levels;
  for (const auto& lvl : jl) {
    SplitLevel s;
    s.feature = require(lvl, "feature", context + ".levels").get<int>();
    s.threshold = require(lvl, "threshold", context + ".levels").get<double>();
    levels.push_back(s);
  }
  std::vector<double> values = read_double_array(require(jt, "leaf_values", context),
                                                 context + ".leaf_values");
  if (!is_power_of_two(values.size()) || values.size() != (1ull << levels.size()))
    throw FormatError(context + ".leaf_values: length must be 2^(number of levels)");
  std::vector<double> probs;
  if (jt.contains("leaf_probabilities")) {
    probs = read_double_array(jt["leaf_probabilities"], context + ".leaf_probabilities");
    if (probs.size() != values.size())
      throw FormatError(context + ".leaf_probabilities: length must match leaf_values");
  }
  try {
    return ObliviousTree(std::move(levels), std::move(values), std::move(probs));
  } catch (const std::exception& e) {
    throw FormatError(context + ": " + e.what());
  }
}

json tree_to_json(const ObliviousTree& tree) {
  json jt;
  json jl = json::array();
  for (const auto& lvl : tree.levels()) jl.push_back({{"feature", lvl.feature}, {"threshold", lvl.threshold}});
  jt["levels"] = std::move(jl);
  jt["leaf_values"] = tree.leaf_values();
  if (tree.has_probabilities()) jt["leaf_probabilities"] = tree.leaf_probabilities();
  return jt;
}

Rational rational_from_json(const json& v, const std::string& context) {
  if (v.is_number()) return Rational(v.get<double>());  // doubles are exact rationals
  if (v.is_string()) return Rational(v.get<std::string>());
  if (v.is_array() && v.size() == 2) {
    auto part = [&](const json& p) -> BigInt {
      if (p.is_number_integer()) return BigInt(p.get<long long>());
      if (p.is_string()) return BigInt(p.get<std::string>());
      throw FormatError(context + ": rational parts must be integers or strings");
    };
    return Rational(part(v[0]), part(v[1]));
  }
  throw FormatError(context + ": expected a number, string, or [num, den] pair");
}

std::vector<std::vector<Rational>> alpha_rows_from_json(const json& rows,
                                                        const std::string& context) {
  if (!rows.is_array()) throw FormatError(context + ": expected an array of rows");
  std::vector<std::vector<Rational>> out;
  for (std::size_t n = 1; n <= rows.size(); ++n) {
    const json& row = rows[n - 1];
    if (!row.is_array() || row.size() != n)
      throw FormatError(context + ": row " + std::to_string(n) + " must have " +
                        std::to_string(n) + " entries");
    std::vector<Rational> r;
    for (const auto& v : row) r.push_back(rational_from_json(v, context));
    out.push_back(std::move(r));
  }
  return out;
}

json alpha_rows_to_json(const CoefficientFamily& family) {
  json rows = json::array();
  for (int n = 1; n <= family.n_max(); ++n) {
    json row = json::array();
    for (int s = 0; s < n; ++s) {
      const Rational a = family.coefficient(s, n);
      row.push_back(json::array({boost::multiprecision::numerator(a).str(),
                                 boost::multiprecision::denominator(a).str()}));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json family_to_json(const CoefficientFamily& family) {
  switch (family.kind()) {
    case CoefficientFamily::Kind::Shapley:
      return json{{"kind", "shapley"}};
    case CoefficientFamily::Kind::Banzhaf:
      return json{{"kind", "banzhaf"}};
    case CoefficientFamily::Kind::Custom:
      return json{{"kind", "custom"}, {"alphas", alpha_rows_to_json(family)}};
  }
  throw FormatError("unreachable");
}

CoefficientFamily family_from_json(const json& j, const std::string& context) {
  const std::string kind = require(j, "kind", context).get<std::string>();
  if (kind == "shapley") return CoefficientFamily::shapley();
  if (kind == "banzhaf") return CoefficientFamily::banzhaf();
  if (kind == "custom")
    return CoefficientFamily::custom(alpha_rows_from_json(require(j, "alphas", context), context));
  throw FormatError(context + ": unknown family kind '" + kind + "'");
}

json partition_to_json(const FeaturePartition& p) {
  json j = json::array();
  for (const auto& block : p.blocks) j.push_back(block);
  return j;
}

FeaturePartition partition_from_json(const json& j, const std::string& context) {
  if (!j.is_array()) throw FormatError(context + ": expected a list of feature-index lists");
  FeaturePartition p;
  for (const auto& jb : j) {
    if (!jb.is_array()) throw FormatError(context + ": expected a list of feature-index lists");
    std::vector<int> block;
    for (const auto& v : jb) {
      if (!v.is_number_integer()) throw FormatError(context + ": feature indices must be integers");
      block.push_back(v.get<int>());
    }
    p.blocks.push_back(std::move(block));
  }
  return p;
}

json game_spec_to_json(const GameValueSpec& spec) {
  switch (spec.variant) {
    case GameValueSpec::Variant::Shapley:
      return json{{"variant", "shapley"}};
    case GameValueSpec::Variant::Banzhaf:
      return json{{"variant", "banzhaf"}};
    case GameValueSpec::Variant::Generic:
      return json{{"variant", "custom"}, {"family", family_to_json(spec.family)}};
    case GameValueSpec::Variant::Coalitional:
      return json{{"variant", "coalitional"},
                  {"family_between", family_to_json(spec.family_outer)},
                  {"family_within", family_to_json(spec.family_inner)},
                  {"partition", partition_to_json(spec.partition)}};
  }
  throw FormatError("unreachable");
}

GameValueSpec game_spec_from_json(const json& j, const std::string& context) {
  const std::string variant = require(j, "variant", context).get<std::string>();
  if (variant == "shapley") return GameValueSpec::shapley();
  if (variant == "banzhaf") return GameValueSpec::banzhaf();
  if (variant == "custom")
    return GameValueSpec::generic(family_from_json(require(j, "family", context), context));
  if (variant == "coalitional")
    return GameValueSpec::coalitional(
        family_from_json(require(j, "family_between", context), context),
        family_from_json(require(j, "family_within", context), context),
        partition_from_json(require(j, "partition", context), context));
  throw FormatError(context + ": unknown game variant '" + variant + "'");
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  out << contents;
  if (!out) throw FormatError(path + ": write failed");
}

}  // namespace

Ensemble load_model(const std::string& path, ModelFormat format) {
  if (format == ModelFormat::CatBoostDump) return import_catboost_dump(path).ensemble;
  const json j = parse_file(path);
  Ensemble e;
  e.n_features = require(j, "n_features", path).get<int>();
  e.scale = require(j, "scale", path).get<double>();
  e.bias = require(j, "bias", path).get<double>();
  const json& jt = require(j, "trees", path);
  if (!jt.is_array()) throw FormatError(path + ".trees: expected an array");
  for (std::size_t i = 0; i < jt.size(); ++i)
    e.trees.push_back(tree_from_json(jt[i], path + ".trees[" + std::to_string(i) + "]"));
  try {
    validate_ensemble(e);
  } catch (const std::exception& ex) {
    throw FormatError(path + ": " + ex.what());
  }
  return e;
}

void save_model(const Ensemble& ensemble, const std::string& path) {
  json j;
  j["n_features"] = ensemble.n_features;
  j["scale"] = ensemble.scale;
  j["bias"] = ensemble.bias;
  json jt = json::array();
  for (const auto& tree : ensemble.trees) jt.push_back(tree_to_json(tree));
  j["trees"] = std::move(jt);
  write_file(path, j.dump(1) + "\n");
}

namespace {

std::uint32_t bit_reverse(std::uint32_t code, int width) {
  std::uint32_t out = 0;
  for (int s = 0; s < width; ++s)
    if ((code >> s) & 1) out |= (1u << (width - 1 - s));
  return out;
}

Ensemble catboost_build(const json& j, const std::string& path, bool reversed) {
  Ensemble e;
  const json& jtrees = require(j, "oblivious_trees", path);
  if (!jtrees.is_array()) throw FormatError(path + ".oblivious_trees: expected an array");

  int max_feature = -1;
  for (std::size_t ti = 0; ti < jtrees.size(); ++ti) {
    const std::string ctx = path + ".oblivious_trees[" + std::to_string(ti) + "]";
    const json& jt = jtrees[ti];
    const json& jsplits = require(jt, "splits", ctx);
    std::vector<SplitLevel> levels;
    for (const auto& js : jsplits) {
      if (js.contains("split_type") && js["split_type"].get<std::string>() != "FloatFeature")
        throw FormatError(ctx + ": unsupported split type '" +
                          js["split_type"].get<std::string>() + "'");
      SplitLevel lvl;
      if (js.contains("float_feature_index"))
        lvl.feature = js["float_feature_index"].get<int>();
      else if (js.contains("feature_index"))
        lvl.feature = js["feature_index"].get<int>();
      else
        throw FormatError(ctx + ": split has no feature index");
      lvl.threshold = require(js, "border", ctx).get<double>();
      levels.push_back(lvl);
      max_feature = std::max(max_feature, lvl.feature);
    }
    if (levels.empty()) throw FormatError(ctx + ": tree has no splits");

    std::vector<double> values = read_double_array(require(jt, "leaf_values", ctx),
                                                   ctx + ".leaf_values");
    if (!is_power_of_two(values.size()) || values.size() != (1ull << levels.size()))
      throw FormatError(ctx + ".leaf_values: length must be 2^(number of splits)");
    std::vector<double> weights;
    if (jt.contains("leaf_weights")) {
      weights = read_double_array(jt["leaf_weights"], ctx + ".leaf_weights");
      if (weights.size() != values.size())
        throw FormatError(ctx + ".leaf_weights: length must match leaf_values");
    }

    const int m = static_cast<int>(levels.size());
    if (reversed) {
      std::vector<double> v2(values.size()), w2(weights.size());
      for (std::uint32_t c = 0; c < values.size(); ++c) v2[c] = values[bit_reverse(c, m)];
      for (std::uint32_t c = 0; c < weights.size(); ++c) w2[c] = weights[bit_reverse(c, m)];
      values = std::move(v2);
      weights = std::move(w2);
    }

    std::vector<double> probs;
    if (!weights.empty()) {
      double total = 0.0;
      for (double w : weights) {
        if (w < 0) throw FormatError(ctx + ".leaf_weights: negative weight");
        total += w;
      }
      if (total > 0) {
        probs = weights;
        for (double& p : probs) p /= total;
      }
    }
    try {
      e.trees.emplace_back(std::move(levels), std::move(values), std::move(probs));
    } catch (const std::exception& ex) {
      throw FormatError(ctx + ": " + ex.what());
    }
  }

  e.scale = 1.0;
  e.bias = 0.0;
  if (j.contains("scale_and_bias")) {
    const json& sb = j["scale_and_bias"];
    if (!sb.is_array() || sb.size() != 2)
      throw FormatError(path + ".scale_and_bias: expected [scale, bias]");
    e.scale = sb[0].get<double>();
    if (sb[1].is_array()) {
      if (sb[1].size() != 1)
        throw FormatError(path + ".scale_and_bias: multi-dimensional bias unsupported");
      e.bias = sb[1][0].get<double>();
    } else {
      e.bias = sb[1].get<double>();
    }
  }

  e.n_features = max_feature + 1;
  if (j.contains("features_info") && j["features_info"].contains("float_features")) {
    for (const auto& f : j["features_info"]["float_features"]) {
      const auto key = f.contains("flat_feature_index") ? "flat_feature_index" : "feature_index";
      if (f.contains(key)) e.n_features = std::max(e.n_features, f[key].get<int>() + 1);
    }
  }
  validate_ensemble(e);
  return e;
}

double max_prediction_error(const Ensemble& e, const Dataset& inputs,
                            const std::vector<double>& refs) {
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.rows.size(); ++i)
    worst = std::max(worst, std::fabs(predict(e, inputs.rows[i]) - refs[i]));
  return worst;
}

}  // namespace

CatBoostImport import_catboost_dump(const std::string& path, const Dataset* reference_inputs,
                                    const std::vector<double>* reference_predictions) {
  const json j = parse_file(path);
  CatBoostImport result;
  result.ensemble = catboost_build(j, path, /*reversed=*/false);
  if (reference_inputs == nullptr || reference_predictions == nullptr) return result;
  if (reference_inputs->rows.size() != reference_predictions->size())
    throw ConfigError("reference inputs and predictions differ in length");

  const double err = max_prediction_error(result.ensemble, *reference_inputs,
                                          *reference_predictions);
  if (err <= 1e-9) return result;
  Ensemble reversed = catboost_build(j, path, /*reversed=*/true);
  const double err_rev = max_prediction_error(reversed, *reference_inputs,
                                              *reference_predictions);
  if (err_rev <= 1e-9) {
    result.ensemble = std::move(reversed);
    result.reversed_leaf_indexing = true;
    return result;
  }
  throw FormatError(path + ": neither leaf-index orientation reproduces the reference " +
                    "predictions (errors " + format_double(err) + ", " + format_double(err_rev) +
                    ")");
}

Dataset load_dataset(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open file");
  Dataset data;
  std::string line;
  int line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (header && line_no == 1) {
      data.columns = cells;
      width = cells.size();
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      throw FormatError(path + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(width));
    FeaturePoint row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      while (first != last && (*first == ' ' || *first == '\t')) ++first;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last)
        throw FormatError(path + ": line " + std::to_string(line_no) + ", column " +
                          std::to_string(c + 1) + ": not a number: '" + cell + "'");
      row.push_back(v);
    }
    data.rows.push_back(std::move(row));
  }
  return data;
}

void save_tables(const AttributionTable& tables, const std::string& path) {
  json j;
  j["version"] = 1;
  j["game"] = game_spec_to_json(tables.spec);
  json jtrees = json::array();
  for (const auto& table : tables.trees) {
    json jt;
    jt["features"] = table.feature_ids;
    json rows = json::object();
    for (std::size_t i = 0; i < table.codes.size(); ++i) {
      const LeafCode code{table.codes[i], table.depth};
      rows[code.to_string()] = table.rows[i];
    }
    jt["rows"] = std::move(rows);
    jtrees.push_back(std::move(jt));
  }
  j["trees"] = std::move(jtrees);
  write_file(path, j.dump(1) + "\n");
}

AttributionTable load_tables(const std::string& path) {
  const json j = parse_file(path);
  const json& ver = require(j, "version", path);
  if (!ver.is_number_integer() || ver.get<int>() != 1)
    throw FormatError(path + ": unsupported table file version");
  AttributionTable out;
  out.spec = game_spec_from_json(require(j, "game", path), path + ".game");
  const json& jtrees = require(j, "trees", path);
  if (!jtrees.is_array()) throw FormatError(path + ".trees: expected an array");
  for (std::size_t ti = 0; ti < jtrees.size(); ++ti) {
    const std::string ctx = path + ".trees[" + std::to_string(ti) + "]";
    const json& jt = jtrees[ti];
    TreeAttributionTable table;
    for (const auto& f : require(jt, "features", ctx)) table.feature_ids.push_back(f.get<int>());
    const json& rows = require(jt, "rows", ctx);
    if (!rows.is_object()) throw FormatError(ctx + ".rows: expected an object");
    std::vector<std::pair<std::uint32_t, std::vector<double>>> parsed;
    for (const auto& [key, value] : rows.items()) {
      LeafCode code;
      try {
        code = LeafCode::from_string(key);
      } catch (const std::exception& e) {
        throw FormatError(ctx + ".rows: " + e.what());
      }
      if (table.depth == 0) table.depth = code.width;
      if (code.width != table.depth)
        throw FormatError(ctx + ".rows: inconsistent leaf code widths");
      std::vector<double> row = read_double_array(value, ctx + ".rows." + key);
      if (row.size() != table.feature_ids.size())
        throw FormatError(ctx + ".rows." + key + ": row width must match the feature list");
      parsed.emplace_back(code.bits, std::move(row));
    }
    std::sort(parsed.begin(), parsed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [code, row] : parsed) {
      table.codes.push_back(code);
      table.rows.push_back(std::move(row));
    }
    out.trees.push_back(std::move(table));
  }
  return out;
}

CoefficientFamily load_alpha_table(const std::string& path) {
  const json j = parse_file(path);
  const json& rows = require(j, "alphas", path);
  CoefficientFamily family = CoefficientFamily::custom(alpha_rows_from_json(rows, path));
  if (j.contains("n") && j["n"].get<int>() != family.n_max())
    throw FormatError(path + ": 'n' does not match the number of alpha rows");
  if (!validate_backward_pascal(family, family.n_max()))
    throw FormatError(path + ": alpha table violates the backward Pascal identity");
  return family;
}

FeaturePartition load_partition(const std::string& path, int n_features) {
  const json j = parse_file(path);
  FeaturePartition p = partition_from_json(j, path);
  std::vector<char> listed(n_features, 0);
  for (const auto& block : p.blocks)
    for (int f : block) {
      if (f < 0 || f >= n_features)
        throw FormatError(path + ": feature index " + std::to_string(f) + " out of range");
      listed[f] = 1;
    }
  for (int f = 0; f < n_features; ++f)
    if (!listed[f]) p.blocks.push_back({f});
  try {
    p.validate(n_features);
  } catch (const std::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return p;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw FormatError("cannot format double");
  return std::string(buf, ptr);
}

}  // namespace oblivion
