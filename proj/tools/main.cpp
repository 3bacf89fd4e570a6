#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oblivion/bench.hpp"
#include "oblivion/engine.hpp"
#include "oblivion/io.hpp"
#include "oblivion/oracle.hpp"
#include "oblivion/repro.hpp"

namespace {

using namespace oblivion;

int thread_cap(int cli_threads) {
  if (cli_threads > 0) return cli_threads;
  if (const char* env = std::getenv("OBLIVION_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;  // engine default: hardware concurrency
}

GameValueSpec parse_game(const std::string& game, int n_features) {
  if (game == "shapley") return GameValueSpec::shapley();
  if (game == "banzhaf") return GameValueSpec::banzhaf();
  if (game.rfind("owen:", 0) == 0)
    return GameValueSpec::owen(load_partition(game.substr(5), n_features));
  if (game.rfind("custom:", 0) == 0)
    return GameValueSpec::generic(load_alpha_table(game.substr(7)));
  throw ConfigError("unknown game '" + game +
                    "' (expected shapley, banzhaf, owen:<file>, custom:<file>)");
}

Ensemble load_model_any(const std::string& path, const std::string& format,
                        const std::string& ref_path) {
  if (format == "canonical") {
    if (!ref_path.empty()) throw ConfigError("--ref applies to catboost-dump imports only");
    return load_model(path, ModelFormat::Canonical);
  }
  if (format != "catboost-dump") throw ConfigError("unknown model format '" + format + "'");
  if (ref_path.empty()) return import_catboost_dump(path).ensemble;
  // Reference CSV: feature columns followed by the expected raw prediction.
  Dataset refs = load_dataset(ref_path);
  if (refs.width() < 2) throw ConfigError("reference file needs features plus a prediction column");
  Dataset inputs;
  std::vector<double> preds;
  for (auto& row : refs.rows) {
    preds.push_back(row.back());
    row.pop_back();
    inputs.rows.push_back(std::move(row));
  }
  const CatBoostImport imported = import_catboost_dump(path, &inputs, &preds);
  std::cerr << "catboost import: leaf indexing validated "
            << (imported.reversed_leaf_indexing ? "reversed" : "as stored") << "\n";
  return imported.ensemble;
}

// Attach estimated probabilities to any tree that lacks them.
Ensemble ensure_probabilities(Ensemble ensemble, const std::string& data_path, bool header) {
  bool missing = false;
  for (const auto& t : ensemble.trees) missing = missing || !t.has_probabilities();
  if (!missing) return ensemble;
  if (data_path.empty())
    throw ConfigError("model has no embedded leaf probabilities; pass --data to estimate them");
  const Dataset data = load_dataset(data_path, header);
  for (auto& tree : ensemble.trees)
    if (!tree.has_probabilities())
      tree = tree.with_probabilities(estimate_leaf_probabilities(tree, data));
  return ensemble;
}

int run_precompute(const std::string& model_path, const std::string& format,
                   const std::string& ref_path, const std::string& data_path, bool header,
                   const std::string& game, const std::string& out_path, int threads) {
  Ensemble ensemble =
      ensure_probabilities(load_model_any(model_path, format, ref_path), data_path, header);
  const GameValueSpec spec = parse_game(game, ensemble.n_features);
  const AttributionTable tables = precompute_ensemble(ensemble, spec, thread_cap(threads));
  save_tables(tables, out_path);
  std::size_t rows = 0;
  for (const auto& t : tables.trees) rows += t.rows.size();
  std::cerr << "precomputed " << tables.trees.size() << " tables (" << rows << " rows) -> "
            << out_path << "\n";
  return 0;
}

int run_explain(const std::string& model_path, const std::string& format,
                const std::string& tables_path, const std::string& input_path, bool header,
                const std::string& data_path, const std::string& out_path) {
  const Ensemble ensemble =
      ensure_probabilities(load_model_any(model_path, format, ""), data_path, header);
  const AttributionTable tables = load_tables(tables_path);
  const Dataset inputs = load_dataset(input_path, header);
  const double mean = mean_prediction(ensemble);

  std::ofstream out(out_path);
  if (!out) throw FormatError(out_path + ": cannot open for writing");
  for (int i = 0; i < ensemble.n_features; ++i) out << "phi_" << i << ",";
  out << "sum_check\n";
  for (const auto& x : inputs.rows) {
    const std::vector<double> phi = explain(tables, ensemble, x);
    double total = 0.0;
    for (double v : phi) total += v;
    const double sum_check = total - (predict(ensemble, x) - mean);
    for (double v : phi) out << format_double(v) << ",";
    out << format_double(sum_check) << "\n";
  }
  std::cerr << "explained " << inputs.rows.size() << " rows -> " << out_path << "\n";
  return 0;
}

int run_verify(const std::string& model_path, const std::string& format,
               const std::string& data_path, bool header, const std::string& game,
               int max_players, double tolerance) {
  const Ensemble ensemble =
      ensure_probabilities(load_model_any(model_path, format, ""), data_path, header);
  const GameValueSpec spec = parse_game(game, ensemble.n_features);

  double worst = 0.0;
  std::size_t checked = 0, skipped = 0;
  for (const auto& tree : ensemble.trees) {
    const int k = tree.distinct_feature_count();
    if (k > max_players) {
      ++skipped;
      continue;
    }
    GameValueSpec tree_spec = spec;
    if (spec.is_coalitional()) {
      // Brute force runs on in-tree players, so restrict the partition.
      FeaturePartition induced;
      for (const auto& block : spec.partition.blocks) {
        std::vector<int> b;
        for (int q = 0; q < k; ++q) {
          const int global = tree.partition().group_feature[q];
          if (std::find(block.begin(), block.end(), global) != block.end()) b.push_back(q);
        }
        if (!b.empty()) induced.blocks.push_back(std::move(b));
      }
      tree_spec = GameValueSpec::coalitional(spec.family_outer, spec.family_inner, induced);
    }
    const TreeAttributionTable table = precompute_tree_table(tree, spec);
    for (std::size_t row = 0; row < table.codes.size(); ++row) {
      const LeafCode leaf{table.codes[row], tree.depth()};
      GameOracle game_oracle = closed_form_marginal_game(tree, leaf);
      const std::vector<double> reference = brute_force_value(game_oracle, tree_spec);
      for (int i = 0; i < k; ++i)
        worst = std::max(worst, std::abs(table.rows[row][i] - reference[i]));
      ++checked;
    }
  }
  std::cout << "verified " << checked << " leaves (" << skipped
            << " trees skipped by --max-players); max abs deviation " << format_double(worst)
            << "\n";
  return worst <= tolerance ? 0 : 1;
}

int run_bench(const std::string& depths, int trees, int batches, const std::string& out_path) {
  TimingConfig config;
  const auto sep = depths.find("..");
  if (sep != std::string::npos) {
    const int lo = std::stoi(depths.substr(0, sep));
    const int hi = std::stoi(depths.substr(sep + 2));
    for (int d = lo; d <= hi; ++d) config.depths.push_back(d);
  } else {
    std::size_t start = 0;
    while (start < depths.size()) {
      const std::size_t comma = depths.find(',', start);
      config.depths.push_back(std::stoi(depths.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (config.depths.empty()) throw ConfigError("no depths given");
  config.trees_per_ensemble = trees;
  config.explain_batches = batches;

  const std::vector<TimingRow> rows = timing_experiment(config, GameValueSpec::shapley());
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw FormatError(out_path + ": cannot open for writing");
    out = &file;
  }
  (*out) << "depth,precompute_per_tree_seconds,explain_per_point_seconds\n";
  for (const auto& r : rows)
    (*out) << r.depth << "," << format_double(r.precompute_per_tree_seconds) << ","
           << format_double(r.explain_per_point_seconds) << "\n";
  return 0;
}

int run_repro(const std::string& example) {
  if (example == "3.1") {
    const auto r = repro::run_non_invariance();
    std::cout << "path-dependent 2*dphi on the upper-left cell: tree1 = "
              << format_double(r.treeshap_delta_t1)
              << " (expected -0.24071), tree2 = " << format_double(r.treeshap_delta_t2)
              << " (expected +0.1665)\n";
    std::cout << "marginal 2*dphi, both trees: " << format_double(r.marginal_delta_t1) << ", "
              << format_double(r.marginal_delta_t2) << " (expected -0.0498)\n";
    std::cout << (r.pass ? "PASS" : "FAIL") << "\n";
    return r.pass ? 0 : 1;
  }
  if (example == "3.6") {
    const auto r = repro::run_repeated_feature();
    std::cout << "realizable codes:";
    for (const auto c : r.realizable) std::cout << " " << LeafCode{c, 3}.to_string();
    std::cout << " (expected 000 100 010 110 101 111)\n";
    std::cout << "leaf 110 attributions: x1 = " << format_double(r.phi_x1)
              << " (expected 0.5), x2 = " << format_double(r.phi_x2)
              << " (expected 0.8333...), banzhaf x1 = " << format_double(r.phi_x1_banzhaf)
              << "\n";
    std::cout << "hand expansion for x1: " << format_double(r.hand_expansion) << "\n";
    std::cout << "terms per feature, depth-3 distinct tree: " << r.distinct_tree_terms
              << " (expected 18)\n";
    std::cout << (r.pass ? "PASS" : "FAIL") << "\n";
    return r.pass ? 0 : 1;
  }
  if (example == "C.2") {
    const auto r = repro::run_eject();
    std::cout << "eject game value for {x0}: tree1 = " << format_double(r.v1_t1)
              << " (expected 1.5), tree2 = " << format_double(r.v1_t2) << " (expected 0.75)\n";
    std::cout << "eject 2*dphi: tree1 = " << format_double(r.delta_t1)
              << ", tree2 = " << format_double(r.delta_t2) << " (expected opposite signs)\n";
    std::cout << (r.pass ? "PASS" : "FAIL") << "\n";
    return r.pass ? 0 : 1;
  }
  throw ConfigError("unknown example '" + example + "' (expected 3.1, 3.6, or C.2)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact marginal Shapley/Banzhaf/Owen attributions for oblivious tree ensembles"};
  app.require_subcommand(1);

  std::string model_path, format = "canonical", ref_path, data_path, game = "shapley";
  std::string tables_path, input_path, out_path, depths = "4..12", example;
  bool header = false;
  int threads = 0, max_players = 12, trees = 100, batches = 5;
  double tolerance = 1e-9;

  auto* precompute = app.add_subcommand("precompute", "Build per-leaf attribution tables");
  precompute->add_option("--model", model_path)->required();
  precompute->add_option("--format", format)->check(CLI::IsMember({"canonical", "catboost-dump"}));
  precompute->add_option("--ref", ref_path, "reference predictions CSV for catboost imports");
  precompute->add_option("--data", data_path, "CSV used to estimate leaf probabilities");
  precompute->add_flag("--header", header);
  precompute->add_option("--game", game);
  precompute->add_option("--out", out_path)->required();
  precompute->add_option("--threads", threads);

  auto* explain_cmd = app.add_subcommand("explain", "Attribute predictions via saved tables");
  explain_cmd->add_option("--model", model_path)->required();
  explain_cmd->add_option("--format", format)->check(CLI::IsMember({"canonical", "catboost-dump"}));
  explain_cmd->add_option("--tables", tables_path)->required();
  explain_cmd->add_option("--input", input_path)->required();
  explain_cmd->add_option("--data", data_path, "CSV used to estimate leaf probabilities");
  explain_cmd->add_flag("--header", header);
  explain_cmd->add_option("--out", out_path)->required();

  auto* verify = app.add_subcommand("verify", "Check tables against brute-force game values");
  verify->add_option("--model", model_path)->required();
  verify->add_option("--format", format)->check(CLI::IsMember({"canonical", "catboost-dump"}));
  verify->add_option("--data", data_path);
  verify->add_flag("--header", header);
  verify->add_option("--game", game);
  verify->add_option("--max-players", max_players);
  verify->add_option("--tolerance", tolerance);

  auto* bench = app.add_subcommand("bench", "Timing sweep over synthetic ensembles");
  bench->add_option("--depths", depths, "range lo..hi or comma list");
  bench->add_option("--trees", trees);
  bench->add_option("--batches", batches, "explain timing repetitions (>= 5 for medians)");
  bench->add_option("--out", out_path, "CSV destination (default stdout)");

  auto* repro_cmd = app.add_subcommand("repro", "Re-derive a bundled reference scenario");
  repro_cmd->add_option("--example", example)->required()
      ->check(CLI::IsMember({"3.1", "3.6", "C.2"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(precompute))
      return run_precompute(model_path, format, ref_path, data_path, header, game, out_path,
                            threads);
    if (app.got_subcommand(explain_cmd))
      return run_explain(model_path, format, tables_path, input_path, header, data_path, out_path);
    if (app.got_subcommand(verify))
      return run_verify(model_path, format, data_path, header, game, max_players, tolerance);
    if (app.got_subcommand(bench)) return run_bench(depths, trees, batches, out_path);
    if (app.got_subcommand(repro_cmd)) return run_repro(example);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
