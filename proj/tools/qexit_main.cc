// qexit: query-level early-exit analysis for additive tree ensembles.

#include <exception>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "qexit/cli.h"

namespace {

void add_model_flags(CLI::App* cmd, qexit::RunConfig& cfg) {
  static const std::map<std::string, qexit::ModelFormat> formats{
      {"text", qexit::ModelFormat::kText},
      {"canonical", qexit::ModelFormat::kCanonical}};
  cmd->add_option("--model", cfg.model_path, "Model file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--model-format", cfg.model_format, "text (LightGBM dump) or canonical (JSON)")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
  cmd->add_option("--text-feature-offset", cfg.text_feature_offset,
                  "Added to 0-based trainer feature ids to get LETOR ids")
      ->capture_default_str();
}

void add_analysis_flags(CLI::App* cmd, qexit::RunConfig& cfg) {
  static const std::map<std::string, qexit::ZeroIdcgPolicy> policies{
      {"zero", qexit::ZeroIdcgPolicy::kZero}, {"exclude", qexit::ZeroIdcgPolicy::kExclude}};
  static const std::map<std::string, qexit::SpeedupWeighting> weightings{
      {"queries", qexit::SpeedupWeighting::kQueries},
      {"documents", qexit::SpeedupWeighting::kDocuments}};
  cmd->add_option("--k", cfg.k, "NDCG cutoff")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--stride", cfg.stride, "Checkpoint stride in trees")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--first-tree", cfg.first_tree, "Also checkpoint after tree 1");
  cmd->add_option("--epsilon", cfg.epsilon, "Flatness tolerance for the query taxonomy")
      ->capture_default_str();
  cmd->add_option("--zero-idcg", cfg.zero_idcg, "Queries without relevant documents: zero|exclude")
      ->transform(CLI::CheckedTransformer(policies, CLI::ignore_case));
  cmd->add_option("--speedup-weighting", cfg.speedup_weighting,
                  "Overall speedup weights: queries|documents")
      ->transform(CLI::CheckedTransformer(weightings, CLI::ignore_case));
  cmd->add_option("--max-label", cfg.max_label, "Largest relevance grade")->capture_default_str();
  cmd->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
  cmd->add_option("--out-dir", cfg.out_dir, "Output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query-level early-exit analysis for additive tree ensembles"};
  app.require_subcommand(1);
  qexit::RunConfig cfg;

  auto* score = app.add_subcommand("score", "Per-query NDCG of the full model");
  add_model_flags(score, cfg);
  add_analysis_flags(score, cfg);
  score->add_option("--test", cfg.test_path, "LETOR file to score")->required();

  auto* oracle = app.add_subcommand("oracle", "Ideal per-query exit analysis");
  add_model_flags(oracle, cfg);
  add_analysis_flags(oracle, cfg);
  oracle->add_option("--test", cfg.test_path, "LETOR file to analyze")->required();

  auto* classify = app.add_subcommand("classify", "Six-class NDCG trajectory taxonomy");
  add_model_flags(classify, cfg);
  add_analysis_flags(classify, cfg);
  classify->add_option("--test", cfg.test_path, "LETOR file to analyze")->required();

  auto* place = app.add_subcommand("place-sentinels", "Exhaustive sentinel placement");
  add_model_flags(place, cfg);
  add_analysis_flags(place, cfg);
  place->add_option("--valid", cfg.valid_path, "Split the placement is searched on");
  place->add_option("--test", cfg.test_path,
                    "Split the winner is evaluated on (searched on when --valid is absent)");
  place->add_option("--num-sentinels", cfg.num_sentinels, "Sentinels to place")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* evaluate = app.add_subcommand("evaluate", "Report for explicit sentinel positions");
  add_model_flags(evaluate, cfg);
  add_analysis_flags(evaluate, cfg);
  evaluate->add_option("--test", cfg.test_path, "LETOR file to evaluate on")->required();
  evaluate->add_option("--sentinels", cfg.sentinels, "Sentinel trees, e.g. 25,300")
      ->required()
      ->delimiter(',');

  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic model and datasets");
  gen->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  gen->add_option("--out-dir", cfg.out_dir, "Output directory")->capture_default_str();
  gen->add_option("--num-trees", cfg.gen_trees)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--depth", cfg.gen_depth)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--num-features", cfg.gen_features)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--num-queries", cfg.gen_queries)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--docs-per-query", cfg.gen_docs)->capture_default_str()->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (score->parsed()) qexit::cmd_score(cfg, std::cout);
    if (oracle->parsed()) qexit::cmd_oracle(cfg, std::cout);
    if (classify->parsed()) qexit::cmd_classify(cfg, std::cout);
    if (place->parsed()) qexit::cmd_place(cfg, std::cout);
    if (evaluate->parsed()) qexit::cmd_evaluate(cfg, std::cout);
    if (gen->parsed()) qexit::cmd_gen(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "qexit: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
