#include "qexit/cli.h"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>
#include <json.hpp>

#include "qexit/exitlab.h"
#include "qexit/ingest.h"
#include "qexit/parallel.h"
#include "qexit/report.h"
#include "qexit/scorer.h"
#include "qexit/sentinel.h"
#include "qexit/synthetic.h"

namespace qexit {

namespace {

namespace fs = std::filesystem;

using OutputFiles = std::vector<std::pair<std::string, std::string>>;

void write_outputs(const std::string& out_dir, const OutputFiles& files) {
  fs::create_directories(out_dir);
  for (const auto& [name, content] : files) {
    const auto path = fs::path(out_dir) / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path.string());
  }
}

Ensemble load_model(const RunConfig& config) {
  if (config.model_path.empty()) throw std::invalid_argument("--model is required");
  TextModelOptions opts;
  opts.feature_offset = config.text_feature_offset;
  return read_model_file(config.model_path, config.model_format, opts);
}

struct Split {
  std::string name;
  RankingDataset dataset;
  std::vector<NdcgTrajectory> trajs;
  std::vector<std::size_t> documents;
  std::size_t zero_idcg = 0;
};

RankingDataset load_dataset(const std::string& path, const std::string& flag,
                            const RunConfig& config, const Ensemble& e,
                            std::ostream& log) {
  if (path.empty()) throw std::invalid_argument(flag + " is required");
  LetorOptions opts;
  opts.max_label = config.max_label;
  std::vector<std::string> warnings;
  auto ds = read_letor_file(path, opts, &warnings);
  for (const auto& w : warnings) log << "warning: " << path << ": " << w << "\n";
  if (ds.groups.empty()) throw std::invalid_argument(path + ": dataset is empty");
  pad_features(ds, e.num_features());
  return ds;
}

/// Scores every query at `cps` and turns the rows into NDCG trajectories,
/// applying the zero-IDCG policy.
Split analyze(std::string name, RankingDataset ds, const Ensemble& e,
              const CheckpointSet& cps, const RunConfig& config) {
  if (config.k < 1) throw std::invalid_argument("--k must be >= 1");
  std::vector<std::optional<NdcgTrajectory>> slots(ds.groups.size());
  parallel_for(ds.groups.size(), config.threads, [&](std::size_t q) {
    const auto m = score_prefixes(e, ds.groups[q], cps);
    const auto labels = ds.groups[q].labels();
    slots[q].emplace(ndcg_trajectory(m, labels, config.k));
  });

  Split split;
  split.name = std::move(name);
  for (std::size_t q = 0; q < slots.size(); ++q) {
    auto& traj = *slots[q];
    if (traj.zero_idcg) {
      ++split.zero_idcg;
      if (config.zero_idcg == ZeroIdcgPolicy::kExclude) continue;
    }
    split.trajs.push_back(std::move(traj));
    split.documents.push_back(ds.groups[q].documents.size());
  }
  split.dataset = std::move(ds);
  if (split.trajs.empty()) {
    throw std::invalid_argument(split.name + ": no queries left to analyze");
  }
  return split;
}

void log_split(std::ostream& log, const Split& s, const RunConfig& config) {
  log << fmt::format("{}: {} queries, {} documents, {} with no relevant document{}\n",
                     s.name, s.dataset.groups.size(), s.dataset.num_documents(),
                     s.zero_idcg,
                     config.zero_idcg == ZeroIdcgPolicy::kExclude ? " (excluded)"
                                                                  : " (NDCG 0)");
}

std::vector<double> final_values(std::span<const NdcgTrajectory> trajs) {
  std::vector<double> v;
  v.reserve(trajs.size());
  for (const auto& t : trajs) v.push_back(t.final_value());
  return v;
}

std::vector<QueryClass> classify_all(std::span<const NdcgTrajectory> trajs,
                                     double epsilon) {
  std::vector<QueryClass> classes;
  classes.reserve(trajs.size());
  for (const auto& t : trajs) classes.push_back(classify_query(t, epsilon));
  return classes;
}

CheckpointSet grid_checkpoints(const RunConfig& config, const Ensemble& e) {
  return make_checkpoints(e.size(), config.stride, config.first_tree);
}

void add_report_files(OutputFiles& files, const EvaluationReport& report,
                      const std::string& split) {
  const std::size_t L = report.config.ensemble_size();
  files.emplace_back("report.tsv",
                     format_report_tsv(report.rows, report.overall, L,
                                       report.config.positions()));
  files.emplace_back("report.json", format_report_json(report, split));
  files.emplace_back("query_exits.tsv", format_query_exits_tsv(report.per_query));
}

}  // namespace

void cmd_score(const RunConfig& config, std::ostream& log) {
  const auto e = load_model(config);
  auto ds = load_dataset(config.test_path, "--test", config, e, log);
  const auto stats = dataset_stats(ds);
  const CheckpointSet cps({e.size()}, e.size());
  auto split = analyze("test", std::move(ds), e, cps, config);

  std::string scores = "query_id\tnum_documents\tndcg\tzero_idcg\n";
  for (std::size_t q = 0; q < split.trajs.size(); ++q) {
    const auto& t = split.trajs[q];
    scores += fmt::format("{}\t{}\t{}\t{}\n", t.query_id, split.documents[q],
                          t.final_value(), t.zero_idcg ? 1 : 0);
  }

  std::size_t max_depth = 0;
  for (const auto& t : e.trees()) max_depth = std::max(max_depth, t.depth());
  const double mean = mean_ndcg(final_values(split.trajs));
  std::string summary = "key\tvalue\n";
  summary += fmt::format("num_queries\t{}\n", stats.num_queries);
  summary += fmt::format("num_documents\t{}\n", stats.num_documents);
  summary += fmt::format("num_features\t{}\n", stats.num_features);
  for (auto [label, count] : stats.label_histogram) {
    summary += fmt::format("label_{}\t{}\n", label, count);
  }
  summary += fmt::format("model_trees\t{}\n", e.size());
  summary += fmt::format("model_features\t{}\n", e.num_features());
  summary += fmt::format("model_max_depth\t{}\n", max_depth);
  summary += fmt::format("k\t{}\n", config.k);
  summary += fmt::format("zero_idcg_queries\t{}\n", split.zero_idcg);
  summary += fmt::format("zero_idcg_policy\t{}\n",
                         config.zero_idcg == ZeroIdcgPolicy::kExclude ? "exclude" : "zero");
  summary += fmt::format("mean_ndcg\t{}\n", mean);

  write_outputs(config.out_dir, {{"scores.tsv", scores}, {"stats.tsv", summary}});
  log_split(log, split, config);
  log << fmt::format("mean NDCG@{} of the full model: {:.4f}\n", config.k, mean);
}

void cmd_oracle(const RunConfig& config, std::ostream& log) {
  const auto e = load_model(config);
  auto ds = load_dataset(config.test_path, "--test", config, e, log);
  const auto cps = grid_checkpoints(config, e);
  auto split = analyze("test", std::move(ds), e, cps, config);

  std::vector<OracleExit> exits;
  exits.reserve(split.trajs.size());
  for (const auto& t : split.trajs) exits.push_back(oracle_exit(t));
  std::vector<QueryClass> classes;
  if (cps.size() >= 2) classes = classify_all(split.trajs, config.epsilon);
  const auto curve = oracle_curve(split.trajs, exits);

  std::vector<double> oracle_values;
  double exit_sum = 0.0;
  for (const auto& x : exits) {
    oracle_values.push_back(x.exit_ndcg);
    exit_sum += static_cast<double>(x.exit_position);
  }
  const double full_mean = mean_ndcg(final_values(split.trajs));
  const double oracle_mean = mean_ndcg(oracle_values);
  const double oracle_speedup =
      static_cast<double>(e.size()) / (exit_sum / static_cast<double>(exits.size()));

  std::string summary = "key\tvalue\n";
  summary += fmt::format("num_queries\t{}\n", exits.size());
  summary += fmt::format("zero_idcg_queries\t{}\n", split.zero_idcg);
  summary += fmt::format("checkpoints\t{}\n", cps.size());
  summary += fmt::format("full_mean_ndcg\t{}\n", full_mean);
  summary += fmt::format("oracle_mean_ndcg\t{}\n", oracle_mean);
  summary += fmt::format("gain_pct\t{}\n", relative_gain_pct(full_mean, oracle_mean));
  summary += fmt::format("oracle_speedup\t{}\n", oracle_speedup);

  write_outputs(config.out_dir,
                {{"oracle_exits.tsv", format_oracle_tsv(exits, classes)},
                 {"exit_histogram.tsv", format_histogram_tsv(exit_histogram(exits, 1))},
                 {"oracle_curve.tsv", format_curve_tsv(curve)},
                 {"oracle_summary.tsv", summary}});
  log_split(log, split, config);
  log << fmt::format(
      "mean NDCG@{}: full model {:.4f}, ideal exit {:.4f} ({:+.1f}%), speedup {:.1f}x\n",
      config.k, full_mean, oracle_mean, relative_gain_pct(full_mean, oracle_mean),
      oracle_speedup);
}

void cmd_classify(const RunConfig& config, std::ostream& log) {
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("--epsilon must be > 0");
  const auto e = load_model(config);
  auto ds = load_dataset(config.test_path, "--test", config, e, log);
  const auto cps = grid_checkpoints(config, e);
  if (cps.size() < 2) {
    throw std::invalid_argument("classification needs at least two checkpoints");
  }
  auto split = analyze("test", std::move(ds), e, cps, config);
  const auto classes = classify_all(split.trajs, config.epsilon);
  const auto counts = format_class_counts_tsv(classes);

  write_outputs(config.out_dir,
                {{"classes.tsv", format_classes_tsv(split.trajs, classes)},
                 {"class_counts.tsv", counts}});
  log_split(log, split, config);
  log << counts;
}

void cmd_place(const RunConfig& config, std::ostream& log) {
  const auto e = load_model(config);
  const bool same_split = config.valid_path.empty();
  const std::string search_path = same_split ? config.test_path : config.valid_path;
  const std::string search_name =
      same_split ? "test (same-split, exploratory)" : "validation";
  auto search_ds = load_dataset(search_path, same_split ? "--valid or --test" : "--valid",
                                config, e, log);
  std::optional<RankingDataset> test_ds;
  if (!same_split && !config.test_path.empty()) {
    test_ds = load_dataset(config.test_path, "--test", config, e, log);
  }

  const auto cps = grid_checkpoints(config, e);
  std::vector<std::size_t> candidates(cps.positions().begin(),
                                      cps.positions().end() - 1);
  if (candidates.size() < config.num_sentinels) {
    throw std::invalid_argument(fmt::format(
        "{} candidate positions cannot hold {} sentinels", candidates.size(),
        config.num_sentinels));
  }
  auto split = analyze(search_name, std::move(search_ds), e, cps, config);
  const auto placement =
      search_placements(config.num_sentinels, candidates, split.trajs, config.threads);

  nlohmann::json winner;
  winner["split"] = search_name;
  winner["same_split"] = same_split;
  winner["num_sentinels"] = config.num_sentinels;
  winner["candidates"] = candidates;
  winner["num_configs"] = placement.ranking.size();
  winner["sentinels"] = placement.best.positions;
  winner["objective"] = placement.best.objective;
  winner["full_mean_ndcg"] = mean_ndcg(final_values(split.trajs));

  OutputFiles files{{"placements.tsv", format_placements_tsv(placement.ranking)},
                    {"placement.json", winner.dump(2) + "\n"}};
  std::optional<EvaluationReport> report;
  if (test_ds) {
    auto test = analyze("test", std::move(*test_ds), e, cps, config);
    report = evaluate_config(SentinelConfig(placement.best.positions, e.size()),
                             test.trajs, config.speedup_weighting, test.documents);
    add_report_files(files, *report, "test");
  }
  write_outputs(config.out_dir, files);

  log_split(log, split, config);
  log << fmt::format("best placement on {}: {} (mean NDCG@{} {:.4f}) out of {} configs\n",
                     search_name, join_positions(placement.best.positions), config.k,
                     placement.best.objective, placement.ranking.size());
  if (report) {
    log << "test split evaluation:\n"
        << format_report_text(report->rows, report->overall, e.size(),
                              report->config.positions());
  }
}

void cmd_evaluate(const RunConfig& config, std::ostream& log) {
  const auto e = load_model(config);
  if (config.sentinels.empty()) throw std::invalid_argument("--sentinels is required");
  const SentinelConfig sentinel_config(config.sentinels, e.size());
  auto ds = load_dataset(config.test_path, "--test", config, e, log);
  const CheckpointSet cps(sentinel_config.exit_points(), e.size());
  auto split = analyze("test", std::move(ds), e, cps, config);
  const auto report = evaluate_config(sentinel_config, split.trajs,
                                      config.speedup_weighting, split.documents);
  OutputFiles files;
  add_report_files(files, report, "test");
  write_outputs(config.out_dir, files);

  log_split(log, split, config);
  log << format_report_text(report.rows, report.overall, e.size(),
                            sentinel_config.positions());
}

void cmd_gen(const RunConfig& config, std::ostream& log) {
  const auto e = generate_synthetic_ensemble(config.gen_trees, config.gen_depth,
                                             config.gen_features, config.seed);
  SyntheticDatasetOptions opts;
  opts.num_queries = config.gen_queries;
  opts.docs_per_query = config.gen_docs;
  opts.seed = config.seed ^ 0x9e3779b97f4a7c15ULL;
  const auto test = generate_synthetic_dataset(e, opts);
  opts.seed = config.seed ^ 0xc2b2ae3d27d4eb4fULL;
  const auto valid = generate_synthetic_dataset(e, opts);

  std::ostringstream model_text;
  write_canonical_model(e, model_text);
  std::ostringstream test_text;
  write_letor(test, test_text);
  std::ostringstream valid_text;
  write_letor(valid, valid_text);
  write_outputs(config.out_dir, {{"model.json", model_text.str()},
                                 {"test.letor", test_text.str()},
                                 {"valid.letor", valid_text.str()}});
  log << fmt::format("generated {} trees (depth <= {}, {} features), {} + {} queries "
                     "of {} documents\n",
                     e.size(), config.gen_depth, e.num_features(), test.groups.size(),
                     valid.groups.size(), config.gen_docs);
}

}  // namespace qexit
