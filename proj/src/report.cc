#include "qexit/report.h"

#include <algorithm>
#include <array>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

namespace qexit {

namespace {

std::string group_label(const GroupRow& row, std::size_t ensemble_size,
                        std::span<const std::size_t> sentinels,
                        std::size_t ordinal) {
  if (row.exit_position == ensemble_size) return "L";
  if (!sentinels.empty()) {
    auto it = std::find(sentinels.begin(), sentinels.end(), row.exit_position);
    if (it != sentinels.end()) {
      return fmt::format("{}", (it - sentinels.begin()) + 1);
    }
  }
  return fmt::format("{}", ordinal + 1);
}

double share_pct(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0
                    : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

struct Cells {
  std::string group, exit_tree, queries, queries_pct, ndcg_full, ndcg_exit,
      gain, speedup, ndcg_full_raw, ndcg_exit_raw, gain_raw, speedup_raw;
};

Cells make_cells(std::string group, std::string exit_tree, std::size_t queries,
                 std::size_t total, double ndcg_full, double ndcg_exit,
                 double speedup) {
  const double gain = relative_gain_pct(ndcg_full, ndcg_exit);
  return Cells{std::move(group),
               std::move(exit_tree),
               fmt::format("{}", queries),
               fmt::format("{:.0f}%", share_pct(queries, total)),
               fmt::format("{:.4f}", ndcg_full),
               fmt::format("{:.4f}", ndcg_exit),
               fmt::format("{:+.1f}%", gain),
               fmt::format("{:.1f}x", speedup),
               fmt::format("{}", ndcg_full),
               fmt::format("{}", ndcg_exit),
               fmt::format("{}", gain),
               fmt::format("{}", speedup)};
}

std::vector<Cells> report_cells(std::span<const GroupRow> rows,
                                const OverallRecord& overall,
                                std::size_t ensemble_size,
                                std::span<const std::size_t> sentinels) {
  std::vector<Cells> cells;
  std::size_t ordinal = 0;
  for (const auto& row : rows) {
    cells.push_back(make_cells(group_label(row, ensemble_size, sentinels, ordinal),
                               fmt::format("{}", row.exit_position),
                               row.num_queries, overall.num_queries,
                               row.ndcg_full, row.ndcg_exit, row.speedup));
    if (row.exit_position != ensemble_size) ++ordinal;
  }
  cells.push_back(make_cells("Overall", "-", overall.num_queries,
                             overall.num_queries, overall.ndcg_full,
                             overall.ndcg_exit, overall.speedup));
  return cells;
}

}  // namespace

std::string join_positions(std::span<const std::size_t> positions) {
  return fmt::format("{}", fmt::join(positions, ","));
}

std::string format_report_tsv(std::span<const GroupRow> rows,
                              const OverallRecord& overall,
                              std::size_t ensemble_size,
                              std::span<const std::size_t> sentinels) {
  std::string out =
      "group\texit_tree\tqueries\tqueries_pct\tndcg_full\tndcg_exit\tgain\t"
      "speedup\tndcg_full_raw\tndcg_exit_raw\tgain_pct_raw\tspeedup_raw\n";
  for (const auto& c : report_cells(rows, overall, ensemble_size, sentinels)) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", c.group,
                       c.exit_tree, c.queries, c.queries_pct, c.ndcg_full,
                       c.ndcg_exit, c.gain, c.speedup, c.ndcg_full_raw,
                       c.ndcg_exit_raw, c.gain_raw, c.speedup_raw);
  }
  return out;
}

std::string format_report_text(std::span<const GroupRow> rows,
                               const OverallRecord& overall,
                               std::size_t ensemble_size,
                               std::span<const std::size_t> sentinels) {
  std::string out = fmt::format("{:<18} {:>14} {:>8} {:>18} {:>9}\n", "# sentinel",
                                "# queries", "NDCG L", "NDCG sentinel", "speedup");
  for (const auto& c : report_cells(rows, overall, ensemble_size, sentinels)) {
    const std::string where =
        c.group == "Overall" ? c.group : fmt::format("{} @ tree={}", c.group, c.exit_tree);
    out += fmt::format("{:<18} {:>14} {:>8} {:>18} {:>9}\n", where,
                       fmt::format("{} ({})", c.queries, c.queries_pct),
                       c.ndcg_full, fmt::format("{} ({})", c.ndcg_exit, c.gain),
                       c.speedup);
  }
  return out;
}

std::string format_report_json(const EvaluationReport& report,
                               const std::string& split) {
  using nlohmann::json;
  const std::size_t L = report.config.ensemble_size();
  json doc;
  doc["split"] = split;
  doc["ensemble_size"] = L;
  doc["sentinels"] = report.config.positions();
  auto& rows = doc["rows"] = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"exit_tree", r.exit_position},
                    {"terminal", r.exit_position == L},
                    {"num_queries", r.num_queries},
                    {"num_documents", r.num_documents},
                    {"ndcg_full", r.ndcg_full},
                    {"ndcg_exit", r.ndcg_exit},
                    {"gain_pct", relative_gain_pct(r.ndcg_full, r.ndcg_exit)},
                    {"speedup", r.speedup}});
  }
  doc["overall"] = {{"num_queries", report.overall.num_queries},
                    {"ndcg_full", report.overall.ndcg_full},
                    {"ndcg_exit", report.overall.ndcg_exit},
                    {"gain_pct", report.overall.gain_pct},
                    {"speedup", report.overall.speedup}};
  auto& exits = doc["per_query_exits"] = json::array();
  for (const auto& d : report.per_query) {
    exits.push_back({{"query_id", d.query_id},
                     {"exit_tree", d.exit_position},
                     {"exit_ndcg", d.exit_ndcg},
                     {"full_ndcg", d.full_ndcg}});
  }
  return doc.dump(2) + "\n";
}

std::string format_query_exits_tsv(std::span<const ExitDecision> decisions) {
  std::string out = "query_id\texit_position\texit_ndcg\tfull_ndcg\n";
  for (const auto& d : decisions) {
    out += fmt::format("{}\t{}\t{}\t{}\n", d.query_id, d.exit_position,
                       d.exit_ndcg, d.full_ndcg);
  }
  return out;
}

std::string format_oracle_tsv(std::span<const OracleExit> exits,
                              std::span<const QueryClass> classes) {
  std::string out = "query_id\tclass\texit_position\texit_ndcg\tfull_ndcg\n";
  for (std::size_t q = 0; q < exits.size(); ++q) {
    const auto& e = exits[q];
    const std::string cls =
        classes.empty() ? "NA" : fmt::format("{}", class_number(classes[q]));
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", e.query_id, cls, e.exit_position,
                       e.exit_ndcg, e.full_ndcg);
  }
  return out;
}

std::string format_histogram_tsv(const std::map<std::size_t, std::size_t>& bins) {
  std::string out = "bin_start\tcount\n";
  for (auto [start, count] : bins) out += fmt::format("{}\t{}\n", start, count);
  return out;
}

std::string format_curve_tsv(std::span<const OracleCurvePoint> curve) {
  std::string out = "tree\tfull_mean_ndcg\tcapped_oracle_mean_ndcg\texit_count\n";
  for (const auto& p : curve) {
    out += fmt::format("{}\t{}\t{}\t{}\n", p.position, p.full_mean_ndcg,
                       p.capped_oracle_mean_ndcg, p.exit_count);
  }
  return out;
}

std::string format_classes_tsv(std::span<const NdcgTrajectory> trajs,
                               std::span<const QueryClass> classes) {
  std::string out =
      "query_id\tclass\tcategory\tfirst_ndcg\tlast_ndcg\tmax_ndcg\tmin_ndcg\n";
  for (std::size_t q = 0; q < trajs.size(); ++q) {
    const auto& v = trajs[q].values;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", trajs[q].query_id,
                       class_number(classes[q]),
                       category_name(category_of(classes[q])), v.front(),
                       v.back(), *hi, *lo);
  }
  return out;
}

std::string format_class_counts_tsv(std::span<const QueryClass> classes) {
  std::array<std::size_t, 7> counts{};
  for (auto c : classes) ++counts[class_number(c)];
  std::string out = "class\tcategory\tcount\n";
  for (int c = 1; c <= 6; ++c) {
    out += fmt::format("{}\t{}\t{}\n", c,
                       category_name(category_of(static_cast<QueryClass>(c))),
                       counts[c]);
  }
  return out;
}

std::string format_placements_tsv(std::span<const RankedConfig> ranking) {
  std::string out = "rank\tsentinels\tobjective\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    out += fmt::format("{}\t{}\t{}\n", i + 1, join_positions(ranking[i].positions),
                       ranking[i].objective);
  }
  return out;
}

}  // namespace qexit
