#ifndef QEXIT_REPORT_H_
#define QEXIT_REPORT_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qexit/exitlab.h"
#include "qexit/sentinel.h"

namespace qexit {

// Tab-separated outputs. Every table has one header line; floating values
// appear rounded the way the sentinel tables are usually printed and, in
// *_raw columns, in shortest round-trip form.

/// Sentinel report in the shape of a per-exit-group table:
///   group exit_tree queries queries_pct ndcg_full ndcg_exit gain speedup
///   ndcg_full_raw ndcg_exit_raw gain_pct_raw speedup_raw
/// followed by an "Overall" row. Groups are numbered by their index in
/// `sentinels` (1-based) and "L" for the full ensemble; with no sentinels
/// given, non-terminal rows are numbered in order.
std::string format_report_tsv(std::span<const GroupRow> rows,
                              const OverallRecord& overall,
                              std::size_t ensemble_size,
                              std::span<const std::size_t> sentinels = {});

/// Human-readable fixed-width version of the same table.
std::string format_report_text(std::span<const GroupRow> rows,
                               const OverallRecord& overall,
                               std::size_t ensemble_size,
                               std::span<const std::size_t> sentinels = {});

/// JSON document with config, rows, overall and per-query exits. `split`
/// names the data the report was computed on.
std::string format_report_json(const EvaluationReport& report,
                               const std::string& split);

std::string format_query_exits_tsv(std::span<const ExitDecision> decisions);

/// query_id class exit_position exit_ndcg full_ndcg. `classes` may be empty,
/// in which case the class column holds "NA".
std::string format_oracle_tsv(std::span<const OracleExit> exits,
                              std::span<const QueryClass> classes);

std::string format_histogram_tsv(const std::map<std::size_t, std::size_t>& bins);

std::string format_curve_tsv(std::span<const OracleCurvePoint> curve);

std::string format_classes_tsv(std::span<const NdcgTrajectory> trajs,
                               std::span<const QueryClass> classes);

std::string format_class_counts_tsv(std::span<const QueryClass> classes);

std::string format_placements_tsv(std::span<const RankedConfig> ranking);

/// Comma-separated positions, e.g. "25,300".
std::string join_positions(std::span<const std::size_t> positions);

}  // namespace qexit

#endif  // QEXIT_REPORT_H_
