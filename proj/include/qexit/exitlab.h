#ifndef QEXIT_EXITLAB_H_
#define QEXIT_EXITLAB_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qexit/metrics.h"

namespace qexit {

/// Best exit point of one query given its labels: the earliest checkpoint
/// attaining the trajectory maximum.
struct OracleExit {
  std::string query_id;
  std::size_t exit_position = 0;
  double exit_ndcg = 0.0;
  double full_ndcg = 0.0;
};

OracleExit oracle_exit(const NdcgTrajectory& traj);

/// Counts exits per bin. Bins are keyed by their first tree:
/// [1, w], [w + 1, 2w], ... so with w = 1 the key is the exit position.
std::map<std::size_t, std::size_t> exit_histogram(
    std::span<const OracleExit> exits, std::size_t bin_width);

// Trajectory shapes. 1-2 worsen toward the end of the ensemble, 3-4 stay flat,
// 5-6 improve.
enum class QueryClass {
  kDecreasing = 1,         // falls steadily
  kRiseThenFallBelow = 2,  // peaks, then ends below where it started
  kFlat = 3,
  kFlatWithBumps = 4,      // same start and end, local excursions between
  kIncreasing = 5,
  kRiseThenFall = 6,       // ends above the start but after an earlier peak
};

enum class QueryCategory { kWorsening, kFlat, kImproving };

inline constexpr double kDefaultClassEpsilon = 0.01;

QueryCategory category_of(QueryClass c);
std::string_view category_name(QueryCategory c);
inline int class_number(QueryClass c) { return static_cast<int>(c); }

/// Total over trajectories of length >= 2. With s, e, M, m the first, last,
/// max and min values: flat if M - m <= eps; flat-with-bumps if |e - s| <= eps;
/// otherwise worsening or improving by the sign of e - s, split on whether an
/// interior peak rises more than eps above the higher endpoint.
QueryClass classify_query(const NdcgTrajectory& traj,
                          double epsilon = kDefaultClassEpsilon);

/// Cost ratio of a full traversal to one stopped after `exit_position` trees.
double speedup(std::size_t ensemble_size, std::size_t exit_position);

/// (exit / full - 1) * 100. Zero when full is zero.
double relative_gain_pct(double ndcg_full, double ndcg_exit);

/// One line of a sentinel report: the queries leaving at `exit_position`.
struct GroupRow {
  std::size_t exit_position = 0;
  std::size_t num_queries = 0;
  /// Optional; needed only for document-weighted speedups.
  std::size_t num_documents = 0;
  /// Mean NDCG the group's queries get from the full ensemble.
  double ndcg_full = 0.0;
  /// Mean NDCG at exit_position.
  double ndcg_exit = 0.0;
  double speedup = 1.0;
};

GroupRow make_group_row(std::size_t ensemble_size, std::size_t exit_position,
                        std::size_t num_queries, double ndcg_full,
                        double ndcg_exit, std::size_t num_documents = 0);

enum class SpeedupWeighting {
  /// L over the per-query mean exit position.
  kQueries,
  /// L over the per-document mean exit position (cost ~ documents x trees).
  kDocuments,
};

struct OverallRecord {
  std::size_t num_queries = 0;
  double ndcg_full = 0.0;
  double ndcg_exit = 0.0;
  double gain_pct = 0.0;
  double speedup = 1.0;
};

/// Query-count-weighted combination of group rows. Throws
/// std::invalid_argument if the row counts do not add up to total_queries.
OverallRecord aggregate_report(
    std::span<const GroupRow> rows, std::size_t total_queries,
    std::size_t ensemble_size,
    SpeedupWeighting weighting = SpeedupWeighting::kQueries);

/// One x position of the ideal-exit plot.
struct OracleCurvePoint {
  std::size_t position = 0;
  /// Mean NDCG when every query stops at `position`.
  double full_mean_ndcg = 0.0;
  /// Mean NDCG when each query stops at min(position, its oracle exit).
  double capped_oracle_mean_ndcg = 0.0;
  /// Queries whose oracle exit is exactly `position`.
  std::size_t exit_count = 0;
};

/// `exits[i]` must be oracle_exit(trajs[i]); all trajectories share one
/// checkpoint set.
std::vector<OracleCurvePoint> oracle_curve(std::span<const NdcgTrajectory> trajs,
                                           std::span<const OracleExit> exits);

}  // namespace qexit

#endif  // QEXIT_EXITLAB_H_
