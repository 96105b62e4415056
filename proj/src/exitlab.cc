#include "qexit/exitlab.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace qexit {

OracleExit oracle_exit(const NdcgTrajectory& traj) {
  if (traj.values.empty() || traj.values.size() != traj.positions.size()) {
    throw std::invalid_argument(
        fmt::format("query {}: malformed trajectory", traj.query_id));
  }
  // max_element returns the first maximum: earliest exit wins ties.
  const auto best = std::max_element(traj.values.begin(), traj.values.end());
  const auto idx = static_cast<std::size_t>(best - traj.values.begin());
  return OracleExit{traj.query_id, traj.positions[idx], *best,
                    traj.values.back()};
}

std::map<std::size_t, std::size_t> exit_histogram(
    std::span<const OracleExit> exits, std::size_t bin_width) {
  if (bin_width < 1) throw std::invalid_argument("bin width must be >= 1");
  std::map<std::size_t, std::size_t> bins;
  for (const auto& e : exits) {
    if (e.exit_position < 1) {
      throw std::invalid_argument("exit positions are 1-based");
    }
    const std::size_t start = (e.exit_position - 1) / bin_width * bin_width + 1;
    ++bins[start];
  }
  return bins;
}

QueryCategory category_of(QueryClass c) {
  switch (c) {
    case QueryClass::kDecreasing:
    case QueryClass::kRiseThenFallBelow:
      return QueryCategory::kWorsening;
    case QueryClass::kFlat:
    case QueryClass::kFlatWithBumps:
      return QueryCategory::kFlat;
    case QueryClass::kIncreasing:
    case QueryClass::kRiseThenFall:
      return QueryCategory::kImproving;
  }
  throw std::logic_error("unknown query class");
}

std::string_view category_name(QueryCategory c) {
  switch (c) {
    case QueryCategory::kWorsening:
      return "worsening";
    case QueryCategory::kFlat:
      return "flat";
    case QueryCategory::kImproving:
      return "improving";
  }
  throw std::logic_error("unknown query category");
}

QueryClass classify_query(const NdcgTrajectory& traj, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("classification epsilon must be > 0");
  }
  if (traj.values.size() < 2) {
    throw std::invalid_argument(fmt::format(
        "query {}: classification needs at least two checkpoints",
        traj.query_id));
  }
  const double s = traj.values.front();
  const double e = traj.values.back();
  const auto [lo, hi] = std::minmax_element(traj.values.begin(), traj.values.end());
  const double m = *lo;
  const double M = *hi;

  if (M - m <= epsilon) return QueryClass::kFlat;
  if (std::abs(e - s) <= epsilon) return QueryClass::kFlatWithBumps;
  if (e < s) {
    return M > s + epsilon ? QueryClass::kRiseThenFallBelow
                           : QueryClass::kDecreasing;
  }
  return M > e + epsilon ? QueryClass::kRiseThenFall : QueryClass::kIncreasing;
}

double speedup(std::size_t ensemble_size, std::size_t exit_position) {
  if (exit_position < 1 || exit_position > ensemble_size) {
    throw std::invalid_argument(fmt::format("exit position {} outside [1, {}]",
                                            exit_position, ensemble_size));
  }
  return static_cast<double>(ensemble_size) /
         static_cast<double>(exit_position);
}

double relative_gain_pct(double ndcg_full, double ndcg_exit) {
  if (ndcg_full == 0.0) return 0.0;
  return (ndcg_exit / ndcg_full - 1.0) * 100.0;
}

GroupRow make_group_row(std::size_t ensemble_size, std::size_t exit_position,
                        std::size_t num_queries, double ndcg_full,
                        double ndcg_exit, std::size_t num_documents) {
  GroupRow row;
  row.exit_position = exit_position;
  row.num_queries = num_queries;
  row.num_documents = num_documents;
  row.ndcg_full = ndcg_full;
  row.ndcg_exit = exit_position == ensemble_size ? ndcg_full : ndcg_exit;
  row.speedup = speedup(ensemble_size, exit_position);
  return row;
}

OverallRecord aggregate_report(std::span<const GroupRow> rows,
                               std::size_t total_queries,
                               std::size_t ensemble_size,
                               SpeedupWeighting weighting) {
  if (total_queries == 0) {
    throw std::invalid_argument("report covers no queries");
  }
  std::size_t counted = 0;
  std::size_t documents = 0;
  double full_sum = 0.0;
  double exit_sum = 0.0;
  double position_sum = 0.0;
  for (const auto& row : rows) {
    if (row.exit_position < 1 || row.exit_position > ensemble_size) {
      throw std::invalid_argument(fmt::format(
          "row exit position {} outside [1, {}]", row.exit_position,
          ensemble_size));
    }
    const auto n = static_cast<double>(row.num_queries);
    counted += row.num_queries;
    documents += row.num_documents;
    full_sum += n * row.ndcg_full;
    exit_sum += n * row.ndcg_exit;
    const double weight = weighting == SpeedupWeighting::kQueries
                              ? n
                              : static_cast<double>(row.num_documents);
    position_sum += weight * static_cast<double>(row.exit_position);
  }
  if (counted != total_queries) {
    throw std::invalid_argument(fmt::format(
        "rows cover {} queries, expected {}", counted, total_queries));
  }
  const double total_weight = weighting == SpeedupWeighting::kQueries
                                  ? static_cast<double>(total_queries)
                                  : static_cast<double>(documents);
  if (total_weight <= 0.0) {
    throw std::invalid_argument("document-weighted speedup needs document counts");
  }

  OverallRecord out;
  out.num_queries = total_queries;
  out.ndcg_full = full_sum / static_cast<double>(total_queries);
  out.ndcg_exit = exit_sum / static_cast<double>(total_queries);
  out.gain_pct = relative_gain_pct(out.ndcg_full, out.ndcg_exit);
  out.speedup = static_cast<double>(ensemble_size) / (position_sum / total_weight);
  return out;
}

std::vector<OracleCurvePoint> oracle_curve(std::span<const NdcgTrajectory> trajs,
                                           std::span<const OracleExit> exits) {
  if (trajs.size() != exits.size()) {
    throw std::invalid_argument("one oracle exit per trajectory required");
  }
  if (trajs.empty()) return {};
  const auto& positions = trajs.front().positions;
  for (const auto& t : trajs) {
    if (t.positions != positions) {
      throw std::invalid_argument("trajectories use different checkpoint sets");
    }
  }

  std::vector<std::size_t> exit_index(trajs.size());
  for (std::size_t q = 0; q < trajs.size(); ++q) {
    auto it = std::lower_bound(positions.begin(), positions.end(),
                               exits[q].exit_position);
    if (it == positions.end() || *it != exits[q].exit_position) {
      throw std::invalid_argument("oracle exit is not a checkpoint");
    }
    exit_index[q] = static_cast<std::size_t>(it - positions.begin());
  }

  const auto n = static_cast<double>(trajs.size());
  std::vector<OracleCurvePoint> curve(positions.size());
  for (std::size_t c = 0; c < positions.size(); ++c) {
    double full_sum = 0.0;
    double capped_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t q = 0; q < trajs.size(); ++q) {
      full_sum += trajs[q].values[c];
      capped_sum += trajs[q].values[std::min(c, exit_index[q])];
      count += exit_index[q] == c ? 1 : 0;
    }
    curve[c] = OracleCurvePoint{positions[c], full_sum / n, capped_sum / n, count};
  }
  return curve;
}

}  // namespace qexit
