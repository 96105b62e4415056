#ifndef QEXIT_SENTINEL_H_
#define QEXIT_SENTINEL_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qexit/exitlab.h"
#include "qexit/metrics.h"

namespace qexit {

/// Trees at which a query may leave the ensemble early. The final exit at L
/// is implicit.
class SentinelConfig {
 public:
  /// Requires 1 <= s_1 < ... < s_k < L and k >= 1.
  SentinelConfig(std::vector<std::size_t> positions, std::size_t ensemble_size);

  const std::vector<std::size_t>& positions() const { return positions_; }
  std::size_t size() const { return positions_.size(); }
  std::size_t ensemble_size() const { return ensemble_size_; }

  /// Sentinels followed by L.
  std::vector<std::size_t> exit_points() const;

  bool operator==(const SentinelConfig&) const = default;

 private:
  std::vector<std::size_t> positions_;
  std::size_t ensemble_size_;
};

struct ExitDecision {
  std::string query_id;
  std::size_t exit_position = 0;
  double exit_ndcg = 0.0;
  double full_ndcg = 0.0;
};

/// For each query, the earliest exit point in sentinels + {L} with the highest
/// NDCG. Throws std::invalid_argument when an exit point is missing from a
/// trajectory's checkpoints.
std::vector<ExitDecision> decide_exits(const SentinelConfig& config,
                                       std::span<const NdcgTrajectory> trajs);

struct EvaluationReport {
  SentinelConfig config;
  /// Non-empty groups in exit order; the terminal group (if any) is last.
  std::vector<GroupRow> rows;
  OverallRecord overall;
  std::vector<ExitDecision> per_query;
};

/// `query_documents`, when non-empty, holds each query's document count and
/// enables SpeedupWeighting::kDocuments.
EvaluationReport evaluate_config(
    const SentinelConfig& config, std::span<const NdcgTrajectory> trajs,
    SpeedupWeighting weighting = SpeedupWeighting::kQueries,
    std::span<const std::size_t> query_documents = {});

struct RankedConfig {
  std::vector<std::size_t> positions;
  /// Mean over queries of the NDCG at the chosen exit.
  double objective = 0.0;
};

struct PlacementResult {
  RankedConfig best;
  /// Every enumerated combination, best first; equal objectives ordered by
  /// lexicographically smaller positions.
  std::vector<RankedConfig> ranking;
};

/// Tries all C(|candidates|, k) placements on the given trajectories and keeps
/// the one with the highest mean NDCG. Candidates must be distinct positions
/// below L present in every trajectory.
PlacementResult search_placements(std::size_t k,
                                  std::span<const std::size_t> candidates,
                                  std::span<const NdcgTrajectory> trajs,
                                  std::size_t num_threads = 1);

}  // namespace qexit

#endif  // QEXIT_SENTINEL_H_
