#ifndef QEXIT_SCORER_H_
#define QEXIT_SCORER_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qexit/ingest.h"
#include "qexit/model.h"

namespace qexit {

/// Strictly increasing tree-prefix lengths in [1, L], always ending at L.
class CheckpointSet {
 public:
  /// Throws std::invalid_argument if `positions` violates the invariants.
  CheckpointSet(std::vector<std::size_t> positions, std::size_t ensemble_size);

  const std::vector<std::size_t>& positions() const { return positions_; }
  std::size_t size() const { return positions_.size(); }
  std::size_t ensemble_size() const { return positions_.back(); }
  std::size_t operator[](std::size_t i) const { return positions_[i]; }

  bool contains(std::size_t position) const;
  /// Row index of `position`; throws std::invalid_argument when absent.
  std::size_t index_of(std::size_t position) const;

  bool operator==(const CheckpointSet&) const = default;

 private:
  std::vector<std::size_t> positions_;
};

/// {stride, 2*stride, ...} within [1, L], plus 1 when `include_first_tree`,
/// plus L.
CheckpointSet make_checkpoints(std::size_t ensemble_size, std::size_t stride,
                               bool include_first_tree);

/// Cumulative document scores of one query, one row per checkpoint.
class PrefixScoreMatrix {
 public:
  PrefixScoreMatrix(std::string query_id, CheckpointSet checkpoints,
                    std::size_t num_documents);

  const std::string& query_id() const { return query_id_; }
  const CheckpointSet& checkpoints() const { return checkpoints_; }
  std::size_t num_rows() const { return checkpoints_.size(); }
  std::size_t num_documents() const { return num_documents_; }

  std::span<const double> row(std::size_t checkpoint_index) const;
  std::span<double> mutable_row(std::size_t checkpoint_index);

 private:
  std::string query_id_;
  CheckpointSet checkpoints_;
  std::size_t num_documents_;
  std::vector<double> scores_;
};

/// base_score plus every tree's output, accumulated in tree order.
std::vector<double> score_full(const Ensemble& e, const QueryGroup& group);

/// One pass over the trees, snapshotting the running scores at each
/// checkpoint. The final row is bit-identical to score_full.
PrefixScoreMatrix score_prefixes(const Ensemble& e, const QueryGroup& group,
                                 const CheckpointSet& checkpoints);

/// score_prefixes for every group, spread over `num_threads` workers. Output
/// order follows ds.groups regardless of the thread count.
std::vector<PrefixScoreMatrix> score_dataset(const Ensemble& e,
                                             const RankingDataset& ds,
                                             const CheckpointSet& checkpoints,
                                             std::size_t num_threads = 1);

}  // namespace qexit

#endif  // QEXIT_SCORER_H_
