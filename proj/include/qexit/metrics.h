#ifndef QEXIT_METRICS_H_
#define QEXIT_METRICS_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qexit/scorer.h"

namespace qexit {

/// NDCG cutoff used throughout the analysis unless configured otherwise.
inline constexpr std::size_t kDefaultCutoff = 10;

/// Document indices sorted by descending score, ties by ascending ordinal.
std::vector<std::size_t> rank_documents(std::span<const double> scores,
                                        std::span<const std::size_t> ordinals);

/// Same, with ordinals equal to the input positions.
std::vector<std::size_t> rank_documents(std::span<const double> scores);

/// Gain 2^rel - 1, discount 1 / log2(rank + 1) with 1-based rank.
double dcg_at_k(std::span<const int> labels_in_rank_order, std::size_t k);

/// DCG@k of the labels sorted in descending order.
double ideal_dcg_at_k(std::span<const int> labels, std::size_t k);

struct NdcgValue {
  double value = 0.0;
  /// No relevant document: IDCG is zero and value is reported as 0.0.
  bool zero_idcg = false;
};

NdcgValue ndcg_at_k(std::span<const double> scores, std::span<const int> labels,
                    std::size_t k);

struct NdcgTrajectory {
  std::string query_id;
  std::vector<std::size_t> positions;
  std::vector<double> values;
  std::size_t k = kDefaultCutoff;
  bool zero_idcg = false;

  std::size_t ensemble_size() const { return positions.back(); }
  double final_value() const { return values.back(); }
  /// Value at checkpoint `position`; throws std::invalid_argument if absent.
  double value_at(std::size_t position) const;
};

NdcgTrajectory ndcg_trajectory(const PrefixScoreMatrix& m,
                               std::span<const int> labels, std::size_t k);

/// Arithmetic mean summed in input order. Throws on empty input.
double mean_ndcg(std::span<const double> values);

}  // namespace qexit

#endif  // QEXIT_METRICS_H_
