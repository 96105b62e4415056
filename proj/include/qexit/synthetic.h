#ifndef QEXIT_SYNTHETIC_H_
#define QEXIT_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>

#include "qexit/ingest.h"
#include "qexit/model.h"

namespace qexit {

struct SyntheticDatasetOptions {
  std::size_t num_queries = 100;
  std::size_t docs_per_query = 40;
  std::uint64_t seed = 1;
  /// Share of queries given only zero labels.
  double zero_label_fraction = 0.03;
  /// Amplitude of the uniform noise added to the teacher score, relative to
  /// that score's spread within the query.
  double label_noise = 0.15;
};

/// Builds a labelled dataset for `e`. Each query draws a "peak" prefix,
/// skewed toward the start of the ensemble, and its labels follow the
/// ranking that prefix induces (plus noise), so NDCG along the ensemble tends
/// to peak near that prefix. Features are uniform in [0, 1).
RankingDataset generate_synthetic_dataset(const Ensemble& e,
                                          const SyntheticDatasetOptions& options);

}  // namespace qexit

#endif  // QEXIT_SYNTHETIC_H_
