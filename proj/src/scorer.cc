#include "qexit/scorer.h"

#include <algorithm>
#include <optional>
#include <stdexcept>

#include <fmt/format.h>

#include "qexit/parallel.h"

namespace qexit {

CheckpointSet::CheckpointSet(std::vector<std::size_t> positions,
                             std::size_t ensemble_size)
    : positions_(std::move(positions)) {
  if (positions_.empty()) throw std::invalid_argument("empty checkpoint set");
  if (positions_.front() < 1) {
    throw std::invalid_argument("checkpoint positions must be >= 1");
  }
  for (std::size_t i = 1; i < positions_.size(); ++i) {
    if (positions_[i] <= positions_[i - 1]) {
      throw std::invalid_argument("checkpoint positions must strictly increase");
    }
  }
  if (positions_.back() != ensemble_size) {
    throw std::invalid_argument(fmt::format(
        "last checkpoint {} must equal ensemble size {}", positions_.back(),
        ensemble_size));
  }
}

bool CheckpointSet::contains(std::size_t position) const {
  return std::binary_search(positions_.begin(), positions_.end(), position);
}

std::size_t CheckpointSet::index_of(std::size_t position) const {
  auto it = std::lower_bound(positions_.begin(), positions_.end(), position);
  if (it == positions_.end() || *it != position) {
    throw std::invalid_argument(
        fmt::format("tree {} is not a checkpoint", position));
  }
  return static_cast<std::size_t>(it - positions_.begin());
}

CheckpointSet make_checkpoints(std::size_t ensemble_size, std::size_t stride,
                               bool include_first_tree) {
  if (ensemble_size < 1) throw std::invalid_argument("ensemble size must be >= 1");
  if (stride < 1 || stride > ensemble_size) {
    throw std::invalid_argument(
        fmt::format("stride {} outside [1, {}]", stride, ensemble_size));
  }
  std::vector<std::size_t> positions;
  if (include_first_tree && stride != 1) positions.push_back(1);
  for (std::size_t p = stride; p <= ensemble_size; p += stride) {
    positions.push_back(p);
  }
  if (positions.back() != ensemble_size) positions.push_back(ensemble_size);
  return CheckpointSet(std::move(positions), ensemble_size);
}

PrefixScoreMatrix::PrefixScoreMatrix(std::string query_id,
                                     CheckpointSet checkpoints,
                                     std::size_t num_documents)
    : query_id_(std::move(query_id)),
      checkpoints_(std::move(checkpoints)),
      num_documents_(num_documents),
      scores_(checkpoints_.size() * num_documents, 0.0) {}

std::span<const double> PrefixScoreMatrix::row(std::size_t c) const {
  return std::span<const double>(scores_).subspan(c * num_documents_,
                                                   num_documents_);
}

std::span<double> PrefixScoreMatrix::mutable_row(std::size_t c) {
  return std::span<double>(scores_).subspan(c * num_documents_, num_documents_);
}

namespace {

void check_dimensions(const Ensemble& e, const QueryGroup& group) {
  for (const auto& d : group.documents) {
    if (d.features.size() < e.num_features()) {
      throw std::invalid_argument(fmt::format(
          "query {}: document has {} features, model needs {}", group.query_id,
          d.features.size(), e.num_features()));
    }
  }
}

// Visits trees in order, adding each tree's output to `running`; `on_tree`
// sees the 1-based count of trees accumulated so far.
template <typename OnTree>
void accumulate(const Ensemble& e, const QueryGroup& group,
                std::vector<double>& running, OnTree&& on_tree) {
  running.assign(group.documents.size(), e.base_score());
  const auto& trees = e.trees();
  for (std::size_t t = 0; t < trees.size(); ++t) {
    for (std::size_t d = 0; d < running.size(); ++d) {
      running[d] += trees[t].traverse(group.documents[d].features);
    }
    on_tree(t + 1);
  }
}

}  // namespace

std::vector<double> score_full(const Ensemble& e, const QueryGroup& group) {
  check_dimensions(e, group);
  std::vector<double> running;
  accumulate(e, group, running, [](std::size_t) {});
  return running;
}

PrefixScoreMatrix score_prefixes(const Ensemble& e, const QueryGroup& group,
                                 const CheckpointSet& checkpoints) {
  if (checkpoints.ensemble_size() != e.size()) {
    throw std::invalid_argument(fmt::format(
        "checkpoint set ends at {} but ensemble has {} trees",
        checkpoints.ensemble_size(), e.size()));
  }
  check_dimensions(e, group);
  PrefixScoreMatrix m(group.query_id, checkpoints, group.documents.size());
  std::vector<double> running;
  std::size_t next = 0;
  accumulate(e, group, running, [&](std::size_t trees_done) {
    if (next < checkpoints.size() && checkpoints[next] == trees_done) {
      std::copy(running.begin(), running.end(), m.mutable_row(next).begin());
      ++next;
    }
  });
  return m;
}

std::vector<PrefixScoreMatrix> score_dataset(const Ensemble& e,
                                             const RankingDataset& ds,
                                             const CheckpointSet& checkpoints,
                                             std::size_t num_threads) {
  std::vector<std::optional<PrefixScoreMatrix>> slots(ds.groups.size());
  parallel_for(ds.groups.size(), num_threads, [&](std::size_t q) {
    slots[q].emplace(score_prefixes(e, ds.groups[q], checkpoints));
  });
  std::vector<PrefixScoreMatrix> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace qexit
