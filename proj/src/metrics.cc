#include "qexit/metrics.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace qexit {

std::vector<std::size_t> rank_documents(std::span<const double> scores,
                                        std::span<const std::size_t> ordinals) {
  if (scores.size() != ordinals.size()) {
    throw std::invalid_argument("scores and ordinals differ in length");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ordinals[a] < ordinals[b];
  });
  return order;
}

std::vector<std::size_t> rank_documents(std::span<const double> scores) {
  std::vector<std::size_t> ordinals(scores.size());
  std::iota(ordinals.begin(), ordinals.end(), std::size_t{0});
  return rank_documents(scores, ordinals);
}

double dcg_at_k(std::span<const int> labels_in_rank_order, std::size_t k) {
  const std::size_t n = std::min(k, labels_in_rank_order.size());
  double dcg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double gain = std::exp2(labels_in_rank_order[i]) - 1.0;
    dcg += gain / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg;
}

double ideal_dcg_at_k(std::span<const int> labels, std::size_t k) {
  std::vector<int> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  return dcg_at_k(sorted, k);
}

NdcgValue ndcg_at_k(std::span<const double> scores, std::span<const int> labels,
                    std::size_t k) {
  if (k == 0) throw std::invalid_argument("NDCG cutoff k must be >= 1");
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length");
  }
  const double idcg = ideal_dcg_at_k(labels, k);
  if (idcg <= 0.0) return {0.0, true};
  const auto order = rank_documents(scores);
  std::vector<int> ranked;
  ranked.reserve(std::min(k, order.size()));
  for (std::size_t i = 0; i < order.size() && i < k; ++i) {
    ranked.push_back(labels[order[i]]);
  }
  return {dcg_at_k(ranked, k) / idcg, false};
}

double NdcgTrajectory::value_at(std::size_t position) const {
  auto it = std::lower_bound(positions.begin(), positions.end(), position);
  if (it == positions.end() || *it != position) {
    throw std::invalid_argument(fmt::format(
        "query {}: tree {} is not a checkpoint", query_id, position));
  }
  return values[static_cast<std::size_t>(it - positions.begin())];
}

NdcgTrajectory ndcg_trajectory(const PrefixScoreMatrix& m,
                               std::span<const int> labels, std::size_t k) {
  if (labels.size() != m.num_documents()) {
    throw std::invalid_argument(fmt::format(
        "query {}: {} labels for {} documents", m.query_id(), labels.size(),
        m.num_documents()));
  }
  NdcgTrajectory traj;
  traj.query_id = m.query_id();
  traj.positions = m.checkpoints().positions();
  traj.k = k;
  traj.values.reserve(m.num_rows());
  for (std::size_t c = 0; c < m.num_rows(); ++c) {
    const auto v = ndcg_at_k(m.row(c), labels, k);
    traj.values.push_back(v.value);
    traj.zero_idcg = v.zero_idcg;
  }
  return traj;
}

double mean_ndcg(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of an empty set");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace qexit
