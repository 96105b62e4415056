#include "qexit/sentinel.h"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "qexit/parallel.h"

namespace qexit {

namespace {

// Upper bound on enumerated placements; beyond this the ranking alone would
// not fit comfortably in memory.
constexpr std::uint64_t kMaxCombinations = 50'000'000;

std::size_t checkpoint_index(const NdcgTrajectory& traj, std::size_t position) {
  auto it = std::lower_bound(traj.positions.begin(), traj.positions.end(), position);
  if (it == traj.positions.end() || *it != position) {
    throw std::invalid_argument(fmt::format(
        "query {}: tree {} is not among its checkpoints", traj.query_id,
        position));
  }
  return static_cast<std::size_t>(it - traj.positions.begin());
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // r * (n - k + i) / i stays exact at every step.
    if (r > std::numeric_limits<std::uint64_t>::max() / (n - k + i)) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    r = r * (n - k + i) / i;
  }
  return r;
}

}  // namespace

SentinelConfig::SentinelConfig(std::vector<std::size_t> positions,
                               std::size_t ensemble_size)
    : positions_(std::move(positions)), ensemble_size_(ensemble_size) {
  if (positions_.empty()) throw std::invalid_argument("no sentinel positions");
  if (positions_.front() < 1) {
    throw std::invalid_argument("sentinel positions must be >= 1");
  }
  for (std::size_t i = 1; i < positions_.size(); ++i) {
    if (positions_[i] <= positions_[i - 1]) {
      throw std::invalid_argument("sentinel positions must strictly increase");
    }
  }
  if (positions_.back() >= ensemble_size_) {
    throw std::invalid_argument(fmt::format(
        "sentinel {} must lie before the last tree ({})", positions_.back(),
        ensemble_size_));
  }
}

std::vector<std::size_t> SentinelConfig::exit_points() const {
  auto points = positions_;
  points.push_back(ensemble_size_);
  return points;
}

std::vector<ExitDecision> decide_exits(const SentinelConfig& config,
                                       std::span<const NdcgTrajectory> trajs) {
  const auto points = config.exit_points();
  std::vector<ExitDecision> out;
  out.reserve(trajs.size());
  for (const auto& traj : trajs) {
    if (traj.positions.empty() || traj.ensemble_size() != config.ensemble_size()) {
      throw std::invalid_argument(fmt::format(
          "query {}: trajectory does not end at tree {}", traj.query_id,
          config.ensemble_size()));
    }
    ExitDecision d{traj.query_id, 0, 0.0, traj.final_value()};
    bool first = true;
    for (std::size_t p : points) {
      const double v = traj.values[checkpoint_index(traj, p)];
      if (first || v > d.exit_ndcg) {
        d.exit_position = p;
        d.exit_ndcg = v;
        first = false;
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

EvaluationReport evaluate_config(const SentinelConfig& config,
                                 std::span<const NdcgTrajectory> trajs,
                                 SpeedupWeighting weighting,
                                 std::span<const std::size_t> query_documents) {
  if (trajs.empty()) throw std::invalid_argument("no queries to evaluate");
  if (!query_documents.empty() && query_documents.size() != trajs.size()) {
    throw std::invalid_argument("one document count per query required");
  }
  auto decisions = decide_exits(config, trajs);
  const std::size_t L = config.ensemble_size();

  std::vector<GroupRow> rows;
  for (std::size_t p : config.exit_points()) {
    std::size_t count = 0;
    std::size_t docs = 0;
    double full_sum = 0.0;
    double exit_sum = 0.0;
    for (std::size_t q = 0; q < decisions.size(); ++q) {
      if (decisions[q].exit_position != p) continue;
      ++count;
      full_sum += decisions[q].full_ndcg;
      exit_sum += decisions[q].exit_ndcg;
      if (!query_documents.empty()) docs += query_documents[q];
    }
    if (count == 0) continue;
    const auto n = static_cast<double>(count);
    rows.push_back(make_group_row(L, p, count, full_sum / n, exit_sum / n, docs));
  }

  auto overall = aggregate_report(rows, trajs.size(), L, weighting);
  return EvaluationReport{config, std::move(rows), overall, std::move(decisions)};
}

PlacementResult search_placements(std::size_t k,
                                  std::span<const std::size_t> candidates,
                                  std::span<const NdcgTrajectory> trajs,
                                  std::size_t num_threads) {
  if (k < 1) throw std::invalid_argument("need at least one sentinel");
  if (trajs.empty()) throw std::invalid_argument("no queries to search on");
  std::vector<std::size_t> cands(candidates.begin(), candidates.end());
  std::sort(cands.begin(), cands.end());
  if (std::adjacent_find(cands.begin(), cands.end()) != cands.end()) {
    throw std::invalid_argument("duplicate sentinel candidates");
  }
  if (k > cands.size()) {
    throw std::invalid_argument(fmt::format(
        "cannot place {} sentinels on {} candidates", k, cands.size()));
  }
  const std::size_t L = trajs.front().ensemble_size();
  if (cands.front() < 1 || cands.back() >= L) {
    throw std::invalid_argument(
        fmt::format("sentinel candidates must lie in [1, {})", L));
  }
  const std::uint64_t total = binomial(cands.size(), k);
  if (total > kMaxCombinations) {
    throw std::invalid_argument(fmt::format(
        "C({}, {}) placements exceed the enumeration limit", cands.size(), k));
  }

  // values[q * stride + j]: NDCG of query q at candidate j; slot |cands| holds L.
  const std::size_t stride = cands.size() + 1;
  std::vector<double> values(trajs.size() * stride);
  for (std::size_t q = 0; q < trajs.size(); ++q) {
    const auto& traj = trajs[q];
    if (traj.ensemble_size() != L) {
      throw std::invalid_argument(fmt::format(
          "query {}: trajectory does not end at tree {}", traj.query_id, L));
    }
    for (std::size_t j = 0; j < cands.size(); ++j) {
      values[q * stride + j] = traj.values[checkpoint_index(traj, cands[j])];
    }
    values[q * stride + cands.size()] = traj.final_value();
  }

  // All k-subsets of candidate indices in lexicographic order.
  std::vector<std::uint32_t> combos;
  combos.reserve(static_cast<std::size_t>(total) * k);
  std::vector<std::uint32_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = static_cast<std::uint32_t>(i);
  const auto n = static_cast<std::uint32_t>(cands.size());
  for (;;) {
    combos.insert(combos.end(), idx.begin(), idx.end());
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }

  const std::size_t num_configs = combos.size() / k;
  std::vector<double> objective(num_configs);
  const auto num_queries = static_cast<double>(trajs.size());
  parallel_for(num_configs, num_threads, [&](std::size_t c) {
    const std::uint32_t* combo = &combos[c * k];
    double sum = 0.0;
    for (std::size_t q = 0; q < trajs.size(); ++q) {
      const double* row = &values[q * stride];
      // Earliest-max: a later exit point only wins with a strictly higher value,
      // so the chosen value is the max over the exit points.
      double best = row[combo[0]];
      for (std::size_t j = 1; j < k; ++j) best = std::max(best, row[combo[j]]);
      best = std::max(best, row[cands.size()]);
      sum += best;
    }
    objective[c] = sum / num_queries;
  });

  std::vector<std::size_t> order(num_configs);
  for (std::size_t c = 0; c < num_configs; ++c) order[c] = c;
  // Combos are generated lexicographically, so a stable sort by objective
  // leaves equal-objective configs in lexicographic order.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return objective[a] > objective[b];
  });

  PlacementResult result;
  result.ranking.reserve(num_configs);
  for (std::size_t c : order) {
    RankedConfig rc;
    rc.positions.reserve(k);
    for (std::size_t j = 0; j < k; ++j) rc.positions.push_back(cands[combos[c * k + j]]);
    rc.objective = objective[c];
    result.ranking.push_back(std::move(rc));
  }
  result.best = result.ranking.front();
  return result;
}

}  // namespace qexit
