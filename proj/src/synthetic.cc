#include "qexit/synthetic.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "random_util.h"

namespace qexit {

namespace {

std::size_t draw_peak(std::mt19937_64& rng, std::size_t L) {
  const double u = detail::uniform01(rng);
  auto in_range = [&](std::size_t lo, std::size_t hi) {  // [lo, hi]
    hi = std::max(lo, std::min(hi, L));
    return lo + detail::uniform_index(rng, hi - lo + 1);
  };
  if (u < 0.35) return in_range(1, std::max<std::size_t>(1, L / 40));
  if (u < 0.60) return in_range(1, std::max<std::size_t>(1, L / 4));
  if (u < 0.75) return in_range(std::max<std::size_t>(1, L / 4), L);
  return L;
}

int grade_for_rank(std::size_t rank, std::size_t n) {
  const double r = static_cast<double>(rank) / static_cast<double>(n);
  if (r < 0.05) return 4;
  if (r < 0.12) return 3;
  if (r < 0.25) return 2;
  if (r < 0.45) return 1;
  return 0;
}

}  // namespace

RankingDataset generate_synthetic_dataset(const Ensemble& e,
                                          const SyntheticDatasetOptions& options) {
  if (options.num_queries < 1 || options.docs_per_query < 1) {
    throw std::invalid_argument("synthetic dataset needs queries and documents");
  }
  std::mt19937_64 rng(options.seed);
  RankingDataset ds;
  ds.num_features = e.num_features();
  ds.groups.reserve(options.num_queries);

  for (std::size_t q = 0; q < options.num_queries; ++q) {
    QueryGroup group;
    group.query_id = fmt::format("{}", q + 1);
    const std::size_t n = options.docs_per_query;
    for (std::size_t d = 0; d < n; ++d) {
      Document doc;
      doc.ordinal = d;
      doc.features.resize(ds.num_features);
      for (auto& f : doc.features) f = detail::uniform01(rng);
      group.documents.push_back(std::move(doc));
    }

    const bool all_zero = detail::uniform01(rng) < options.zero_label_fraction;
    const std::size_t peak = draw_peak(rng, e.size());
    std::vector<double> teacher(n, e.base_score());
    for (std::size_t t = 0; t < peak; ++t) {
      for (std::size_t d = 0; d < n; ++d) {
        teacher[d] += e.trees()[t].traverse(group.documents[d].features);
      }
    }
    const auto [lo, hi] = std::minmax_element(teacher.begin(), teacher.end());
    const double spread = std::max(*hi - *lo, 1e-12);
    for (auto& s : teacher) {
      s += options.label_noise * spread * (2.0 * detail::uniform01(rng) - 1.0);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return teacher[a] > teacher[b];
    });
    for (std::size_t r = 0; r < n; ++r) {
      group.documents[order[r]].label = all_zero ? 0 : grade_for_rank(r, n);
    }
    ds.groups.push_back(std::move(group));
  }
  return ds;
}

}  // namespace qexit
