#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "qexit/model.h"
#include "qexit/scorer.h"

namespace qexit {
namespace {

TEST(CheckpointSet, Validation) {
  EXPECT_NO_THROW(CheckpointSet({1, 5, 10}, 10));
  EXPECT_THROW(CheckpointSet({}, 10), std::invalid_argument);
  EXPECT_THROW(CheckpointSet({1, 5}, 10), std::invalid_argument);  // must end at L
  EXPECT_THROW(CheckpointSet({5, 5, 10}, 10), std::invalid_argument);
  EXPECT_THROW(CheckpointSet({6, 5, 10}, 10), std::invalid_argument);
  EXPECT_THROW(CheckpointSet({0, 10}, 10), std::invalid_argument);
  EXPECT_THROW(CheckpointSet({10, 11}, 10), std::invalid_argument);
}

TEST(CheckpointSet, Lookup) {
  CheckpointSet c({1, 5, 10}, 10);
  EXPECT_TRUE(c.contains(5));
  EXPECT_FALSE(c.contains(4));
  EXPECT_EQ(c.index_of(10), 2u);
  EXPECT_THROW(c.index_of(4), std::invalid_argument);
  EXPECT_EQ(c.ensemble_size(), 10u);
}

TEST(MakeCheckpoints, StrideGrid) {
  EXPECT_EQ(make_checkpoints(1047, 25, false).size(), 42u);  // 41 multiples + L
  EXPECT_EQ(make_checkpoints(1047, 25, false)[40], 1025u);
  EXPECT_EQ(make_checkpoints(1047, 25, true)[0], 1u);
  EXPECT_EQ(make_checkpoints(100, 25, false).positions(),
            (std::vector<std::size_t>{25, 50, 75, 100}));
  EXPECT_EQ(make_checkpoints(100, 25, true).positions(),
            (std::vector<std::size_t>{1, 25, 50, 75, 100}));
  EXPECT_EQ(make_checkpoints(3, 1, true).positions(), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(make_checkpoints(7, 7, false).positions(), (std::vector<std::size_t>{7}));
  EXPECT_THROW(make_checkpoints(10, 0, false), std::invalid_argument);
  EXPECT_THROW(make_checkpoints(10, 11, false), std::invalid_argument);
  EXPECT_THROW(make_checkpoints(0, 1, false), std::invalid_argument);
}

TEST(ScoreFull, SumsTreesAndBaseScore) {
  Ensemble e({RegressionTree({TreeNode::split(1, 0.5, 1, 2, false), TreeNode::leaf(1.0),
                              TreeNode::leaf(2.0)}),
              RegressionTree({TreeNode::leaf(0.25)})},
             1, 10.0);
  QueryGroup g;
  g.query_id = "q";
  g.documents = {{{0.1}, 0, 0}, {{0.9}, 1, 1}};
  EXPECT_EQ(score_full(e, g), (std::vector<double>{11.25, 12.25}));
  auto m = score_prefixes(e, g, CheckpointSet({1, 2}, 2));
  EXPECT_EQ(m.row(0)[0], 11.0);
  EXPECT_EQ(m.row(0)[1], 12.0);
  EXPECT_EQ(m.row(1)[1], 12.25);
}

TEST(ScoreFull, RejectsShortFeatureVectors) {
  Ensemble e({RegressionTree({TreeNode::split(3, 0.5, 1, 2, false), TreeNode::leaf(1.0),
                              TreeNode::leaf(2.0)})},
             3);
  QueryGroup g;
  g.documents = {{{0.1, 0.2}, 0, 0}};
  EXPECT_THROW(score_full(e, g), std::invalid_argument);
}

TEST(ScoreFull, EmptyGroup) {
  auto e = generate_synthetic_ensemble(3, 2, 2, 1);
  QueryGroup g;
  EXPECT_TRUE(score_full(e, g).empty());
  EXPECT_EQ(score_prefixes(e, g, make_checkpoints(3, 1, false)).num_documents(), 0u);
}

TEST(ScorePrefixes, LastRowMatchesFullAndDiffsMatchTrees) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto e = generate_synthetic_ensemble(60, 4, 8, seed);
    auto ds = testing::random_dataset(3, 15, 8, seed + 100);
    auto cps = make_checkpoints(60, 1, false);
    for (const auto& g : ds.groups) {
      auto m = score_prefixes(e, g, cps);
      auto full = score_full(e, g);
      auto last = m.row(cps.size() - 1);
      for (std::size_t d = 0; d < full.size(); ++d) {
        EXPECT_EQ(last[d], full[d]);
      }
      for (std::size_t t = 1; t < 60; ++t) {
        for (std::size_t d = 0; d < g.documents.size(); ++d) {
          // Running sum: row t is row t-1 plus tree t's output, exactly.
          EXPECT_EQ(m.row(t)[d],
                    m.row(t - 1)[d] + e.trees()[t].traverse(g.documents[d].features));
        }
      }
    }
  }
}

TEST(ScorePrefixes, SparseCheckpointsAreRowsOfDenseOnes) {
  auto e = generate_synthetic_ensemble(100, 3, 5, 9);
  auto ds = testing::random_dataset(4, 10, 5, 9);
  auto dense = make_checkpoints(100, 1, false);
  auto sparse = make_checkpoints(100, 25, true);
  for (const auto& g : ds.groups) {
    auto a = score_prefixes(e, g, dense);
    auto b = score_prefixes(e, g, sparse);
    for (std::size_t i = 0; i < sparse.size(); ++i) {
      auto ra = a.row(dense.index_of(sparse[i]));
      auto rb = b.row(i);
      EXPECT_TRUE(std::equal(ra.begin(), ra.end(), rb.begin(), rb.end()));
    }
  }
}

TEST(ScoreDataset, IndependentOfThreadCount) {
  auto e = generate_synthetic_ensemble(80, 4, 6, 3);
  auto ds = testing::random_dataset(37, 12, 6, 4);
  auto cps = make_checkpoints(80, 10, true);
  auto one = score_dataset(e, ds, cps, 1);
  auto many = score_dataset(e, ds, cps, 7);
  ASSERT_EQ(one.size(), ds.groups.size());
  ASSERT_EQ(many.size(), ds.groups.size());
  for (std::size_t q = 0; q < one.size(); ++q) {
    EXPECT_EQ(one[q].query_id(), ds.groups[q].query_id);
    EXPECT_EQ(many[q].query_id(), ds.groups[q].query_id);
    for (std::size_t r = 0; r < cps.size(); ++r) {
      auto a = one[q].row(r);
      auto b = many[q].row(r);
      EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }
  }
}

TEST(ScoreDataset, CheckpointsMustMatchEnsemble) {
  auto e = generate_synthetic_ensemble(10, 2, 3, 1);
  auto ds = testing::random_dataset(2, 3, 3, 1);
  EXPECT_THROW(score_dataset(e, ds, make_checkpoints(11, 1, false)), std::invalid_argument);
}

}  // namespace
}  // namespace qexit
