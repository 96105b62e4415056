#ifndef QEXIT_MODEL_H_
#define QEXIT_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qexit {

/// The model uses a construct this toolkit deliberately does not evaluate
/// (categorical splits, linear leaves, multiclass output, ...).
class UnsupportedModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TreeNode {
  enum class Kind : std::uint8_t { kInternal, kLeaf };

  Kind kind = Kind::kLeaf;
  /// 1-based, LETOR numbering.
  std::size_t split_feature = 0;
  double threshold = 0.0;
  std::int32_t left_child = -1;
  std::int32_t right_child = -1;
  /// Direction taken by a NaN feature value.
  bool default_left = false;
  /// Leaf output, shrinkage already applied.
  double value = 0.0;

  static TreeNode leaf(double value);
  static TreeNode split(std::size_t feature, double threshold,
                        std::int32_t left, std::int32_t right,
                        bool default_left);

  bool is_leaf() const { return kind == Kind::kLeaf; }
  bool operator==(const TreeNode&) const = default;
};

/// Binary regression tree stored as a node arena. Construction validates that
/// the child graph rooted at `root` is a proper binary tree covering every
/// node; an invalid structure throws std::invalid_argument.
class RegressionTree {
 public:
  explicit RegressionTree(std::vector<TreeNode> nodes, std::int32_t root = 0);

  /// Goes left iff value <= threshold; NaN follows default_left.
  double traverse(std::span<const double> features) const;

  /// Index of the leaf node reached by `features`.
  std::int32_t leaf_index(std::span<const double> features) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::int32_t root() const { return root_; }
  /// Number of edges on the longest root-to-leaf path.
  std::size_t depth() const { return depth_; }
  std::size_t num_leaves() const;
  std::size_t max_split_feature() const;

  bool operator==(const RegressionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
  std::int32_t root_ = 0;
  std::size_t depth_ = 0;
};

class Ensemble {
 public:
  Ensemble(std::vector<RegressionTree> trees, std::size_t num_features,
           double base_score = 0.0);

  const std::vector<RegressionTree>& trees() const { return trees_; }
  std::size_t size() const { return trees_.size(); }
  std::size_t num_features() const { return num_features_; }
  double base_score() const { return base_score_; }

  bool operator==(const Ensemble&) const = default;

 private:
  std::vector<RegressionTree> trees_;
  std::size_t num_features_ = 0;
  double base_score_ = 0.0;
};

struct TextModelOptions {
  /// Added to the trainer's 0-based split_feature to obtain the LETOR index.
  /// Use 0 when the model was trained directly on a LETOR/libsvm file whose
  /// column indices were kept verbatim.
  std::size_t feature_offset = 1;
};

/// Reads the `Tree=N` block text format written by LightGBM.
Ensemble parse_text_model(std::istream& in, const TextModelOptions& options = {});

/// JSON model format:
///
///   {"format": "qexit-ensemble", "version": 1,
///    "num_features": N, "base_score": b,
///    "trees": [{"root": 0, "nodes": [
///        {"split": {"feature": f, "threshold": t, "left": i, "right": j,
///                   "default_left": bool}},
///        {"leaf": v}, ...]}, ...]}
///
/// Numbers are emitted in shortest round-trip form, so doubles survive a
/// write/parse cycle bit-exactly.
Ensemble parse_canonical_model(std::istream& in);
void write_canonical_model(const Ensemble& e, std::ostream& out);

enum class ModelFormat { kText, kCanonical };
Ensemble read_model_file(const std::string& path, ModelFormat format,
                         const TextModelOptions& options = {});

/// Axis-aligned region of feature space routed to one leaf: for each feature
/// (0-based vector slot) the half-open interval (lower, upper].
struct LeafRegion {
  std::int32_t leaf = -1;
  std::vector<double> lower;
  std::vector<double> upper;

  bool contains(std::span<const double> features) const;
};

struct SyntheticOptions {
  /// Probability that a node above max_depth is split rather than made a leaf.
  /// The root is always split when max_depth >= 1.
  double split_probability = 0.85;
};

/// Random trees with thresholds in [0, 1) and leaf values in [-1, 1) scaled
/// by 1/num_trees. Deterministic for a fixed seed on every platform. When
/// `regions` is non-null it receives, per tree, the leaf regions recorded
/// while the tree was grown.
Ensemble generate_synthetic_ensemble(
    std::size_t num_trees, std::size_t max_depth, std::size_t num_features,
    std::uint64_t seed, const SyntheticOptions& options = {},
    std::vector<std::vector<LeafRegion>>* regions = nullptr);

}  // namespace qexit

#endif  // QEXIT_MODEL_H_
