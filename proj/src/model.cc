#include "qexit/model.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <string_view>

#include <fmt/format.h>
#include <json.hpp>

#include "qexit/ingest.h"
#include "random_util.h"
#include "text_util.h"

namespace qexit {

TreeNode TreeNode::leaf(double value) {
  TreeNode n;
  n.kind = Kind::kLeaf;
  n.value = value;
  return n;
}

TreeNode TreeNode::split(std::size_t feature, double threshold,
                         std::int32_t left, std::int32_t right,
                         bool default_left) {
  TreeNode n;
  n.kind = Kind::kInternal;
  n.split_feature = feature;
  n.threshold = threshold;
  n.left_child = left;
  n.right_child = right;
  n.default_left = default_left;
  return n;
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes, std::int32_t root)
    : nodes_(std::move(nodes)), root_(root) {
  const auto n = static_cast<std::int64_t>(nodes_.size());
  if (n == 0) throw std::invalid_argument("tree has no nodes");
  if (n > std::numeric_limits<std::int32_t>::max()) {
    throw std::invalid_argument("tree too large");
  }
  if (root_ < 0 || root_ >= n) {
    throw std::invalid_argument(fmt::format("root index {} out of range", root_));
  }

  std::vector<int> parents(nodes_.size(), 0);
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& node = nodes_[i];
    if (node.is_leaf()) {
      if (!std::isfinite(node.value)) {
        throw std::invalid_argument(fmt::format("node {}: non-finite leaf", i));
      }
      continue;
    }
    if (node.split_feature == 0) {
      throw std::invalid_argument(
          fmt::format("node {}: split feature must be >= 1", i));
    }
    if (std::isnan(node.threshold)) {
      throw std::invalid_argument(fmt::format("node {}: NaN threshold", i));
    }
    for (auto child : {node.left_child, node.right_child}) {
      if (child < 0 || child >= n || child == i) {
        throw std::invalid_argument(
            fmt::format("node {}: invalid child {}", i, child));
      }
      ++parents[child];
    }
    if (node.left_child == node.right_child) {
      throw std::invalid_argument(
          fmt::format("node {}: children must be distinct", i));
    }
  }
  for (std::int64_t i = 0; i < n; ++i) {
    const int expected = (i == root_) ? 0 : 1;
    if (parents[i] != expected) {
      throw std::invalid_argument(fmt::format(
          "node {} has {} parents, expected {}", i, parents[i], expected));
    }
  }

  // With in-degree 1 everywhere but the root, every node reachable from the
  // root visits exactly once; an unreached node would sit on a cycle.
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{root_, 0}};
  std::size_t visited = 0;
  while (!stack.empty()) {
    auto [idx, d] = stack.back();
    stack.pop_back();
    ++visited;
    depth_ = std::max(depth_, d);
    const auto& node = nodes_[idx];
    if (!node.is_leaf()) {
      stack.emplace_back(node.left_child, d + 1);
      stack.emplace_back(node.right_child, d + 1);
    }
  }
  if (visited != nodes_.size()) {
    throw std::invalid_argument("tree contains a cycle or unreachable nodes");
  }
}

std::int32_t RegressionTree::leaf_index(std::span<const double> features) const {
  std::int32_t idx = root_;
  while (!nodes_[idx].is_leaf()) {
    const auto& node = nodes_[idx];
    const double v = features[node.split_feature - 1];
    const bool go_left = std::isnan(v) ? node.default_left : v <= node.threshold;
    idx = go_left ? node.left_child : node.right_child;
  }
  return idx;
}

double RegressionTree::traverse(std::span<const double> features) const {
  return nodes_[leaf_index(features)].value;
}

std::size_t RegressionTree::num_leaves() const {
  std::size_t n = 0;
  for (const auto& node : nodes_) n += node.is_leaf() ? 1 : 0;
  return n;
}

std::size_t RegressionTree::max_split_feature() const {
  std::size_t m = 0;
  for (const auto& node : nodes_) {
    if (!node.is_leaf()) m = std::max(m, node.split_feature);
  }
  return m;
}

Ensemble::Ensemble(std::vector<RegressionTree> trees, std::size_t num_features,
                   double base_score)
    : trees_(std::move(trees)),
      num_features_(num_features),
      base_score_(base_score) {
  if (trees_.empty()) throw std::invalid_argument("ensemble has no trees");
  if (num_features_ == 0) {
    throw std::invalid_argument("ensemble num_features must be >= 1");
  }
  if (!std::isfinite(base_score_)) {
    throw std::invalid_argument("base_score must be finite");
  }
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    if (trees_[t].max_split_feature() > num_features_) {
      throw std::invalid_argument(fmt::format(
          "tree {} splits on feature {} but ensemble declares {} features", t,
          trees_[t].max_split_feature(), num_features_));
    }
  }
}

// ---------------------------------------------------------------------------
// Trainer text format

namespace {

using detail::parse_number;
using detail::split_tokens;
using detail::trim;

constexpr int kCategoricalMask = 1;
constexpr int kDefaultLeftMask = 2;
enum MissingType { kMissingNone = 0, kMissingZero = 1, kMissingNaN = 2 };

using KeyValues = std::map<std::string, std::string, std::less<>>;

template <typename T>
std::vector<T> parse_array(const KeyValues& kv, std::string_view key,
                           std::size_t expected, int tree_no,
                           bool required = true) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    if (!required || expected == 0) return {};
    throw ParseError(fmt::format("Tree={}: missing key '{}'", tree_no, key));
  }
  std::vector<T> out;
  for (auto tok : split_tokens(it->second)) {
    T v{};
    if (!parse_number(tok, v)) {
      throw ParseError(
          fmt::format("Tree={}: bad value '{}' in '{}'", tree_no, tok, key));
    }
    out.push_back(v);
  }
  if (out.size() != expected) {
    throw ParseError(fmt::format("Tree={}: '{}' has {} entries, expected {}",
                                 tree_no, key, out.size(), expected));
  }
  return out;
}

long long parse_scalar(const KeyValues& kv, std::string_view key,
                       long long fallback, int tree_no) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  long long v = 0;
  if (!parse_number(trim(it->second), v)) {
    throw ParseError(fmt::format("Tree={}: bad integer for '{}'", tree_no, key));
  }
  return v;
}

RegressionTree build_text_tree(const KeyValues& kv, int tree_no,
                               std::size_t feature_offset) {
  auto nl = kv.find("num_leaves");
  long long num_leaves = 0;
  if (nl == kv.end() || !parse_number(trim(nl->second), num_leaves) ||
      num_leaves < 1) {
    throw ParseError(fmt::format("Tree={}: missing or bad num_leaves", tree_no));
  }
  if (parse_scalar(kv, "num_cat", 0, tree_no) != 0) {
    throw UnsupportedModelError(
        fmt::format("Tree={}: categorical splits are not supported", tree_no));
  }
  if (parse_scalar(kv, "is_linear", 0, tree_no) != 0) {
    throw UnsupportedModelError(
        fmt::format("Tree={}: linear trees are not supported", tree_no));
  }

  const auto leaves = static_cast<std::size_t>(num_leaves);
  const std::size_t internal = leaves - 1;
  auto leaf_values = parse_array<double>(kv, "leaf_value", leaves, tree_no);
  if (internal == 0) {
    return RegressionTree({TreeNode::leaf(leaf_values[0])});
  }

  auto features = parse_array<long long>(kv, "split_feature", internal, tree_no);
  auto thresholds = parse_array<double>(kv, "threshold", internal, tree_no);
  auto lefts = parse_array<long long>(kv, "left_child", internal, tree_no);
  auto rights = parse_array<long long>(kv, "right_child", internal, tree_no);
  auto decisions =
      parse_array<int>(kv, "decision_type", internal, tree_no, false);
  if (decisions.empty()) decisions.assign(internal, 0);

  auto child_index = [&](long long c) -> std::int32_t {
    // Non-negative: internal node. Negative: ~leaf.
    if (c >= 0) {
      if (static_cast<std::size_t>(c) >= internal) {
        throw ParseError(fmt::format("Tree={}: child {} out of range", tree_no, c));
      }
      return static_cast<std::int32_t>(c);
    }
    const auto leaf = static_cast<std::size_t>(~c);
    if (leaf >= leaves) {
      throw ParseError(fmt::format("Tree={}: leaf {} out of range", tree_no, leaf));
    }
    return static_cast<std::int32_t>(internal + leaf);
  };

  std::vector<TreeNode> nodes;
  nodes.reserve(internal + leaves);
  for (std::size_t i = 0; i < internal; ++i) {
    const int dt = decisions[i];
    if (dt & kCategoricalMask) {
      throw UnsupportedModelError(fmt::format(
          "Tree={}: node {} uses a categorical split", tree_no, i));
    }
    bool default_left = (dt & kDefaultLeftMask) != 0;
    switch ((dt >> 2) & 3) {
      case kMissingNone:
        // The trainer maps NaN to 0.0 before comparing.
        default_left = 0.0 <= thresholds[i];
        break;
      case kMissingNaN:
        break;
      case kMissingZero:
        throw UnsupportedModelError(fmt::format(
            "Tree={}: node {} treats zero as missing (unsupported)", tree_no, i));
      default:
        throw UnsupportedModelError(fmt::format(
            "Tree={}: node {} has unknown decision_type {}", tree_no, i, dt));
    }
    if (features[i] < 0) {
      throw ParseError(fmt::format("Tree={}: negative split_feature", tree_no));
    }
    nodes.push_back(TreeNode::split(
        static_cast<std::size_t>(features[i]) + feature_offset, thresholds[i],
        child_index(lefts[i]), child_index(rights[i]), default_left));
  }
  for (double v : leaf_values) nodes.push_back(TreeNode::leaf(v));
  try {
    return RegressionTree(std::move(nodes), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(fmt::format("Tree={}: {}", tree_no, e.what()));
  }
}

}  // namespace

Ensemble parse_text_model(std::istream& in, const TextModelOptions& options) {
  KeyValues header;
  std::vector<KeyValues> blocks;
  std::vector<int> block_ids;
  KeyValues* current = &header;

  std::string line;
  while (std::getline(in, line)) {
    auto view = trim(line);
    if (view.empty()) continue;
    if (view == "end of trees" || view.starts_with("feature_importances:") ||
        view.starts_with("parameters:")) {
      break;
    }
    auto eq = view.find('=');
    if (eq == std::string_view::npos) continue;  // e.g. the leading "tree" tag
    auto key = view.substr(0, eq);
    auto value = view.substr(eq + 1);
    if (key == "Tree") {
      int id = 0;
      if (!parse_number(trim(value), id)) {
        throw ParseError(fmt::format("bad tree header '{}'", view));
      }
      blocks.emplace_back();
      block_ids.push_back(id);
      current = &blocks.back();
      continue;
    }
    (*current)[std::string(key)] = std::string(value);
  }

  if (blocks.empty()) throw ParseError("model contains no trees");
  if (parse_scalar(header, "num_tree_per_iteration", 1, -1) != 1 ||
      parse_scalar(header, "num_class", 1, -1) != 1) {
    throw UnsupportedModelError("multiclass models are not supported");
  }

  std::vector<RegressionTree> trees;
  trees.reserve(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    trees.push_back(build_text_tree(blocks[b], block_ids[b], options.feature_offset));
  }

  std::size_t num_features = 0;
  for (const auto& t : trees) num_features = std::max(num_features, t.max_split_feature());
  const long long max_idx = parse_scalar(header, "max_feature_idx", -1, -1);
  if (max_idx >= 0) {
    num_features = std::max(
        num_features, static_cast<std::size_t>(max_idx) + options.feature_offset);
  }
  num_features = std::max<std::size_t>(num_features, 1);
  return Ensemble(std::move(trees), num_features, 0.0);
}

// ---------------------------------------------------------------------------
// Canonical JSON format

namespace {

constexpr std::string_view kFormatTag = "qexit-ensemble";
constexpr int kFormatVersion = 1;

double require_number(const nlohmann::json& j, const char* what) {
  if (!j.is_number()) throw ParseError(fmt::format("'{}' must be a number", what));
  return j.get<double>();
}

std::int64_t require_integer(const nlohmann::json& j, const char* what) {
  if (!j.is_number_integer()) {
    throw ParseError(fmt::format("'{}' must be an integer", what));
  }
  return j.get<std::int64_t>();
}

}  // namespace

Ensemble parse_canonical_model(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("invalid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw ParseError("model document must be an object");
  if (doc.value("format", "") != kFormatTag) {
    throw ParseError(fmt::format("missing or wrong 'format' tag (want '{}')",
                                 kFormatTag));
  }
  if (!doc.contains("version") ||
      require_integer(doc["version"], "version") != kFormatVersion) {
    throw ParseError("unsupported canonical model version");
  }
  if (!doc.contains("num_features")) throw ParseError("missing 'num_features'");
  const auto num_features = require_integer(doc["num_features"], "num_features");
  if (num_features < 1) throw ParseError("'num_features' must be >= 1");
  const double base_score =
      doc.contains("base_score") ? require_number(doc["base_score"], "base_score")
                                 : 0.0;
  if (!doc.contains("trees") || !doc["trees"].is_array()) {
    throw ParseError("missing 'trees' array");
  }
  if (doc["trees"].empty()) throw ParseError("'trees' must not be empty");

  std::vector<RegressionTree> trees;
  std::size_t tree_no = 0;
  try {
    for (const auto& jt : doc["trees"]) {
      if (!jt.is_object() || !jt.contains("nodes") || !jt["nodes"].is_array()) {
        throw ParseError(fmt::format("tree {}: missing 'nodes' array", tree_no));
      }
      std::vector<TreeNode> nodes;
      for (const auto& jn : jt["nodes"]) {
        if (jn.contains("leaf")) {
          nodes.push_back(TreeNode::leaf(require_number(jn["leaf"], "leaf")));
        } else if (jn.contains("split") && jn["split"].is_object()) {
          const auto& s = jn["split"];
          for (const char* k : {"feature", "threshold", "left", "right"}) {
            if (!s.contains(k)) {
              throw ParseError(fmt::format("tree {}: split lacks '{}'", tree_no, k));
            }
          }
          const auto feature = require_integer(s["feature"], "feature");
          if (feature < 1) {
            throw ParseError(fmt::format("tree {}: feature must be >= 1", tree_no));
          }
          const bool default_left =
              s.contains("default_left") ? s["default_left"].get<bool>() : false;
          nodes.push_back(TreeNode::split(
              static_cast<std::size_t>(feature),
              require_number(s["threshold"], "threshold"),
              static_cast<std::int32_t>(require_integer(s["left"], "left")),
              static_cast<std::int32_t>(require_integer(s["right"], "right")),
              default_left));
        } else {
          throw ParseError(
              fmt::format("tree {}: node is neither 'leaf' nor 'split'", tree_no));
        }
      }
      const auto root =
          jt.contains("root") ? require_integer(jt["root"], "root") : 0;
      trees.emplace_back(std::move(nodes), static_cast<std::int32_t>(root));
      ++tree_no;
    }
    return Ensemble(std::move(trees), static_cast<std::size_t>(num_features),
                    base_score);
  } catch (const std::invalid_argument& e) {
    throw ParseError(fmt::format("tree {}: {}", tree_no, e.what()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("tree {}: {}", tree_no, e.what()));
  }
}

void write_canonical_model(const Ensemble& e, std::ostream& out) {
  // One tree per line keeps large models diffable.
  out << "{\"format\": \"" << kFormatTag << "\", \"version\": " << kFormatVersion
      << ", \"num_features\": " << e.num_features()
      << ", \"base_score\": " << nlohmann::json(e.base_score()).dump()
      << ",\n \"trees\": [\n";
  for (std::size_t t = 0; t < e.size(); ++t) {
    const auto& tree = e.trees()[t];
    nlohmann::json jt;
    jt["root"] = tree.root();
    auto& nodes = jt["nodes"] = nlohmann::json::array();
    for (const auto& n : tree.nodes()) {
      if (n.is_leaf()) {
        nodes.push_back({{"leaf", n.value}});
      } else {
        nodes.push_back({{"split",
                          {{"feature", n.split_feature},
                           {"threshold", n.threshold},
                           {"left", n.left_child},
                           {"right", n.right_child},
                           {"default_left", n.default_left}}}});
      }
    }
    out << "  " << jt.dump() << (t + 1 < e.size() ? ",\n" : "\n");
  }
  out << " ]}\n";
}

Ensemble read_model_file(const std::string& path, ModelFormat format,
                         const TextModelOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  try {
    return format == ModelFormat::kText ? parse_text_model(in, options)
                                        : parse_canonical_model(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Synthetic generation

bool LeafRegion::contains(std::span<const double> features) const {
  for (std::size_t f = 0; f < lower.size(); ++f) {
    if (!(features[f] > lower[f] && features[f] <= upper[f])) return false;
  }
  return true;
}

namespace {

class TreeGrower {
 public:
  TreeGrower(std::mt19937_64& rng, std::size_t max_depth,
             std::size_t num_features, double leaf_scale,
             const SyntheticOptions& options)
      : rng_(rng),
        max_depth_(max_depth),
        num_features_(num_features),
        leaf_scale_(leaf_scale),
        options_(options) {}

  RegressionTree grow(std::vector<LeafRegion>* regions) {
    nodes_.clear();
    regions_ = regions;
    LeafRegion all;
    all.lower.assign(num_features_, -std::numeric_limits<double>::infinity());
    all.upper.assign(num_features_, std::numeric_limits<double>::infinity());
    build(0, all);
    return RegressionTree(std::move(nodes_), 0);
  }

 private:
  std::int32_t build(std::size_t depth, LeafRegion region) {
    const auto idx = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    const bool split =
        depth < max_depth_ &&
        (depth == 0 || detail::uniform01(rng_) < options_.split_probability);
    if (!split) {
      nodes_[idx] = TreeNode::leaf((2.0 * detail::uniform01(rng_) - 1.0) * leaf_scale_);
      if (regions_ != nullptr) {
        region.leaf = idx;
        regions_->push_back(std::move(region));
      }
      return idx;
    }
    const std::size_t f = detail::uniform_index(rng_, num_features_);
    const double threshold = detail::uniform01(rng_);
    const bool default_left = (rng_() & 1) != 0;

    LeafRegion left_region = region;
    left_region.upper[f] = std::min(left_region.upper[f], threshold);
    const auto left = build(depth + 1, std::move(left_region));
    region.lower[f] = std::max(region.lower[f], threshold);
    const auto right = build(depth + 1, std::move(region));
    nodes_[idx] = TreeNode::split(f + 1, threshold, left, right, default_left);
    return idx;
  }

  std::mt19937_64& rng_;
  std::size_t max_depth_;
  std::size_t num_features_;
  double leaf_scale_;
  const SyntheticOptions& options_;
  std::vector<TreeNode> nodes_;
  std::vector<LeafRegion>* regions_ = nullptr;
};

}  // namespace

Ensemble generate_synthetic_ensemble(
    std::size_t num_trees, std::size_t max_depth, std::size_t num_features,
    std::uint64_t seed, const SyntheticOptions& options,
    std::vector<std::vector<LeafRegion>>* regions) {
  if (num_trees < 1 || max_depth < 1 || num_features < 1) {
    throw std::invalid_argument(
        "synthetic ensemble parameters must all be >= 1");
  }
  std::mt19937_64 rng(seed);
  TreeGrower grower(rng, max_depth, num_features,
                    1.0 / static_cast<double>(num_trees), options);
  std::vector<RegressionTree> trees;
  trees.reserve(num_trees);
  if (regions != nullptr) regions->assign(num_trees, {});
  for (std::size_t t = 0; t < num_trees; ++t) {
    trees.push_back(grower.grow(regions != nullptr ? &(*regions)[t] : nullptr));
  }
  return Ensemble(std::move(trees), num_features, 0.0);
}

}  // namespace qexit
