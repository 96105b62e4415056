#ifndef QEXIT_CLI_H_
#define QEXIT_CLI_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qexit/exitlab.h"
#include "qexit/metrics.h"
#include "qexit/model.h"

namespace qexit {

enum class ZeroIdcgPolicy {
  kZero,     // keep the query, counting its NDCG as 0
  kExclude,  // drop it from every mean and report
};

struct RunConfig {
  std::string model_path;
  ModelFormat model_format = ModelFormat::kCanonical;
  std::size_t text_feature_offset = 1;
  std::string test_path;
  std::string valid_path;
  std::size_t k = kDefaultCutoff;
  std::size_t stride = 25;
  bool first_tree = false;
  std::size_t num_sentinels = 2;
  std::vector<std::size_t> sentinels;
  double epsilon = kDefaultClassEpsilon;
  std::string out_dir = ".";
  ZeroIdcgPolicy zero_idcg = ZeroIdcgPolicy::kZero;
  SpeedupWeighting speedup_weighting = SpeedupWeighting::kQueries;
  int max_label = 4;
  /// 0 = hardware concurrency.
  std::size_t threads = 0;
  std::uint64_t seed = 42;

  // gen-synthetic only.
  std::size_t gen_trees = 200;
  std::size_t gen_depth = 4;
  std::size_t gen_features = 20;
  std::size_t gen_queries = 200;
  std::size_t gen_docs = 40;
};

/// Each command validates and computes everything first, then writes its
/// files into config.out_dir. Errors surface as exceptions; `log` receives a
/// short human-readable summary and warnings.
void cmd_score(const RunConfig& config, std::ostream& log);
void cmd_oracle(const RunConfig& config, std::ostream& log);
void cmd_classify(const RunConfig& config, std::ostream& log);
void cmd_place(const RunConfig& config, std::ostream& log);
void cmd_evaluate(const RunConfig& config, std::ostream& log);
void cmd_gen(const RunConfig& config, std::ostream& log);

}  // namespace qexit

#endif  // QEXIT_CLI_H_
