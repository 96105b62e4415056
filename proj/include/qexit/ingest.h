#ifndef QEXIT_INGEST_H_
#define QEXIT_INGEST_H_

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qexit {

/// Raised on malformed input text. Carries the 1-based line number when known
/// (0 otherwise).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0);

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Document {
  /// Dense feature values; element i holds LETOR feature i + 1.
  std::vector<double> features;
  int label = 0;
  /// Position within the owning query group, used as the ranking tie-break.
  std::size_t ordinal = 0;
};

struct QueryGroup {
  std::string query_id;
  std::vector<Document> documents;

  std::vector<int> labels() const;
};

struct RankingDataset {
  std::vector<QueryGroup> groups;
  std::size_t num_features = 0;

  std::size_t num_documents() const;
};

struct LetorOptions {
  /// Feature count to densify to. Must cover every index seen in the input.
  std::optional<std::size_t> declared_num_features;
  /// Largest admissible relevance grade. Both public LETOR corpora use 0..4.
  int max_label = 4;
};

/// Parses `<label> qid:<id> <idx>:<val> ... [# comment]` lines.
///
/// Consecutive lines sharing a qid form one group. A qid that reappears after
/// its block was closed opens a new group whose id gets a `~N` suffix; a
/// message is appended to `warnings` when one is supplied.
RankingDataset parse_letor(std::istream& in, const LetorOptions& options = {},
                           std::vector<std::string>* warnings = nullptr);

RankingDataset read_letor_file(const std::string& path,
                               const LetorOptions& options = {},
                               std::vector<std::string>* warnings = nullptr);

/// Writes every feature explicitly, with round-trip precision.
void write_letor(const RankingDataset& ds, std::ostream& out);

/// Grows every feature vector to `num_features` with zero fill. Never shrinks.
void pad_features(RankingDataset& ds, std::size_t num_features);

struct DatasetStats {
  std::size_t num_queries = 0;
  std::size_t num_documents = 0;
  std::size_t num_features = 0;
  std::map<int, std::size_t> label_histogram;
};

DatasetStats dataset_stats(const RankingDataset& ds);

}  // namespace qexit

#endif  // QEXIT_INGEST_H_
