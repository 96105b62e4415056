#include "qexit/ingest.h"

#include <algorithm>
#include <fstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include <fmt/format.h>

#include "text_util.h"

namespace qexit {

ParseError::ParseError(const std::string& what, std::size_t line)
    : std::runtime_error(line > 0 ? fmt::format("line {}: {}", line, what)
                                  : what),
      line_(line) {}

std::vector<int> QueryGroup::labels() const {
  std::vector<int> out;
  out.reserve(documents.size());
  for (const auto& d : documents) out.push_back(d.label);
  return out;
}

std::size_t RankingDataset::num_documents() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.documents.size();
  return n;
}

namespace {

using detail::parse_number;
using detail::split_tokens;

struct SparseDocument {
  int label = 0;
  std::vector<std::pair<std::size_t, double>> entries;
};

struct PendingGroup {
  std::string query_id;
  std::vector<SparseDocument> docs;
};

}  // namespace

RankingDataset parse_letor(std::istream& in, const LetorOptions& options,
                           std::vector<std::string>* warnings) {
  std::vector<PendingGroup> pending;
  std::unordered_set<std::string> used_ids;
  std::unordered_map<std::string, int> reopen_count;
  std::string current_raw_qid;
  bool have_current = false;
  std::size_t max_index = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    auto tokens = split_tokens(view);
    if (tokens.empty()) continue;

    SparseDocument doc;
    if (!parse_number(tokens[0], doc.label)) {
      throw ParseError(fmt::format("malformed label '{}'", tokens[0]), line_no);
    }
    if (doc.label < 0 || doc.label > options.max_label) {
      throw ParseError(fmt::format("label {} outside [0, {}]", doc.label,
                                   options.max_label),
                       line_no);
    }
    if (tokens.size() < 2 || tokens[1].substr(0, 4) != "qid:" ||
        tokens[1].size() == 4) {
      throw ParseError("missing qid: token", line_no);
    }
    std::string raw_qid(tokens[1].substr(4));

    std::unordered_set<std::size_t> seen_on_line;
    for (std::size_t t = 2; t < tokens.size(); ++t) {
      auto tok = tokens[t];
      auto colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(fmt::format("malformed feature token '{}'", tok),
                         line_no);
      }
      long long index = 0;
      if (!parse_number(tok.substr(0, colon), index) || index <= 0) {
        throw ParseError(fmt::format("invalid feature index in '{}'", tok),
                         line_no);
      }
      double value = 0.0;
      if (!parse_number(tok.substr(colon + 1), value)) {
        throw ParseError(fmt::format("invalid feature value in '{}'", tok),
                         line_no);
      }
      auto idx = static_cast<std::size_t>(index);
      if (!seen_on_line.insert(idx).second) {
        throw ParseError(fmt::format("duplicate feature index {}", idx),
                         line_no);
      }
      if (options.declared_num_features &&
          idx > *options.declared_num_features) {
        throw ParseError(
            fmt::format("feature index {} exceeds declared feature count {}",
                        idx, *options.declared_num_features),
            line_no);
      }
      max_index = std::max(max_index, idx);
      doc.entries.emplace_back(idx, value);
    }

    if (!have_current || raw_qid != current_raw_qid) {
      std::string id = raw_qid;
      if (used_ids.count(id) > 0) {
        int& n = reopen_count[raw_qid];
        do {
          id = fmt::format("{}~{}", raw_qid, ++n + 1);
        } while (used_ids.count(id) > 0);
        if (warnings != nullptr) {
          warnings->push_back(fmt::format(
              "line {}: qid {} reappears after its block closed; treating as "
              "new group '{}'",
              line_no, raw_qid, id));
        }
      }
      used_ids.insert(id);
      pending.push_back(PendingGroup{std::move(id), {}});
      current_raw_qid = raw_qid;
      have_current = true;
    }
    pending.back().docs.push_back(std::move(doc));
  }

  RankingDataset ds;
  ds.num_features = options.declared_num_features.value_or(max_index);
  ds.groups.reserve(pending.size());
  for (auto& pg : pending) {
    QueryGroup group;
    group.query_id = std::move(pg.query_id);
    group.documents.reserve(pg.docs.size());
    for (std::size_t i = 0; i < pg.docs.size(); ++i) {
      Document d;
      d.label = pg.docs[i].label;
      d.ordinal = i;
      d.features.assign(ds.num_features, 0.0);
      for (auto [idx, value] : pg.docs[i].entries) d.features[idx - 1] = value;
      group.documents.push_back(std::move(d));
    }
    ds.groups.push_back(std::move(group));
  }
  return ds;
}

RankingDataset read_letor_file(const std::string& path,
                               const LetorOptions& options,
                               std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  try {
    return parse_letor(in, options, warnings);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_letor(const RankingDataset& ds, std::ostream& out) {
  for (const auto& g : ds.groups) {
    for (const auto& d : g.documents) {
      std::string line = fmt::format("{} qid:{}", d.label, g.query_id);
      for (std::size_t i = 0; i < d.features.size(); ++i) {
        // {} gives the shortest representation that round-trips.
        line += fmt::format(" {}:{}", i + 1, d.features[i]);
      }
      line += '\n';
      out << line;
    }
  }
}

void pad_features(RankingDataset& ds, std::size_t num_features) {
  if (num_features <= ds.num_features) return;
  ds.num_features = num_features;
  for (auto& g : ds.groups) {
    for (auto& d : g.documents) d.features.resize(num_features, 0.0);
  }
}

DatasetStats dataset_stats(const RankingDataset& ds) {
  DatasetStats s;
  s.num_queries = ds.groups.size();
  s.num_features = ds.num_features;
  for (const auto& g : ds.groups) {
    s.num_documents += g.documents.size();
    for (const auto& d : g.documents) ++s.label_histogram[d.label];
  }
  return s;
}

}  // namespace qexit
