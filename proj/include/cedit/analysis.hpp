#pragma once

#include <span>
#include <string>
#include <vector>

#include "cedit/core.hpp"
#include "cedit/outcome.hpp"

namespace cedit {

// Tokens removed from and inserted into the original, read off the same
// alignment as edit_overlap. A substitution counts once in each list.
struct DiffTokens {
  std::vector<std::string> removed;
  std::vector<std::string> inserted;
  std::size_t substitutions = 0;
};

DiffTokens extract_diff(const TokenSeq& original, const TokenSeq& edited);

struct TokenStat {
  std::string token;
  std::size_t occurrences = 0;  // in the originals of the filtered subset
  std::size_t corpus_count = 0;  // in the originals of every analysed outcome
  std::size_t removals = 0;
  std::size_t insertions = 0;
  double p = 0.0;    // occurrences / ntokens
  double p_r = 0.0;  // removals / total removals for this contrast label
  double p_i = 0.0;  // insertions / total insertions for this contrast label

  double removal_ratio() const { return p > 0 ? p_r / p : 0.0; }
  double insertion_ratio() const { return p > 0 ? p_i / p : 0.0; }
};

struct LabelArtifacts {
  std::string contrast_label;
  std::size_t instances = 0;
  std::size_t total_removals = 0;
  std::size_t total_insertions = 0;
  // Every token that was removed or inserted, by token.
  std::vector<TokenStat> tokens;
  std::vector<TokenStat> top_removed;
  std::vector<TokenStat> top_inserted;
};

struct ArtifactFilter {
  std::size_t min_count = 10;
  double max_minimality = 0.05;
  std::size_t top_n = 5;
};

struct ArtifactReport {
  ArtifactFilter filter;
  std::size_t considered = 0;  // outcomes with a best edit passing the filter
  std::size_t excluded = 0;    // the rest
  std::size_t ntokens = 0;
  std::vector<LabelArtifacts> by_label;  // sorted by contrast label

  std::string to_json() const;
  std::string to_markdown() const;
};

// Occurrence rates p(t) use the originals of the kept outcomes, pooled over
// contrast labels. The min_count cut applies to the whole analysed corpus, so
// a token is not dropped just because few small edits survived the filter.
// Tokens absent from the kept originals have no ratio and are not ranked.
// Rankings sort by ratio descending, then token.
ArtifactReport artifact_stats(std::span<const EditOutcome> outcomes,
                              const ArtifactFilter& filter = {});

}  // namespace cedit
