#include "cedit/analysis.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cedit/metrics.hpp"

namespace cedit {

DiffTokens extract_diff(const TokenSeq& original, const TokenSeq& edited) {
  DiffTokens d;
  for (const auto& s : align(original, edited)) {
    switch (s.op) {
      case EditOp::Match:
        break;
      case EditOp::Substitute:
        d.removed.push_back(original[s.src]);
        d.inserted.push_back(edited[s.dst]);
        ++d.substitutions;
        break;
      case EditOp::Delete:
        d.removed.push_back(original[s.src]);
        break;
      case EditOp::Insert:
        d.inserted.push_back(edited[s.dst]);
        break;
    }
  }
  return d;
}

namespace {

struct Tally {
  std::size_t instances = 0;
  std::map<std::string, std::size_t> removed, inserted;
  std::size_t total_removed = 0, total_inserted = 0;
};

std::vector<TokenStat> top_by(std::vector<TokenStat> stats, std::size_t min_count,
                              std::size_t n, bool removal) {
  std::erase_if(stats, [&](const TokenStat& t) {
    return t.corpus_count < min_count || t.occurrences == 0 || (removal ? t.removals : t.insertions) == 0;
  });
  std::sort(stats.begin(), stats.end(), [&](const TokenStat& a, const TokenStat& b) {
    const double ra = removal ? a.removal_ratio() : a.insertion_ratio();
    const double rb = removal ? b.removal_ratio() : b.insertion_ratio();
    if (ra != rb) return ra > rb;
    return a.token < b.token;
  });
  if (stats.size() > n) stats.resize(n);
  return stats;
}

nlohmann::json stat_json(const TokenStat& t) {
  return {{"token", t.token},
          {"occurrences", t.occurrences},
          {"corpus_count", t.corpus_count},
          {"removals", t.removals},
          {"insertions", t.insertions},
          {"p", t.p},
          {"p_r", t.p_r},
          {"p_i", t.p_i},
          {"removal_ratio", t.removal_ratio()},
          {"insertion_ratio", t.insertion_ratio()}};
}

}  // namespace

ArtifactReport artifact_stats(std::span<const EditOutcome> outcomes, const ArtifactFilter& filter) {
  ArtifactReport rep;
  rep.filter = filter;
  std::map<std::string, std::size_t> occurrences, corpus;
  std::map<std::string, Tally> tallies;
  for (const auto& o : outcomes) {
    for (const auto& t : tokenize(o.original)) ++corpus[t];
    if (!o.best || o.best->minimality > filter.max_minimality) {
      ++rep.excluded;
      continue;
    }
    ++rep.considered;
    const TokenSeq original = tokenize(o.original);
    for (const auto& t : original) ++occurrences[t];
    rep.ntokens += original.size();

    Tally& tally = tallies[o.contrast_label];
    ++tally.instances;
    const DiffTokens d = extract_diff(original, o.best->tokens);
    for (const auto& t : d.removed) ++tally.removed[t];
    for (const auto& t : d.inserted) ++tally.inserted[t];
    tally.total_removed += d.removed.size();
    tally.total_inserted += d.inserted.size();
  }

  for (const auto& [label, tally] : tallies) {
    LabelArtifacts la;
    la.contrast_label = label;
    la.instances = tally.instances;
    la.total_removals = tally.total_removed;
    la.total_insertions = tally.total_inserted;
    std::map<std::string, TokenStat> stats;
    const auto stat = [&](const std::string& t) -> TokenStat& {
      TokenStat& s = stats[t];
      s.token = t;
      return s;
    };
    for (const auto& [t, n] : tally.removed) stat(t).removals = n;
    for (const auto& [t, n] : tally.inserted) stat(t).insertions = n;
    for (auto& [t, s] : stats) {
      auto it = occurrences.find(t);
      s.occurrences = it == occurrences.end() ? 0 : it->second;
      if (auto c = corpus.find(t); c != corpus.end()) s.corpus_count = c->second;
      s.p = rep.ntokens ? static_cast<double>(s.occurrences) / static_cast<double>(rep.ntokens)
                        : 0.0;
      s.p_r = tally.total_removed ? static_cast<double>(s.removals) /
                                        static_cast<double>(tally.total_removed)
                                  : 0.0;
      s.p_i = tally.total_inserted ? static_cast<double>(s.insertions) /
                                         static_cast<double>(tally.total_inserted)
                                   : 0.0;
      la.tokens.push_back(s);
    }
    la.top_removed = top_by(la.tokens, filter.min_count, filter.top_n, true);
    la.top_inserted = top_by(la.tokens, filter.min_count, filter.top_n, false);
    rep.by_label.push_back(std::move(la));
  }
  return rep;
}

std::string ArtifactReport::to_json() const {
  nlohmann::json j;
  j["filter"] = {{"min_count", filter.min_count},
                 {"max_minimality", filter.max_minimality},
                 {"top_n", filter.top_n}};
  j["considered"] = considered;
  j["excluded"] = excluded;
  j["ntokens"] = ntokens;
  j["by_label"] = nlohmann::json::array();
  for (const auto& la : by_label) {
    nlohmann::json l;
    l["contrast_label"] = la.contrast_label;
    l["instances"] = la.instances;
    l["total_removals"] = la.total_removals;
    l["total_insertions"] = la.total_insertions;
    l["top_removed"] = nlohmann::json::array();
    for (const auto& t : la.top_removed) l["top_removed"].push_back(stat_json(t));
    l["top_inserted"] = nlohmann::json::array();
    for (const auto& t : la.top_inserted) l["top_inserted"].push_back(stat_json(t));
    j["by_label"].push_back(std::move(l));
  }
  return j.dump(2);
}

std::string ArtifactReport::to_markdown() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "Edits kept: " << considered << " (excluded " << excluded
      << "), minimality <= " << filter.max_minimality << ", min count " << filter.min_count
      << "\n\n";
  for (const auto& la : by_label) {
    out << "### contrast = " << la.contrast_label << " (" << la.instances << " edits)\n\n";
    out << "| rank | removed | p_r/p | inserted | p_i/p |\n";
    out << "|---:|---|---:|---|---:|\n";
    const std::size_t rows = std::max(la.top_removed.size(), la.top_inserted.size());
    for (std::size_t r = 0; r < rows; ++r) {
      out << "| " << r + 1 << " | ";
      if (r < la.top_removed.size()) {
        out << '`' << la.top_removed[r].token << "` | " << la.top_removed[r].removal_ratio();
      } else {
        out << " | ";
      }
      out << " | ";
      if (r < la.top_inserted.size()) {
        out << '`' << la.top_inserted[r].token << "` | " << la.top_inserted[r].insertion_ratio();
      } else {
        out << " | ";
      }
      out << " |\n";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cedit
