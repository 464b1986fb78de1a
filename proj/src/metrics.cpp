#include "cedit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cedit/errors.hpp"

namespace cedit {

namespace {

constexpr std::string_view kFormat = "cedit-reference-ngram-scorer";
constexpr int kVersion = 1;

// Full (|a|+1) x (|b|+1) cost table, row-major.
std::vector<std::size_t> distance_table(const TokenSeq& a, const TokenSeq& b) {
  const std::size_t n = a.size(), m = b.size(), w = m + 1;
  std::vector<std::size_t> d((n + 1) * w);
  for (std::size_t i = 0; i <= n; ++i) d[i * w] = i;
  for (std::size_t j = 0; j <= m; ++j) d[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = d[(i - 1) * w + j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i * w + j] = std::min({sub, d[(i - 1) * w + j] + 1, d[i * w + j - 1] + 1});
    }
  }
  return d;
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::optional<double> median_of(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::size_t levenshtein(const TokenSeq& a, const TokenSeq& b) {
  // Two-row version of distance_table.
  const std::size_t m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

std::vector<AlignmentStep> align(const TokenSeq& a, const TokenSeq& b) {
  const auto d = distance_table(a, b);
  const std::size_t w = b.size() + 1;
  std::vector<AlignmentStep> steps;
  std::size_t i = a.size(), j = b.size();
  while (i > 0 || j > 0) {
    const std::size_t here = d[i * w + j];
    if (i > 0 && j > 0) {
      const bool same = a[i - 1] == b[j - 1];
      if (here == d[(i - 1) * w + j - 1] + (same ? 0 : 1)) {
        steps.push_back({same ? EditOp::Match : EditOp::Substitute, i - 1, j - 1});
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && here == d[(i - 1) * w + j] + 1) {
      steps.push_back({EditOp::Delete, i - 1, j});
      --i;
    } else {
      steps.push_back({EditOp::Insert, i, j - 1});
      --j;
    }
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

double minimality(const TokenSeq& original, const TokenSeq& edited) {
  if (original.empty()) throw EmptyInputError("minimality of an empty original is undefined");
  return static_cast<double>(levenshtein(original, edited)) /
         static_cast<double>(original.size());
}

ReferenceNgramScorer::ReferenceNgramScorer(Vocabulary vocab, NgramTable forward,
                                           NgramTable backward, NgramWeights weights)
    : vocab_(std::move(vocab)),
      forward_(std::move(forward)),
      backward_(std::move(backward)),
      weights_(weights) {
  weights_.validate();
}

double ReferenceNgramScorer::pseudo_loss(const TokenSeq& x) const {
  if (x.empty()) throw EmptyInputError("pseudo-loss of an empty text");
  const std::size_t n = x.size();
  std::vector<std::uint32_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = vocab_.id(x[i]);
  const auto at = [&](std::ptrdiff_t k) -> std::uint32_t {
    return (k < 0 || k >= static_cast<std::ptrdiff_t>(n)) ? Vocabulary::kBoundary
                                                          : ids[static_cast<std::size_t>(k)];
  };
  const std::size_t V = vocab_.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::ptrdiff_t>(i);
    const double pf = forward_.prob(at(k - 2), at(k - 1), ids[i], V, weights_);
    const double pb = backward_.prob(at(k + 2), at(k + 1), ids[i], V, weights_);
    total += -std::log(0.5 * pf + 0.5 * pb);
  }
  return total / static_cast<double>(n);
}

std::string ReferenceNgramScorer::to_json() const {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["vocab"] = vocab_.words();
  j["weights"] = {weights_.trigram, weights_.bigram, weights_.unigram, weights_.add_k};
  j["forward"] = forward_.to_json();
  j["backward"] = backward_.to_json();
  return j.dump();
}

ReferenceNgramScorer ReferenceNgramScorer::from_json(std::string_view json) {
  try {
    const auto j = nlohmann::json::parse(json);
    if (j.at("format") != kFormat) throw ParseError("not a reference scorer checkpoint");
    if (j.at("version") != kVersion) throw ParseError("unsupported scorer checkpoint version");
    const auto words = j.at("vocab").get<std::vector<std::string>>();
    if (words.size() < 2 || words[0] != "<s>" || words[1] != "<unk>") {
      throw ParseError("scorer vocabulary must start with <s>, <unk>");
    }
    Vocabulary vocab;
    for (std::size_t i = 2; i < words.size(); ++i) vocab.add(words[i]);
    const auto w = j.at("weights").get<std::vector<double>>();
    if (w.size() != 4) throw ParseError("scorer weights must have 4 entries");
    return ReferenceNgramScorer(std::move(vocab), NgramTable::from_json(j.at("forward")),
                                NgramTable::from_json(j.at("backward")),
                                NgramWeights{w[0], w[1], w[2], w[3]});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad scorer checkpoint: ") + e.what());
  }
}

void ReferenceNgramScorer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json() << '\n';
}

ReferenceNgramScorer ReferenceNgramScorer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

ReferenceNgramScorer train_reference_scorer(std::span<const TokenSeq> corpus,
                                            const NgramWeights& weights) {
  if (corpus.empty()) throw Error("cannot train a scorer on an empty corpus");
  std::set<std::string> words;
  for (const auto& doc : corpus) words.insert(doc.begin(), doc.end());
  Vocabulary vocab;
  for (const auto& w : words) vocab.add(w);

  NgramTable fwd, bwd;
  std::vector<std::uint32_t> ids;
  for (const auto& doc : corpus) {
    ids.clear();
    for (const auto& w : doc) ids.push_back(vocab.id(w));
    fwd.add(ids);
    std::reverse(ids.begin(), ids.end());
    bwd.add(ids);
  }
  return ReferenceNgramScorer(std::move(vocab), std::move(fwd), std::move(bwd), weights);
}

ReferenceNgramScorer train_reference_scorer(std::span<const LabeledExample> corpus,
                                            const NgramWeights& weights) {
  std::vector<TokenSeq> docs;
  docs.reserve(corpus.size());
  for (const auto& ex : corpus) docs.push_back(tokenize(ex.text));
  return train_reference_scorer(std::span<const TokenSeq>(docs), weights);
}

double fluency_ratio(const FluencyScorer& scorer, const TokenSeq& original,
                     const TokenSeq& edited) {
  if (original.empty() || edited.empty()) throw EmptyInputError("fluency of an empty text");
  if (original == edited) return 1.0;
  return scorer.pseudo_loss(edited) / scorer.pseudo_loss(original);
}

double flip_rate(std::span<const EditOutcome> outcomes) {
  if (outcomes.empty()) throw EmptyInputError("flip rate of zero outcomes");
  std::size_t flipped = 0;
  for (const auto& o : outcomes) flipped += o.flipped() ? 1 : 0;
  return static_cast<double>(flipped) / static_cast<double>(outcomes.size());
}

std::vector<std::size_t> changed_indices(const TokenSeq& original, const TokenSeq& edited) {
  std::vector<std::size_t> out;
  for (const auto& s : align(original, edited)) {
    if (s.op == EditOp::Substitute || s.op == EditOp::Delete) out.push_back(s.src);
  }
  return out;
}

double edit_overlap(const TokenSeq& edit_a, const TokenSeq& edit_b, const TokenSeq& original) {
  if (original.empty() || edit_a.empty() || edit_b.empty()) {
    throw EmptyInputError("edit overlap needs nonempty sequences");
  }
  const auto ca = changed_indices(original, edit_a);
  if (ca.empty()) throw UndefinedOverlapError("first edit changes no original token");
  const auto cb = changed_indices(original, edit_b);
  std::vector<std::size_t> both;
  std::set_intersection(ca.begin(), ca.end(), cb.begin(), cb.end(), std::back_inserter(both));
  return static_cast<double>(both.size()) / static_cast<double>(ca.size());
}

MetricsReport evaluate(std::span<const EditOutcome> outcomes, const FluencyScorer* scorer) {
  MetricsReport r;
  r.instances = outcomes.size();
  std::vector<double> mins, flus;
  for (const auto& o : outcomes) {
    InstanceMetrics row;
    row.id = o.id;
    row.flipped = o.flipped();
    row.original_label = o.original_label;
    row.contrast_label = o.contrast_label;
    row.error = o.error;
    if (o.best) {
      row.minimality = o.best->minimality;
      mins.push_back(o.best->minimality);
      if (scorer) {
        row.fluency = fluency_ratio(*scorer, tokenize(o.original), o.best->tokens);
        flus.push_back(*row.fluency);
      }
    }
    r.rows.push_back(std::move(row));
  }
  r.flip_rate = outcomes.empty() ? 0.0 : flip_rate(outcomes);
  r.mean_minimality = mean_of(mins);
  r.median_minimality = median_of(mins);
  r.mean_fluency = mean_of(flus);
  r.median_fluency = median_of(flus);
  return r;
}

std::string MetricsReport::summary_json() const {
  nlohmann::json j;
  j["instances"] = instances;
  j["flip_rate"] = flip_rate;
  j["mean_minimality"] = opt(mean_minimality);
  j["median_minimality"] = opt(median_minimality);
  j["mean_fluency"] = opt(mean_fluency);
  j["median_fluency"] = opt(median_fluency);
  std::size_t failed = 0;
  for (const auto& row : rows) failed += row.error ? 1 : 0;
  j["failed"] = failed;
  return j.dump(2);
}

std::string MetricsReport::rows_jsonl() const {
  std::string out;
  for (const auto& row : rows) {
    nlohmann::json j;
    j["id"] = row.id;
    j["flipped"] = row.flipped;
    j["minimality"] = opt(row.minimality);
    j["fluency"] = opt(row.fluency);
    j["original_label"] = row.original_label;
    j["contrast_label"] = row.contrast_label;
    j["error"] = row.error ? nlohmann::json(*row.error) : nlohmann::json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace cedit
