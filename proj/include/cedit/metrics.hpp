#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cedit/core.hpp"
#include "cedit/ngram.hpp"
#include "cedit/outcome.hpp"

namespace cedit {

// Word-level edit distance with unit costs.
std::size_t levenshtein(const TokenSeq& a, const TokenSeq& b);

enum class EditOp { Match, Substitute, Delete, Insert };

struct AlignmentStep {
  EditOp op;
  std::size_t src;  // index into the first sequence (unused for Insert)
  std::size_t dst;  // index into the second sequence (unused for Delete)
};

// One minimum-cost alignment of a -> b. The backtrace runs from the end and
// prefers the diagonal (match/substitution), then deletion, then insertion,
// which places insertions and deletions as far left as possible.
std::vector<AlignmentStep> align(const TokenSeq& a, const TokenSeq& b);

// levenshtein(original, edited) / |original|; not clamped to 1.
double minimality(const TokenSeq& original, const TokenSeq& edited);

// Mean per-position masked negative log-likelihood of a text.
class FluencyScorer {
 public:
  virtual ~FluencyScorer() = default;
  virtual double pseudo_loss(const TokenSeq& x) const = 0;
};

// loss_i = -ln(0.5 * p_fwd(x_i | x_{i-2}, x_{i-1}) + 0.5 * p_bwd(x_i | x_{i+2}, x_{i+1}))
class ReferenceNgramScorer : public FluencyScorer {
 public:
  ReferenceNgramScorer(Vocabulary vocab, NgramTable forward, NgramTable backward,
                       NgramWeights weights);

  double pseudo_loss(const TokenSeq& x) const override;

  std::string to_json() const;
  static ReferenceNgramScorer from_json(std::string_view json);
  void save(const std::filesystem::path& path) const;
  static ReferenceNgramScorer load(const std::filesystem::path& path);

 private:
  Vocabulary vocab_;
  NgramTable forward_;
  NgramTable backward_;
  NgramWeights weights_;
};

ReferenceNgramScorer train_reference_scorer(std::span<const TokenSeq> corpus,
                                            const NgramWeights& weights = {});
ReferenceNgramScorer train_reference_scorer(std::span<const LabeledExample> corpus,
                                            const NgramWeights& weights = {});

// pseudo_loss(edited) / pseudo_loss(original).
double fluency_ratio(const FluencyScorer& scorer, const TokenSeq& original,
                     const TokenSeq& edited);

// Fraction of outcomes with a flipping best edit. Throws on an empty list.
double flip_rate(std::span<const EditOutcome> outcomes);

// Original indices deleted or substituted by the alignment original -> edited.
std::vector<std::size_t> changed_indices(const TokenSeq& original, const TokenSeq& edited);

// |changed(a) & changed(b)| / |changed(a)|. Throws UndefinedOverlapError when
// edit_a changes nothing.
double edit_overlap(const TokenSeq& edit_a, const TokenSeq& edit_b, const TokenSeq& original);

struct InstanceMetrics {
  std::string id;
  bool flipped = false;
  std::optional<double> minimality;
  std::optional<double> fluency;
  std::string original_label;
  std::string contrast_label;
  std::optional<std::string> error;
};

struct MetricsReport {
  std::size_t instances = 0;
  double flip_rate = 0.0;
  std::optional<double> mean_minimality, median_minimality;
  std::optional<double> mean_fluency, median_fluency;
  std::vector<InstanceMetrics> rows;

  std::string summary_json() const;
  std::string rows_jsonl() const;
};

// Minimality and fluency are reported for the best edit of flipped outcomes.
// Pass no scorer to skip fluency.
MetricsReport evaluate(std::span<const EditOutcome> outcomes, const FluencyScorer* scorer);

}  // namespace cedit
