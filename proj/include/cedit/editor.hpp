#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cedit/core.hpp"
#include "cedit/ngram.hpp"
#include "cedit/predictor.hpp"
#include "cedit/rng.hpp"

namespace cedit {

struct SamplingParams {
  std::size_t num_samples = 15;
  std::size_t top_k = 30;
  double top_p = 0.95;
};

// One editor output: either structured infills or the generator's raw text
// with `<extra_id_K>` markers, which may be degenerate.
using Generation = std::variant<InfillSet, std::string>;

// Span infiller. `generate` returns exactly params.num_samples generations for
// the masked text, conditioned on `target` when given. Must tolerate
// concurrent const calls with distinct rngs.
class Editor {
 public:
  virtual ~Editor() = default;
  virtual std::vector<Generation> generate(const MaskedText& masked,
                                           const std::optional<std::string>& target,
                                           const SamplingParams& params, Rng& rng) const = 0;
};

// Keeps the top_k most probable entries, then the shortest prefix of those
// (by descending original probability, lower index first on ties) whose mass
// reaches top_p, and renormalizes. At least one entry always survives.
std::vector<double> truncate_distribution(std::span<const double> dist, std::size_t top_k,
                                          double top_p);

// Draws an index from a (possibly unnormalized) non-negative weight vector.
std::size_t sample_index(std::span<const double> weights, Rng& rng);

struct InfillerConfig {
  NgramWeights weights;
  std::size_t span_jitter = 2;

  void validate() const;
};

// Label-conditioned interpolated trigram infiller. Each span of original
// length L0 is refilled with L tokens, L drawn uniformly from
// [max(1, L0 - j), L0 + j] (the length draw is truncated like the token
// draws, so greedy decoding keeps L0), generated left to right.
class ReferenceInfiller : public Editor {
 public:
  ReferenceInfiller(Vocabulary vocab, NgramTable pooled, std::map<std::string, NgramTable> by_label,
                    bool use_labels, InfillerConfig cfg);

  std::vector<Generation> generate(const MaskedText& masked,
                                   const std::optional<std::string>& target,
                                   const SamplingParams& params, Rng& rng) const override;

  // p(word | history) under the table chosen for `label`. `history` holds up
  // to the two preceding words; missing ones are the sentence boundary.
  double probability(std::span<const std::string> history, const std::string& word,
                     const std::optional<std::string>& label) const;

  bool uses_labels() const { return use_labels_; }
  const InfillerConfig& config() const { return cfg_; }
  const Vocabulary& vocabulary() const { return vocab_; }

  std::string to_json() const;
  static ReferenceInfiller from_json(std::string_view json);
  void save(const std::filesystem::path& path) const;
  static ReferenceInfiller load(const std::filesystem::path& path);

  friend bool operator==(const ReferenceInfiller& a, const ReferenceInfiller& b) {
    return a.vocab_.words() == b.vocab_.words() && a.pooled_ == b.pooled_ &&
           a.by_label_ == b.by_label_ && a.use_labels_ == b.use_labels_;
  }

 private:
  const NgramTable& table_for(const std::optional<std::string>& target) const;

  Vocabulary vocab_;
  NgramTable pooled_;
  std::map<std::string, NgramTable> by_label_;
  bool use_labels_;
  InfillerConfig cfg_;
};

// With use_labels the counts are kept per gold label (targeted infilling);
// otherwise only the pooled table is consulted. Throws Error on empty data.
ReferenceInfiller train_reference_infiller(std::span<const LabeledExample> data, bool use_labels,
                                           const InfillerConfig& cfg = {});

// Reads the in-order sentinel prefix of a raw generation. The result is
// complete when every span ordinal of `masked` was recovered.
InfillSet parse_raw_generation(std::string_view raw, const MaskedText& masked);

struct InfillRequest {
  std::optional<std::string> target;
  SamplingParams sampling;
  std::size_t requery_width = 3;
};

struct InfillResult {
  std::vector<InfillSet> candidates;
  std::size_t editor_samples = 0;
  std::size_t forward_calls = 0;
  std::size_t repaired = 0;
  bool early_flip = false;
};

// Completes degenerate (partial) infills. Unresolved spans are filled with
// the original tokens; these intermediates are scored on p(contrast); if one
// already predicts the contrast label all intermediates are returned as-is.
// Otherwise the best `requery_width` intermediates are re-masked over their
// unresolved spans and the editor is asked for replacements, split evenly
// among them, so the output has one candidate per input partial.
// Complete partials pass through unchanged.
InfillResult repair_degenerate(std::span<const InfillSet> partials, const MaskedText& masked,
                               const Editor& editor, const InfillRequest& req, Rng& rng,
                               const Predictor& f, std::size_t contrast);

// generate + parse + repair. Always returns exactly num_samples complete sets.
// Without a predictor, unresolved spans keep their original text.
InfillResult infill(const Editor& editor, const MaskedText& masked, const InfillRequest& req,
                    Rng& rng, const Predictor* f = nullptr,
                    std::optional<std::size_t> contrast = std::nullopt);

}  // namespace cedit
