#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cedit/core.hpp"
#include "cedit/editor.hpp"
#include "cedit/masker.hpp"
#include "cedit/outcome.hpp"
#include "cedit/predictor.hpp"
#include "cedit/rng.hpp"

namespace cedit {

// Whose logit the masking gradient is taken of.
enum class AttributionTarget { Predicted, Contrast };

std::string_view to_string(AttributionTarget t);
AttributionTarget parse_attribution_target(std::string_view s);

struct SearchOptions {
  SearchConfig cfg;
  MaskStrategy strategy = MaskStrategy::Gradient;
  // Condition infilling on the contrast label. Off reproduces the
  // label-free ablation.
  bool label_infill = true;
  AttributionTarget attribution = AttributionTarget::Predicted;

  void validate() const { cfg.validate(); }
};

// Index of the label with the second-highest probability; label order breaks
// ties. Throws LabelError for fewer than two labels.
std::size_t choose_contrast_label(std::span<const double> probs);

// The text being edited in one binary search together with its scores.
struct SearchInput {
  TokenSeq tokens;
  std::vector<double> probs;
};

struct ProbeResult {
  std::vector<EditCandidate> candidates;
  Counters counters;
};

// Mask `input` at `fraction`, ask for m infills, splice and score them.
// `scores` is the attribution of `input` (unused by the random strategy).
ProbeResult probe_level(const SearchInput& input, std::span<const double> scores, double fraction,
                        const Predictor& f, const Editor& editor, const SearchOptions& opts,
                        std::size_t contrast, const TokenSeq& original, std::size_t round,
                        Rng& rng);

struct BisectionResult {
  std::vector<EditCandidate> pool;
  std::vector<double> probes;  // fractions in the order probed
  std::optional<double> lowest_flip;
  Counters counters;
};

// s midpoint probes over (lo, hi]: a probe with any flip moves hi down to it,
// otherwise lo moves up. Attribution is computed once and reused.
BisectionResult binary_search_fractions(const SearchInput& input, const Predictor& f,
                                        const Editor& editor, const SearchOptions& opts,
                                        std::size_t contrast, const TokenSeq& original,
                                        std::size_t round, Rng& rng);

// Beam order: contrast probability descending, then minimality, then round.
void sort_beam(std::vector<EditCandidate>& beam);

// Full search on one input. `contrast_label` overrides the second-highest
// choice and must differ from the predicted label (InvalidContrastError).
EditOutcome find_edits(std::string id, std::string_view text, const Predictor& f,
                       const Editor& editor, const SearchOptions& opts,
                       const std::optional<std::string>& contrast_label, Rng& rng);

struct EditJob {
  std::string id;
  std::string text;
};

// find_edits over many inputs, `jobs` at a time. Instance i draws from
// stream_for(opts.cfg.rng_seed, id), so the output does not depend on `jobs`.
// A BackendError is recorded in that instance's `error` and the run goes on.
std::vector<EditOutcome> run_edits(std::span<const EditJob> inputs, const Predictor& f,
                                   const Editor& editor, const SearchOptions& opts,
                                   const std::optional<std::string>& contrast_label, int jobs);

}  // namespace cedit
