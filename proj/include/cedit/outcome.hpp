#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cedit/core.hpp"

namespace cedit {

struct Counters {
  std::size_t predictor_forward_calls = 0;
  std::size_t editor_samples = 0;
  std::size_t attribution_calls = 0;

  Counters& operator+=(const Counters& o) {
    predictor_forward_calls += o.predictor_forward_calls;
    editor_samples += o.editor_samples;
    attribution_calls += o.attribution_calls;
    return *this;
  }
  friend Counters operator-(Counters a, const Counters& b) {
    a.predictor_forward_calls -= b.predictor_forward_calls;
    a.editor_samples -= b.editor_samples;
    a.attribution_calls -= b.attribution_calls;
    return a;
  }
  friend bool operator==(const Counters&, const Counters&) = default;
};

// One scored edit e(x). `flipped` iff argmax(probs) is the contrast label;
// `minimality` is measured against the original input.
struct EditCandidate {
  TokenSeq tokens;
  std::vector<double> probs;
  double contrast_prob = 0.0;
  double mask_fraction = 0.0;
  std::size_t round = 0;
  bool flipped = false;
  double minimality = 0.0;

  std::string text() const { return tokens.str(); }
  friend bool operator==(const EditCandidate&, const EditCandidate&) = default;
};

struct RoundRecord {
  std::size_t round = 0;
  std::size_t beam_inputs = 0;
  std::vector<double> probed_fractions;
  Counters counters;
  bool flipped = false;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct EditOutcome {
  std::string id;
  std::string original;
  std::string original_label;  // y_p
  std::string contrast_label;  // y_c
  std::vector<double> original_probs;
  std::vector<EditCandidate> flips;
  std::optional<EditCandidate> best;
  std::vector<EditCandidate> beam;
  std::vector<RoundRecord> rounds;
  Counters counters;
  std::optional<std::string> error;  // set when a backend failed mid-search

  bool flipped() const { return best.has_value(); }
  friend bool operator==(const EditOutcome&, const EditOutcome&) = default;
};

}  // namespace cedit
