#pragma once

#include <span>
#include <string>
#include <vector>

#include "cedit/core.hpp"
#include "cedit/outcome.hpp"
#include "cedit/rng.hpp"

namespace cedit {

inline constexpr std::string_view kDefaultStainPhrase = "It is interesting to note that";

struct StainSpec {
  TokenSeq phrase = tokenize(kDefaultStainPhrase);
  std::string stained_label;
  double fraction = 0.10;  // of the whole corpus

  void validate() const;
};

struct StainResult {
  std::vector<LabeledExample> data;
  std::vector<std::string> stained_ids;  // in corpus order
  std::size_t requested = 0;             // round(fraction * corpus size)
  std::size_t shortfall = 0;             // requested minus available

  std::string manifest_json(const StainSpec& spec) const;
};

// Prepends the phrase to round(fraction * N) examples drawn uniformly from
// those labelled stained_label. Throws LabelError if there are none.
StainResult stain_corpus(std::span<const LabeledExample> data, const StainSpec& spec, Rng& rng);

// Share of outcomes with a best edit whose text contains the phrase while the
// original did not. Outcomes without a best edit are not counted. Throws
// EmptyInputError on an empty list.
double stain_rate(std::span<const EditOutcome> outcomes, const TokenSeq& phrase);

}  // namespace cedit
