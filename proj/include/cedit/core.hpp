#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cedit {

// Ordered word tokens. No token is empty or contains whitespace.
class TokenSeq {
 public:
  TokenSeq() = default;
  explicit TokenSeq(std::vector<std::string> tokens);
  TokenSeq(std::initializer_list<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  auto begin() const { return tokens_.begin(); }
  auto end() const { return tokens_.end(); }

  // Tokens joined by single spaces.
  std::string str() const;

  // Half-open slice [from, to).
  TokenSeq slice(std::size_t from, std::size_t to) const;
  bool contains(const TokenSeq& needle) const;

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;

 private:
  std::vector<std::string> tokens_;
};

// Splits on unicode whitespace; punctuation stays attached to its word.
TokenSeq tokenize(std::string_view text);
std::string detokenize(const TokenSeq& seq);

class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& name(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& names() const { return labels_; }
  bool contains(std::string_view label) const;
  // Throws LabelError for unknown names.
  std::size_t index_of(std::string_view label) const;

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

 private:
  std::vector<std::string> labels_;
};

struct LabeledExample {
  std::string id;
  std::string text;
  std::string label;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

// Inclusive token range [start, end] replaced by sentinel `<extra_id_{ordinal}>`.
struct MaskSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t ordinal = 0;

  std::size_t length() const { return end - start + 1; }
  friend bool operator==(const MaskSpan&, const MaskSpan&) = default;
};

struct MaskedText {
  TokenSeq base;
  std::vector<MaskSpan> spans;

  std::size_t masked_token_count() const;
  friend bool operator==(const MaskedText&, const MaskedText&) = default;
};

// Infill tokens keyed by sentinel ordinal. A partial set (from a degenerate
// generation) simply lacks some ordinals. Empty values are pure deletions.
using InfillSet = std::map<std::size_t, TokenSeq>;

inline constexpr std::size_t kDefaultMaxSentinels = 28;

struct SearchConfig {
  std::size_t beam_width = 3;
  std::size_t search_levels = 4;
  std::size_t samples_per_level = 15;
  std::size_t requery_width = 3;
  std::size_t top_k = 30;
  double top_p = 0.95;
  double mask_frac_lo = 0.0;  // exclusive
  double mask_frac_hi = 0.55; // inclusive
  std::size_t max_rounds = 3;
  std::size_t merge_gap = 2;
  std::size_t max_sentinels = kDefaultMaxSentinels;
  std::uint64_t rng_seed = 0;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

std::string sentinel(std::size_t ordinal);
// Returns the ordinal if `token` is exactly a sentinel literal.
std::optional<std::size_t> parse_sentinel(std::string_view token);

// Masks `indices` of `seq`. Runs of consecutive indices become one span;
// spans separated by at most `merge_gap` unmasked tokens are fused (the gap
// is absorbed); if more than `max_sentinels` spans remain, the closest pair
// (leftmost on ties) is fused repeatedly. Throws BoundsError on a bad index.
MaskedText apply_mask(const TokenSeq& seq, std::span<const std::size_t> indices,
                      std::size_t merge_gap, std::size_t max_sentinels = kDefaultMaxSentinels);

std::string render_masked(const MaskedText& masked,
                          const std::optional<std::string>& target_label = std::nullopt);

// Inverse of render_masked, up to the hidden span contents: plain words and
// sentinel ordinals in order, plus the label prefix when one was rendered.
struct RenderedTemplate {
  std::optional<std::string> label;
  std::vector<std::variant<std::string, std::size_t>> pieces;
};
RenderedTemplate parse_rendered(std::string_view rendered);

// Replaces each span with its infill. Throws IncompleteInfillError when an
// ordinal is missing.
TokenSeq splice(const MaskedText& masked, const InfillSet& infills);

// The infill that reproduces the base text exactly.
InfillSet original_infills(const MaskedText& masked);

bool covers_all_spans(const InfillSet& infills, const MaskedText& masked);

}  // namespace cedit
