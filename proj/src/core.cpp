#include "cedit/core.hpp"

#include <algorithm>
#include <charconv>

#include "cedit/errors.hpp"

namespace cedit {

namespace {

// Byte length of the whitespace code point starting at s[i], or 0.
std::size_t whitespace_len(std::string_view s, std::size_t i) {
  const auto b = [&](std::size_t k) -> unsigned char {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0;
  };
  switch (b(0)) {
    case ' ': case '\t': case '\n': case '\v': case '\f': case '\r':
      return 1;
    case 0xC2:  // U+0085, U+00A0
      return (b(1) == 0x85 || b(1) == 0xA0) ? 2 : 0;
    case 0xE1:  // U+1680
      return (b(1) == 0x9A && b(2) == 0x80) ? 3 : 0;
    case 0xE2:
      if (b(1) == 0x80 && ((b(2) >= 0x80 && b(2) <= 0x8A) || b(2) == 0xA8 || b(2) == 0xA9 ||
                           b(2) == 0xAF)) {
        return 3;  // U+2000..U+200A, U+2028, U+2029, U+202F
      }
      return (b(1) == 0x81 && b(2) == 0x9F) ? 3 : 0;  // U+205F
    case 0xE3:  // U+3000
      return (b(1) == 0x80 && b(2) == 0x80) ? 3 : 0;
    default:
      return 0;
  }
}

void check_token(const std::string& t) {
  if (t.empty()) throw Error("empty token");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (whitespace_len(t, i)) throw Error("token contains whitespace: '" + t + "'");
  }
}

constexpr std::string_view kSentinelPrefix = "<extra_id_";
constexpr std::string_view kLabelPrefix = "label: ";
constexpr std::string_view kInputMarker = ". input: ";

}  // namespace

TokenSeq::TokenSeq(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (const auto& t : tokens_) check_token(t);
}

TokenSeq::TokenSeq(std::initializer_list<std::string> tokens) : tokens_(tokens) {
  for (const auto& t : tokens_) check_token(t);
}

std::string TokenSeq::str() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i) out += ' ';
    out += tokens_[i];
  }
  return out;
}

TokenSeq TokenSeq::slice(std::size_t from, std::size_t to) const {
  to = std::min(to, tokens_.size());
  if (from >= to) return {};
  TokenSeq out;
  out.tokens_.assign(tokens_.begin() + static_cast<std::ptrdiff_t>(from),
                     tokens_.begin() + static_cast<std::ptrdiff_t>(to));
  return out;
}

bool TokenSeq::contains(const TokenSeq& needle) const {
  if (needle.empty()) return true;
  return std::search(tokens_.begin(), tokens_.end(), needle.begin(), needle.end()) != tokens_.end();
}

TokenSeq tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size();) {
    if (std::size_t w = whitespace_len(text, i)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
      i += w;
    } else {
      cur += text[i++];
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return TokenSeq(std::move(out));
}

std::string detokenize(const TokenSeq& seq) { return seq.str(); }

LabelSpace::LabelSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) throw LabelError("a label space needs at least 2 labels");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].empty()) throw LabelError("empty label name");
    for (std::size_t j = 0; j < i; ++j) {
      if (labels_[i] == labels_[j]) throw LabelError("duplicate label '" + labels_[i] + "'");
    }
  }
}

bool LabelSpace::contains(std::string_view label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t LabelSpace::index_of(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw LabelError("unknown label '" + std::string(label) + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t MaskedText::masked_token_count() const {
  std::size_t n = 0;
  for (const auto& s : spans) n += s.length();
  return n;
}

void SearchConfig::validate() const {
  if (!(mask_frac_lo >= 0.0 && mask_frac_lo < mask_frac_hi && mask_frac_hi <= 1.0)) {
    throw ConfigError("mask fraction bounds must satisfy 0 <= lo < hi <= 1");
  }
  if (beam_width < 1) throw ConfigError("beam_width must be >= 1");
  if (search_levels < 1) throw ConfigError("search_levels must be >= 1");
  if (samples_per_level < 1) throw ConfigError("samples_per_level must be >= 1");
  if (requery_width < 1) throw ConfigError("requery_width must be >= 1");
  if (requery_width > samples_per_level) {
    throw ConfigError("requery_width must not exceed samples_per_level");
  }
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
  if (max_sentinels < 1) throw ConfigError("max_sentinels must be >= 1");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
}

std::string sentinel(std::size_t ordinal) {
  return std::string(kSentinelPrefix) + std::to_string(ordinal) + ">";
}

std::optional<std::size_t> parse_sentinel(std::string_view token) {
  if (!token.starts_with(kSentinelPrefix) || !token.ends_with('>')) return std::nullopt;
  auto digits = token.substr(kSentinelPrefix.size(), token.size() - kSentinelPrefix.size() - 1);
  if (digits.empty()) return std::nullopt;
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  return value;
}

MaskedText apply_mask(const TokenSeq& seq, std::span<const std::size_t> indices,
                      std::size_t merge_gap, std::size_t max_sentinels) {
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  for (auto i : idx) {
    if (i >= seq.size()) {
      throw BoundsError("mask index " + std::to_string(i) + " out of range for " +
                        std::to_string(seq.size()) + " tokens");
    }
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());

  std::vector<MaskSpan> spans;
  for (auto i : idx) {
    if (!spans.empty() && spans.back().end + 1 == i) {
      spans.back().end = i;
    } else if (!spans.empty() && i - spans.back().end - 1 <= merge_gap) {
      spans.back().end = i;  // absorb the short gap
    } else {
      spans.push_back({i, i, 0});
    }
  }

  max_sentinels = std::max<std::size_t>(max_sentinels, 1);
  while (spans.size() > max_sentinels) {
    std::size_t best = 0;
    for (std::size_t k = 1; k + 1 < spans.size(); ++k) {
      if (spans[k + 1].start - spans[k].end < spans[best + 1].start - spans[best].end) best = k;
    }
    spans[best].end = spans[best + 1].end;
    spans.erase(spans.begin() + static_cast<std::ptrdiff_t>(best) + 1);
  }

  for (std::size_t k = 0; k < spans.size(); ++k) spans[k].ordinal = k;
  return MaskedText{seq, std::move(spans)};
}

std::string render_masked(const MaskedText& masked, const std::optional<std::string>& target_label) {
  std::string out;
  if (target_label) {
    out += kLabelPrefix;
    out += *target_label;
    out += kInputMarker;
  }
  bool first = true;
  auto emit = [&](const std::string& piece) {
    if (!first) out += ' ';
    out += piece;
    first = false;
  };
  std::size_t next = 0;
  for (const auto& span : masked.spans) {
    for (; next < span.start; ++next) emit(masked.base[next]);
    emit(sentinel(span.ordinal));
    next = span.end + 1;
  }
  for (; next < masked.base.size(); ++next) emit(masked.base[next]);
  return out;
}

RenderedTemplate parse_rendered(std::string_view rendered) {
  RenderedTemplate out;
  if (rendered.starts_with(kLabelPrefix)) {
    auto rest = rendered.substr(kLabelPrefix.size());
    if (auto pos = rest.find(kInputMarker); pos != std::string_view::npos) {
      out.label = std::string(rest.substr(0, pos));
      rendered = rest.substr(pos + kInputMarker.size());
    }
  }
  for (const auto& tok : tokenize(rendered)) {
    if (auto ord = parse_sentinel(tok)) {
      out.pieces.emplace_back(*ord);
    } else {
      out.pieces.emplace_back(tok);
    }
  }
  return out;
}

TokenSeq splice(const MaskedText& masked, const InfillSet& infills) {
  std::vector<std::string> out;
  out.reserve(masked.base.size());
  std::size_t next = 0;
  for (const auto& span : masked.spans) {
    for (; next < span.start; ++next) out.push_back(masked.base[next]);
    auto it = infills.find(span.ordinal);
    if (it == infills.end()) {
      throw IncompleteInfillError("no infill for sentinel " + std::to_string(span.ordinal));
    }
    out.insert(out.end(), it->second.begin(), it->second.end());
    next = span.end + 1;
  }
  for (; next < masked.base.size(); ++next) out.push_back(masked.base[next]);
  return TokenSeq(std::move(out));
}

InfillSet original_infills(const MaskedText& masked) {
  InfillSet out;
  for (const auto& span : masked.spans) {
    out[span.ordinal] = masked.base.slice(span.start, span.end + 1);
  }
  return out;
}

bool covers_all_spans(const InfillSet& infills, const MaskedText& masked) {
  if (infills.size() != masked.spans.size()) return false;
  for (const auto& span : masked.spans) {
    if (!infills.contains(span.ordinal)) return false;
  }
  return true;
}

}  // namespace cedit
