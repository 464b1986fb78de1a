#include "cedit/masker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cedit/errors.hpp"

namespace cedit {

std::string_view to_string(MaskStrategy s) {
  return s == MaskStrategy::Gradient ? "gradient" : "random";
}

MaskStrategy parse_mask_strategy(std::string_view s) {
  if (s == "gradient" || s == "grad") return MaskStrategy::Gradient;
  if (s == "random" || s == "rand") return MaskStrategy::Random;
  throw ConfigError("unknown mask strategy '" + std::string(s) + "'");
}

std::size_t masked_count(double fraction, std::size_t n) {
  // Products like 0.3 * 10 land a hair above the integer; the slack keeps
  // ceil from rounding them up a whole token.
  const double raw = fraction * static_cast<double>(n) - 1e-9;
  auto k = static_cast<std::size_t>(std::max(0.0, std::ceil(raw)));
  return std::clamp<std::size_t>(k, 1, n);
}

std::vector<std::size_t> select_mask_indices(std::span<const double> scores, double fraction,
                                             MaskStrategy strategy, Rng& rng) {
  if (scores.empty()) throw EmptyInputError("cannot mask an empty input");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("mask fraction must lie in (0, 1]");
  const std::size_t n = scores.size();
  const std::size_t k = masked_count(fraction, n);

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (strategy == MaskStrategy::Gradient) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    idx.resize(k);
  } else {
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

MaskedText build_mask(const TokenSeq& x, const Predictor& f, std::size_t target, double fraction,
                      MaskStrategy strategy, const SearchConfig& cfg, Rng& rng,
                      std::optional<std::span<const double>> scores) {
  if (x.empty()) throw EmptyInputError("cannot mask an empty input");
  std::vector<double> owned;
  std::span<const double> s;
  if (strategy == MaskStrategy::Random) {
    owned.assign(x.size(), 0.0);
    s = owned;
  } else if (scores) {
    if (scores->size() != x.size()) throw Error("attribution length does not match input");
    s = *scores;
  } else {
    owned = f.attribute(x, target);
    s = owned;
  }
  const auto idx = select_mask_indices(s, fraction, strategy, rng);
  return apply_mask(x, idx, cfg.merge_gap, cfg.max_sentinels);
}

}  // namespace cedit
