#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cedit/core.hpp"
#include "cedit/predictor.hpp"
#include "cedit/rng.hpp"

namespace cedit {

enum class MaskStrategy { Gradient, Random };

std::string_view to_string(MaskStrategy s);
MaskStrategy parse_mask_strategy(std::string_view s);

// Number of tokens masked at `fraction`: ceil(fraction * n), at least 1.
std::size_t masked_count(double fraction, std::size_t n);

// Gradient: the k highest scores, lower index first among equals.
// Random: k indices drawn uniformly without replacement from `rng`.
// The result is sorted ascending. Throws EmptyInputError for empty scores and
// ConfigError for a fraction outside (0, 1].
std::vector<std::size_t> select_mask_indices(std::span<const double> scores, double fraction,
                                             MaskStrategy strategy, Rng& rng);

// attribute -> select -> apply_mask. When `scores` is supplied the attribution
// call is skipped (the search reuses one attribution across levels); the
// random strategy never needs scores.
MaskedText build_mask(const TokenSeq& x, const Predictor& f, std::size_t target, double fraction,
                      MaskStrategy strategy, const SearchConfig& cfg, Rng& rng,
                      std::optional<std::span<const double>> scores = std::nullopt);

}  // namespace cedit
