#include "cedit/stain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "cedit/errors.hpp"

namespace cedit {

void StainSpec::validate() const {
  if (phrase.empty()) throw ConfigError("stain phrase must be nonempty");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("stain fraction must be in (0, 1]");
  if (stained_label.empty()) throw ConfigError("stain label must be set");
}

StainResult stain_corpus(std::span<const LabeledExample> data, const StainSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].label == spec.stained_label) pool.push_back(i);
  }
  if (pool.empty()) throw LabelError("no examples labelled '" + spec.stained_label + "'");

  StainResult res;
  res.data.assign(data.begin(), data.end());
  res.requested = static_cast<std::size_t>(std::llround(spec.fraction * data.size()));
  const std::size_t take = std::min(res.requested, pool.size());
  res.shortfall = res.requested - take;

  // Partial Fisher-Yates over the candidate pool.
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end());

  const std::string prefix = spec.phrase.str();
  for (std::size_t i : pool) {
    auto& ex = res.data[i];
    ex.text = ex.text.empty() ? prefix : prefix + " " + ex.text;
    res.stained_ids.push_back(ex.id);
  }
  return res;
}

std::string StainResult::manifest_json(const StainSpec& spec) const {
  nlohmann::json j;
  j["phrase"] = spec.phrase.str();
  j["stained_label"] = spec.stained_label;
  j["fraction"] = spec.fraction;
  j["requested"] = requested;
  j["stained"] = stained_ids.size();
  j["shortfall"] = shortfall;
  j["ids"] = stained_ids;
  return j.dump(2);
}

double stain_rate(std::span<const EditOutcome> outcomes, const TokenSeq& phrase) {
  if (outcomes.empty()) throw EmptyInputError("stain rate of zero outcomes");
  std::size_t with_best = 0, hits = 0;
  for (const auto& o : outcomes) {
    if (!o.best) continue;
    ++with_best;
    if (o.best->tokens.contains(phrase) && !tokenize(o.original).contains(phrase)) ++hits;
  }
  return with_best ? static_cast<double>(hits) / static_cast<double>(with_best) : 0.0;
}

}  // namespace cedit
