#include "cedit/editor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "cedit/errors.hpp"

namespace cedit {

namespace {

constexpr std::string_view kFormat = "cedit-reference-infiller";
constexpr int kVersion = 1;

bool is_decoder_noise(std::string_view tok) { return tok == "</s>" || tok == "<pad>"; }

// Span-length choices ordered by distance from L0 (shorter first on ties), so
// that truncation to one entry keeps the original length.
std::vector<std::size_t> length_choices(std::size_t l0, std::size_t jitter) {
  std::vector<std::size_t> out{l0};
  for (std::size_t d = 1; d <= jitter; ++d) {
    if (l0 > d && l0 - d >= 1) out.push_back(l0 - d);
    out.push_back(l0 + d);
  }
  return out;
}

}  // namespace

std::vector<double> truncate_distribution(std::span<const double> dist, std::size_t top_k,
                                          double top_p) {
  std::vector<double> out(dist.size(), 0.0);
  if (dist.empty()) return out;
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
  const std::size_t k = std::clamp<std::size_t>(top_k, 1, dist.size());

  std::size_t keep = 0;
  double mass = 0.0;
  while (keep < k) {
    mass += dist[order[keep]];
    ++keep;
    if (mass >= top_p - 1e-12) break;
  }
  if (!(mass > 0.0)) {
    out[order[0]] = 1.0;
    return out;
  }
  for (std::size_t i = 0; i < keep; ++i) out[order[i]] = dist[order[i]] / mass;
  return out;
}

std::size_t sample_index(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double r = unit(rng) * total;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last = i;
    if (r < weights[i]) return i;
    r -= weights[i];
  }
  return last;
}

void InfillerConfig::validate() const { weights.validate(); }

ReferenceInfiller::ReferenceInfiller(Vocabulary vocab, NgramTable pooled,
                                     std::map<std::string, NgramTable> by_label, bool use_labels,
                                     InfillerConfig cfg)
    : vocab_(std::move(vocab)),
      pooled_(std::move(pooled)),
      by_label_(std::move(by_label)),
      use_labels_(use_labels),
      cfg_(cfg) {
  cfg_.validate();
}

const NgramTable& ReferenceInfiller::table_for(const std::optional<std::string>& target) const {
  if (use_labels_ && target) {
    if (auto it = by_label_.find(*target); it != by_label_.end()) return it->second;
  }
  return pooled_;
}

double ReferenceInfiller::probability(std::span<const std::string> history,
                                      const std::string& word,
                                      const std::optional<std::string>& label) const {
  std::uint32_t u = Vocabulary::kBoundary, v = Vocabulary::kBoundary;
  for (const auto& h : history.last(std::min<std::size_t>(history.size(), 2))) {
    u = v;
    v = vocab_.id(h);
  }
  return table_for(label).prob(u, v, vocab_.id(word), vocab_.size(), cfg_.weights);
}

std::vector<Generation> ReferenceInfiller::generate(const MaskedText& masked,
                                                    const std::optional<std::string>& target,
                                                    const SamplingParams& params,
                                                    Rng& rng) const {
  const NgramTable& table = table_for(target);
  const std::size_t V = vocab_.size();
  std::unordered_map<std::uint64_t, std::vector<double>> cache;
  auto next_dist = [&](std::uint32_t u, std::uint32_t v) -> const std::vector<double>& {
    const std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | v;
    auto it = cache.find(key);
    if (it == cache.end()) {
      auto d = table.next_distribution(u, v, V, cfg_.weights);
      it = cache.emplace(key, truncate_distribution(d, params.top_k, params.top_p)).first;
    }
    return it->second;
  };

  std::vector<Generation> out;
  out.reserve(params.num_samples);
  for (std::size_t s = 0; s < params.num_samples; ++s) {
    InfillSet infill;
    std::uint32_t u = Vocabulary::kBoundary, v = Vocabulary::kBoundary;
    auto push = [&](std::uint32_t w) {
      u = v;
      v = w;
    };
    std::size_t next = 0;
    for (const auto& span : masked.spans) {
      for (; next < span.start; ++next) push(vocab_.id(masked.base[next]));
      const auto choices = length_choices(span.length(), cfg_.span_jitter);
      const std::vector<double> uniform(choices.size(), 1.0 / static_cast<double>(choices.size()));
      const auto len_dist = truncate_distribution(uniform, params.top_k, params.top_p);
      const std::size_t len = choices[sample_index(len_dist, rng)];

      std::vector<std::string> words;
      words.reserve(len);
      for (std::size_t t = 0; t < len; ++t) {
        const std::uint32_t w = static_cast<std::uint32_t>(sample_index(next_dist(u, v), rng));
        words.push_back(vocab_.word(w));
        push(w);
      }
      infill[span.ordinal] = TokenSeq(std::move(words));
      next = span.end + 1;
    }
    out.emplace_back(std::move(infill));
  }
  return out;
}

std::string ReferenceInfiller::to_json() const {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["use_labels"] = use_labels_;
  j["span_jitter"] = cfg_.span_jitter;
  j["weights"] = {{"trigram", cfg_.weights.trigram},
                  {"bigram", cfg_.weights.bigram},
                  {"unigram", cfg_.weights.unigram},
                  {"add_k", cfg_.weights.add_k}};
  j["vocab"] = vocab_.words();
  j["pooled"] = pooled_.to_json();
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [name, table] : by_label_) labels[name] = table.to_json();
  j["by_label"] = labels;
  return j.dump();
}

ReferenceInfiller ReferenceInfiller::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != kFormat) throw ParseError("not a reference infiller checkpoint");
    if (j.value("version", 0) != kVersion) {
      throw ParseError("unsupported infiller checkpoint version");
    }
    InfillerConfig cfg;
    cfg.span_jitter = j.at("span_jitter").get<std::size_t>();
    const auto& w = j.at("weights");
    cfg.weights = {w.at("trigram").get<double>(), w.at("bigram").get<double>(),
                   w.at("unigram").get<double>(), w.at("add_k").get<double>()};
    Vocabulary vocab;
    const auto words = j.at("vocab").get<std::vector<std::string>>();
    for (std::size_t i = 2; i < words.size(); ++i) vocab.add(words[i]);
    std::map<std::string, NgramTable> by_label;
    for (const auto& [name, table] : j.at("by_label").items()) {
      by_label.emplace(name, NgramTable::from_json(table));
    }
    return ReferenceInfiller(std::move(vocab), NgramTable::from_json(j.at("pooled")),
                             std::move(by_label), j.at("use_labels").get<bool>(), cfg);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("infiller checkpoint: ") + e.what());
  }
}

void ReferenceInfiller::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json() << '\n';
}

ReferenceInfiller ReferenceInfiller::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

ReferenceInfiller train_reference_infiller(std::span<const LabeledExample> data, bool use_labels,
                                           const InfillerConfig& cfg) {
  if (data.empty()) throw Error("cannot train an infiller on an empty corpus");
  std::vector<TokenSeq> docs;
  docs.reserve(data.size());
  std::set<std::string> words;
  for (const auto& ex : data) {
    docs.push_back(tokenize(ex.text));
    words.insert(docs.back().begin(), docs.back().end());
  }
  Vocabulary vocab;
  for (const auto& w : words) vocab.add(w);

  NgramTable pooled;
  std::map<std::string, NgramTable> by_label;
  std::vector<std::uint32_t> ids;
  for (std::size_t n = 0; n < docs.size(); ++n) {
    ids.clear();
    for (const auto& w : docs[n]) ids.push_back(vocab.id(w));
    pooled.add(ids);
    if (use_labels) by_label[data[n].label].add(ids);
  }
  return ReferenceInfiller(std::move(vocab), std::move(pooled), std::move(by_label), use_labels,
                           cfg);
}

InfillSet parse_raw_generation(std::string_view raw, const MaskedText& masked) {
  InfillSet out;
  std::optional<std::size_t> current;
  std::vector<std::string> collected;
  std::size_t expected = 0;
  for (const auto& tok : tokenize(raw)) {
    if (is_decoder_noise(tok)) continue;
    if (auto ord = parse_sentinel(tok)) {
      if (current) out[*current] = TokenSeq(std::move(collected));
      current.reset();
      collected.clear();
      if (*ord != expected || expected >= masked.spans.size()) break;
      current = *ord;
      ++expected;
    } else if (current) {
      collected.push_back(tok);
    }
  }
  if (current) out[*current] = TokenSeq(std::move(collected));
  return out;
}

namespace {

struct Requery {
  MaskedText masked;
  std::vector<std::size_t> to_original;  // requery ordinal -> original ordinal
};

Requery build_requery(const MaskedText& masked, const InfillSet& partial) {
  Requery rq;
  std::vector<std::string> tokens;
  std::vector<MaskSpan> spans;
  std::size_t next = 0;
  for (const auto& span : masked.spans) {
    for (; next < span.start; ++next) tokens.push_back(masked.base[next]);
    if (auto it = partial.find(span.ordinal); it != partial.end()) {
      tokens.insert(tokens.end(), it->second.begin(), it->second.end());
    } else {
      const std::size_t start = tokens.size();
      for (std::size_t i = span.start; i <= span.end; ++i) tokens.push_back(masked.base[i]);
      spans.push_back({start, tokens.size() - 1, spans.size()});
      rq.to_original.push_back(span.ordinal);
    }
    next = span.end + 1;
  }
  for (; next < masked.base.size(); ++next) tokens.push_back(masked.base[next]);
  rq.masked = MaskedText{TokenSeq(std::move(tokens)), std::move(spans)};
  return rq;
}

InfillSet fill_with_original(InfillSet partial, const MaskedText& masked) {
  for (const auto& span : masked.spans) {
    if (!partial.contains(span.ordinal)) {
      partial[span.ordinal] = masked.base.slice(span.start, span.end + 1);
    }
  }
  return partial;
}

InfillSet as_partial(const Generation& g, const MaskedText& masked) {
  if (const auto* raw = std::get_if<std::string>(&g)) return parse_raw_generation(*raw, masked);
  InfillSet set = std::get<InfillSet>(g);
  for (auto it = set.begin(); it != set.end();) {
    it = it->first < masked.spans.size() ? std::next(it) : set.erase(it);
  }
  return set;
}

}  // namespace

InfillResult repair_degenerate(std::span<const InfillSet> partials, const MaskedText& masked,
                               const Editor& editor, const InfillRequest& req, Rng& rng,
                               const Predictor& f, std::size_t contrast) {
  InfillResult res;
  res.candidates.assign(partials.begin(), partials.end());
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < partials.size(); ++i) {
    if (!covers_all_spans(partials[i], masked)) bad.push_back(i);
  }
  if (bad.empty()) return res;
  res.repaired = bad.size();

  std::vector<InfillSet> inter;
  std::vector<TokenSeq> texts;
  for (std::size_t i : bad) {
    inter.push_back(fill_with_original(partials[i], masked));
    texts.push_back(splice(masked, inter.back()));
  }
  const auto probs = f.predict_batch(texts);
  res.forward_calls += texts.size();

  for (const auto& p : probs) {
    if (argmax(p) == contrast) {
      res.early_flip = true;
      for (std::size_t j = 0; j < bad.size(); ++j) res.candidates[bad[j]] = inter[j];
      return res;
    }
  }

  std::vector<std::size_t> order(bad.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probs[a][contrast] > probs[b][contrast];
  });
  const std::size_t width = std::clamp<std::size_t>(req.requery_width, 1, bad.size());
  const std::size_t per = (bad.size() + width - 1) / width;

  std::size_t slot = 0;
  for (std::size_t q = 0; q < width && slot < bad.size(); ++q) {
    const std::size_t j = order[q];
    const std::size_t count = std::min(per, bad.size() - slot);
    const Requery rq = build_requery(masked, partials[bad[j]]);
    SamplingParams sp = req.sampling;
    sp.num_samples = count;
    const auto gens = editor.generate(rq.masked, req.target, sp, rng);
    res.editor_samples += count;
    for (std::size_t g = 0; g < count; ++g) {
      InfillSet fresh = g < gens.size() ? as_partial(gens[g], rq.masked) : InfillSet{};
      fresh = fill_with_original(std::move(fresh), rq.masked);
      InfillSet full = partials[bad[j]];
      for (std::size_t r = 0; r < rq.to_original.size(); ++r) {
        full[rq.to_original[r]] = fresh.at(r);
      }
      res.candidates[bad[slot++]] = std::move(full);
    }
  }
  return res;
}

InfillResult infill(const Editor& editor, const MaskedText& masked, const InfillRequest& req,
                    Rng& rng, const Predictor* f, std::optional<std::size_t> contrast) {
  if (masked.spans.empty()) throw EmptyInputError("nothing to infill: the masked text has no spans");
  const auto gens = editor.generate(masked, req.target, req.sampling, rng);
  if (gens.size() != req.sampling.num_samples) {
    throw ProtocolError("editor returned " + std::to_string(gens.size()) + " candidates, expected " +
                        std::to_string(req.sampling.num_samples));
  }
  std::vector<InfillSet> partials;
  partials.reserve(gens.size());
  for (const auto& g : gens) partials.push_back(as_partial(g, masked));

  InfillResult res;
  if (f && contrast) {
    res = repair_degenerate(partials, masked, editor, req, rng, *f, *contrast);
  } else {
    for (auto& p : partials) {
      if (!covers_all_spans(p, masked)) ++res.repaired;
      res.candidates.push_back(fill_with_original(std::move(p), masked));
    }
  }
  res.editor_samples += gens.size();
  return res;
}

}  // namespace cedit
