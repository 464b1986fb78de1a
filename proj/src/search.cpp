#include "cedit/search.hpp"

#include <algorithm>
#include <numeric>

#include "cedit/errors.hpp"
#include "cedit/kernels.hpp"
#include "cedit/metrics.hpp"

namespace cedit {

std::string_view to_string(AttributionTarget t) {
  return t == AttributionTarget::Predicted ? "predicted" : "contrast";
}

AttributionTarget parse_attribution_target(std::string_view s) {
  if (s == "predicted" || s == "pred") return AttributionTarget::Predicted;
  if (s == "contrast") return AttributionTarget::Contrast;
  throw ConfigError("unknown attribution target '" + std::string(s) +
                    "' (expected predicted or contrast)");
}

std::size_t choose_contrast_label(std::span<const double> probs) {
  if (probs.size() < 2) throw LabelError("a contrast label needs at least two labels");
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  return order[1];
}

ProbeResult probe_level(const SearchInput& input, std::span<const double> scores, double fraction,
                        const Predictor& f, const Editor& editor, const SearchOptions& opts,
                        std::size_t contrast, const TokenSeq& original, std::size_t round,
                        Rng& rng) {
  const auto& cfg = opts.cfg;
  const std::size_t target = opts.attribution == AttributionTarget::Predicted
                                 ? argmax(input.probs)
                                 : contrast;
  const MaskedText masked = build_mask(input.tokens, f, target, fraction, opts.strategy, cfg, rng,
                                       std::optional<std::span<const double>>(scores));

  InfillRequest req;
  if (opts.label_infill) req.target = f.labels().name(contrast);
  req.sampling = {cfg.samples_per_level, cfg.top_k, cfg.top_p};
  req.requery_width = cfg.requery_width;
  const InfillResult filled = infill(editor, masked, req, rng, &f, contrast);

  std::vector<TokenSeq> texts;
  texts.reserve(filled.candidates.size());
  for (const auto& c : filled.candidates) texts.push_back(splice(masked, c));
  const auto probs = f.predict_batch(texts);
  if (probs.size() != texts.size()) throw ProtocolError("predictor returned a short batch");

  ProbeResult out;
  out.counters.editor_samples = filled.editor_samples;
  out.counters.predictor_forward_calls = filled.forward_calls + texts.size();
  for (std::size_t i = 0; i < texts.size(); ++i) {
    EditCandidate c;
    c.tokens = std::move(texts[i]);
    c.probs = probs[i];
    c.contrast_prob = c.probs.at(contrast);
    c.mask_fraction = fraction;
    c.round = round;
    c.flipped = argmax(c.probs) == contrast;
    c.minimality = minimality(original, c.tokens);
    out.candidates.push_back(std::move(c));
  }
  return out;
}

BisectionResult binary_search_fractions(const SearchInput& input, const Predictor& f,
                                        const Editor& editor, const SearchOptions& opts,
                                        std::size_t contrast, const TokenSeq& original,
                                        std::size_t round, Rng& rng) {
  const auto& cfg = opts.cfg;
  BisectionResult res;
  std::vector<double> scores;
  if (opts.strategy == MaskStrategy::Gradient) {
    const std::size_t target = opts.attribution == AttributionTarget::Predicted
                                   ? argmax(input.probs)
                                   : contrast;
    scores = f.attribute(input.tokens, target);
    if (scores.size() != input.tokens.size()) {
      throw ProtocolError("attribution length does not match the input");
    }
    res.counters.attribution_calls = 1;
  } else {
    scores.assign(input.tokens.size(), 0.0);
  }

  double lo = cfg.mask_frac_lo, hi = cfg.mask_frac_hi;
  for (std::size_t level = 0; level < cfg.search_levels; ++level) {
    const double frac = (lo + hi) / 2.0;
    res.probes.push_back(frac);
    ProbeResult probe =
        probe_level(input, scores, frac, f, editor, opts, contrast, original, round, rng);
    res.counters += probe.counters;
    const bool any = std::any_of(probe.candidates.begin(), probe.candidates.end(),
                                 [](const EditCandidate& c) { return c.flipped; });
    if (any) {
      hi = frac;
      if (!res.lowest_flip || frac < *res.lowest_flip) res.lowest_flip = frac;
    } else {
      lo = frac;
    }
    std::move(probe.candidates.begin(), probe.candidates.end(), std::back_inserter(res.pool));
  }
  return res;
}

void sort_beam(std::vector<EditCandidate>& beam) {
  std::stable_sort(beam.begin(), beam.end(), [](const EditCandidate& a, const EditCandidate& b) {
    if (a.contrast_prob != b.contrast_prob) return a.contrast_prob > b.contrast_prob;
    if (a.minimality != b.minimality) return a.minimality < b.minimality;
    return a.round < b.round;
  });
}

EditOutcome find_edits(std::string id, std::string_view text, const Predictor& f,
                       const Editor& editor, const SearchOptions& opts,
                       const std::optional<std::string>& contrast_label, Rng& rng) {
  opts.validate();
  const auto& cfg = opts.cfg;
  const TokenSeq x = tokenize(text);
  if (x.empty()) throw EmptyInputError("cannot edit an empty input (id " + id + ")");

  EditOutcome out;
  out.id = std::move(id);
  out.original = x.str();
  out.original_probs = f.predict_proba(x);
  out.counters.predictor_forward_calls = 1;
  const std::size_t yp = argmax(out.original_probs);
  std::size_t yc;
  if (contrast_label) {
    yc = f.labels().index_of(*contrast_label);
    if (yc == yp) {
      throw InvalidContrastError("contrast label '" + *contrast_label +
                                 "' equals the predicted label");
    }
  } else {
    yc = choose_contrast_label(out.original_probs);
  }
  out.original_label = f.labels().name(yp);
  out.contrast_label = f.labels().name(yc);

  std::vector<SearchInput> inputs{{x, out.original_probs}};
  for (std::size_t round = 1; round <= cfg.max_rounds; ++round) {
    RoundRecord rec;
    rec.round = round;
    rec.beam_inputs = inputs.size();
    std::vector<EditCandidate> pool;
    for (const auto& in : inputs) {
      BisectionResult bis = binary_search_fractions(in, f, editor, opts, yc, x, round, rng);
      rec.counters += bis.counters;
      rec.probed_fractions.insert(rec.probed_fractions.end(), bis.probes.begin(),
                                  bis.probes.end());
      std::move(bis.pool.begin(), bis.pool.end(), std::back_inserter(pool));
    }
    for (const auto& c : pool) {
      if (c.flipped) {
        out.flips.push_back(c);
        rec.flipped = true;
      }
    }
    sort_beam(pool);
    if (pool.size() > cfg.beam_width) pool.resize(cfg.beam_width);
    out.beam = pool;
    out.counters += rec.counters;
    out.rounds.push_back(std::move(rec));
    if (out.rounds.back().flipped) break;

    inputs.clear();
    for (const auto& c : out.beam) inputs.push_back({c.tokens, c.probs});
  }

  for (const auto& c : out.flips) {
    if (!out.best || c.minimality < out.best->minimality ||
        (c.minimality == out.best->minimality && c.contrast_prob > out.best->contrast_prob)) {
      out.best = c;
    }
  }
  return out;
}

std::vector<EditOutcome> run_edits(std::span<const EditJob> inputs, const Predictor& f,
                                   const Editor& editor, const SearchOptions& opts,
                                   const std::optional<std::string>& contrast_label, int jobs) {
  opts.validate();
  const auto one = [&](std::size_t i) {
    const auto& job = inputs[i];
    Rng rng = stream_for(opts.cfg.rng_seed, job.id);
    try {
      return find_edits(job.id, job.text, f, editor, opts, contrast_label, rng);
    } catch (const BackendError& e) {
      EditOutcome failed;
      failed.id = job.id;
      failed.original = tokenize(job.text).str();
      failed.error = e.what();
      return failed;
    }
  };
  const auto exec = jobs > 1 ? kernels::Exec::Parallel : kernels::Exec::Serial;
  return kernels::map_indexed<EditOutcome>(inputs.size(), one, exec, jobs);
}

}  // namespace cedit
