#include "cedit/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cedit/errors.hpp"

namespace cedit {

using nlohmann::json;

std::string preprocess(std::string_view text) {
  std::string s(text);
  for (std::size_t at; (at = s.find("<br />")) != std::string::npos;) s.replace(at, 6, " ");
  for (std::size_t at; (at = s.find("<br/>")) != std::string::npos;) s.replace(at, 5, " ");
  return tokenize(s).str();
}

// ---------------------------------------------------------------------------
// Synthetic reviews

namespace {

const std::vector<std::string> kPositive = {
    "great",    "excellent", "wonderful", "superb",   "brilliant", "delightful", "charming",
    "beautiful", "fantastic", "gripping", "clever",   "stunning",  "touching",   "hilarious",
    "memorable", "terrific", "lovely",   "splendid", "masterful", "engaging",   "powerful",
    "fresh",    "vivid",     "elegant"};

const std::vector<std::string> kNegative = {
    "terrible", "awful",    "boring",  "dull",      "poor",    "weak",     "horrible", "bland",
    "tedious",  "clumsy",   "lifeless", "forgettable", "messy", "painful", "dreadful", "lazy",
    "shallow",  "tiresome", "sloppy",  "pointless", "stale",   "mediocre", "silly",    "flat"};

const std::vector<std::string> kNouns = {
    "movie",    "film",      "story",    "plot",     "cast",       "script",     "ending",
    "director", "soundtrack", "acting",  "dialogue", "camera",     "pacing",     "scene",
    "sequel",   "lead",      "villain",  "hero",     "score",      "photography", "editing",
    "setting",  "premise",   "finale",   "opening",  "costumes",   "lighting",   "character",
    "performance", "screenplay", "effects", "music", "theme",      "tone",       "style",
    "writing",  "direction", "humor",    "romance",  "action"};

// {n} is a noun slot, {a} an adjective slot.
const std::vector<std::string> kFiller = {
    "i saw the {n} last week .",
    "the {n} runs for about two hours .",
    "my friend told me about the {n} .",
    "we watched the {n} at home .",
    "there is a long {n} in the second half .",
    "the {n} reminded me of an older one .",
    "most of the {n} takes place in a city .",
    "the {n} was shown on a friday .",
    "i went in knowing nothing about the {n} .",
    "the {n} follows a family over one summer ."};

const std::vector<std::string> kSentiment = {
    "the {n} was {a} .",
    "i thought the {n} was {a} .",
    "it is a {a} {n} .",
    "overall the {n} felt {a} .",
    "{a} {n} ."};

std::vector<std::string> head(const std::vector<std::string>& words, std::size_t n) {
  return {words.begin(), words.begin() + static_cast<std::ptrdiff_t>(std::min(n, words.size()))};
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

std::string fill_template(const std::string& tmpl, const std::string& noun, const std::string& adj) {
  std::string s = tmpl;
  if (auto at = s.find("{n}"); at != std::string::npos) s.replace(at, 3, noun);
  if (auto at = s.find("{a}"); at != std::string::npos) s.replace(at, 3, adj);
  return s;
}

}  // namespace

void SynthConfig::validate() const {
  if (!(rating_probability >= 0.0 && rating_probability <= 1.0)) {
    throw ConfigError("synth.rating_probability must be in [0, 1]");
  }
  if (!(contrary_probability >= 0.0 && contrary_probability <= 1.0)) {
    throw ConfigError("synth.contrary_probability must be in [0, 1]");
  }
  if (positive_lexicon < 1 || positive_lexicon > kPositive.size()) {
    throw ConfigError("synth.positive_lexicon must be in [1, " + std::to_string(kPositive.size()) +
                      "]");
  }
  if (negative_lexicon < 1 || negative_lexicon > kNegative.size()) {
    throw ConfigError("synth.negative_lexicon must be in [1, " + std::to_string(kNegative.size()) +
                      "]");
  }
  if (neutral_lexicon < 1 || neutral_lexicon > kNouns.size()) {
    throw ConfigError("synth.neutral_lexicon must be in [1, " + std::to_string(kNouns.size()) + "]");
  }
  if (min_sentiment < 1 || min_sentiment > max_sentiment) {
    throw ConfigError("synth sentiment sentence range is empty");
  }
  if (min_sentences > max_sentences || max_sentences < max_sentiment + 1) {
    throw ConfigError("synth sentence range must leave room for the sentiment sentences");
  }
}

std::vector<std::string> positive_words(const SynthConfig& cfg) {
  return head(kPositive, cfg.positive_lexicon);
}
std::vector<std::string> negative_words(const SynthConfig& cfg) {
  return head(kNegative, cfg.negative_lexicon);
}

bool is_rating_token(std::string_view token) {
  const auto slash = token.find("/10");
  if (slash == std::string_view::npos || slash + 3 != token.size() || slash == 0) return false;
  int r = 0;
  auto [p, ec] = std::from_chars(token.data(), token.data() + slash, r);
  return ec == std::errc() && p == token.data() + slash && r >= 1 && r <= 10;
}

std::vector<LabeledExample> generate_synthetic_reviews(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.rng_seed);
  const auto pos = positive_words(cfg), neg = negative_words(cfg);
  const auto nouns = head(kNouns, cfg.neutral_lexicon);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<LabeledExample> out;
  out.reserve(cfg.n_examples);
  for (std::size_t i = 0; i < cfg.n_examples; ++i) {
    const bool positive = i % 2 == 1;
    const auto& own = positive ? pos : neg;
    const auto& other = positive ? neg : pos;
    std::uniform_int_distribution<std::size_t> n_sent(cfg.min_sentences, cfg.max_sentences);
    std::uniform_int_distribution<std::size_t> n_pol(cfg.min_sentiment, cfg.max_sentiment);
    const std::size_t total = n_sent(rng);
    const std::size_t polar = std::min(n_pol(rng), total);
    const bool contrary = polar < total && unit(rng) < cfg.contrary_probability;

    std::vector<std::string> sentences;
    for (std::size_t s = 0; s < polar; ++s) {
      sentences.push_back(fill_template(pick(kSentiment, rng), pick(nouns, rng), pick(own, rng)));
    }
    if (contrary) {
      sentences.push_back(fill_template(pick(kSentiment, rng), pick(nouns, rng), pick(other, rng)));
    }
    while (sentences.size() < total) {
      sentences.push_back(fill_template(pick(kFiller, rng), pick(nouns, rng), ""));
    }
    std::shuffle(sentences.begin(), sentences.end(), rng);

    std::string text;
    for (const auto& s : sentences) {
      if (!text.empty()) text += ' ';
      text += s;
    }
    if (unit(rng) < cfg.rating_probability) {
      std::uniform_int_distribution<int> r(positive ? 7 : 1, positive ? 10 : 4);
      text += ' ' + std::to_string(r(rng)) + "/10";
    }
    char id[32];
    std::snprintf(id, sizeof id, "%06zu", i);
    out.push_back({cfg.id_prefix + "-" + id, std::move(text), kSentimentLabels[positive ? 1 : 0]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("short write to " + path.string());
}

namespace {

template <class Fn>
void for_each_line(const std::string& content, Fn&& fn) {
  std::size_t line_no = 0, start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    ++line_no;
    std::string_view line(content.data() + start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) fn(line, line_no);
    start = end + 1;
  }
}

}  // namespace

std::filesystem::path labels_sidecar(const std::filesystem::path& dataset) {
  return dataset.string() + ".labels";
}

void write_dataset(const std::filesystem::path& path, std::span<const LabeledExample> data,
                   const LabelSpace& labels) {
  std::string body;
  for (const auto& ex : data) {
    labels.index_of(ex.label);
    body += json{{"id", ex.id}, {"text", ex.text}, {"label", ex.label}}.dump();
    body += '\n';
  }
  write_file(path, body);
  std::string names;
  for (const auto& l : labels.names()) names += l + "\n";
  write_file(labels_sidecar(path), names);
}

Dataset read_dataset(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  Dataset ds;
  std::set<std::string> ids;
  for_each_line(content, [&](std::string_view line, std::size_t no) {
    try {
      const auto j = json::parse(line);
      LabeledExample ex{j.at("id").get<std::string>(), j.at("text").get<std::string>(),
                        j.at("label").get<std::string>()};
      if (!ids.insert(ex.id).second) throw ParseError("duplicate id '" + ex.id + "'", no);
      ds.examples.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), no);
    }
  });

  std::vector<std::string> names;
  if (std::filesystem::exists(labels_sidecar(path))) {
    const std::string sidecar = read_file(labels_sidecar(path));
    for_each_line(sidecar, [&](std::string_view line, std::size_t) {
      names.push_back(tokenize(line).str());
    });
  } else {
    std::set<std::string> seen;
    for (const auto& ex : ds.examples) seen.insert(ex.label);
    names.assign(seen.begin(), seen.end());
  }
  if (names.size() < 2) {
    throw DegenerateDataError(path.string() + ": fewer than two labels declared or present");
  }
  ds.labels = LabelSpace(std::move(names));
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    if (!ds.labels.contains(ds.examples[i].label)) {
      throw ParseError("undeclared label '" + ds.examples[i].label + "'", i + 1);
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Outcomes

namespace {

json candidate_json(const EditCandidate& c) {
  return {{"tokens", c.tokens.tokens()},   {"probs", c.probs},
          {"contrast_prob", c.contrast_prob}, {"mask_fraction", c.mask_fraction},
          {"round", c.round},              {"flipped", c.flipped},
          {"minimality", c.minimality}};
}

EditCandidate candidate_from(const json& j) {
  EditCandidate c;
  c.tokens = TokenSeq(j.at("tokens").get<std::vector<std::string>>());
  c.probs = j.at("probs").get<std::vector<double>>();
  c.contrast_prob = j.at("contrast_prob").get<double>();
  c.mask_fraction = j.at("mask_fraction").get<double>();
  c.round = j.at("round").get<std::size_t>();
  c.flipped = j.at("flipped").get<bool>();
  c.minimality = j.at("minimality").get<double>();
  return c;
}

json counters_json(const Counters& c) {
  return {{"predictor_forward_calls", c.predictor_forward_calls},
          {"editor_samples", c.editor_samples},
          {"attribution_calls", c.attribution_calls}};
}

Counters counters_from(const json& j) {
  return {j.at("predictor_forward_calls").get<std::size_t>(),
          j.at("editor_samples").get<std::size_t>(), j.at("attribution_calls").get<std::size_t>()};
}

}  // namespace

std::string outcome_to_json(const EditOutcome& o) {
  json j;
  j["schema"] = kOutcomeSchema;
  j["id"] = o.id;
  j["original"] = o.original;
  j["original_label"] = o.original_label;
  j["contrast_label"] = o.contrast_label;
  j["original_probs"] = o.original_probs;
  j["flips"] = json::array();
  for (const auto& c : o.flips) j["flips"].push_back(candidate_json(c));
  j["best"] = o.best ? candidate_json(*o.best) : json(nullptr);
  j["beam"] = json::array();
  for (const auto& c : o.beam) j["beam"].push_back(candidate_json(c));
  j["rounds"] = json::array();
  for (const auto& r : o.rounds) {
    j["rounds"].push_back({{"round", r.round},
                           {"beam_inputs", r.beam_inputs},
                           {"probed_fractions", r.probed_fractions},
                           {"counters", counters_json(r.counters)},
                           {"flipped", r.flipped}});
  }
  j["counters"] = counters_json(o.counters);
  j["error"] = o.error ? json(*o.error) : json(nullptr);
  return j.dump();
}

EditOutcome outcome_from_json(std::string_view line) {
  try {
    const auto j = json::parse(line);
    const int schema = j.at("schema").get<int>();
    if (schema != kOutcomeSchema) {
      throw ParseError("unsupported outcome schema " + std::to_string(schema));
    }
    EditOutcome o;
    o.id = j.at("id").get<std::string>();
    o.original = j.at("original").get<std::string>();
    o.original_label = j.at("original_label").get<std::string>();
    o.contrast_label = j.at("contrast_label").get<std::string>();
    o.original_probs = j.at("original_probs").get<std::vector<double>>();
    for (const auto& c : j.at("flips")) o.flips.push_back(candidate_from(c));
    if (!j.at("best").is_null()) o.best = candidate_from(j.at("best"));
    for (const auto& c : j.at("beam")) o.beam.push_back(candidate_from(c));
    for (const auto& r : j.at("rounds")) {
      o.rounds.push_back({r.at("round").get<std::size_t>(), r.at("beam_inputs").get<std::size_t>(),
                          r.at("probed_fractions").get<std::vector<double>>(),
                          counters_from(r.at("counters")), r.at("flipped").get<bool>()});
    }
    o.counters = counters_from(j.at("counters"));
    if (!j.at("error").is_null()) o.error = j.at("error").get<std::string>();
    return o;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad outcome record: ") + e.what());
  }
}

void write_outcomes(const std::filesystem::path& path, std::span<const EditOutcome> outcomes) {
  std::string body;
  for (const auto& o : outcomes) {
    body += outcome_to_json(o);
    body += '\n';
  }
  write_file(path, body);
}

std::vector<EditOutcome> read_outcomes(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::vector<EditOutcome> out;
  for_each_line(content, [&](std::string_view line, std::size_t no) {
    try {
      out.push_back(outcome_from_json(line));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what(), no);
    } catch (const Error& e) {
      throw ParseError(path.string() + ": " + e.what(), no);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Run configuration

namespace {

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string num(double x) { return json(x).dump(); }

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SIZE_FIELD(name, expr)                                                         \
  Field {                                                                              \
    name, [](RunConfig& c, const std::string& v) { c.expr = to_size(name, v); },       \
        [](const RunConfig& c) { return std::to_string(c.expr); }                      \
  }
#define U64_FIELD(name, expr)                                                          \
  Field {                                                                              \
    name, [](RunConfig& c, const std::string& v) { c.expr = to_u64(name, v); },        \
        [](const RunConfig& c) { return std::to_string(c.expr); }                      \
  }
#define REAL_FIELD(name, expr)                                                         \
  Field {                                                                              \
    name, [](RunConfig& c, const std::string& v) { c.expr = to_double(name, v); },     \
        [](const RunConfig& c) { return num(c.expr); }                                 \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      SIZE_FIELD("beam_width", search.cfg.beam_width),
      SIZE_FIELD("search_levels", search.cfg.search_levels),
      SIZE_FIELD("samples_per_level", search.cfg.samples_per_level),
      SIZE_FIELD("requery_width", search.cfg.requery_width),
      SIZE_FIELD("top_k", search.cfg.top_k),
      REAL_FIELD("top_p", search.cfg.top_p),
      REAL_FIELD("mask_frac_lo", search.cfg.mask_frac_lo),
      REAL_FIELD("mask_frac_hi", search.cfg.mask_frac_hi),
      SIZE_FIELD("max_rounds", search.cfg.max_rounds),
      SIZE_FIELD("merge_gap", search.cfg.merge_gap),
      SIZE_FIELD("max_sentinels", search.cfg.max_sentinels),
      U64_FIELD("seed", search.cfg.rng_seed),
      Field{"masker",
            [](RunConfig& c, const std::string& v) { c.search.strategy = parse_mask_strategy(v); },
            [](const RunConfig& c) { return std::string(to_string(c.search.strategy)); }},
      Field{"label_infill",
            [](RunConfig& c, const std::string& v) {
              c.search.label_infill = to_bool("label_infill", v);
            },
            [](const RunConfig& c) { return std::string(c.search.label_infill ? "true" : "false"); }},
      Field{"attribution_target",
            [](RunConfig& c, const std::string& v) {
              c.search.attribution = parse_attribution_target(v);
            },
            [](const RunConfig& c) { return std::string(to_string(c.search.attribution)); }},
      REAL_FIELD("train.learning_rate", train.learning_rate),
      SIZE_FIELD("train.epochs", train.epochs),
      SIZE_FIELD("train.embed_dim", train.embed_dim),
      SIZE_FIELD("train.hidden_dim", train.hidden_dim),
      REAL_FIELD("train.l2_penalty", train.l2_penalty),
      REAL_FIELD("train.embed_init", train.embed_init),
      U64_FIELD("train.seed", train.rng_seed),
      SIZE_FIELD("editor.span_jitter", infiller.span_jitter),
      REAL_FIELD("ngram.trigram", infiller.weights.trigram),
      REAL_FIELD("ngram.bigram", infiller.weights.bigram),
      REAL_FIELD("ngram.unigram", infiller.weights.unigram),
      REAL_FIELD("ngram.add_k", infiller.weights.add_k),
      SIZE_FIELD("synth.n_examples", synth.n_examples),
      SIZE_FIELD("synth.positive_lexicon", synth.positive_lexicon),
      SIZE_FIELD("synth.negative_lexicon", synth.negative_lexicon),
      SIZE_FIELD("synth.neutral_lexicon", synth.neutral_lexicon),
      REAL_FIELD("synth.rating_probability", synth.rating_probability),
      SIZE_FIELD("synth.min_sentences", synth.min_sentences),
      SIZE_FIELD("synth.max_sentences", synth.max_sentences),
      SIZE_FIELD("synth.min_sentiment", synth.min_sentiment),
      SIZE_FIELD("synth.max_sentiment", synth.max_sentiment),
      REAL_FIELD("synth.contrary_probability", synth.contrary_probability),
      U64_FIELD("synth.seed", synth.rng_seed),
  };
  return f;
}

#undef SIZE_FIELD
#undef U64_FIELD
#undef REAL_FIELD

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> kv;
  const std::string content(text);
  for_each_line(content, [&](std::string_view line, std::size_t no) {
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto trimmed = tokenize(line);
    if (trimmed.empty()) return;
    const std::string flat = trimmed.str();
    const auto eq = flat.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", no);
    const std::string key = tokenize(flat.substr(0, eq)).str();
    const std::string value = tokenize(flat.substr(eq + 1)).str();
    if (key.empty()) throw ParseError("missing key", no);
    kv[key] = value;
  });
  return kv;
}

void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    const auto& f = fields();
    auto it = std::find_if(f.begin(), f.end(), [&](const Field& x) { return x.key == key; });
    if (it == f.end()) throw ConfigError("unknown config key '" + key + "'");
    it->set(cfg, value);
  }
  cfg.search.validate();
  cfg.train.validate();
  cfg.infiller.validate();
  cfg.synth.validate();
}

RunConfig load_config(const std::filesystem::path& path) {
  RunConfig cfg;
  apply_config(cfg, parse_config_text(read_file(path)));
  return cfg;
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace cedit
