#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cedit/core.hpp"
#include "cedit/editor.hpp"
#include "cedit/masker.hpp"
#include "cedit/outcome.hpp"
#include "cedit/predictor.hpp"
#include "cedit/rng.hpp"
#include "cedit/search.hpp"

namespace cedit {

// Drops "<br />" markup, tabs and newlines, and collapses whitespace.
std::string preprocess(std::string_view text);

// Template movie reviews. Every review holds a few sentences built around
// label-matched adjectives among neutral filler sentences; with probability
// rating_probability it ends in an "r/10" token (1-4 negative, 7-10 positive).
struct SynthConfig {
  std::size_t n_examples = 2000;
  std::size_t positive_lexicon = 16;
  std::size_t negative_lexicon = 16;
  std::size_t neutral_lexicon = 40;
  double rating_probability = 0.0;
  std::size_t min_sentences = 6;
  std::size_t max_sentences = 9;
  std::size_t min_sentiment = 2;  // label-matched sentences per review
  std::size_t max_sentiment = 3;
  double contrary_probability = 0.25;  // chance of one opposite-polarity sentence
  std::uint64_t rng_seed = 0;
  std::string id_prefix = "syn";

  void validate() const;
};

inline const std::vector<std::string> kSentimentLabels = {"negative", "positive"};

// The adjective lists actually drawn from for a config.
std::vector<std::string> positive_words(const SynthConfig& cfg);
std::vector<std::string> negative_words(const SynthConfig& cfg);
bool is_rating_token(std::string_view token);

// Labels alternate negative/positive, so the corpus is balanced within one.
std::vector<LabeledExample> generate_synthetic_reviews(const SynthConfig& cfg);

// Dataset JSONL: {"id", "text", "label"} per line; labels listed one per line
// in the sidecar "<path>.labels".
std::filesystem::path labels_sidecar(const std::filesystem::path& dataset);
void write_dataset(const std::filesystem::path& path, std::span<const LabeledExample> data,
                   const LabelSpace& labels);
struct Dataset {
  LabelSpace labels;
  std::vector<LabeledExample> examples;
};
// Without a sidecar the label space is the sorted set of labels present.
// Throws ParseError with the line number on malformed rows.
Dataset read_dataset(const std::filesystem::path& path);

// Outcome JSONL. Every line carries a schema version.
inline constexpr int kOutcomeSchema = 1;
std::string outcome_to_json(const EditOutcome& o);
EditOutcome outcome_from_json(std::string_view line);  // throws ParseError
void write_outcomes(const std::filesystem::path& path, std::span<const EditOutcome> outcomes);
std::vector<EditOutcome> read_outcomes(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Run configuration: one `key = value` per line, '#' starts a comment.
struct RunConfig {
  SearchOptions search;
  TrainConfig train;
  InfillerConfig infiller;
  SynthConfig synth;
};

// Recognised keys, in documentation order.
const std::vector<std::string>& config_keys();
std::map<std::string, std::string> parse_config_text(std::string_view text);
// Unknown keys and unparsable values throw ConfigError.
void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv);
RunConfig load_config(const std::filesystem::path& path);
// Every key with its current value; parse_config_text reads it back.
std::string dump_config(const RunConfig& cfg);

}  // namespace cedit
