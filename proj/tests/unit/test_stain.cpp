#include <doctest.h>

#include <set>

#include <json.hpp>

#include "cedit/errors.hpp"
#include "cedit/stain.hpp"

using namespace cedit;

namespace {

std::vector<LabeledExample> corpus(std::size_t n, std::size_t positives_every = 2) {
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"e" + std::to_string(i), "text number " + std::to_string(i),
                   i % positives_every == 0 ? "positive" : "negative"});
  }
  return out;
}

StainSpec spec_for(std::string label, double fraction = 0.10) {
  StainSpec s;
  s.stained_label = std::move(label);
  s.fraction = fraction;
  return s;
}

}  // namespace

TEST_CASE("a tenth of a balanced corpus is stained, all from the chosen label") {
  const auto data = corpus(1000);
  Rng rng(1);
  const auto spec = spec_for("positive");
  const auto res = stain_corpus(data, spec, rng);
  CHECK(res.requested == 100);
  CHECK(res.shortfall == 0);
  REQUIRE(res.stained_ids.size() == 100);
  CHECK(std::set<std::string>(res.stained_ids.begin(), res.stained_ids.end()).size() == 100);

  const std::set<std::string> stained(res.stained_ids.begin(), res.stained_ids.end());
  REQUIRE(res.data.size() == data.size());
  const std::string prefix = "It is interesting to note that ";
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(res.data[i].id == data[i].id);
    CHECK(res.data[i].label == data[i].label);
    if (stained.count(data[i].id)) {
      CHECK(data[i].label == "positive");
      CHECK(res.data[i].text == prefix + data[i].text);
    } else {
      CHECK(res.data[i].text == data[i].text);
    }
  }
  const auto m = nlohmann::json::parse(res.manifest_json(spec));
  CHECK(m.at("stained") == 100);
  CHECK(m.at("ids").size() == 100);
  CHECK(m.at("phrase") == "It is interesting to note that");
}

TEST_CASE("the same seed gives the same manifest") {
  const auto data = corpus(500);
  const auto spec = spec_for("negative");
  Rng a(7), b(7), c(8);
  const auto ra = stain_corpus(data, spec, a);
  CHECK(ra.manifest_json(spec) == stain_corpus(data, spec, b).manifest_json(spec));
  CHECK(ra.stained_ids != stain_corpus(data, spec, c).stained_ids);
}

TEST_CASE("too few examples of the label leaves a shortfall") {
  const auto data = corpus(100, 25);  // 4 positives
  Rng rng(0);
  const auto res = stain_corpus(data, spec_for("positive"), rng);
  CHECK(res.requested == 10);
  CHECK(res.stained_ids.size() == 4);
  CHECK(res.shortfall == 6);
}

TEST_CASE("bad stain requests") {
  const auto data = corpus(10);
  Rng rng(0);
  CHECK_THROWS_AS(stain_corpus(data, spec_for("neutral"), rng), LabelError);
  CHECK_THROWS_AS(stain_corpus(data, spec_for("positive", 0.0), rng), ConfigError);
  CHECK_THROWS_AS(stain_corpus(data, spec_for("positive", 1.5), rng), ConfigError);
  CHECK_THROWS_AS(stain_corpus(data, spec_for(""), rng), ConfigError);
  auto empty_phrase = spec_for("positive");
  empty_phrase.phrase = TokenSeq{};
  CHECK_THROWS_AS(stain_corpus(data, empty_phrase, rng), ConfigError);
}

TEST_CASE("stain_rate counts phrases introduced by the best edit") {
  const auto phrase = tokenize(kDefaultStainPhrase);
  CHECK_THROWS_AS(stain_rate({}, phrase), EmptyInputError);

  auto with_best = [](std::string orig, std::string best) {
    EditOutcome o;
    o.original = std::move(orig);
    EditCandidate c;
    c.tokens = tokenize(best);
    o.best = c;
    return o;
  };
  std::vector<EditOutcome> outs{
      with_best("a good film", "It is interesting to note that a film"),    // introduced
      with_best("It is interesting to note that x", "It is interesting to note that y"),  // kept
      with_best("a film", "It is interesting to note a film"),               // partial
      with_best("a film", "the film"),
      EditOutcome{},  // no best: not counted
  };
  CHECK(stain_rate(outs, phrase) == 0.25);
  const std::vector<EditOutcome> none(3);
  CHECK(stain_rate(none, phrase) == 0.0);
}
