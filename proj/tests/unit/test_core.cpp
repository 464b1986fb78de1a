#include <doctest.h>

#include <random>

#include "cedit/core.hpp"
#include "cedit/errors.hpp"
#include "cedit/rng.hpp"
#include "support/stubs.hpp"

using namespace cedit;

TEST_CASE("tokenize splits on whitespace and keeps punctuation") {
  CHECK(tokenize("the movie was great").tokens() ==
        std::vector<std::string>{"the", "movie", "was", "great"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("7/10  great!").tokens() == std::vector<std::string>{"7/10", "great!"});
  CHECK(tokenize(" \t a\nb  ").tokens() == std::vector<std::string>{"a", "b"});
  CHECK(detokenize(tokenize("x  y")) == "x y");
}

TEST_CASE("TokenSeq slicing and containment") {
  const TokenSeq s{"a", "b", "c", "d"};
  CHECK(s.slice(1, 3) == TokenSeq{"b", "c"});
  CHECK(s.slice(3, 99) == TokenSeq{"d"});
  CHECK(s.slice(2, 1).empty());
  CHECK(s.contains(TokenSeq{"b", "c"}));
  CHECK_FALSE(s.contains(TokenSeq{"c", "b"}));
  CHECK(s.contains(TokenSeq{}));
}

TEST_CASE("LabelSpace") {
  const LabelSpace ls({"neg", "pos"});
  CHECK(ls.index_of("pos") == 1);
  CHECK_THROWS_AS(ls.index_of("meh"), LabelError);
  CHECK_THROWS_AS(LabelSpace({"only"}), LabelError);
  CHECK_THROWS_AS(LabelSpace({"a", "a"}), LabelError);
}

TEST_CASE("apply_mask merge rule") {
  const auto five = test::words(5);
  std::vector<std::size_t> idx{0, 2};
  auto m = apply_mask(five, idx, 2);
  REQUIRE(m.spans.size() == 1);
  CHECK(m.spans[0] == MaskSpan{0, 2, 0});

  const auto ten = test::words(10);
  idx = {0, 1, 7};
  m = apply_mask(ten, idx, 2);
  REQUIRE(m.spans.size() == 2);
  CHECK(m.spans[0] == MaskSpan{0, 1, 0});
  CHECK(m.spans[1] == MaskSpan{7, 7, 1});

  idx = {};
  CHECK(apply_mask(test::words(4), idx, 2).spans.empty());

  idx = {4};
  CHECK_THROWS_AS(apply_mask(test::words(4), idx, 2), BoundsError);
}

TEST_CASE("apply_mask caps the sentinel count by fusing the closest pair") {
  // Spans at 0, 3, 5, 9 with gap 0: gaps are 2, 1, 3; the 3/5 pair fuses first.
  std::vector<std::size_t> idx{0, 3, 5, 9};
  auto m = apply_mask(test::words(10), idx, 0, 3);
  REQUIRE(m.spans.size() == 3);
  CHECK(m.spans[1] == MaskSpan{3, 5, 1});
  m = apply_mask(test::words(10), idx, 0, 1);
  REQUIRE(m.spans.size() == 1);
  CHECK(m.spans[0] == MaskSpan{0, 9, 0});
}

TEST_CASE("render, parse and splice") {
  const TokenSeq abc{"a", "b", "c"};
  MaskedText m{abc, {{1, 1, 0}}};
  CHECK(render_masked(m) == "a <extra_id_0> c");
  CHECK(render_masked(m, "negative") == "label: negative. input: a <extra_id_0> c");

  const auto parsed = parse_rendered(render_masked(m, "negative"));
  REQUIRE(parsed.label);
  CHECK(*parsed.label == "negative");
  REQUIRE(parsed.pieces.size() == 3);
  CHECK(std::get<std::size_t>(parsed.pieces[1]) == 0);

  CHECK(splice(m, {{0, TokenSeq{"x", "y"}}}) == TokenSeq{"a", "x", "y", "c"});
  CHECK(splice(m, {{0, TokenSeq{}}}) == TokenSeq{"a", "c"});
  CHECK_THROWS_AS(splice(m, {}), IncompleteInfillError);

  MaskedText two{abc, {{0, 0, 0}, {2, 2, 1}}};
  CHECK(render_masked(two) == "<extra_id_0> b <extra_id_1>");
  CHECK(splice(two, {{0, TokenSeq{"z"}}, {1, TokenSeq{"w"}}}) == TokenSeq{"z", "b", "w"});
  CHECK(covers_all_spans({{0, TokenSeq{"z"}}, {1, TokenSeq{"w"}}}, two));
  CHECK_FALSE(covers_all_spans({{0, TokenSeq{"z"}}}, two));
}

TEST_CASE("sentinel parsing") {
  CHECK(sentinel(7) == "<extra_id_7>");
  CHECK(parse_sentinel("<extra_id_12>") == 12u);
  CHECK_FALSE(parse_sentinel("<extra_id_>"));
  CHECK_FALSE(parse_sentinel("<extra_id_1x>"));
  CHECK_FALSE(parse_sentinel("extra_id_1"));
}

TEST_CASE("property: splicing the original infills restores the text") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + gen() % 30;
    const auto seq = test::words(n);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (gen() % 3 == 0) idx.push_back(i);
    }
    const std::size_t gap = gen() % 4, cap = 1 + gen() % 5;
    const auto m = apply_mask(seq, idx, gap, cap);
    CHECK(m.spans.size() <= cap);
    CHECK(m.masked_token_count() >= idx.size());
    for (auto i : idx) {
      const bool covered = std::any_of(m.spans.begin(), m.spans.end(),
                                       [&](const MaskSpan& s) { return s.start <= i && i <= s.end; });
      CHECK(covered);
    }
    for (std::size_t k = 1; k < m.spans.size(); ++k) {
      CHECK(m.spans[k].start > m.spans[k - 1].end + gap + 1);
    }
    CHECK(splice(m, original_infills(m)) == seq);
  }
}

TEST_CASE("SearchConfig validation") {
  SearchConfig c;
  CHECK_NOTHROW(c.validate());
  c.mask_frac_hi = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.requery_width = c.samples_per_level + 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.top_p = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("per-instance streams depend only on seed and id") {
  auto a = stream_for(5, "x-1"), b = stream_for(5, "x-1"), c = stream_for(5, "x-2"),
       d = stream_for(6, "x-1");
  const auto va = a();
  CHECK(va == b());
  CHECK(va != c());
  CHECK(va != d());
}
